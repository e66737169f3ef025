"""
Information-type stability: mutual information, the marginal prior, the
Markov step from mutual information to DD KL-stability, and max information.
"""

from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Tuple

from loguru import logger

from backend.components.audit.reports import StabilityBudget, StabilityReport
from backend.components.audit.sample_space import sample_law
from backend.components.distributions.finite import FiniteDistribution
from backend.components.divergences.exact import Number, compare, real_sqrt
from backend.components.divergences.measures import DivergenceValue, at_most, hockey_stick, kl
from backend.components.learners.base import LearningRule
from backend.components.primitives.domain import LabeledSample, PopulationDistribution
from backend.core.budgets import check_budget
from backend.core.errors import TheoremViolationError

Posteriors = List[Tuple[LabeledSample, object, FiniteDistribution]]


def sample_posteriors(rule: LearningRule, pop: PopulationDistribution, m: int) -> Posteriors:
    """(S, Pr(S), A(S)) for every S in the support of pop^m."""
    law = sample_law(pop, m)
    rows = [(s, p, rule.posterior(s)) for s, p in law.items() if p > 0]
    check_budget("joint_atoms", sum(len(post) for _, _, post in rows), hint="output x sample joint")
    return rows


def _mix(rows: Posteriors) -> FiniteDistribution:
    out: Dict[Hashable, object] = {}
    for _, ps, post in rows:
        for h, ph in post.items():
            out[h] = out.get(h, 0) + ps * ph
    ordered = sorted(out.items())
    return FiniteDistribution(tuple(h for h, _ in ordered), tuple(p for _, p in ordered))


def dd_prior_from_marginal(rule: LearningRule, pop: PopulationDistribution, m: int) -> FiniteDistribution:
    """P_D = E_S[A(S)], the exact marginal output law."""
    return _mix(sample_posteriors(rule, pop, m))


def _expected_kl(rows: Posteriors, prior: FiniteDistribution) -> DivergenceValue:
    total = DivergenceValue.zero()
    for _, ps, post in rows:
        value = kl(post, prior)
        if isinstance(ps, Fraction):
            total = total + value.scaled(ps)
        else:
            total = total + DivergenceValue(float(ps) * float(value), mode="float")
    return total


def mutual_information(rule: LearningRule, pop: PopulationDistribution, m: int) -> DivergenceValue:
    """
    I(A(S); S) = sum_S Pr(S) KL(A(S) || P_D).

    Returns:
        DivergenceValue, an exact LogSum when the population and rule are exact
    """
    rows = sample_posteriors(rule, pop, m)
    value = _expected_kl(rows, _mix(rows))
    logger.debug(f"I(A(S);S) for {rule.name} at m={m}: {float(value):.6g} nats")
    return value


def dd_kl_stability_check(
    rule: LearningRule,
    pop: PopulationDistribution,
    m: int,
    budget: Optional[StabilityBudget] = None,
) -> StabilityReport:
    """
    Markov step from mutual information to DD KL-stability.

    With I = I(A(S); S), Pr_S[KL(A(S) || P_D) >= sqrt(m I)] <= sqrt(I / m).
    When I = 0 the checked event is KL > 0, which must have probability 0.

    Raises:
        TheoremViolationError: when the Markov inequality fails
    """
    rows = sample_posteriors(rule, pop, m)
    prior = _mix(rows)
    info = _expected_kl(rows, prior)
    zero_info = info.equals(0)
    threshold = None if zero_info else real_sqrt(_times(info, m))
    confidence = Fraction(0) if zero_info else real_sqrt(_times(info, Fraction(1, m)))

    exact = all(isinstance(ps, Fraction) for _, ps, _ in rows) and info.is_exact
    prob = Fraction(0) if exact else 0.0
    worst, worst_value = None, DivergenceValue.zero()
    for sample, ps, post in rows:
        value = kl(post, prior)
        hit = value > 0 if zero_info else value.infinite or compare(value.value, threshold) >= 0
        if hit:
            prob += ps
        if value > worst_value:
            worst, worst_value = sample, value

    if compare(prob, confidence) > 0:
        raise TheoremViolationError(
            "Pr[KL(A(S)||P_D) >= sqrt(m I)] <= sqrt(I/m)", {"prob": float(prob), "bound": float(confidence)}
        )
    passed = None
    if budget is not None:
        g, beta = budget.f_at(m), budget.beta_at(m)
        if g is not None:
            mass = sum((ps for _, ps, post in rows if not kl(post, prior) <= g), Fraction(0) if exact else 0.0)
            passed = at_most(mass, beta)
    logger.info(f"DD KL Markov step for {rule.name} m={m}: Pr={float(prob):.4g} <= {float(confidence):.4g}")
    return StabilityReport(
        definition="kl",
        rule=rule.name,
        m=m,
        estimate=prob,
        exact=exact,
        passed=passed,
        budget=budget,
        witness={"sample": str(worst) if worst else None, "kl": float(worst_value)},
        details={
            "mutual_information": float(info),
            "threshold": 0.0 if threshold is None else float(threshold),
            "markov_bound": float(confidence),
            "slack": float(confidence) - float(prob),
            "prior": "marginal",
        },
        mode="exact" if exact else "float",
    )


def _times(value: DivergenceValue, factor) -> Number:
    if value.is_exact:
        return value.value * Fraction(factor)
    return float(value) * float(factor)


def output_sample_joints(
    rule: LearningRule, pop: PopulationDistribution, m: int
) -> Tuple[FiniteDistribution, FiniteDistribution]:
    """The true (A(S), S) joint and the independent-copy joint P_D x law(S)."""
    rows = sample_posteriors(rule, pop, m)
    marginal = _mix(rows)
    check_budget("joint_atoms", len(marginal) * len(rows), hint="independent-copy joint")
    joint = FiniteDistribution(
        tuple((h, s.pairs) for s, _, post in rows for h in post.atoms),
        tuple(ps * ph for _, ps, post in rows for ph in post.probs),
    )
    independent = FiniteDistribution(
        tuple((h, s.pairs) for h in marginal.atoms for s, _, _ in rows),
        tuple(ph * ps for ph in marginal.probs for _, ps, _ in rows),
    )
    return joint, independent


def max_information(rule: LearningRule, pop: PopulationDistribution, m: int, eps: Number):
    """Tightest delta with Pr[(A(S), S) in O] <= e^eps Pr[(A(S), S') in O] + delta."""
    joint, independent = output_sample_joints(rule, pop, m)
    return hockey_stick(eps, joint, independent)


def max_information_check(
    rule: LearningRule, pop: PopulationDistribution, m: int, budget: StabilityBudget
) -> StabilityReport:
    eps = budget.value("eps", Fraction(0))
    delta = max_information(rule, pop, m, eps)
    bound = budget.value("delta")
    return StabilityReport(
        definition="maxinfo",
        rule=rule.name,
        m=m,
        estimate=delta,
        exact=isinstance(delta, Fraction),
        passed=None if bound is None else at_most(delta, bound),
        budget=budget,
        details={"eps": float(eps)},
        mode="exact" if isinstance(delta, Fraction) else "float",
    )


def mutual_information_check(
    rule: LearningRule, pop: PopulationDistribution, m: int, budget: Optional[StabilityBudget] = None
) -> StabilityReport:
    value = mutual_information(rule, pop, m)
    bound = None if budget is None else budget.f_at(m)
    return StabilityReport(
        definition="mi",
        rule=rule.name,
        m=m,
        estimate=value,
        exact=value.is_exact,
        passed=None if bound is None else value <= bound,
        budget=budget,
        details={"bits": value.in_bits()},
        mode=value.mode,
    )
