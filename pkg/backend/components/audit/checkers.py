"""
Stability checkers.

Exact mode enumerates samples under the ``sample_space`` budget and decides
event-quantified definitions through hockey-stick divergences. Monte Carlo
mode reports Wilson (proportions) or Hoeffding (means) radii and passes a
budget only when the whole confidence interval does.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from backend.components.audit.information import dd_prior_from_marginal, sample_posteriors
from backend.components.audit.montecarlo import run_trials
from backend.components.audit.reports import StabilityReport
from backend.components.audit.sample_space import neighbor_pairs, neighbors, sample_count, sample_source
from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.components.divergences.exact import Number, compare
from backend.components.divergences.measures import Alpha, DivergenceValue, at_most, hockey_stick, renyi, tv
from backend.components.learners.base import LearningRule
from backend.components.primitives.domain import Hypothesis, HypothesisClass, LabeledSample, PopulationDistribution
from backend.components.primitives.losses import population_loss
from backend.core.budgets import check_budget, within_budget
from backend.core.confidence import hoeffding_radius, wilson_interval
from backend.core.errors import (
    NotSeedSplittableError,
    PriorNeverConsistentError,
    StabilityLabError,
    TheoremViolationError,
)
from backend.core.settings import settings

EXACT, MONTE_CARLO, SEARCH = "exact", "mc", "search"


def _posterior(rule: LearningRule, sample: LabeledSample) -> Optional[FiniteDistribution]:
    """Posterior, or None where the rule is undefined (e.g. a prior never consistent with S)."""
    try:
        return rule.posterior(sample)
    except PriorNeverConsistentError:
        return None


def _two_sided(eps: Number, p: FiniteDistribution, q: FiniteDistribution):
    return max(hockey_stick(eps, p, q), hockey_stick(eps, q, p))


def _seed_of(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2 ** 63 - 1))


def _trials(trials: Optional[int]) -> int:
    return settings.default_trials if trials is None else trials


# Differential privacy


def dp_check(
    rule: LearningRule,
    m: int,
    eps: Number,
    delta: Number,
    mode: str = EXACT,
    trials: Optional[int] = None,
    seed: int = 0,
) -> StabilityReport:
    """
    (eps, delta)-DP over neighbouring samples of size m.

    Args:
        rule: rule with exact posteriors
        m: sample size
        eps, delta: privacy budget (pass eps as ``log_of(r)`` to stay exact)
        mode: "exact" (every neighbouring pair), "search" (random samples and all
            their neighbours; a lower bound on the worst delta) or "auto"
        trials: base samples visited in search mode
        seed: search seed

    Returns:
        StabilityReport whose estimate is the worst two-sided hockey-stick value
    """
    domain = rule.domain
    if mode == "auto":
        mode = EXACT if within_budget("sample_space", sample_count(domain, m)) else SEARCH
        logger.info(f"DP check for {rule.name} at m={m} runs in {mode} mode")
    if mode not in (EXACT, SEARCH):
        raise StabilityLabError(f"unknown DP mode {mode!r}")

    worst, witness, undefined = None, None, 0
    visited = 0
    if mode == EXACT:
        pairs = neighbor_pairs(domain, m)
    else:
        pairs = _search_pairs(domain, m, _trials(trials), seed)
    for first, second in pairs:
        p, q = _posterior(rule, first), _posterior(rule, second)
        if p is None or q is None:
            undefined += 1
            continue
        visited += 1
        value = _two_sided(eps, p, q)
        if worst is None or value > worst:
            worst, witness = value, (first, second)
    if worst is None:
        raise StabilityLabError(f"{rule.name} is undefined on every neighbouring pair at m={m}")
    if undefined:
        logger.warning(f"{rule.name}: skipped {undefined} neighbouring pairs where the rule is undefined")

    exact = mode == EXACT and isinstance(worst, Fraction)
    return StabilityReport(
        definition="dp",
        rule=rule.name,
        m=m,
        estimate=worst,
        exact=exact,
        radius=0.0 if mode == EXACT else None,
        passed=at_most(worst, delta),
        witness={"pair": [str(witness[0]), str(witness[1])]},
        details={"eps": float(eps), "delta": float(delta), "pairs": visited, "undefined_pairs": undefined},
        trials=None if mode == EXACT else _trials(trials),
        mode=mode if mode == SEARCH or exact else "float",
    )


def _search_pairs(domain, m: int, trials: int, seed: int):
    rng = make_rng(seed)
    pairs = domain.all_pairs()
    for _ in range(trials):
        picks = rng.integers(0, len(pairs), size=m)
        sample = LabeledSample(domain, tuple(pairs[i] for i in picks))
        for _, other in neighbors(sample):
            yield sample, other


def private_pac_check(
    rule: LearningRule,
    pop: PopulationDistribution,
    m: int,
    eps: Number,
    delta: Number,
    accuracy: Optional[Number] = None,
) -> StabilityReport:
    """DP verdict plus the exact expected population loss E_S E_{h~A(S)} L_D(h)."""
    report = dp_check(rule, m, eps, delta)
    zero = Fraction(0) if pop.weights.is_exact else 0.0
    loss = zero
    for _, ps, post in sample_posteriors(rule, pop, m):
        loss += ps * post.expectation(lambda h: population_loss(pop, h))
    report.details["expected_loss"] = loss
    if accuracy is not None:
        report.details["accuracy"] = accuracy
        report.passed = report.passed and at_most(loss, accuracy)
    return report


# Replicability and global stability


def _uses_cdf_coupling(rule: LearningRule) -> bool:
    return type(rule).agreement is LearningRule.agreement


def _require_splittable(rule: LearningRule) -> None:
    if not rule.seed_splittable:
        raise NotSeedSplittableError(rule.name)


@dataclass
class CouplingPartition:
    """
    Cells of the shared uniform r on which every sample's output is constant.

    ``cells`` holds (length, {h: Pr_S[A(S; r) = h]}) per cell.
    """
    cells: List[Tuple[Fraction, Dict[Hypothesis, Fraction]]]

    def collision(self) -> Fraction:
        return sum((length * sum(p * p for p in masses.values()) for length, masses in self.cells), Fraction(0))

    def marginal(self) -> Dict[Hypothesis, Fraction]:
        out: Dict[Hypothesis, Fraction] = {}
        for length, masses in self.cells:
            for h, p in masses.items():
                out[h] = out.get(h, Fraction(0)) + length * p
        return out

    def good_mass(self, eta: Number) -> Fraction:
        """Pr_r[max_h Pr_S[A(S; r) = h] >= eta]."""
        return sum((length for length, masses in self.cells if compare(max(masses.values()), eta) >= 0), Fraction(0))

    def eta_good(self) -> Fraction:
        """min_r max_h Pr_S[A(S; r) = h]."""
        return min(max(masses.values()) for _, masses in self.cells)

    def eta_fixed(self) -> Tuple[Hypothesis, Fraction]:
        """max_h min_r Pr_S[A(S; r) = h]: one canonical output for every r."""
        candidates = sorted(set().union(*(masses.keys() for _, masses in self.cells)))
        floor = {h: min(masses.get(h, Fraction(0)) for _, masses in self.cells) for h in candidates}
        h = max(candidates, key=lambda c: floor[c])
        return h, floor[h]


def coupling_partition(rule: LearningRule, pop: PopulationDistribution, m: int) -> CouplingPartition:
    """Exact partition of r in [0, 1) for rules coupled by the inverse CDF."""
    _require_splittable(rule)
    if not _uses_cdf_coupling(rule):
        raise StabilityLabError(f"{rule.name} is not coupled by the inverse CDF; its partition is unavailable")
    rows = sample_posteriors(rule, pop, m)
    if not all(isinstance(ps, Fraction) and post.is_exact for _, ps, post in rows):
        raise StabilityLabError("coupling partition needs exact posteriors and an exact population")
    cuts = {Fraction(0), Fraction(1)}
    cell_lists = []
    for sample, ps, _ in rows:
        cells = sorted(rule.cells(sample).items(), key=lambda item: item[1][0])
        cell_lists.append((ps, cells))
        cuts.update(hi for _, (_, hi) in cells)
    points = sorted(cuts)
    check_budget("joint_atoms", (len(points) - 1) * len(rows), hint="coupling partition")

    partition = []
    pointers = [0] * len(cell_lists)
    for low, high in zip(points, points[1:]):
        masses: Dict[Hypothesis, Fraction] = {}
        for i, (ps, cells) in enumerate(cell_lists):
            while cells[pointers[i]][1][1] <= low:
                pointers[i] += 1
            h = cells[pointers[i]][0]
            masses[h] = masses.get(h, Fraction(0)) + ps
        partition.append((high - low, masses))
    return CouplingPartition(partition)


def _agreement_trial(rule: LearningRule, pop: PopulationDistribution, m: int, rng: np.random.Generator) -> bool:
    first, second = pop.draw(m, rng), pop.draw(m, rng)
    r = _seed_of(rng)
    return rule.draw(first, r) == rule.draw(second, r)


def _proportion_report(definition, rule, m, successes, trials, bound, **details) -> StabilityReport:
    low, high = wilson_interval(successes, trials)
    estimate = successes / trials
    return StabilityReport(
        definition=definition,
        rule=rule.name,
        m=m,
        estimate=estimate,
        exact=False,
        radius=max(high - estimate, estimate - low),
        passed=None if bound is None else low >= float(bound),
        details={"interval": [low, high], **details},
        trials=trials,
        mode=MONTE_CARLO,
    )


def replicability(
    rule: LearningRule,
    pop: PopulationDistribution,
    m: int,
    mode: str = EXACT,
    trials: Optional[int] = None,
    seed: int = 0,
    rho: Optional[Number] = None,
    workers: Optional[int] = None,
) -> StabilityReport:
    """
    rho = Pr_{S1, S2, r}[A(S1; r) = A(S2; r)] (the ">= rho" orientation).

    Exact mode sums Pr(S1) Pr(S2) agreement(S1, S2) over the sample law and,
    for inverse-CDF rules, cross-checks the collision identity
    rho = E_r sum_h Pr_S[A(S; r) = h]^2.

    Raises:
        NotSeedSplittableError: for rules without a shared-randomness form
        TheoremViolationError: when the collision identity fails
    """
    _require_splittable(rule)
    if mode == MONTE_CARLO:
        trials = _trials(trials)
        outcomes = run_trials(partial(_agreement_trial, rule, pop, m), trials, seed, workers)
        return _proportion_report("rep", rule, m, sum(outcomes), trials, rho)
    if mode != EXACT:
        raise StabilityLabError(f"unknown replicability mode {mode!r}")

    rows = sample_posteriors(rule, pop, m)
    check_budget("sample_space", len(rows) ** 2, hint="sample pairs")
    value = Fraction(0) if all(isinstance(ps, Fraction) for _, ps, _ in rows) else 0.0
    for i, (first, p1, _) in enumerate(rows):
        value += p1 * p1 * rule.agreement(first, first)
        for second, p2, _ in rows[i + 1:]:
            value += 2 * p1 * p2 * rule.agreement(first, second)

    details = {"coupling": "inverse-cdf" if _uses_cdf_coupling(rule) else "native"}
    if _uses_cdf_coupling(rule) and isinstance(value, Fraction) and all(p.is_exact for _, _, p in rows):
        collision = coupling_partition(rule, pop, m).collision()
        if collision != value:
            raise TheoremViolationError("collision identity", {"pairwise": str(value), "collision": str(collision)})
        details["collision_identity"] = True
    exact = isinstance(value, Fraction)
    return StabilityReport(
        definition="rep",
        rule=rule.name,
        m=m,
        estimate=value,
        exact=exact,
        passed=None if rho is None else at_most(rho, value),
        details=details,
        mode=EXACT if exact else "float",
    )


def _good_seed_trial(
    rule: LearningRule, pop: PopulationDistribution, m: int, eta: float, inner: int, rng: np.random.Generator
) -> bool:
    r = _seed_of(rng)
    counts: Dict[Hypothesis, int] = {}
    for _ in range(inner):
        h = rule.draw(pop.draw(m, rng), r)
        counts[h] = counts.get(h, 0) + 1
    return max(counts.values()) / inner >= eta


def two_param_replicability(
    rule: LearningRule,
    pop: PopulationDistribution,
    m: int,
    eta: Number,
    mode: str = EXACT,
    trials: Optional[int] = None,
    inner: int = 200,
    seed: int = 0,
    nu: Optional[Number] = None,
    workers: Optional[int] = None,
) -> StabilityReport:
    """
    nu = Pr_r[r is eta-good], r being eta-good when some h_r has Pr_S[A(S; r) = h_r] >= eta.

    Exact mode needs the inverse-CDF coupling; Monte Carlo estimates each seed's
    mode frequency from ``inner`` samples, so it is biased towards calling seeds good.
    """
    _require_splittable(rule)
    if mode == MONTE_CARLO:
        trials = _trials(trials)
        trial = partial(_good_seed_trial, rule, pop, m, float(eta), inner)
        outcomes = run_trials(trial, trials, seed, workers)
        return _proportion_report("rep", rule, m, sum(outcomes), trials, nu, eta=float(eta), inner=inner)
    partition = coupling_partition(rule, pop, m)
    value = partition.good_mass(eta)
    return StabilityReport(
        definition="rep",
        rule=rule.name,
        m=m,
        estimate=value,
        exact=True,
        passed=None if nu is None else at_most(nu, value),
        details={"eta": float(eta), "parameters": "two"},
    )


@dataclass(frozen=True)
class ReplicabilityParams:
    rho: Optional[Number] = None
    eta: Optional[Number] = None
    nu: Optional[Number] = None


def _unit(name: str, value) -> None:
    if value is None:
        raise StabilityLabError(f"{name} is required")
    if not 0 <= value <= 1:
        raise StabilityLabError(f"{name} must lie in [0, 1], got {value}")


def rep_param_convert(direction: str, params: ReplicabilityParams) -> ReplicabilityParams:
    """
    Convert between one- and two-parameter replicability.

    ``"one_to_two"``: rho-replicable gives ((rho - nu) / (1 - nu), nu) for nu < 1.
    ``"two_to_one"``: (eta, nu)-replicable gives (eta + 2 nu - 2).
    """
    if direction == "one_to_two":
        _unit("rho", params.rho)
        _unit("nu", params.nu)
        if params.nu == 1:
            raise StabilityLabError("nu must be below 1 to convert from rho")
        return ReplicabilityParams(eta=(params.rho - params.nu) / (1 - params.nu), nu=params.nu)
    if direction == "two_to_one":
        _unit("eta", params.eta)
        _unit("nu", params.nu)
        rho = params.eta + 2 * params.nu - 2
        if rho <= 0:
            logger.info(f"({params.eta}, {params.nu})-replicability converts to a vacuous rho={rho}")
        return ReplicabilityParams(rho=rho)
    raise StabilityLabError(f"unknown conversion {direction!r}; use one_to_two or two_to_one")


def _draw_trial(rule: LearningRule, pop: PopulationDistribution, m: int, rng: np.random.Generator) -> Hypothesis:
    return rule.draw(pop.draw(m, rng), _seed_of(rng))


def global_stability(
    rule: LearningRule,
    pop: PopulationDistribution,
    m: int,
    mode: str = EXACT,
    trials: Optional[int] = None,
    seed: int = 0,
    eta: Optional[Number] = None,
    workers: Optional[int] = None,
) -> StabilityReport:
    """eta = max_h Pr_{S, coins}[A(S) = h]; the canonical h is the witness."""
    if mode == MONTE_CARLO:
        trials = _trials(trials)
        draws = run_trials(partial(_draw_trial, rule, pop, m), trials, seed, workers)
        counts: Dict[Hypothesis, int] = {}
        for h in draws:
            counts[h] = counts.get(h, 0) + 1
        canonical = max(sorted(counts), key=lambda h: counts[h])
        report = _proportion_report("gs", rule, m, counts[canonical], trials, eta)
        report.witness["canonical"] = canonical.to_string()
        return report
    marginal = dd_prior_from_marginal(rule, pop, m)
    canonical, value = marginal.max_atom()
    exact = isinstance(value, Fraction)
    return StabilityReport(
        definition="gs",
        rule=rule.name,
        m=m,
        estimate=value,
        exact=exact,
        passed=None if eta is None else at_most(eta, value),
        witness={"canonical": canonical.to_string()},
        mode=EXACT if exact else "float",
    )


def global_stability_implies_replicability(
    rule: LearningRule, pop: PopulationDistribution, m: int
) -> StabilityReport:
    """
    Relate global stability and replicability on an inverse-CDF rule.

    Checked exactly: rho >= (min_r max_h Pr_S[A(S; r) = h])^2 and the partition's
    marginal equals the output law. rho >= eta for the fixed canonical output is
    reported.

    Raises:
        TheoremViolationError: when either exact relation fails
    """
    partition = coupling_partition(rule, pop, m)
    rho = partition.collision()
    eta_good = partition.eta_good()
    canonical, eta_fixed = partition.eta_fixed()
    if rho < eta_good * eta_good:
        raise TheoremViolationError("rho >= eta_good^2", {"rho": str(rho), "eta_good": str(eta_good)})

    marginal = dd_prior_from_marginal(rule, pop, m)
    through_r = partition.marginal()
    if {h: p for h, p in through_r.items() if p > 0} != marginal.as_dict():
        raise TheoremViolationError("E_r Pr_S[A(S; r) = h] equals Pr[A(S) = h]")
    _, eta_global = marginal.max_atom()

    linear = rho >= eta_fixed
    if not linear:
        logger.info(f"{rule.name} m={m}: rho={float(rho):.4g} below fixed-output eta={float(eta_fixed):.4g}")
    return StabilityReport(
        definition="rep",
        rule=rule.name,
        m=m,
        estimate=rho,
        exact=True,
        passed=True,
        witness={"canonical": canonical.to_string()},
        details={
            "eta_good": eta_good,
            "eta_fixed": eta_fixed,
            "eta_global": eta_global,
            "rho_lower": eta_good * eta_good,
            "rho_at_least_eta_fixed": linear,
        },
    )


# Prior-based definitions


def _resolve_prior(
    rule: LearningRule, m: int, prior: Optional[FiniteDistribution], pop: Optional[PopulationDistribution]
) -> Tuple[FiniteDistribution, str]:
    if prior is not None:
        return prior, "given"
    if pop is None:
        raise StabilityLabError("a prior or a population (for the marginal prior) is required")
    return dd_prior_from_marginal(rule, pop, m), "marginal"


def _per_sample(
    definition: str,
    rule: LearningRule,
    m: int,
    prior: FiniteDistribution,
    prior_kind: str,
    source: FiniteDistribution,
    measure,
    holds,
    beta: Number,
    **details,
) -> StabilityReport:
    """
    Pr_S[holds(measure(A(S), prior))] over the sample source, compared with 1 - beta.

    Samples on which the rule is undefined count as violations (an output that
    does not exist is infinitely far from any prior).
    """
    exact = source.is_exact and prior.is_exact
    mass = Fraction(0) if exact else 0.0
    undefined = Fraction(0) if exact else 0.0
    worst, worst_sample, first_undefined = None, None, None
    flags = set()
    for sample, ps in source.items():
        if ps == 0:
            continue
        post = _posterior(rule, sample)
        if post is None:
            undefined += ps
            if first_undefined is None:
                first_undefined = sample
            continue
        exact = exact and post.is_exact
        value = measure(post, prior)
        if isinstance(value, DivergenceValue):
            flags.update(value.flags)
            if value.infinite:
                flags.add("absolute-continuity")
        if holds(value):
            mass += ps
        if worst is None or value > worst:
            worst, worst_sample = value, sample
    witness = {"sample": str(worst_sample), "value": worst}
    if undefined:
        logger.warning(f"{rule.name}: undefined on samples of total mass {float(undefined):.4g}, counted as violations")
        flags.add("undefined")
        witness = {"sample": str(first_undefined), "value": "undefined"}
    return StabilityReport(
        definition=definition,
        rule=rule.name,
        m=m,
        estimate=mass,
        exact=exact and isinstance(mass, Fraction),
        passed=at_most(1 - mass, beta),
        witness=witness,
        details={"prior": prior_kind, "beta": beta, "flags": sorted(flags), "undefined_mass": undefined, **details},
        mode=EXACT if exact else "float",
    )


def perfect_generalization(
    rule: LearningRule,
    m: int,
    prior: Optional[FiniteDistribution],
    eps: Number,
    delta: Number = Fraction(0),
    mode: str = "pure",
    pop: Optional[PopulationDistribution] = None,
    hclass: Optional[HypothesisClass] = None,
    beta: Number = Fraction(0),
) -> StabilityReport:
    """
    One-way perfect generalization: A(S)(O) <= e^eps P(O) (+ delta) for every event O,
    with probability >= 1 - beta over S.

    Pure mode decides each sample by R_inf(A(S) || P) <= eps (infinite when A(S)
    leaves P's support); approx mode by the one-sided hockey-stick <= delta.
    Without a prior the marginal prior P_D of ``pop`` is used (DD); the samples
    come from ``pop``, else from the class-realizable samples, else from all samples.
    """
    prior, kind = _resolve_prior(rule, m, prior, pop)
    source = sample_source(rule.domain, m, pop, hclass)
    if mode == "pure":
        return _per_sample(
            "pg", rule, m, prior, kind, source,
            lambda post, p: renyi(math.inf, post, p),
            lambda value: value <= eps,
            beta, eps=eps, pg_mode="pure",
        )
    if mode == "approx":
        return _per_sample(
            "pg", rule, m, prior, kind, source,
            lambda post, p: hockey_stick(eps, post, p),
            lambda value: at_most(value, delta),
            beta, eps=eps, delta=delta, pg_mode="approx",
        )
    raise StabilityLabError(f"unknown perfect-generalization mode {mode!r}; use pure or approx")


def renyi_stability(
    rule: LearningRule,
    m: int,
    alpha: Alpha,
    bound: Number,
    prior: Optional[FiniteDistribution] = None,
    pop: Optional[PopulationDistribution] = None,
    hclass: Optional[HypothesisClass] = None,
    beta: Number = Fraction(0),
) -> StabilityReport:
    """Pr_S[R_alpha(A(S) || P) <= bound] >= 1 - beta, DI with a given prior or DD with P_D."""
    prior, kind = _resolve_prior(rule, m, prior, pop)
    source = sample_source(rule.domain, m, pop, hclass)
    definition = "kl" if alpha == 1 else "renyi"
    return _per_sample(
        definition, rule, m, prior, kind, source,
        lambda post, p: renyi(alpha, post, p),
        lambda value: value <= bound,
        beta, alpha=float(alpha), bound=bound,
    )


def kl_stability(
    rule: LearningRule,
    m: int,
    bound: Number,
    prior: Optional[FiniteDistribution] = None,
    pop: Optional[PopulationDistribution] = None,
    hclass: Optional[HypothesisClass] = None,
    beta: Number = Fraction(0),
) -> StabilityReport:
    return renyi_stability(rule, m, 1, bound, prior, pop, hclass, beta)


def _tv_trial(rule: LearningRule, pop: PopulationDistribution, m: int, prior, rng: np.random.Generator) -> float:
    post = _posterior(rule, pop.draw(m, rng))
    return 1.0 if post is None else float(tv(post, prior))


def tv_stability(
    rule: LearningRule,
    m: int,
    prior: Optional[FiniteDistribution] = None,
    pop: Optional[PopulationDistribution] = None,
    hclass: Optional[HypothesisClass] = None,
    mode: str = EXACT,
    trials: Optional[int] = None,
    seed: int = 0,
    bound: Optional[Number] = None,
    workers: Optional[int] = None,
) -> StabilityReport:
    """E_S[TV(A(S), P)] with a given prior (DI) or the marginal prior (DD)."""
    prior, kind = _resolve_prior(rule, m, prior, pop)
    if mode == MONTE_CARLO:
        if pop is None:
            raise StabilityLabError("Monte Carlo TV stability needs a population")
        trials = _trials(trials)
        values = run_trials(partial(_tv_trial, rule, pop, m, prior), trials, seed, workers)
        estimate = math.fsum(values) / trials
        radius = hoeffding_radius(trials)
        return StabilityReport(
            definition="tv",
            rule=rule.name,
            m=m,
            estimate=estimate,
            exact=False,
            radius=radius,
            passed=None if bound is None else estimate + radius <= float(bound),
            details={"prior": kind},
            trials=trials,
            mode=MONTE_CARLO,
        )
    source = sample_source(rule.domain, m, pop, hclass)
    value = Fraction(0) if source.is_exact and prior.is_exact else 0.0
    undefined = Fraction(0) if isinstance(value, Fraction) else 0.0
    for sample, ps in source.items():
        if ps == 0:
            continue
        post = _posterior(rule, sample)
        # an undefined output sits at the maximal distance
        if post is None:
            undefined += ps
            value += ps
            continue
        value += ps * tv(post, prior)
    if undefined:
        logger.warning(f"{rule.name}: undefined on samples of total mass {float(undefined):.4g}, counted at TV 1")
    exact = isinstance(value, Fraction)
    return StabilityReport(
        definition="tv",
        rule=rule.name,
        m=m,
        estimate=value,
        exact=exact,
        passed=None if bound is None else at_most(value, bound),
        details={"prior": kind, "undefined_mass": undefined},
        mode=EXACT if exact else "float",
    )
