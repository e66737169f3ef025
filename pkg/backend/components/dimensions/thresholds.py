"""
Longest embedded threshold staircase.

A staircase of length d is a point sequence x_1..x_d with members h_1..h_d
such that h_i(x_j) = 1[j < i]. A nonempty class always counts as d >= 1.
"""

from dataclasses import dataclass
from typing import List, Tuple

from loguru import logger

from backend.components.primitives.domain import Hypothesis, HypothesisClass
from backend.core.budgets import budget_limit
from backend.core.errors import BudgetExceededError


@dataclass(frozen=True)
class StaircaseWitness:
    points: Tuple[int, ...]
    hypotheses: Tuple[Hypothesis, ...]

    @property
    def length(self) -> int:
        return len(self.points)


def _lowest(bitset: int) -> int:
    return (bitset & -bitset).bit_length() - 1


def longest_staircase(hclass: HypothesisClass) -> StaircaseWitness:
    """Depth-first search over point sequences keeping, per step i, the members matching row i."""
    members = hclass.members
    n = hclass.domain.size
    everyone = (1 << len(members)) - 1
    ones = [sum(1 << i for i, h in enumerate(members) if h.label(x)) for x in range(n)]
    # Points where most members say 1 tend to come first in a staircase.
    order = sorted(range(n), key=lambda x: -bin(ones[x]).count("1"))
    ceiling = min(n, len(members))
    node_limit = budget_limit("clique_nodes")

    best: List[Tuple[Tuple[int, ...], Tuple[int, ...]]] = [((), ())]
    nodes = 0

    def extend(chosen: Tuple[int, ...], rows: Tuple[int, ...]) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_limit:
            raise BudgetExceededError("clique_nodes", nodes, node_limit, hint="threshold staircase search")
        if len(chosen) > len(best[0][0]):
            best[0] = (chosen, rows)
            if len(chosen) == ceiling:
                return True
        if len(chosen) + (n - len(chosen)) <= len(best[0][0]):
            return False
        prefix_ones = everyone
        for x in chosen:
            prefix_ones &= ones[x]
        for x in order:
            if x in chosen:
                continue
            zero_x = everyone & ~ones[x]
            new_rows = tuple(r & zero_x for r in rows) + (prefix_ones & zero_x,)
            if any(r == 0 for r in new_rows):
                continue
            if extend(chosen + (x,), new_rows):
                return True
        return False

    extend((), ())
    chosen, rows = best[0]
    if not chosen:
        # Degenerate convention: a single member is a length-1 staircase.
        return StaircaseWitness((0,), (members[0],))
    witness = StaircaseWitness(chosen, tuple(members[_lowest(r)] for r in rows))
    logger.debug(f"Staircase of length {witness.length} in {hclass.name} after {nodes} nodes")
    return witness


def threshold_count(hclass: HypothesisClass) -> int:
    """Largest d such that the class embeds d thresholds (>= 1 for a nonempty class)."""
    return max(1, longest_staircase(hclass).length)


def is_staircase(witness: StaircaseWitness) -> bool:
    d = witness.length
    return all(
        witness.hypotheses[i].label(witness.points[j]) == int(j < i) for i in range(d) for j in range(d)
    )
