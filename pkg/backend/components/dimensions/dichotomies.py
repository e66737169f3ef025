"""
Realizable dichotomies: label patterns on point subsets that some member induces.

Consistency of a sample depends only on its distinct pairs, so a sample of
size m is represented by the dichotomy (point mask, labels) on at most m points.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Dict, FrozenSet, List, Sequence, Tuple

from backend.components.primitives.domain import Domain, Hypothesis, HypothesisClass, LabeledSample
from backend.core.budgets import check_budget


@dataclass(frozen=True, order=True)
class Dichotomy:
    mask: int
    labels: int

    @property
    def points(self) -> Tuple[int, ...]:
        return tuple(x for x in range(self.mask.bit_length()) if (self.mask >> x) & 1)

    @property
    def size(self) -> int:
        return bin(self.mask).count("1")

    def consistent(self, h: Hypothesis) -> bool:
        return (h.bits & self.mask) == self.labels

    def contradicts(self, other: "Dichotomy") -> bool:
        common = self.mask & other.mask
        return bool((self.labels ^ other.labels) & common)

    def to_sample(self, domain: Domain) -> LabeledSample:
        return LabeledSample(domain, tuple((x, (self.labels >> x) & 1) for x in self.points))

    @classmethod
    def from_sample(cls, sample: LabeledSample) -> "Dichotomy":
        pattern = sample.pattern()
        if pattern is None:
            raise ValueError("contradictory sample has no dichotomy")
        return cls(*pattern)

    def __str__(self) -> str:
        return "{" + ",".join(f"({x},{(self.labels >> x) & 1})" for x in self.points) + "}"


def _patterns_on(mask: int, rows: Sequence[int]) -> List[int]:
    return sorted({bits & mask for bits in rows})


def dichotomies_on_exactly(hclass: HypothesisClass, k: int) -> List[Dichotomy]:
    """Realizable dichotomies on exactly k points (k <= n)."""
    n = hclass.domain.size
    check_budget("sample_space", comb(n, k) * min(1 << k, len(hclass)), hint="realizable dichotomies")
    rows = hclass.bit_rows()
    out: List[Dichotomy] = []
    for subset in combinations(range(n), k):
        mask = sum(1 << x for x in subset)
        out.extend(Dichotomy(mask, labels) for labels in _patterns_on(mask, rows))
    return out


def realizable_dichotomies(hclass: HypothesisClass, m: int) -> List[Dichotomy]:
    """All realizable dichotomies on 1..min(m, n) points, ordered by size then mask then labels."""
    out: List[Dichotomy] = []
    for k in range(1, min(m, hclass.domain.size) + 1):
        out.extend(dichotomies_on_exactly(hclass, k))
    return out


def consistency_rows(columns: Sequence[Dichotomy], rows: Sequence[Hypothesis]) -> List[FrozenSet[int]]:
    """For each column, the set of row indices consistent with it."""
    return [frozenset(i for i, h in enumerate(rows) if d.consistent(h)) for d in columns]


def minimal_columns(columns: Sequence[Dichotomy], rows: Sequence[Hypothesis]) -> List[Dichotomy]:
    """
    Drop columns whose consistency set contains another column's.

    The column player minimizes consistency mass, so a column with a larger
    consistency set is never needed; identical sets keep their first column.
    """
    sets = consistency_rows(columns, rows)
    order = sorted(range(len(columns)), key=lambda j: (len(sets[j]), j))
    kept: List[int] = []
    seen: Dict[FrozenSet[int], int] = {}
    for j in order:
        s = sets[j]
        if s in seen:
            continue
        if any(sets[i] < s for i in kept):
            continue
        seen[s] = j
        kept.append(j)
    return [columns[j] for j in sorted(kept)]
