"""
Clique dimension: largest m with 2^m realizable size-m samples that pairwise contradict.

A size-m sample reduces to its dichotomy; any realizable dichotomy on fewer
points extends (through a consistent member) to one on exactly min(m, n)
points without losing contradictions, so the search runs over those.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from loguru import logger

from backend.components.dimensions.dichotomies import Dichotomy, dichotomies_on_exactly
from backend.components.primitives.domain import HypothesisClass
from backend.core.budgets import budget_limit


@dataclass
class CliqueResult:
    dimension: int
    witness: Tuple[Dichotomy, ...]
    m_max: int
    lower_bound_only: bool = False
    nodes: int = 0
    orders: List[int] = field(default_factory=list)

    @property
    def reported(self) -> str:
        if self.lower_bound_only or self.dimension == self.m_max:
            return f">= {self.dimension}"
        return str(self.dimension)


class _NodeBudget(Exception):
    pass


def find_clique(vertices: List[Dichotomy], target: int, node_limit: int) -> Tuple[Optional[List[int]], int]:
    """Backtracking search for ``target`` pairwise-contradicting vertices (bitset adjacency)."""
    count = len(vertices)
    adjacency = [0] * count
    for i in range(count):
        for j in range(i + 1, count):
            if vertices[i].contradicts(vertices[j]):
                adjacency[i] |= 1 << j
                adjacency[j] |= 1 << i
    nodes = 0

    def expand(clique: List[int], candidates: int) -> Optional[List[int]]:
        nonlocal nodes
        nodes += 1
        if nodes > node_limit:
            raise _NodeBudget()
        if len(clique) == target:
            return clique
        while candidates:
            if len(clique) + bin(candidates).count("1") < target:
                return None
            v = (candidates & -candidates).bit_length() - 1
            candidates &= ~(1 << v)
            found = expand(clique + [v], candidates & adjacency[v])
            if found is not None:
                return found
        return None

    try:
        return expand([], (1 << count) - 1), nodes
    except _NodeBudget:
        return None, -nodes


def has_clique_of_order(hclass: HypothesisClass, m: int, node_limit: Optional[int] = None) -> Tuple[Optional[List[Dichotomy]], int]:
    if m == 0:
        return [], 0
    k = min(m, hclass.domain.size)
    vertices = dichotomies_on_exactly(hclass, k)
    target = 1 << m
    if len(vertices) < target:
        return None, 0
    limit = node_limit if node_limit is not None else budget_limit("clique_nodes")
    found, nodes = find_clique(vertices, target, limit)
    if found is None:
        return None, nodes
    return [vertices[i] for i in found], nodes


def clique_dimension(hclass: HypothesisClass, m_max: int = 4) -> CliqueResult:
    """
    Largest order m <= m_max admitting a clique, with the clique as witness.

    A node-budget overrun stops the sweep and reports the last order found as a lower bound.
    """
    result = CliqueResult(0, (), m_max)
    total = 0
    for m in range(1, m_max + 1):
        found, nodes = has_clique_of_order(hclass, m)
        total += abs(nodes)
        if nodes < 0:
            logger.warning(f"Clique search budget exhausted at order {m}; reporting >= {result.dimension}")
            result.lower_bound_only = True
            break
        if found is not None:
            result.dimension = m
            result.witness = tuple(found)
            result.orders.append(m)
    result.nodes = total
    return result
