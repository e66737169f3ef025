"""
Littlestone dimension by memoized recursion on restricted classes.
"""

from typing import Dict, Tuple

from loguru import logger

from backend.components.primitives.domain import HypothesisClass
from backend.core.budgets import budget_limit, check_budget
from backend.core.errors import BudgetExceededError


def littlestone_dimension(hclass: HypothesisClass) -> int:
    """
    LD(H) = max over splitting points x of 1 + min(LD(H_{x->0}), LD(H_{x->1})); 0 if no x splits H.

    Args:
        hclass: class under the member and point budgets

    Returns:
        Exact Littlestone dimension
    """
    check_budget("class_members", len(hclass))
    check_budget("universe_points", hclass.domain.size)
    n = hclass.domain.size
    state_limit = budget_limit("ld_states")
    memo: Dict[Tuple[int, ...], int] = {}

    def solve(rows: Tuple[int, ...]) -> int:
        if len(rows) <= 1:
            return 0
        cached = memo.get(rows)
        if cached is not None:
            return cached
        if len(memo) >= state_limit:
            raise BudgetExceededError("ld_states", len(memo) + 1, state_limit)
        ceiling = len(rows).bit_length() - 1
        best = 0
        for x in range(n):
            ones = tuple(r for r in rows if (r >> x) & 1)
            if not ones or len(ones) == len(rows):
                continue
            zeros = tuple(r for r in rows if not (r >> x) & 1)
            # 1 + min(...) can only beat best when both sides can reach best.
            if min(len(ones), len(zeros)).bit_length() - 1 < best:
                continue
            first = solve(zeros if len(zeros) <= len(ones) else ones)
            if first < best:
                continue
            second = solve(ones if len(zeros) <= len(ones) else zeros)
            best = max(best, 1 + min(first, second))
            if best == ceiling:
                break
        memo[rows] = best
        return best

    result = solve(tuple(sorted(hclass.bit_rows())))
    logger.debug(f"Littlestone dimension of {hclass.name}: {result} ({len(memo)} states)")
    return result
