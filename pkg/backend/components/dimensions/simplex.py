"""
Rational simplex for max c.y subject to A y <= b, y >= 0 with b >= 0.

Dictionary form with Bland's rule. The slack basis is feasible because
b >= 0, so no first phase is needed.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence

from loguru import logger

from backend.core.errors import StabilityLabError


@dataclass
class LPSolution:
    status: str
    objective: Fraction
    primal: List[Fraction]
    dual: List[Fraction]
    pivots: int


class SimplexTableau:
    """
    Basic rows read x_B[i] = b[i] - sum_j A[i][j] x_N[j]; the objective is
    z = z0 + sum_j c[j] x_N[j]. Variables 0..n-1 are structural and n..n+m-1
    are the slacks of rows 0..m-1.
    """

    def __init__(self, A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]):
        self.m = len(A)
        self.n = len(c)
        if any(len(row) != self.n for row in A) or len(b) != self.m:
            raise StabilityLabError("LP dimensions do not match")
        if any(Fraction(v) < 0 for v in b):
            raise StabilityLabError("slack basis needs b >= 0")
        self.A = [[Fraction(v) for v in row] for row in A]
        self.b = [Fraction(v) for v in b]
        self.c = [Fraction(v) for v in c]
        self.z = Fraction(0)
        self.nb_vars = list(range(self.n))
        self.b_vars = list(range(self.n, self.n + self.m))
        self.pivots = 0

    def pivot(self, i: int, j: int) -> None:
        piv = self.A[i][j]
        row = self.A[i]
        new_row = [v / piv for v in row]
        new_row[j] = 1 / piv
        self.b[i] /= piv
        for k in range(self.m):
            if k == i:
                continue
            f = self.A[k][j]
            if f == 0:
                continue
            target = self.A[k]
            for l in range(self.n):
                if l == j:
                    target[l] = -f * new_row[j]
                elif new_row[l]:
                    target[l] -= f * new_row[l]
            self.b[k] -= f * self.b[i]
        delta = self.c[j]
        self.z += delta * self.b[i]
        for l in range(self.n):
            if l == j:
                continue
            if new_row[l]:
                self.c[l] -= delta * new_row[l]
        self.c[j] = -delta * new_row[j]
        self.A[i] = new_row
        self.nb_vars[j], self.b_vars[i] = self.b_vars[i], self.nb_vars[j]
        self.pivots += 1

    def bland_primal_step(self) -> str:
        try:
            _, j = min((self.nb_vars[j], j) for j in range(self.n) if self.c[j] > 0)
        except ValueError:
            return "optimal"
        try:
            _, _, i = min(
                (self.b[i] / self.A[i][j], self.b_vars[i], i) for i in range(self.m) if self.A[i][j] > 0
            )
        except ValueError:
            return "unbounded"
        self.pivot(i, j)
        return "go_on"

    def bland_primal(self) -> str:
        while True:
            status = self.bland_primal_step()
            if status in ("optimal", "unbounded"):
                return status

    def primal(self) -> List[Fraction]:
        values = [Fraction(0)] * self.n
        for i, var in enumerate(self.b_vars):
            if var < self.n:
                values[var] = self.b[i]
        return values

    def dual(self) -> List[Fraction]:
        """Row duals: minus the reduced cost of each nonbasic slack."""
        values = [Fraction(0)] * self.m
        for j, var in enumerate(self.nb_vars):
            if var >= self.n:
                values[var - self.n] = -self.c[j]
        return values


def solve_packing_lp(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]) -> LPSolution:
    """Maximize c.y subject to A y <= b, y >= 0 (b >= 0) exactly."""
    tableau = SimplexTableau(A, b, c)
    status = tableau.bland_primal()
    logger.debug(f"Simplex {tableau.m}x{tableau.n} finished '{status}' after {tableau.pivots} pivots")
    return LPSolution(status, tableau.z, tableau.primal(), tableau.dual(), tableau.pivots)
