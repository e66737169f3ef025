"""
Dimension Manager - runs the requested dimension set on a class under budgets
and cross-checks the inequalities that tie the dimensions together.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from loguru import logger

from backend.components.dimensions.clique import CliqueResult, clique_dimension
from backend.components.dimensions.game import GameValueResult, dichotomy_probe, fractional_clique_value
from backend.components.dimensions.littlestone import littlestone_dimension
from backend.components.dimensions.thresholds import longest_staircase
from backend.components.primitives.domain import HypothesisClass
from backend.core.errors import BudgetExceededError, TheoremViolationError

DIMENSIONS = ("ld", "clique", "thresholds", "game")


@dataclass
class DimensionReport:
    """Dimension values of one class; entries stay None when not requested or over budget."""
    class_name: str
    domain_size: int
    members: int
    littlestone: Optional[int] = None
    clique: Optional[CliqueResult] = None
    threshold_count: Optional[int] = None
    game: List[GameValueResult] = field(default_factory=list)
    skipped: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "class": self.class_name,
            "domain_size": self.domain_size,
            "members": self.members,
            "littlestone": self.littlestone,
            "clique": self.clique.reported if self.clique else None,
            "threshold_count": self.threshold_count,
            "game": [g.to_dict() for g in self.game],
            "skipped": dict(sorted(self.skipped.items())),
        }

    def to_record(self) -> Dict[str, Any]:
        """Flat row for the dims CSV."""
        record = {
            "class": self.class_name,
            "n": self.domain_size,
            "members": self.members,
            "ld": self.littlestone,
            "clique": self.clique.reported if self.clique else None,
            "thresholds": self.threshold_count,
        }
        for g in self.game:
            record[f"C_{g.m}"] = str(g.clique_number)
        return record


class DimensionManager:
    """Computes dimensions and checks LD >= floor(log2 d) and monotone C_m."""

    def __init__(self, clique_m_max: int = 4):
        self.clique_m_max = clique_m_max

    def compute(
        self,
        hclass: HypothesisClass,
        what: Sequence[str] = DIMENSIONS,
        m_grid: Sequence[int] = (1, 2, 3),
        method: str = "exact",
        universe: str = "class",
    ) -> DimensionReport:
        """
        Compute the requested dimensions of a class.

        Args:
            hclass: class under study
            what: subset of ("ld", "clique", "thresholds", "game")
            m_grid: sample sizes for the game value
            method: game solver ("exact" or "mw")
            universe: game prior universe ("class" or "all")

        Returns:
            DimensionReport; over-budget entries are listed in ``skipped``
        """
        unknown = set(what) - set(DIMENSIONS)
        if unknown:
            raise ValueError(f"unknown dimensions: {sorted(unknown)}")
        report = DimensionReport(hclass.name, hclass.domain.size, len(hclass))

        if "ld" in what:
            report.littlestone = self._guarded(report, "ld", littlestone_dimension, hclass)
        if "clique" in what:
            report.clique = self._guarded(report, "clique", clique_dimension, hclass, self.clique_m_max)
        if "thresholds" in what:
            witness = self._guarded(report, "thresholds", longest_staircase, hclass)
            if witness is not None:
                report.threshold_count = max(1, witness.length)
        if "game" in what:
            for m in m_grid:
                result = self._guarded(report, f"game:m={m}", fractional_clique_value, hclass, m, method, universe)
                if result is not None:
                    report.game.append(result)

        self.check_relations(report)
        logger.info(f"Dimensions of {hclass.name}: {report.to_record()}")
        return report

    def _guarded(self, report: DimensionReport, key: str, fn, *args):
        try:
            return fn(*args)
        except BudgetExceededError as e:
            logger.warning(f"Skipping {key} for {report.class_name}: {e}")
            report.skipped[key] = str(e)
            return None

    def check_relations(self, report: DimensionReport) -> None:
        if report.littlestone is not None and report.threshold_count is not None:
            floor_log = int(math.floor(math.log2(report.threshold_count)))
            if report.littlestone < floor_log:
                raise TheoremViolationError(
                    "LD >= floor(log2 threshold count)", (report.littlestone, report.threshold_count)
                )
        exact = sorted((g for g in report.game if g.method == "exact"), key=lambda g: g.m)
        for smaller, larger in zip(exact, exact[1:]):
            if larger.value > smaller.value:
                raise TheoremViolationError("game value nonincreasing in m", (smaller.m, larger.m))

    def probe(self, hclass: HypothesisClass, m_grid: Sequence[int], method: str = "exact", universe: str = "class"):
        return dichotomy_probe(hclass, m_grid, method, universe)


# Global dimension manager instance
dimension_manager = DimensionManager()
