"""
Environment Center - enumeration budgets and run configuration for the lab.
"""
import os
from typing import Optional
from dataclasses import dataclass, asdict
from dotenv import load_dotenv

from loguru import logger

# Load environment variables
load_dotenv()


@dataclass
class BudgetConfig:
    """Caps on every exhaustive enumeration the lab performs"""
    sample_space: int = 200_000
    universe_points: int = 24
    class_members: int = 1 << 16
    ld_states: int = 500_000
    clique_nodes: int = 2_000_000
    lp_cells: int = 400_000
    majority_compositions: int = 250_000
    joint_atoms: int = 2_000_000

    def scaled(self, factor: int) -> "BudgetConfig":
        """Return a copy with every count cap multiplied by factor (the point guard is fixed)."""
        if factor <= 0:
            raise ValueError("budget factor must be positive")
        values = {
            name: value if name == "universe_points" else value * factor
            for name, value in asdict(self).items()
        }
        return BudgetConfig(**values)


@dataclass
class RunConfig:
    """Run configuration"""
    workers: int = 1
    output_directory: str = "reports"
    seed: int = 0


class EnvironmentCenter:
    """Central access point for budgets and run configuration"""

    def __init__(self):
        self.budget_config = self._load_budget_config()
        self.run_config = self._load_run_config()

    def _load_budget_config(self) -> BudgetConfig:
        """Load enumeration caps; STABILITY_LAB_BUDGET scales all of them"""
        config = BudgetConfig()
        raw = os.getenv("STABILITY_LAB_BUDGET")
        if raw:
            try:
                factor = int(raw)
                config = config.scaled(factor)
            except ValueError:
                logger.warning(f"Ignoring invalid STABILITY_LAB_BUDGET={raw!r}")
        return config

    def _load_run_config(self) -> RunConfig:
        """Load run configuration"""
        return RunConfig(
            workers=int(os.getenv("STABILITY_LAB_WORKERS", "1")),
            output_directory=os.getenv("STABILITY_LAB_OUTPUT_DIR", "reports"),
            seed=int(os.getenv("STABILITY_LAB_SEED", "0")),
        )

    def reload(self, budget_factor: Optional[int] = None) -> None:
        """Re-read the environment, optionally overriding the budget factor"""
        self.budget_config = self._load_budget_config()
        if budget_factor is not None:
            self.budget_config = BudgetConfig().scaled(budget_factor)
        self.run_config = self._load_run_config()


# Global instance
env_center = EnvironmentCenter()
