"""
Deterministic Monte Carlo sharding.

Trials are cut into shards of ``settings.mc_shard_size``; shard i draws from
``default_rng(seed + i)``. Results depend on the seed only, never on the
worker count.
"""

import math
import pickle
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional

import numpy as np
from loguru import logger

from backend.core.settings import settings
from config.environment import env_center

TrialFn = Callable[[np.random.Generator], Any]


def _run_shard(trial: TrialFn, count: int, seed: int) -> List[Any]:
    rng = np.random.default_rng(seed)
    return [trial(rng) for _ in range(count)]


def shard_sizes(trials: int) -> List[int]:
    size = max(1, settings.mc_shard_size)
    shards = max(1, math.ceil(trials / size))
    return [min(size, trials - i * size) for i in range(shards)]


def run_trials(trial: TrialFn, trials: int, seed: int = 0, workers: Optional[int] = None) -> List[Any]:
    """
    Run ``trial(rng)`` ``trials`` times.

    Args:
        trial: one Monte Carlo trial
        trials: total trial count
        seed: base seed
        workers: process count (defaults to the environment's run config)

    Returns:
        Trial outcomes in shard order
    """
    if trials <= 0:
        return []
    workers = env_center.run_config.workers if workers is None else workers
    sizes = shard_sizes(trials)
    if workers > 1 and len(sizes) > 1:
        try:
            pickle.dumps(trial)
        except (pickle.PicklingError, AttributeError, TypeError) as e:
            logger.warning(f"Trial function cannot cross processes ({e}); running {len(sizes)} shards in-process")
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_shard, trial, n, seed + i) for i, n in enumerate(sizes)]
                return [value for future in futures for value in future.result()]
    return [value for i, n in enumerate(sizes) for value in _run_shard(trial, n, seed + i)]
