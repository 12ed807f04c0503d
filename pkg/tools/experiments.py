# tools/experiments.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# The plumbing for seeded Monte Carlo experiments:
#
#   - replicate_rng(seed, index) gives replicate `index` its own generator,
#     derived only from (seed, index). No global random state anywhere.
#   - parallel_map(fn, items, threads) runs independent jobs on a thread
#     pool and hands results back in input order.
#
# Together these make every report byte-identical whatever --threads is:
# which thread ran a replicate never influences its random draws or where
# its result lands.
# ============================================================================

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable

import numpy as np

from config import settings


def replicate_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for replicate `index` of an experiment seeded `seed`."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def resolve_threads(threads: int = None) -> int:
    """Flag value if given, else the SPECTRAL_ECON_THREADS default; at least 1."""
    if threads is None:
        threads = settings.DEFAULT_THREADS
    return max(1, int(threads))


def parallel_map(fn: Callable, items: Iterable, threads: int = None) -> list:
    """
    [fn(item) for item in items], possibly on several threads.

    numpy releases the GIL inside LAPACK calls, so dense eigen-solves do
    overlap. The first exception raised by any job propagates.
    """
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
