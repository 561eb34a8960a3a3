"""Keyed counter-based random substreams.

Every random draw in the package comes from a Philox4x64 stream whose key is
``(seed, tag)`` and whose counter starts at ``(0, 0, index, 0)``. A replicate
therefore owns an independent stream that depends only on the top-level seed,
a stream tag naming the purpose of the draws, and the replicate index. The
order in which replicates are evaluated, or the thread that evaluates them,
cannot change any value.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / float(1 << 53)

# Stream tags. Distinct purposes never share a key.
TAG_SIMULATE = 1
TAG_MC_TAU = 2
TAG_MC_POS1 = 3
TAG_DISJOINT = 4
TAG_LODO_NULL = 5
TAG_DOWNSAMPLE = 6
TAG_PROFILE_SAMPLE = 7


def stream(seed: int, index: int = 0, tag: int = 0) -> np.random.Philox:
    """Return the Philox bit generator for ``(seed, tag, index)``."""
    key = np.array([int(seed) & _MASK64, int(tag) & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, int(index) & _MASK64, 0], dtype=np.uint64)
    return np.random.Philox(counter=counter, key=key)


def generator(seed: int, index: int = 0, tag: int = 0) -> np.random.Generator:
    return np.random.Generator(stream(seed, index, tag))


def uniforms(bitgen: np.random.Philox, size) -> np.ndarray:
    """Uniform draws on the open interval (0, 1), 53 bits each."""
    n = int(np.prod(size))
    raw = bitgen.random_raw(n) >> np.uint64(11)
    u = (raw.astype(np.float64) + 0.5) * _INV_2_53
    return u.reshape(size)


def normals(bitgen: np.random.Philox, size) -> np.ndarray:
    """Standard normal draws by inverse CDF; exactly one raw word per value."""
    return ndtri(uniforms(bitgen, size))


def map_replicates(
    fn: Callable[[int], float],
    replicates: int,
    workers: int = 1,
) -> np.ndarray:
    """Evaluate ``fn(i)`` for ``i in range(replicates)``; results are returned in index order.

    With ``workers > 1`` contiguous blocks of indices run on a thread pool.
    Values are identical to the sequential run because each replicate draws
    from its own keyed stream.
    """
    if workers <= 1 or replicates < 2:
        return np.array([fn(i) for i in range(replicates)], dtype=np.float64)
    bounds = np.linspace(0, replicates, min(workers * 4, replicates) + 1).astype(int)

    def block(j: int) -> list[float]:
        return [fn(i) for i in range(bounds[j], bounds[j + 1])]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(block, range(len(bounds) - 1)))
    return np.array([v for part in parts for v in part], dtype=np.float64)
