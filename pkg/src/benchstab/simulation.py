"""Monte Carlo counterpart of the closed forms in :mod:`benchstab.theory`.

Each replicate owns the keyed Philox stream ``(seed, tag, replicate)`` (see
:mod:`benchstab.rng`), so results do not depend on the number of worker
threads. Within a benchmark the noise block ``eps`` (N x k) is drawn first and
the meta-feature block ``z`` (N x p) second; a model without bias draws only
``eps``, so a model with ``bias = 0`` reproduces it draw for draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DegenerateModelError, ValidationError
from .ranking import ScoreMatrix, tau_from_scores
from .theory import PerformanceModel, _check_psd

__all__ = [
    "McEstimate",
    "mc_expected_tau",
    "mc_position1_disagreement",
    "simulate_scores",
    "summarize",
]


@dataclass(frozen=True)
class McEstimate:
    """Replicate mean with its standard error."""

    mean: float
    std_error: float
    replicates: int
    seed: int
    median: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "median": self.median,
            "replicates": self.replicates,
            "seed": self.seed,
        }


def summarize(values: np.ndarray, seed: int) -> McEstimate:
    """Mean, standard error and median of per-replicate values.

    The reduction runs over a contiguous array in replicate order (numpy's
    pairwise summation), so it is bit-stable for a given set of values.
    """
    v = np.ascontiguousarray(values, dtype=np.float64)
    r = len(v)
    mean = float(np.sum(v) / r)
    se = float(math.sqrt(np.sum((v - mean) ** 2) / (r - 1)) / math.sqrt(r)) if r > 1 else 0.0
    return McEstimate(mean, se, r, int(seed), float(np.median(v)))


def _latent_factor(model: PerformanceModel) -> np.ndarray | None:
    if not model.has_bias:
        return None
    w = _check_psd(model.sigma_z)
    _, vecs = np.linalg.eigh(model.sigma_z)
    # z = normals @ factor.T has covariance sigma_z
    return vecs * np.sqrt(w)


def _draw(model: PerformanceModel, factor, bitgen, n: int) -> np.ndarray:
    x = model.mu + model.sigma * rng.normals(bitgen, (n, model.k))
    if factor is not None:
        z = rng.normals(bitgen, (n, factor.shape[1])) @ factor.T
        x = x + z @ model.bias.T
    return x


def simulate_scores(model: PerformanceModel, n: int, seed: int, index: int = 0) -> ScoreMatrix:
    """Draw an ``n``-dataset benchmark from ``model``.

    Datasets are i.i.d.; within a dataset every model sees the same ``z``.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    bitgen = rng.stream(seed, index, rng.TAG_SIMULATE)
    x = _draw(model, _latent_factor(model), bitgen, int(n))
    return ScoreMatrix(x, pipeline_ids=tuple(f"m{i}" for i in range(model.k)))


def _check_mc(model: PerformanceModel, n: int, replicates: int) -> None:
    if model.k < 2:
        raise DegenerateModelError("need at least 2 models")
    if replicates < 2:
        raise ValidationError("replicates must be >= 2")
    if n < 1:
        raise ValidationError("n must be >= 1")


def _benchmark_means(model, n, seed, tag, replicates, workers, pairs: bool) -> np.ndarray:
    factor = _latent_factor(model)

    def one(r: int) -> np.ndarray:
        bitgen = rng.stream(seed, r, tag)
        a = _draw(model, factor, bitgen, n).mean(axis=0)
        if not pairs:
            return a
        b = _draw(model, factor, bitgen, n).mean(axis=0)
        return np.concatenate([a, b])

    return rng.map_replicates(one, replicates, workers)


def mc_expected_tau(model: PerformanceModel, n: int, replicates: int, seed: int,
                    target: str = "two_benchmarks", workers: int = 1) -> McEstimate:
    """Monte Carlo estimate of the expected Kendall tau.

    ``"two_benchmarks"`` compares the rankings (by mean score) of two
    independent ``n``-dataset benchmarks; ``"oracle"`` compares one benchmark
    with the ranking of ``mu``.
    """
    _check_mc(model, n, replicates)
    k = model.k
    if target == "two_benchmarks":
        means = _benchmark_means(model, int(n), seed, rng.TAG_MC_TAU, replicates, workers, pairs=True)
        taus = tau_from_scores(means[:, :k], means[:, k:])
    elif target == "oracle":
        means = _benchmark_means(model, int(n), seed, rng.TAG_MC_TAU, replicates, workers, pairs=False)
        taus = tau_from_scores(means, np.broadcast_to(model.mu, means.shape))
    else:
        raise ValidationError(f"unknown target {target!r}")
    return summarize(taus, seed)


def mc_position1_disagreement(model: PerformanceModel, n: int, replicates: int, seed: int,
                              workers: int = 1) -> McEstimate:
    """Fraction of replicates in which two independent benchmarks name different top models.

    Ties for the top mean go to the lowest pipeline index (``np.argmax``); this
    has probability zero under Gaussian noise.
    """
    _check_mc(model, n, replicates)
    if int(np.sum(model.mu == model.mu.max())) > 1:
        raise DegenerateModelError("several models share the largest mean")
    k = model.k
    means = _benchmark_means(model, int(n), seed, rng.TAG_MC_POS1, replicates, workers, pairs=True)
    differ = np.argmax(means[:, :k], axis=1) != np.argmax(means[:, k:], axis=1)
    return summarize(differ.astype(np.float64), seed)
