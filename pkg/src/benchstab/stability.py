"""Empirical ranking stability from a score matrix.

The pieces:

* :func:`disjoint_subset_tau` is the bootstrap estimate of the agreement between two
  independent benchmarks of a given size, using pairs of disjoint dataset subsets.
* :func:`fit_stability_curve` fits ``1 - tau(N) = (C / sqrt N) exp(-a N)`` to those estimates.
* :func:`extrapolate_oracle` evaluates the fit at larger ``N`` and halves the
  disagreement to obtain the agreement with the oracle ranking.
* :func:`leave_one_group_out` and :func:`metafeature_split_tau` compare rankings on
  groups or feature tails of the datasets.

Random subsets are always drawn from the datasets sorted by id, so
reordering the rows of a matrix never changes a result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from . import rng
from .errors import NumericalError, ValidationError
from .ranking import ScoreMatrix, aggregate_ranking, kendall_tau, tau_from_scores
from .simulation import McEstimate, summarize

__all__ = [
    "Extrapolation",
    "GroupStability",
    "StabilityFit",
    "disjoint_subset_tau",
    "extrapolate_oracle",
    "fit_stability_curve",
    "leave_one_group_out",
    "metafeature_split_tau",
    "stability_curve",
]

DEFAULT_NULL_DRAWS = 200
DEFAULT_PERCENTILE = 1.0 / 3.0


def _canonical(m: ScoreMatrix) -> ScoreMatrix:
    order = sorted(range(m.n_datasets), key=lambda i: m.dataset_ids[i])
    return m.subset(order)


def _summaries(m: ScoreMatrix, by: str) -> np.ndarray:
    """Per-dataset quantity whose subset mean orders pipelines (larger = better)."""
    if by == "mean_score":
        return m.scores if m.higher_is_better else -m.scores
    if by == "average_rank":
        return -m.row_ranks()
    raise ValidationError(f"unknown aggregation {by!r}")


def disjoint_subset_tau(m: ScoreMatrix, subset_size: int, replicates: int, seed: int,
                        by: str = "mean_score", workers: int = 1) -> McEstimate:
    """Bootstrap the Kendall tau between two disjoint random subsets of ``subset_size`` datasets.

    Each replicate shuffles the datasets once and takes the first two blocks
    of ``subset_size``; pipelines are ranked by their mean score (or mean rank
    with ``by="average_rank"``) within each block.
    """
    n = m.n_datasets
    s = int(subset_size)
    if n < 2:
        raise ValidationError("need at least 2 datasets")
    if s < 1 or 2 * s > n:
        raise ValidationError(f"subset_size must be in [1, {n // 2}] for {n} datasets, got {s}")
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    x = _summaries(_canonical(m), by)
    tag = rng.TAG_DISJOINT | (s << 16)

    def one(r: int) -> np.ndarray:
        perm = rng.generator(seed, r, tag).permutation(n)
        return np.concatenate([x[perm[:s]].mean(axis=0), x[perm[s:2 * s]].mean(axis=0)])

    means = rng.map_replicates(one, replicates, workers)
    k = m.n_pipelines
    return summarize(tau_from_scores(means[:, :k], means[:, k:]), seed)


def stability_curve(m: ScoreMatrix, sizes: Sequence[int], replicates: int, seed: int,
                    by: str = "mean_score", workers: int = 1) -> list[tuple[int, McEstimate]]:
    """:func:`disjoint_subset_tau` over several subset sizes."""
    return [(int(s), disjoint_subset_tau(m, s, replicates, seed, by, workers)) for s in sizes]


@dataclass(frozen=True)
class StabilityFit:
    """Fitted disagreement law ``1 - tau(N) = (c / sqrt N) exp(-a N)``."""

    c: float
    a: float
    residual: float = 0.0
    points: tuple[tuple[float, float, float], ...] = field(default=())
    valid_range: bool = True

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise ValidationError("c must be finite and >= 0")
        if not (self.a >= 0 and math.isfinite(self.a)):
            raise ValidationError("a must be finite and >= 0")

    def disagreement(self, n) -> np.ndarray | float:
        n = np.asarray(n, dtype=np.float64)
        out = self.c / np.sqrt(n) * np.exp(-self.a * n)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "a": self.a,
            "residual": self.residual,
            "valid_range": self.valid_range,
            "points": [list(p) for p in self.points],
        }


def _weights(se: np.ndarray) -> np.ndarray:
    pos = se[se > 0]
    if len(pos) == 0:
        return np.ones_like(se)
    se = np.where(se > 0, se, pos.min())
    w = 1.0 / se ** 2
    return w / w.max()


def _stationarity(aa: float, n: np.ndarray, d: np.ndarray, w: np.ndarray) -> float:
    # d/da of the profiled loss, up to a positive factor
    g = np.exp(-aa * n) / np.sqrt(n)
    a_ = np.sum(w * d * g)
    b_ = np.sum(w * g * g)
    return float(a_ * np.sum(w * n * g * g) - b_ * np.sum(w * d * n * g))


def _polish_rate(a: float, n, d, w) -> float:
    """Refine the simplex result to a root of the loss derivative.

    A function-value search pins ``a`` only to about sqrt(machine eps); the
    root of the derivative is found to full precision, which keeps the fit
    unchanged when every SE is scaled by a constant.
    """
    h = lambda x: _stationarity(x, n, d, w)
    step = max(abs(a), 1e-6) * 1e-3
    for _ in range(20):
        lo, hi = max(a - step, 0.0), a + step
        flo, fhi = h(lo), h(hi)
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if flo * fhi < 0:
            return float(brentq(h, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200))
        if lo == 0.0 and flo > 0:
            # derivative positive at the boundary: the constrained optimum is a = 0 or the simplex point
            break
        step *= 4
    return a


def fit_stability_curve(points: Sequence[tuple[float, float, float]]) -> StabilityFit:
    """Weighted least-squares fit of the disagreement law to ``(n, tau_mean, tau_se)`` points.

    Starts from the weighted linear regression of
    ``log(1 - tau) + log(n) / 2 = log C - a n``, then refines ``a >= 0`` by a
    Nelder-Mead simplex on ``sum w (d - C exp(-a n) / sqrt n)^2`` with
    ``w = 1 / SE^2``, where ``C`` is profiled out exactly for each ``a``.
    Points with zero SE take the smallest positive SE; if no SE is positive
    all points weigh the same.
    """
    pts = np.array([tuple(map(float, p)) for p in points], dtype=np.float64).reshape(-1, 3)
    if len(pts) < 3 or len(np.unique(pts[:, 0])) < 3:
        raise ValidationError("need at least 3 points with distinct n")
    n, tau, se = pts.T
    if np.any(n < 1) or not np.all(np.isfinite(pts)):
        raise ValidationError("points need finite values and n >= 1")
    if np.all(tau >= 1):
        raise ValidationError("every tau is 1: no disagreement to fit")
    if np.any(tau >= 1):
        raise ValidationError("every tau_mean must be < 1")
    d = 1.0 - tau
    w = _weights(np.abs(se))

    # log-domain start: Var(log d) ~ (SE/d)^2
    y = np.log(d) + 0.5 * np.log(n)
    wl = w * d ** 2
    design = np.column_stack([np.ones_like(n), -n])
    sw = np.sqrt(wl)
    (_, a), *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    a = max(float(a), 0.0)

    def profile_c(aa: float) -> float:
        # optimal C for fixed a is a weighted linear least-squares solve
        g = np.exp(-aa * n) / np.sqrt(n)
        return float(np.sum(w * d * g) / np.sum(w * g * g))

    def loss_a(aa: float) -> float:
        g = np.exp(-aa * n) / np.sqrt(n)
        return float(np.sum(w * (d - profile_c(aa) * g) ** 2))

    f0 = loss_a(a)
    res = minimize(lambda t: loss_a(float(t[0])), x0=np.array([a]), method="Nelder-Mead",
                   bounds=[(0.0, None)],
                   options={"xatol": 1e-13 * max(abs(a), 1e-3), "fatol": 1e-15 * f0,
                            "initial_simplex": np.array([[a], [a * 1.05 + 1e-4]]),
                            "maxiter": 2000})
    a = max(float(res.x[0]) if res.fun < f0 else float(a), 0.0)
    a = _polish_rate(a, n, d, w)
    c = profile_c(a)
    if not (math.isfinite(c) and c > 0):
        raise NumericalError("curve fit diverged")
    final_loss = loss_a(a)
    pred = c / np.sqrt(n) * np.exp(-a * n)
    valid = bool(np.all((pred > 0) & (pred < 1)))
    return StabilityFit(c, a, final_loss, tuple(map(tuple, pts.tolist())), valid)


class Extrapolation(NamedTuple):
    """Agreement implied by a fit at one benchmark size.

    ``disagreement_oracle`` is exactly half ``disagreement_two``.
    """

    tau_two_benchmarks: float
    tau_oracle: float
    n: int = 0
    disagreement_two: float = 0.0
    disagreement_oracle: float = 0.0

    @property
    def in_range(self) -> bool:
        return -1.0 <= self.tau_two_benchmarks <= 1.0 and -1.0 <= self.tau_oracle <= 1.0


def extrapolate_oracle(fit: StabilityFit, n: int) -> Extrapolation:
    """Two-benchmark and oracle agreement predicted by ``fit`` at ``n`` datasets.

    Values outside ``[-1, 1]`` are reported as computed; check ``in_range``.
    """
    if not isinstance(fit, StabilityFit):
        raise ValidationError("fit must be a StabilityFit")
    if n < 1:
        raise ValidationError("n must be >= 1")
    d = fit.disagreement(n)
    # on the 2^-52 grid 1 - d and 1 - d/2 are exact, so the factor-two identity
    # holds exactly for the taus too; the shift is below the rounding of 1 - d
    d = math.ldexp(round(math.ldexp(d, 52)), -52) if d < 2.0 else d
    return Extrapolation(1.0 - d, 1.0 - d / 2.0, int(n), d, d / 2.0)


@dataclass(frozen=True)
class GroupStability:
    group_id: str
    n_group: int
    tau: float
    null_low: float
    null_high: float
    inside_band: bool
    null_median: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "group_id": self.group_id,
            "n_group": self.n_group,
            "tau": self.tau,
            "null_low": self.null_low,
            "null_high": self.null_high,
            "null_median": self.null_median,
            "inside_band": self.inside_band,
        }


def leave_one_group_out(m: ScoreMatrix, groups: Mapping[str, str], b: int = DEFAULT_NULL_DRAWS,
                        seed: int = 0, workers: int = 1) -> list[GroupStability]:
    """Kendall tau between each group's ranking and the full-benchmark ranking.

    Rankings are aggregated by average rank. The null band is the 2.5-97.5
    percentile range of tau over ``b`` random subsets of the same size as the
    group. Groups are reported in sorted order of their ids.
    """
    if b < 2:
        raise ValidationError("need b >= 2 null draws")
    missing = [d for d in m.dataset_ids if d not in groups]
    if missing:
        raise ValidationError(f"datasets without a group: {missing[:5]}")
    m = _canonical(m)
    row_ranks = m.row_ranks()
    full = row_ranks.mean(axis=0)
    n = m.n_datasets
    labels = np.array([str(groups[d]) for d in m.dataset_ids])
    out = []
    for gi, g in enumerate(sorted(set(labels))):
        idx = np.flatnonzero(labels == g)
        size = len(idx)
        # ranking of the average ranks preserves their order, so tau on the averages is exact
        tau = float(tau_from_scores(-row_ranks[idx].mean(axis=0), -full))
        tag = rng.TAG_LODO_NULL | (gi << 16)

        def one(t: int, size=size, tag=tag) -> float:
            pick = rng.generator(seed, t, tag).choice(n, size=size, replace=False)
            return float(tau_from_scores(-row_ranks[pick].mean(axis=0), -full))

        null = rng.map_replicates(one, b, workers)
        lo, hi = np.percentile(null, [2.5, 97.5])
        out.append(GroupStability(g, size, tau, float(lo), float(hi),
                                  bool(lo <= tau <= hi), float(np.median(null))))
    return out


def metafeature_split_tau(m: ScoreMatrix, feature: Mapping[str, float],
                          percentile: float = DEFAULT_PERCENTILE) -> tuple[float, list[str], list[str]]:
    """Kendall tau between the rankings on the low and high tails of a dataset meta-feature.

    Datasets at or below the ``percentile`` quantile form the low tail and those
    at or above the ``1 - percentile`` quantile the high tail (inclusive at
    the thresholds). Rankings are aggregated by average rank.
    """
    if not 0 < percentile <= 0.5:
        raise ValidationError("percentile must lie in (0, 0.5]")
    missing = [d for d in m.dataset_ids if d not in feature]
    if missing:
        raise ValidationError(f"feature undefined for datasets: {missing[:5]}")
    m = _canonical(m)
    values = np.array([float(feature[d]) for d in m.dataset_ids])
    if not np.all(np.isfinite(values)):
        raise ValidationError("feature values must be finite")
    q_lo, q_hi = np.quantile(values, [percentile, 1.0 - percentile])
    if values.min() == values.max():
        raise ValidationError("feature is constant; tails are not separable")
    low = np.flatnonzero(values <= q_lo)
    high = np.flatnonzero(values >= q_hi)
    if len(low) == 0 or len(high) == 0:
        raise ValidationError("a tail is empty")
    _, r_low = aggregate_ranking(m.subset(low))
    _, r_high = aggregate_ranking(m.subset(high))
    return (kendall_tau(r_low, r_high),
            [m.dataset_ids[i] for i in low],
            [m.dataset_ids[i] for i in high])
