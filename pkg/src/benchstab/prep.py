"""Target preparation: skewness-minimizing transforms and row downsampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ValidationError

__all__ = [
    "CANDIDATES",
    "DEFAULT_CAP",
    "TargetTransform",
    "apply_transform",
    "downsample",
    "sample_skewness",
    "select_target_transform",
]

# tie-break order for select_target_transform
CANDIDATES = ("identity", "log", "log1p", "cbrt", "arcsinh", "signed_log")
DEFAULT_CAP = 75_000


@dataclass(frozen=True)
class TargetTransform:
    kind: str
    fitted_skewness: float
    degenerate: bool = False

    def __post_init__(self):
        if self.kind not in CANDIDATES:
            raise ValidationError(f"unknown transform {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "fitted_skewness": self.fitted_skewness, "degenerate": self.degenerate}


def _vector(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if not np.all(np.isfinite(y)):
        raise ValidationError("values must be finite")
    return y


def sample_skewness(y) -> float:
    """Adjusted Fisher-Pearson skewness ``sqrt(n (n - 1)) / (n - 2) * m3 / m2^1.5``.

    ``m2`` and ``m3`` are the biased central moments.
    """
    y = _vector(y)
    n = len(y)
    if n < 3:
        raise ValidationError("skewness needs at least 3 values")
    d = y - y.mean()
    m2 = float(np.mean(d * d))
    # relative guard: a constant vector can leave rounding residue in d
    if m2 <= (1e-14 * max(1.0, float(np.max(np.abs(y))))) ** 2:
        raise ValidationError("skewness undefined for a constant vector")
    m3 = float(np.mean(d ** 3))
    return math.sqrt(n * (n - 1)) / (n - 2) * m3 / m2 ** 1.5


def _valid(kind: str, y: np.ndarray) -> bool:
    if kind == "log":
        return bool(np.all(y > 0))
    if kind == "log1p":
        return bool(np.all(y > -1))
    return True


def apply_transform(t: TargetTransform | str, y) -> np.ndarray:
    """Apply a transform elementwise; every kind is strictly increasing on its domain."""
    kind = t.kind if isinstance(t, TargetTransform) else t
    if kind not in CANDIDATES:
        raise ValidationError(f"unknown transform {kind!r}")
    y = _vector(y)
    if not _valid(kind, y):
        raise ValidationError(f"{kind} needs {'y > 0' if kind == 'log' else 'y > -1'}")
    if kind == "identity":
        return y.copy()
    if kind == "log":
        return np.log(y)
    if kind == "log1p":
        return np.log1p(y)
    if kind == "cbrt":
        return np.cbrt(y)
    if kind == "arcsinh":
        return np.arcsinh(y)
    return np.sign(y) * np.log1p(np.abs(y))


def select_target_transform(y) -> TargetTransform:
    """Pick the domain-valid candidate whose output has the smallest |skewness|.

    Ties go to the earlier entry of ``CANDIDATES``. A constant target returns
    identity with skewness 0 and ``degenerate=True``; a candidate that maps
    the data to a constant is skipped.
    """
    y = _vector(y)
    if len(y) < 3:
        raise ValidationError("need at least 3 values")
    if np.all(y == y[0]):
        return TargetTransform("identity", 0.0, degenerate=True)
    best = None
    for kind in CANDIDATES:
        if not _valid(kind, y):
            continue
        try:
            s = abs(sample_skewness(apply_transform(kind, y)))
        except ValidationError:
            continue
        if best is None or s < best[1]:
            best = (kind, s)
    return TargetTransform(best[0], best[1])


def _largest_remainder(counts: np.ndarray, cap: int) -> np.ndarray:
    quota = counts * cap / counts.sum()
    alloc = np.floor(quota).astype(np.int64)
    short = cap - int(alloc.sum())
    # biggest fractional part first; stable sort keeps class-label order on ties
    order = np.argsort(-(quota - alloc), kind="stable")
    alloc[order[:short]] += 1
    return alloc


def downsample(row_count: int, labels=None, cap: int = DEFAULT_CAP, seed: int = 0) -> np.ndarray:
    """Indices of the rows kept, sorted ascending.

    Tables within ``cap`` are kept whole. Larger ones are sampled without
    replacement, uniformly for regression (``labels=None``) and per class for
    classification, with class sizes set by largest-remainder rounding of the
    proportional quota.
    """
    if cap < 1:
        raise ValidationError("cap must be >= 1")
    if row_count < 1:
        raise ValidationError("empty input")
    if labels is not None and len(labels) != row_count:
        raise ValidationError("labels length differs from row_count")
    if row_count <= cap:
        return np.arange(row_count)
    g = rng.generator(seed, 0, rng.TAG_DOWNSAMPLE)
    if labels is None:
        return np.sort(g.choice(row_count, size=cap, replace=False))
    classes, inverse, counts = np.unique(np.asarray(labels), return_inverse=True, return_counts=True)
    alloc = _largest_remainder(counts, cap)
    picked = []
    for c in range(len(classes)):
        members = np.flatnonzero(inverse == c)
        picked.append(g.choice(members, size=int(alloc[c]), replace=False))
    return np.sort(np.concatenate(picked))
