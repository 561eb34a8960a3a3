"""Rankings built from scores, and Kendall-tau agreement between them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError

__all__ = [
    "Ranking",
    "ScoreMatrix",
    "aggregate_ranking",
    "disagreement_fraction",
    "kendall_tau",
    "ranks_from_scores",
    "tau_from_scores",
]


def _default_ids(k: int) -> tuple[str, ...]:
    return tuple(f"p{i}" for i in range(k))


@dataclass(frozen=True)
class Ranking:
    """Rank vector over pipelines, 1 = best; ties carry average positions."""

    ranks: np.ndarray
    pipeline_ids: tuple[str, ...] = ()

    def __post_init__(self):
        ranks = np.asarray(self.ranks, dtype=np.float64)
        ids = tuple(str(p) for p in self.pipeline_ids) or _default_ids(len(np.atleast_1d(ranks)))
        if ranks.ndim != 1 or len(ranks) < 2:
            raise ValidationError("a ranking needs at least 2 entries")
        if len(ids) != len(ranks):
            raise ValidationError(f"{len(ids)} pipeline ids for {len(ranks)} ranks")
        if len(set(ids)) != len(ids):
            raise ValidationError("pipeline ids must be unique")
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "pipeline_ids", ids)

    def __len__(self) -> int:
        return len(self.ranks)

    def __eq__(self, other):
        if not isinstance(other, Ranking):
            return NotImplemented
        return self.pipeline_ids == other.pipeline_ids and np.array_equal(self.ranks, other.ranks)

    def __hash__(self):
        return hash((self.pipeline_ids, self.ranks.tobytes()))

    def aligned_to(self, pipeline_ids: Sequence[str]) -> np.ndarray:
        """Rank values reordered to follow ``pipeline_ids``."""
        pos = {p: i for i, p in enumerate(self.pipeline_ids)}
        try:
            return self.ranks[[pos[p] for p in pipeline_ids]]
        except KeyError as exc:
            raise ValidationError(f"pipeline {exc.args[0]!r} missing from ranking") from None


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Datasets x pipelines grid of finite scores.

    ``higher_is_better`` defaults to True (R2, AUROC); set it False for losses.
    """

    scores: np.ndarray
    dataset_ids: tuple[str, ...] = field(default=())
    pipeline_ids: tuple[str, ...] = field(default=())
    higher_is_better: bool = True

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64)
        if scores.ndim != 2:
            raise ValidationError("scores must be a 2-d datasets x pipelines array")
        n, k = scores.shape
        if n < 1 or k < 2:
            raise ValidationError(f"need N >= 1 datasets and k >= 2 pipelines, got {n} x {k}")
        bad = np.argwhere(~np.isfinite(scores))
        if len(bad):
            r, c = bad[0]
            raise ValidationError(f"non-finite score at dataset row {r}, pipeline column {c}")
        dids = tuple(str(d) for d in self.dataset_ids) or tuple(f"d{i}" for i in range(n))
        pids = tuple(str(p) for p in self.pipeline_ids) or _default_ids(k)
        if len(dids) != n or len(pids) != k:
            raise ValidationError("id lengths do not match the score grid")
        if len(set(dids)) != n:
            raise ValidationError("dataset ids must be unique")
        if len(set(pids)) != k:
            raise ValidationError("pipeline ids must be unique")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "dataset_ids", dids)
        object.__setattr__(self, "pipeline_ids", pids)
        object.__setattr__(self, "higher_is_better", bool(self.higher_is_better))

    @property
    def n_datasets(self) -> int:
        return self.scores.shape[0]

    @property
    def n_pipelines(self) -> int:
        return self.scores.shape[1]

    def subset(self, rows) -> ScoreMatrix:
        rows = np.asarray(rows, dtype=np.intp)
        return ScoreMatrix(
            self.scores[rows],
            tuple(self.dataset_ids[i] for i in rows),
            self.pipeline_ids,
            self.higher_is_better,
        )

    def select(self, dataset_ids: Sequence[str]) -> ScoreMatrix:
        pos = {d: i for i, d in enumerate(self.dataset_ids)}
        return self.subset([pos[d] for d in dataset_ids])

    def row_ranks(self) -> np.ndarray:
        """Per-dataset rank rows (N x k), 1 = best, ties averaged."""
        signed = -self.scores if self.higher_is_better else self.scores
        return rankdata(signed, method="average", axis=1)

    def __eq__(self, other):
        if not isinstance(other, ScoreMatrix):
            return NotImplemented
        return (
            self.dataset_ids == other.dataset_ids
            and self.pipeline_ids == other.pipeline_ids
            and self.higher_is_better == other.higher_is_better
            and np.array_equal(self.scores, other.scores)
        )


def ranks_from_scores(scores, higher_is_better: bool = True, pipeline_ids=None) -> Ranking:
    """Rank a score vector; the best score gets rank 1 and ties share the average rank.

    >>> ranks_from_scores([0.9, 0.5, 0.7]).ranks.tolist()
    [1.0, 3.0, 2.0]
    """
    x = np.asarray(scores, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise ValidationError("need at least 2 scores to rank")
    if not np.all(np.isfinite(x)):
        raise ValidationError("scores must be finite")
    ranks = rankdata(-x if higher_is_better else x, method="average")
    return Ranking(ranks, tuple(pipeline_ids) if pipeline_ids is not None else _default_ids(len(x)))


def aggregate_ranking(m: ScoreMatrix) -> tuple[np.ndarray, Ranking]:
    """Average per-dataset ranks, then re-rank them.

    Returns
    -------
    average_ranks : ndarray of shape (k,)
        Mean rank of each pipeline over datasets (lower is better).
    ranking : Ranking
        Final ranking obtained from ``average_ranks``.
    """
    avg = m.row_ranks().mean(axis=0)
    return avg, ranks_from_scores(avg, higher_is_better=False, pipeline_ids=m.pipeline_ids)


def _tau_from_signs(sa: np.ndarray, sb: np.ndarray) -> float:
    s = int(np.sum(sa * sb))
    na = int(np.sum(np.abs(sa)))
    nb = int(np.sum(np.abs(sb)))
    if na == 0 or nb == 0:
        # at least one side has no strict pair; identical all-tied rankings agree fully
        return 1.0 if na == nb == 0 else 0.0
    if na == nb:
        return float(Fraction(s, na))
    return s / math.sqrt(na * nb)


def _pair_signs(x: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(len(x), k=1)
    return np.sign(x[i] - x[j]).astype(np.int64)


def kendall_tau(a: Ranking, b: Ranking) -> float:
    """Kendall tau between two rankings of the same pipelines.

    Strict rankings give ``1 - 2 * discordant / (k(k-1)/2)``. When ties are
    present the tau-b normalisation ``(C - D) / sqrt(n_a * n_b)`` is used, with
    ``n_a``, ``n_b`` the numbers of untied pairs on each side, so identical
    rankings always score 1. Two rankings that are both entirely tied also
    score 1; a fully tied ranking against an informative one scores 0.
    """
    if set(a.pipeline_ids) != set(b.pipeline_ids):
        raise ValidationError("rankings cover different pipelines")
    rb = b.aligned_to(a.pipeline_ids)
    return _tau_from_signs(_pair_signs(a.ranks), _pair_signs(rb))


def tau_from_scores(xa, xb) -> np.ndarray | float:
    """Kendall tau between the rankings induced by score vectors ``xa`` and ``xb``.

    Accepts 1-d vectors or 2-d batches of shape (R, k), one tau per row.
    Equivalent to ``kendall_tau(ranks_from_scores(xa), ranks_from_scores(xb))``
    for any common score direction.
    """
    xa = np.asarray(xa, dtype=np.float64)
    xb = np.asarray(xb, dtype=np.float64)
    if xa.shape != xb.shape or xa.shape[-1] < 2:
        raise ValidationError("score batches must share a shape with k >= 2")
    if xa.ndim == 1:
        return _tau_from_signs(_pair_signs(xa), _pair_signs(xb))
    i, j = np.triu_indices(xa.shape[1], k=1)
    sa = np.sign(xa[:, i] - xa[:, j]).astype(np.int64)
    sb = np.sign(xb[:, i] - xb[:, j]).astype(np.int64)
    num = np.sum(sa * sb, axis=1)
    na = np.sum(np.abs(sa), axis=1)
    nb = np.sum(np.abs(sb), axis=1)
    # sqrt(n*n) == n exactly in binary64 for n < 2**26, so equal-denominator
    # rows match the exact rational scalar path bit for bit
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / np.sqrt((na * nb).astype(np.float64))
    degenerate = (na == 0) | (nb == 0)
    out[degenerate] = np.where(na[degenerate] == nb[degenerate], 1.0, 0.0)
    return out


def disagreement_fraction(tau: float) -> float:
    """Fraction of discordant pairs implied by a strict-ranking tau, ``(1 - tau) / 2``."""
    tau = float(tau)
    if not -1.0 <= tau <= 1.0:
        raise ValidationError(f"tau must lie in [-1, 1], got {tau}")
    return (1.0 - tau) / 2.0
