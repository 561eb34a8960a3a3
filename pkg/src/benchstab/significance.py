"""Rank-based significance tests for comparing pipelines across datasets.

All statistics depend on the scores only through per-dataset ranks
(average ranks for ties), so they are unchanged by any strictly increasing
per-dataset transform of the scores.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.stats import rankdata

from .errors import ValidationError
from .ranking import ScoreMatrix

__all__ = [
    "CdSummary",
    "ConoverResult",
    "TestResult",
    "cd_groups",
    "conover_iman",
    "conover_statistic",
    "friedman_test",
    "holm_correction",
    "wilcoxon_signed_rank",
]

DEFAULT_ALPHA = 0.05
EXACT_MAX_N = 25


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: tuple[float, ...] | float | None = None
    method: str = ""

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        df = list(self.df) if isinstance(self.df, tuple) else self.df
        return {"statistic": self.statistic, "p_value": self.p_value, "df": df, "method": self.method}


def _tie_term(row: np.ndarray) -> float:
    _, counts = np.unique(row, return_counts=True)
    return float(np.sum(counts ** 3 - counts))


def friedman_test(m: ScoreMatrix, iman_davenport: bool = False) -> TestResult:
    """Friedman chi-square test that all pipelines share the same average rank.

    ``chi2 = 12 N / (k (k + 1)) * sum_j (Rbar_j - (k + 1) / 2)^2 / C`` with the
    tie correction ``C = 1 - sum(t^3 - t) / (N (k^3 - k))``, referred to
    chi-square with ``k - 1`` df. ``iman_davenport=True`` returns the F
    refinement ``(N - 1) chi2 / (N (k - 1) - chi2)`` on ``(k - 1, (k - 1)(N - 1))`` df.
    If every row is fully tied the statistic is 0 and p = 1.
    """
    n, k = m.scores.shape
    if n < 2:
        raise ValidationError("Friedman test needs at least 2 datasets")
    ranks = m.row_ranks()
    rbar = ranks.mean(axis=0)
    ties = sum(_tie_term(r) for r in ranks)
    corr = 1.0 - ties / (n * (k ** 3 - k))
    if corr <= 0:
        chi2 = 0.0
    else:
        chi2 = 12.0 * n / (k * (k + 1)) * float(np.sum((rbar - (k + 1) / 2.0) ** 2)) / corr
    # rounding can leave a tiny negative or an overshoot of the N(k-1) maximum
    chi2 = min(max(chi2, 0.0), float(n * (k - 1)))
    if not iman_davenport:
        return TestResult(chi2, float(stats.chi2.sf(chi2, k - 1)) if chi2 > 0 else 1.0,
                          float(k - 1), "friedman-chi2")
    df1, df2 = float(k - 1), float((k - 1) * (n - 1))
    denom = n * (k - 1) - chi2
    if denom <= 0:
        return TestResult(math.inf, 0.0, (df1, df2), "iman-davenport-F")
    f = (n - 1) * chi2 / denom
    return TestResult(f, float(stats.f.sf(f, df1, df2)) if f > 0 else 1.0, (df1, df2), "iman-davenport-F")


def conover_statistic(rank_diff: float, pooled_variance: float, n: int) -> float:
    """``|Rbar_i - Rbar_j| / sqrt(S2 * 2 / N)``."""
    return abs(rank_diff) / math.sqrt(pooled_variance * 2.0 / n)


@dataclass(frozen=True)
class ConoverResult:
    """Pairwise Conover-Iman comparison on average ranks."""

    statistics: np.ndarray
    p_values: np.ndarray
    average_ranks: np.ndarray
    pooled_variance: float
    df: int
    pipeline_ids: tuple[str, ...] = field(default=())


def conover_iman(m: ScoreMatrix, alpha: float = DEFAULT_ALPHA) -> ConoverResult:
    """Conover-Iman post-hoc comparisons after a Friedman test.

    The pooled variance ``S2`` is the sum of squared deviations of all
    ``N k`` ranks from the mean rank ``(k + 1) / 2`` divided by
    ``N (k - 1)``, which is also the t reference df. Two-sided p-values come
    from Student's t. Warns (does not fail) when the Friedman test does not
    reject at ``alpha``.
    """
    n, k = m.scores.shape
    if n < 2:
        raise ValidationError("Conover-Iman needs at least 2 datasets")
    ranks = m.row_ranks()
    rbar = ranks.mean(axis=0)
    df = n * (k - 1)
    s2 = float(np.sum((ranks - (k + 1) / 2.0) ** 2)) / df
    if friedman_test(m).p_value >= alpha:
        warnings.warn("Friedman test does not reject at alpha; post-hoc results are exploratory",
                      stacklevel=2)
    diff = np.abs(rbar[:, None] - rbar[None, :])
    if s2 <= 0:
        t = np.zeros((k, k))
    else:
        t = diff / math.sqrt(s2 * 2.0 / n)
    p = np.clip(2.0 * stats.t.sf(t, df), 0.0, 1.0)
    np.fill_diagonal(p, 1.0)
    np.fill_diagonal(t, 0.0)
    return ConoverResult(t, p, rbar, s2, df, m.pipeline_ids)


def _signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Number of sign assignments giving each value of 2 * T+, by dynamic programming."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    top = 0
    for r in doubled_ranks.astype(int):
        nxt = counts.copy()
        nxt[r:top + r + 1] += counts[:top + 1]
        counts = nxt
        top += r
    return counts


def wilcoxon_signed_rank(x, exact: bool | None = None) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped and tied magnitudes share average ranks.
    The statistic is ``T+``, the sum of ranks of positive differences. With
    ``exact=None`` the null distribution is enumerated exactly for up to 25
    nonzero differences, and otherwise approximated by a normal law with
    tie-corrected variance and continuity correction.
    """
    d = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(d)):
        raise ValidationError("differences must be finite")
    d = d[d != 0]
    n = len(d)
    if n == 0:
        raise ValidationError("all differences are zero")
    ranks = rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    if exact is None:
        exact = n <= EXACT_MAX_N
    if exact:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _signed_rank_counts(doubled)
        total = 2 ** n
        t2 = int(round(2 * t_plus))
        lower = sum(counts[: t2 + 1])
        upper = sum(counts[t2:])
        p = min(1.0, 2.0 * min(lower, upper) / total)
        return TestResult(t_plus, float(p), None, "exact")
    mean = n * (n + 1) / 4.0
    _, tcount = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tcount ** 3 - tcount)) / 48.0
    z = max(abs(t_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return TestResult(t_plus, float(min(1.0, 2.0 * stats.norm.sf(z))), None, "normal")


def holm_correction(p) -> np.ndarray:
    """Holm step-down adjusted p-values, in the input order.

    Sorted ascending, the i-th p-value (0-based) among m becomes
    ``max_{j <= i} min(1, (m - j) p_(j))``.
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    if len(p) == 0:
        return p.copy()
    if np.any(np.isnan(p)) or np.any((p < 0) | (p > 1)):
        raise ValidationError("p-values must lie in [0, 1]")
    m = len(p)
    order = np.argsort(p, kind="stable")
    scaled = np.minimum(1.0, (m - np.arange(m)) * p[order])
    adjusted = np.maximum.accumulate(scaled)
    out = np.empty(m)
    out[order] = adjusted
    return out


@dataclass(frozen=True)
class CdSummary:
    """Average ranks and groups of statistically indistinguishable pipelines."""

    average_ranks: np.ndarray
    cliques: list[tuple[str, ...]]
    alpha: float
    pipeline_ids: tuple[str, ...] = field(default=())
    friedman: TestResult | None = None
    p_values: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "pipeline_ids": list(self.pipeline_ids),
            "average_ranks": self.average_ranks.tolist(),
            "cliques": [list(c) for c in self.cliques],
            "friedman": self.friedman.to_dict() if self.friedman else None,
            "p_values": self.p_values.tolist() if self.p_values is not None else None,
        }


def cd_groups(m: ScoreMatrix, alpha: float = DEFAULT_ALPHA) -> CdSummary:
    """Critical-difference groups for a CD diagram.

    Pipelines are ordered by average rank; a clique is a maximal contiguous
    run in that order whose pairwise Conover-Iman p-values are all
    ``>= alpha``. A pipeline that differs from all its neighbours forms a
    singleton clique.
    """
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    fr = friedman_test(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ci = conover_iman(m, alpha)
    order = np.argsort(ci.average_ranks, kind="stable")
    p = ci.p_values
    k = len(order)
    # furthest[i]: last position j such that order[i..j] is mutually indistinguishable
    furthest = []
    for i in range(k):
        j = i
        while j + 1 < k and all(p[order[t], order[j + 1]] >= alpha for t in range(i, j + 1)):
            j += 1
        furthest.append(j)
    cliques = []
    reach = -1
    for i in range(k):
        if furthest[i] > reach:
            cliques.append(tuple(m.pipeline_ids[order[t]] for t in range(i, furthest[i] + 1)))
            reach = furthest[i]
    return CdSummary(ci.average_ranks, cliques, alpha, m.pipeline_ids, fr, p)
