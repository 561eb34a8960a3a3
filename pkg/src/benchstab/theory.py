"""Closed-form ranking agreement under the Gaussian performance model.

Model: the score of pipeline ``i`` on dataset ``d`` is

    X[i, d] = mu[i] + beta[i] . z[d] + eps[i, d]

with ``eps ~ N(0, sigma^2)`` i.i.d. and optional latent meta-features
``z[d] ~ N(0, sigma_z)``. Averaging over ``N`` datasets, the gap between two
pipelines is Gaussian with mean ``delta = mu[i] - mu[j]`` and variance
``nu^2 / N`` where ``nu^2 = gamma' sigma_z gamma + 2 sigma^2`` and
``gamma = beta[i] - beta[j]``.

Two modes are supported throughout:

``"homoskedastic"``
    ignores the bias terms and uses ``|delta| sqrt(N) / (2 sigma)``;
``"inductive"``
    uses the per-pair signal-to-noise ratio ``rho = |delta| / nu`` and the
    argument ``rho sqrt(N / 2)``. With zero bias the two coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import DegenerateModelError, ValidationError
from .special import erf, erfc, std_normal_cdf

__all__ = [
    "GapSummary",
    "PerformanceModel",
    "asymptotic_disagreement",
    "effective_variance",
    "expected_sign",
    "expected_tau_oracle",
    "expected_tau_two_benchmarks",
    "gap_summary",
    "leading_order_size",
    "position1_asymptotic_bound",
    "position1_bound",
    "required_benchmark_size",
]

Mode = Literal["homoskedastic", "inductive"]
Target = Literal["two_benchmarks", "oracle"]

MIN_TIE_RTOL = 1e-9
_PSD_RTOL = 1e-10
_SQRT_PI = math.sqrt(math.pi)


def _check_psd(sigma_z: np.ndarray) -> np.ndarray:
    """Symmetric eigen-factor check; returns eigenvalues clamped at zero."""
    if sigma_z.ndim != 2 or sigma_z.shape[0] != sigma_z.shape[1]:
        raise ValidationError("sigma_z must be a square matrix")
    if not np.allclose(sigma_z, sigma_z.T, rtol=1e-12, atol=1e-14):
        raise ValidationError("sigma_z must be symmetric")
    w = np.linalg.eigvalsh(sigma_z)
    tol = _PSD_RTOL * max(float(np.trace(sigma_z)), np.finfo(float).tiny)
    if w.min() < -tol:
        raise ValidationError(f"sigma_z is not positive semidefinite (eigenvalue {w.min():.3g})")
    return np.clip(w, 0.0, None)


@dataclass(frozen=True, eq=False)
class PerformanceModel:
    """Parameters of the generative score model.

    ``bias`` is the ``k x p`` matrix of sensitivity vectors and ``sigma_z`` the
    ``p x p`` meta-feature covariance; give both or neither.
    """

    mu: np.ndarray
    sigma: float
    bias: Optional[np.ndarray] = None
    sigma_z: Optional[np.ndarray] = None

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64).ravel()
        if len(mu) < 2:
            raise ValidationError("need k >= 2 models")
        if not np.all(np.isfinite(mu)):
            raise ValidationError("mu must be finite")
        sigma = float(self.sigma)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise ValidationError("sigma must be positive and finite")
        if (self.bias is None) != (self.sigma_z is None):
            raise ValidationError("bias and sigma_z must be given together")
        bias = sigma_z = None
        if self.bias is not None:
            bias = np.array(self.bias, dtype=np.float64)
            sigma_z = np.array(self.sigma_z, dtype=np.float64)
            if bias.ndim == 1:
                bias = bias[:, None]
            if sigma_z.ndim == 0:
                sigma_z = sigma_z.reshape(1, 1)
            if bias.shape[0] != len(mu):
                raise ValidationError("bias must have one row per model")
            if sigma_z.shape != (bias.shape[1], bias.shape[1]):
                raise ValidationError("sigma_z shape does not match bias columns")
            _check_psd(sigma_z)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "sigma_z", sigma_z)

    @property
    def k(self) -> int:
        return len(self.mu)

    @property
    def has_bias(self) -> bool:
        return self.bias is not None

    def to_dict(self) -> dict:
        out = {"mu": self.mu.tolist(), "sigma": self.sigma}
        if self.has_bias:
            out["bias"] = self.bias.tolist()
            out["sigma_z"] = self.sigma_z.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> PerformanceModel:
        unknown = set(d) - {"mu", "sigma", "bias", "sigma_z"}
        if unknown:
            raise ValidationError(f"unknown model fields: {sorted(unknown)}")
        if "mu" not in d or "sigma" not in d:
            raise ValidationError("model needs 'mu' and 'sigma'")
        return cls(d["mu"], d["sigma"], d.get("bias"), d.get("sigma_z"))


@dataclass(frozen=True)
class GapSummary:
    """Pairwise gaps of a model, over pairs ``i < j`` in ``np.triu_indices`` order."""

    k: int
    sigma: float
    pairs: tuple[tuple[int, int], ...]
    deltas: np.ndarray
    nus: np.ndarray
    rhos: np.ndarray
    delta_min: float
    m_min: int
    rho_min: float
    m_min_rho: int
    best: int
    delta_1: float
    rho_1: float
    best_tied: bool = False

    def min_count(self, mode: Mode) -> int:
        return self.m_min if mode == "homoskedastic" else self.m_min_rho


def effective_variance(gamma, sigma_z, sigma: float) -> float:
    """Variance ``gamma' sigma_z gamma + 2 sigma^2`` of a per-dataset score gap."""
    gamma = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
    sz = np.atleast_2d(np.asarray(sigma_z, dtype=np.float64))
    if sz.shape != (len(gamma), len(gamma)):
        raise ValidationError("gamma and sigma_z dimensions disagree")
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    q = float(gamma @ sz @ gamma)
    tol = _PSD_RTOL * max(float(np.trace(sz)), np.finfo(float).tiny) * float(gamma @ gamma)
    if q < -tol:
        raise ValidationError("negative quadratic form: sigma_z is not PSD")
    return max(q, 0.0) + 2.0 * sigma * sigma


def _count_min(values: np.ndarray) -> tuple[float, int]:
    vmin = float(values.min())
    return vmin, int(np.sum(values <= (1.0 + MIN_TIE_RTOL) * vmin))


def gap_summary(model: PerformanceModel) -> GapSummary:
    """Enumerate all pairwise gaps, noise scales and SNRs of ``model``.

    A tie for the largest ``mu`` is not an error here: the summary is returned
    with ``best_tied=True`` and ``delta_1 = rho_1 = 0``, and the position-1
    functions refuse it.
    """
    mu, sigma, k = model.mu, model.sigma, model.k
    iu, ju = np.triu_indices(k, k=1)
    deltas = np.abs(mu[iu] - mu[ju])
    if model.has_bias:
        nus = np.sqrt([effective_variance(model.bias[i] - model.bias[j], model.sigma_z, sigma)
                       for i, j in zip(iu, ju)])
    else:
        nus = np.full(len(iu), math.sqrt(2.0) * sigma)
    rhos = deltas / nus
    delta_min, m_min = _count_min(deltas)
    rho_min, m_min_rho = _count_min(rhos)

    best = int(np.argmax(mu))
    tied = int(np.sum(mu == mu[best])) > 1
    rivals = [p for p, (i, j) in enumerate(zip(iu, ju)) if best in (i, j)]
    if tied:
        delta_1 = rho_1 = 0.0
    else:
        delta_1 = float(deltas[rivals].min())
        rho_1 = float(rhos[rivals].min())
    return GapSummary(
        k=k, sigma=sigma, pairs=tuple(zip(iu.tolist(), ju.tolist())),
        deltas=deltas, nus=nus, rhos=rhos,
        delta_min=delta_min, m_min=m_min, rho_min=rho_min, m_min_rho=m_min_rho,
        best=best, delta_1=delta_1, rho_1=rho_1, best_tied=tied,
    )


def _check_n(n) -> float:
    if not n >= 1:
        raise ValidationError(f"benchmark size must be >= 1, got {n}")
    return float(n)


def _check_mode(mode: str) -> None:
    if mode not in ("homoskedastic", "inductive"):
        raise ValidationError(f"unknown mode {mode!r}")


def expected_sign(delta: float, sigma: float, n: int) -> float:
    """Expected sign of the observed mean gap, ``sgn(delta) erf(|delta| sqrt(N) / (2 sigma))``."""
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    n = _check_n(n)
    return float(np.sign(delta)) * erf(abs(delta) * math.sqrt(n) / (2.0 * sigma))


def _erf_args(gaps: GapSummary, n: float, mode: Mode) -> np.ndarray:
    _check_mode(mode)
    if mode == "homoskedastic":
        return gaps.deltas * math.sqrt(n) / (2.0 * gaps.sigma)
    return gaps.rhos * math.sqrt(n / 2.0)


def expected_tau_two_benchmarks(gaps: GapSummary, n: int, mode: Mode = "homoskedastic") -> float:
    """Expected Kendall tau between two independent benchmarks of ``n`` datasets.

    Mean over pairs of ``erf(x)**2``; zero gaps contribute 0.
    """
    x = _erf_args(gaps, _check_n(n), mode)
    return float(np.mean(erf(x) ** 2))


def expected_tau_oracle(gaps: GapSummary, n: int, mode: Mode = "homoskedastic") -> float:
    """Expected Kendall tau between an ``n``-dataset benchmark and the oracle ranking."""
    x = _erf_args(gaps, _check_n(n), mode)
    return float(np.mean(erf(x)))


def exact_disagreement(gaps: GapSummary, n: int, target: Target = "two_benchmarks",
                       mode: Mode = "homoskedastic") -> float:
    """``1 - E[tau]`` from the full erf sums, without cancellation for large ``n``."""
    x = _erf_args(gaps, _check_n(n), mode)
    c = erfc(x)
    if target == "oracle":
        return float(np.mean(c))
    if target == "two_benchmarks":
        # 1 - erf^2 = erfc (2 - erfc)
        return float(np.mean(c * (2.0 - c)))
    raise ValidationError(f"unknown target {target!r}")


def _min_and_count(gaps: GapSummary, mode: Mode) -> tuple[float, int]:
    _check_mode(mode)
    if mode == "homoskedastic":
        return gaps.delta_min, gaps.m_min
    return gaps.rho_min, gaps.m_min_rho


def disagreement_constant(gaps: GapSummary, mode: Mode = "homoskedastic") -> float:
    """Prefactor of the two-benchmark asymptotic disagreement law."""
    vmin, m = _min_and_count(gaps, mode)
    if not vmin > 0:
        raise DegenerateModelError("minimum gap is zero; the asymptotic law is undefined")
    k = gaps.k
    if mode == "homoskedastic":
        return 8.0 * gaps.sigma * m / (k * (k - 1) * vmin * _SQRT_PI)
    return 4.0 * math.sqrt(2.0) * m / (k * (k - 1) * vmin * _SQRT_PI)


def disagreement_rate(gaps: GapSummary, mode: Mode = "homoskedastic") -> float:
    """Per-dataset exponential decay rate of the asymptotic disagreement."""
    vmin, _ = _min_and_count(gaps, mode)
    if not vmin > 0:
        raise DegenerateModelError("minimum gap is zero; the asymptotic law is undefined")
    if mode == "homoskedastic":
        return vmin * vmin / (4.0 * gaps.sigma * gaps.sigma)
    return vmin * vmin / 2.0


def asymptotic_disagreement(gaps: GapSummary, n: int, target: Target = "two_benchmarks",
                            mode: Mode = "homoskedastic") -> float:
    """Leading-order ``1 - E[tau]``: ``(C / sqrt(N)) exp(-rate N)``, halved for the oracle."""
    n = _check_n(n)
    value = disagreement_constant(gaps, mode) / math.sqrt(n) * math.exp(-disagreement_rate(gaps, mode) * n)
    if target == "two_benchmarks":
        return value
    if target == "oracle":
        return value / 2.0
    raise ValidationError(f"unknown target {target!r}")


def _top_margin(gaps: GapSummary, mode: Mode) -> float:
    _check_mode(mode)
    if gaps.best_tied:
        raise DegenerateModelError("several models share the largest mean; position-1 margin is zero")
    v = gaps.delta_1 if mode == "homoskedastic" else gaps.rho_1
    if not v > 0:
        raise DegenerateModelError("position-1 margin must be positive")
    return v


def position1_bound(gaps: GapSummary, n: int, mode: Mode = "homoskedastic", k: int | None = None) -> float:
    """Union bound on P[two benchmarks disagree on the top model], clamped to 1.

    ``2(k-1) Phi(-delta_1 sqrt(N) / (sigma sqrt 2))`` in homoskedastic mode,
    ``2(k-1) Phi(-rho_1 sqrt(N))`` in inductive mode.
    """
    k = gaps.k if k is None else int(k)
    n = _check_n(n)
    m = _top_margin(gaps, mode)
    if mode == "homoskedastic":
        t = m * math.sqrt(n) / (gaps.sigma * math.sqrt(2.0))
    else:
        t = m * math.sqrt(n)
    return min(1.0, 2.0 * (k - 1) * std_normal_cdf(-t))


def position1_asymptotic_bound(gaps: GapSummary, n: int, mode: Mode = "homoskedastic") -> float:
    """Gaussian-tail form ``C1 N^(-1/2) exp(-rate N)`` of the position-1 bound (unclamped)."""
    n = _check_n(n)
    m = _top_margin(gaps, mode)
    k = gaps.k
    if mode == "homoskedastic":
        c1 = 2.0 * (k - 1) * gaps.sigma / (m * _SQRT_PI)
        rate = m * m / (4.0 * gaps.sigma ** 2)
    else:
        c1 = 2.0 * (k - 1) / (m * math.sqrt(2.0 * math.pi))
        rate = m * m / 2.0
    return c1 / math.sqrt(n) * math.exp(-rate * n)


def leading_order_size(gaps: GapSummary, epsilon: float, criterion: str = "kendall",
                       mode: Mode = "homoskedastic") -> float:
    """Exponent-only benchmark size ``log(1/eps) / rate``, ignoring prefactors."""
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    if criterion == "kendall":
        rate = disagreement_rate(gaps, mode)
    elif criterion == "position1":
        m = _top_margin(gaps, mode)
        rate = m * m / (4.0 * gaps.sigma ** 2) if mode == "homoskedastic" else m * m / 2.0
    else:
        raise ValidationError(f"unknown criterion {criterion!r}")
    return math.log(1.0 / epsilon) / rate


def required_benchmark_size(gaps: GapSummary, epsilon: float, criterion: str = "kendall",
                            mode: Mode = "homoskedastic", exact: bool = False,
                            max_n: int = 10 ** 12) -> int:
    """Smallest integer ``N`` whose disagreement bound is ``<= epsilon``.

    By default the asymptotic forms are searched: the two-benchmark Kendall law
    for ``criterion="kendall"`` and the Gaussian-tail position-1 bound for
    ``criterion="position1"``. With ``exact=True`` the full erf sum
    ``1 - E[tau_NN]`` and the clamped union bound are used instead. All bounds
    are decreasing in ``N``, so exponential bracketing followed by bisection
    finds the threshold.
    """
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    if criterion == "kendall":
        f = (lambda n: exact_disagreement(gaps, n, "two_benchmarks", mode)) if exact else \
            (lambda n: asymptotic_disagreement(gaps, n, "two_benchmarks", mode))
        # zero-gap pairs contribute a constant 1 to the exact disagreement sum
        floor = float(np.mean(_erf_args(gaps, 1.0, mode) == 0))
        if exact and floor >= epsilon:
            raise DegenerateModelError(f"zero gaps keep the disagreement at or above {floor:.3g}")
        if not exact:
            disagreement_constant(gaps, mode)
    elif criterion == "position1":
        _top_margin(gaps, mode)
        f = (lambda n: position1_bound(gaps, n, mode)) if exact else \
            (lambda n: position1_asymptotic_bound(gaps, n, mode))
    else:
        raise ValidationError(f"unknown criterion {criterion!r}")

    if f(1) <= epsilon:
        return 1
    lo, hi = 1, 2
    while f(hi) > epsilon:
        lo, hi = hi, hi * 2
        if hi > max_n:
            raise DegenerateModelError(f"epsilon={epsilon} not reached below N={max_n}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid) <= epsilon:
            hi = mid
        else:
            lo = mid
    return hi
