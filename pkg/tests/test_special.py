from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from benchstab.errors import ValidationError
from benchstab.special import erf, erfc, std_normal_cdf, std_normal_sf


@pytest.mark.parametrize("x", [0.0, 0.1, 0.5, 1.0, 1.7, 2.5, 3.3, 4.0, 5.5])
def test_erf_against_quadrature(x):
    ref, _ = quad(lambda t: 2 / math.sqrt(math.pi) * math.exp(-t * t), 0, x, epsabs=1e-15, epsrel=1e-13, limit=200)
    assert erf(x) == pytest.approx(ref, abs=1e-14)
    assert erf(-x) == -erf(x)


@pytest.mark.parametrize("x", [2.0, 4.0, 6.0, 8.0])
def test_erfc_keeps_relative_precision_in_tail(x):
    ref, _ = quad(lambda t: 2 / math.sqrt(math.pi) * math.exp(-t * t), x, np.inf, epsabs=0, epsrel=1e-13)
    assert erfc(x) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("x", [-8.0, -3.0, -1.0, 0.0, 0.7, 2.0])
def test_normal_cdf_against_quadrature(x):
    pdf = lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi)
    ref, _ = quad(pdf, -np.inf, x, epsabs=0, epsrel=1e-13)
    assert std_normal_cdf(x) == pytest.approx(ref, rel=1e-10)
    assert std_normal_sf(-x) == pytest.approx(ref, rel=1e-10)


def test_array_in_array_out_and_nan_rejected():
    out = erf(np.array([0.0, 1.0]))
    assert isinstance(out, np.ndarray) and out.shape == (2,)
    assert isinstance(erf(1.0), float)
    with pytest.raises(ValidationError):
        erf(float("nan"))
