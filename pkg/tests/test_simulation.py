from __future__ import annotations

import numpy as np
import pytest

from benchstab import rng
from benchstab.errors import DegenerateModelError, ValidationError
from benchstab.simulation import mc_expected_tau, mc_position1_disagreement, simulate_scores, summarize
from benchstab.theory import PerformanceModel, expected_tau_oracle, expected_tau_two_benchmarks, gap_summary


def test_streams_are_keyed_and_reproducible():
    a = rng.normals(rng.stream(5, 3, 1), 10)
    b = rng.normals(rng.stream(5, 3, 1), 10)
    c = rng.normals(rng.stream(5, 4, 1), 10)
    d = rng.normals(rng.stream(5, 3, 2), 10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_uniforms_open_interval_and_normal_moments():
    u = rng.uniforms(rng.stream(0), 200_000)
    assert u.min() > 0 and u.max() < 1
    z = rng.normals(rng.stream(1), 200_000)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01


def test_map_replicates_independent_of_workers():
    f = lambda i: float(rng.normals(rng.stream(9, i, 3), 1)[0])
    seq = rng.map_replicates(f, 37, 1)
    for w in (2, 3, 8):
        assert np.array_equal(seq, rng.map_replicates(f, 37, w))


def test_simulate_scores_shape_and_determinism():
    m = PerformanceModel([0.0, 1.0, 2.0], 0.5)
    a = simulate_scores(m, 50, 1)
    assert a.scores.shape == (50, 3)
    assert a == simulate_scores(m, 50, 1)
    assert not np.array_equal(a.scores, simulate_scores(m, 50, 2).scores)


def test_zero_bias_reproduces_plain_model_draw_for_draw():
    plain = PerformanceModel([0.0, 0.5, 1.0], 1.0)
    biased = PerformanceModel([0.0, 0.5, 1.0], 1.0, np.zeros((3, 2)), np.eye(2))
    assert simulate_scores(plain, 20, 4) == simulate_scores(biased, 20, 4)


def test_latent_covariance_recovered():
    bias = np.array([[1.0, 0.0], [0.0, 1.0]])
    sz = np.array([[2.0, 0.6], [0.6, 1.0]])
    m = PerformanceModel([0.0, 0.0], 1e-6, bias, sz)
    x = simulate_scores(m, 100_000, 0).scores
    assert np.allclose(np.cov(x.T), sz, atol=0.03)


@pytest.mark.parametrize("target", ["two_benchmarks", "oracle"])
def test_mc_agrees_with_closed_form(target):
    m = PerformanceModel([0.0, 0.2, 0.5, 0.6], 1.0)
    n = 12
    est = mc_expected_tau(m, n, 4000, seed=11, target=target)
    g = gap_summary(m)
    ref = expected_tau_two_benchmarks(g, n) if target == "two_benchmarks" else expected_tau_oracle(g, n)
    assert abs(est.mean - ref) < 4 * est.std_error


def test_mc_inductive_agrees_with_closed_form():
    m = PerformanceModel([0.0, 0.3, 0.6], 0.5, [[0.0], [1.0], [-0.5]], [[0.4]])
    est = mc_expected_tau(m, 8, 4000, seed=2)
    ref = expected_tau_two_benchmarks(gap_summary(m), 8, "inductive")
    assert abs(est.mean - ref) < 4 * est.std_error


def test_mc_workers_bit_identical():
    m = PerformanceModel([0.0, 0.2, 0.5], 1.0)
    a = mc_expected_tau(m, 5, 500, 3, workers=1)
    b = mc_expected_tau(m, 5, 500, 3, workers=6)
    assert a == b
    assert mc_position1_disagreement(m, 5, 300, 3, 1) == mc_position1_disagreement(m, 5, 300, 3, 4)


def test_position1_two_models_exact():
    # with k = 2 the top differs iff the single pair flips: 2 p (1 - p)
    from math import erfc, sqrt
    m = PerformanceModel([0.0, 0.4], 1.0)
    n = 6
    p = 0.5 * erfc(0.4 * sqrt(n) / sqrt(2) / sqrt(2))
    est = mc_position1_disagreement(m, n, 6000, seed=8)
    assert abs(est.mean - 2 * p * (1 - p)) < 4 * est.std_error


def test_summarize_and_errors():
    s = summarize(np.array([1.0, 1.0, 1.0]), 0)
    assert s.mean == 1.0 and s.std_error == 0.0
    with pytest.raises(ValidationError):
        mc_expected_tau(PerformanceModel([0, 1], 1), 5, 1, 0)
    with pytest.raises(DegenerateModelError):
        mc_position1_disagreement(PerformanceModel([1, 1, 0], 1), 5, 10, 0)
    with pytest.raises(ValidationError):
        mc_expected_tau(PerformanceModel([0, 1], 1), 5, 10, 0, target="nope")
