"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in pytest's terminal summary and
printed under ``-s``) before asserting.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import rankdata

from benchstab import cli
from benchstab.io import write_score_matrix
from benchstab.prep import CANDIDATES, apply_transform, downsample
from benchstab.profiling import classify_column, profile_column
from benchstab.ranking import Ranking, ScoreMatrix, disagreement_fraction, kendall_tau
from benchstab.significance import (
    conover_statistic,
    friedman_test,
    holm_correction,
    wilcoxon_signed_rank,
)
from benchstab.simulation import mc_expected_tau, mc_position1_disagreement, simulate_scores
from benchstab.stability import StabilityFit, extrapolate_oracle, fit_stability_curve
from benchstab.theory import (
    PerformanceModel,
    disagreement_constant,
    disagreement_rate,
    expected_tau_oracle,
    expected_tau_two_benchmarks,
    gap_summary,
    leading_order_size,
    position1_bound,
    required_benchmark_size,
)

from conftest import ACCEPTANCE
from oracles import brute_tau, signed_rank_pvalue

FIXTURE = Path(__file__).parent / "data" / "labeled_columns.json"


def record(i: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[i] = (bool(ok), detail)
    print(f"criterion {i}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_closed_form_vs_monte_carlo():
    configs = [
        ([0.0, 0.5], 1.0, 5), ([0.0, 0.2], 0.5, 20), ([0.0, 1.0, 2.0], 1.0, 3),
        ([0.0, 0.1, 0.3], 1.0, 50), ([0.0, 0.3, 0.35, 0.8], 1.0, 10), ([0.0, 0.3, 0.35, 0.8], 2.0, 40),
        ([0.0, 0.2, 0.4, 0.6, 0.8], 1.0, 8), ([0.0, 0.05, 0.5, 0.55, 1.0], 0.7, 30),
        ([0.1, 0.2, 0.4, 0.7, 1.1, 1.6], 1.0, 12), ([0.0, 0.1, 0.2, 0.3, 0.4, 0.5], 0.3, 6),
        (list(np.linspace(0, 1, 8)), 1.0, 25), (list(np.linspace(0, 2, 10)), 1.5, 15),
    ]
    t0 = time.perf_counter()
    within, cells, worst = 0, 0, 0.0
    for ci, (mu, sigma, n) in enumerate(configs):
        model = PerformanceModel(mu, sigma)
        g = gap_summary(model)
        for target, closed in (("two_benchmarks", expected_tau_two_benchmarks(g, n)),
                               ("oracle", expected_tau_oracle(g, n))):
            est = mc_expected_tau(model, n, 10_000, seed=1000 + ci, target=target)
            z = abs(est.mean - closed) / est.std_error
            worst = max(worst, z)
            within += z <= 3.5
            cells += 1
    elapsed = time.perf_counter() - t0
    frac = within / cells
    record(1, frac >= 0.99 and elapsed < 60,
           f"{within}/{cells} cells within 3.5 SE (max |z| {worst:.2f}), {elapsed:.1f} s")


def test_criterion_02_factor_two_law_and_anchors():
    r = np.random.default_rng(2)
    exact = True
    for _ in range(200):
        fit = StabilityFit(float(r.uniform(0.05, 5)), float(r.uniform(0, 0.3)), 8.0, 64.0, True)
        for n in (1, 2, 7, 30, 100, 1000):
            e = extrapolate_oracle(fit, n)
            exact &= (1 - e.tau_oracle) == (1 - e.tau_two_benchmarks) / 2
    # fit whose two-benchmark tau at N = 10 is 0.90
    c = 0.1 * math.sqrt(10)
    anchor = extrapolate_oracle(StabilityFit(c, 0.0, 1.0, 10.0, True), 10)
    anchors = (abs(anchor.tau_two_benchmarks - 0.90) < 1e-12 and abs(anchor.tau_oracle - 0.95) < 1e-12
               and abs(disagreement_fraction(0.86) - 0.07) < 1e-12 and abs(disagreement_fraction(0.95) - 0.025) < 1e-12)
    record(2, exact and anchors, f"factor two exact on 1200 (fit, N) pairs: {exact}; anchors: {anchors}")


def _curve_points(c, a, noise=0.0, rng=None):
    ns = np.array([8, 16, 24, 32, 48], float)
    d = c / np.sqrt(ns) * np.exp(-a * ns)
    obs = d * (1 + noise * rng.standard_normal(len(ns))) if noise else d
    return [(n, 1 - o, 0.01 * dd) for n, o, dd in zip(ns, obs, d)]


def test_criterion_03_curve_fit_recovery():
    params = [(0.5, 0.02), (1.2, 0.05), (3.0, 0.1)]
    clean = max(max(abs(f.c - c) / c, abs(f.a - a) / a)
                for c, a in params for f in [fit_stability_curve(_curve_points(c, a))])
    medians = []
    for c, a in params:
        rng = np.random.default_rng(int(c * 100 + a * 1000))
        errs = []
        for _ in range(100):
            f = fit_stability_curve(_curve_points(c, a, 0.01, rng))
            errs.append(max(abs(f.c - c) / c, abs(f.a - a) / a))
        medians.append(float(np.median(errs)))
    record(3, clean <= 1e-6 and max(medians) <= 0.10,
           f"noiseless max rel err {clean:.1e}; noisy medians {', '.join(f'{m:.3f}' for m in medians)}")


def test_criterion_04_position1_bound():
    r = np.random.default_rng(4)
    worst, bad = -np.inf, 0
    for i in range(50):
        k = int(r.integers(2, 7))
        mu = np.sort(r.uniform(0, 1.5, k))
        mu[-1] += 0.02  # keep a unique best
        model = PerformanceModel(mu, float(r.uniform(0.5, 2)))
        n = int(r.integers(1, 40))
        est = mc_position1_disagreement(model, n, 2000, seed=400 + i)
        bound = position1_bound(gap_summary(model), n)
        slack = est.mean - (bound + 3 * est.std_error)
        worst = max(worst, slack)
        bad += slack > 0
    # size ratio once the exponents dominate: eps small enough that prefactors are negligible
    ratios = []
    for _ in range(20):
        k = int(r.integers(3, 7))
        mu = np.cumsum(r.uniform(0.1, 0.6, k))
        g = gap_summary(PerformanceModel(mu, 1.0))
        target = (g.delta_min / g.delta_1) ** 2
        n_pos = required_benchmark_size(g, 1e-200, "position1")
        n_ken = required_benchmark_size(g, 1e-200, "kendall")
        lead = leading_order_size(g, 1e-200, "position1") / leading_order_size(g, 1e-200, "kendall")
        ratios.append(max(abs(n_pos / n_ken / target - 1), abs(lead / target - 1)))
    ok = bad == 0 and max(ratios) <= 0.05
    record(4, ok, f"bound violations {bad}/50 (max excess {worst:.4f}); worst size-ratio deviation {max(ratios):.3%}")


def test_criterion_05_zero_bias_reduction():
    r = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        k = int(r.integers(2, 7))
        p = int(r.integers(1, 4))
        mu = r.uniform(-1, 1, k)
        sigma = float(r.uniform(0.2, 2))
        a = r.normal(size=(p, p))
        plain = gap_summary(PerformanceModel(mu, sigma))
        biased = gap_summary(PerformanceModel(mu, sigma, np.zeros((k, p)), a @ a.T + np.eye(p)))
        for n in (1, 4, 25, 100):
            for f in (expected_tau_two_benchmarks, expected_tau_oracle):
                worst = max(worst, abs(f(biased, n, "inductive") - f(plain, n)))
            worst = max(worst, abs(position1_bound(biased, n, "inductive") - position1_bound(plain, n)))
        for f in (disagreement_constant, disagreement_rate):
            hom = f(plain)
            worst = max(worst, abs(f(biased, "inductive") - hom) / abs(hom))
    record(5, worst <= 1e-12, f"max deviation over 20 cases {worst:.1e}")


def test_criterion_06_kendall_tau_oracle():
    base = Ranking(np.arange(1, 7))
    mismatches = sum(kendall_tau(base, Ranking(np.array(p) + 1)) != brute_tau(list(range(6)), list(p))
                     for p in itertools.permutations(range(6)))
    r = np.random.default_rng(6)
    self_ok = 0
    for _ in range(100):
        k = int(r.integers(2, 12))
        ranks = rankdata(r.integers(0, max(2, k // 2), k))
        self_ok += kendall_tau(Ranking(ranks), Ranking(ranks)) == 1
    record(6, mismatches == 0 and self_ok == 100,
           f"{720 - mismatches}/720 permutations match pair counting; tau(a, a) = 1 on {self_ok}/100 tied rankings")


def test_criterion_07_significance_suite():
    const = friedman_test(ScoreMatrix(np.ones((8, 4)))).statistic
    t = conover_statistic(1.0, 2.0, 4)
    p6 = wilcoxon_signed_rank([1.0, 2, 3, 4, 5, 6], exact=True).p_value
    oracle = signed_rank_pvalue([1.0, 2, 3, 4, 5, 6])
    holm = holm_correction([0.01, 0.04])
    ok = (const == 0 and t == 1.0 and abs(p6 - 0.03125) < 1e-15 and p6 == oracle
          and np.allclose(holm, [0.02, 0.04], rtol=0, atol=1e-15))
    record(7, ok, f"Friedman(const) = {const}; T = {t}; Wilcoxon p = {p6} (oracle {oracle}); Holm = {np.asarray(holm).tolist()}")


def test_criterion_08_profiler_floor():
    cols = json.loads(FIXTURE.read_text())["columns"]
    hits = [classify_column(profile_column(c["values"])).value == c["label"] for c in cols]
    misses = [c["name"] for c, h in zip(cols, hits) if not h]
    record(8, sum(hits) / len(cols) >= 0.9, f"{sum(hits)}/{len(cols)} columns agree; misses: {misses}")


def test_criterion_09_prep_properties():
    monotone = True
    for kind in CANDIDATES:
        lo = {"log": 1e-8, "log1p": -1 + 1e-8}.get(kind, -1e6)
        grid = np.unique(np.concatenate([np.linspace(lo, 1e6, 200_001), np.linspace(max(lo, -1), 1, 20_001)]))
        monotone &= bool(np.all(np.diff(apply_transform(kind, grid)) > 0))
    r = np.random.default_rng(9)
    prop_ok = 0
    for _ in range(20):
        counts = r.integers(1, 2000, int(r.integers(2, 7)))
        labels = r.permutation(np.repeat(np.arange(len(counts)), counts))
        cap = int(r.integers(10, labels.size + 1))
        idx = downsample(labels.size, labels, cap, seed=int(r.integers(1000)))
        kept = np.bincount(labels[idx], minlength=len(counts))
        prop_ok += len(idx) == cap and bool(np.all(np.abs(kept - counts * cap / labels.size) <= 1))
    invariant = True
    for _ in range(20):
        scores = r.lognormal(size=(15, 5))
        for kind in CANDIDATES:
            t = np.apply_along_axis(lambda y: apply_transform(kind, y), 1, scores)
            invariant &= bool(np.array_equal(ScoreMatrix(t).row_ranks(), ScoreMatrix(scores).row_ranks()))
            invariant &= bool(np.array_equal(rankdata(t, axis=0), rankdata(scores, axis=0)))
    record(9, monotone and prop_ok == 20 and invariant,
           f"monotone: {monotone}; proportions within 1 row on {prop_ok}/20 mixes; rank invariance: {invariant}")


def _cli_inputs(d: Path) -> dict[str, list[str]]:
    model = {"mu": [0.0, 0.1, 0.25, 0.3, 0.6], "sigma": 1.0}
    (d / "model.json").write_text(json.dumps(model))
    write_score_matrix(simulate_scores(PerformanceModel.from_dict(model), 48, seed=3), d / "scores.csv")
    (d / "groups.csv").write_text("dataset_id,group\n" + "".join(f"d{i},g{i % 4}\n" for i in range(48)))
    (d / "feat.csv").write_text("dataset_id,size\n" + "".join(f"d{i},{(i * 7) % 11}\n" for i in range(48)))
    r = np.random.default_rng(1)
    lines = ["city,comment,target,label"]
    for i in range(300):
        lines.append(f"{['Paris', 'Lima', 'Oslo'][i % 3]},arrived on day {i} and the lid was cracked,"
                     f"{float(r.lognormal())!r},{'xyz'[i % 3 == 0 or i % 7 == 0]}")
    (d / "table.csv").write_text("\n".join(lines) + "\n")
    return {
        "theory": [str(d / "model.json")],
        "simulate": [str(d / "model.json"), "--set", "simulate.replicates=2000"],
        "stability": [str(d / "scores.csv"), "--set", "stability.replicates=100",
                      "--set", f"stability.groups={d / 'groups.csv'}", "--set", "stability.null_draws=50",
                      "--set", f"stability.features={d / 'feat.csv'}"],
        "significance": [str(d / "scores.csv")],
        "profile": [str(d / "table.csv")],
        "prep": [str(d / "table.csv"), "--set", "prep.target=target", "--set", "prep.labels=label",
                 "--set", "prep.cap=100"],
    }


def test_criterion_10_cli_determinism(tmp_path):
    args = _cli_inputs(tmp_path)
    jobs = max(os.cpu_count() or 1, 8)
    identical = {}
    for name, a in args.items():
        outs = []
        for run, j in enumerate((jobs, jobs, 1)):
            out = tmp_path / f"{name}-{run}"
            assert cli.main([name, *a, "-o", str(out), "--seed", "17", "-j", str(j)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir()) if not p.name.endswith(".meta.json")})
        identical[name] = outs[0] == outs[1] == outs[2]
    record(10, all(identical.values()),
           f"byte-identical reports at -j {jobs} (twice) and -j 1: {identical}")
