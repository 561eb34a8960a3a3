"""Measuring ranking stability on an observed score matrix.

Split the datasets into two disjoint halves many times, rank pipelines on
each half, and record Kendall tau. Fitting ``C exp(-a N) / sqrt(N)`` to the
disagreement then extrapolates to the full benchmark and to the agreement
with the (unobservable) population ranking.
"""

from __future__ import annotations

from benchstab.simulation import simulate_scores
from benchstab.stability import extrapolate_oracle, fit_stability_curve, stability_curve
from benchstab.theory import PerformanceModel

model = PerformanceModel([0.0, 0.15, 0.3, 0.5, 0.55, 0.9], sigma=1.0)
scores = simulate_scores(model, n=120, seed=42)  # stand-in for a real results table

curve = stability_curve(scores, sizes=[8, 16, 24, 36, 48, 60], replicates=300, seed=1)
for n, est in curve:
    print(f"N = {n:3d}: tau = {est.mean:.3f} +/- {est.std_error:.3f}")

fit = fit_stability_curve([(n, e.mean, e.std_error) for n, e in curve])
print(f"\nfitted C = {fit.c:.3f}, a = {fit.a:.4f}")

ex = extrapolate_oracle(fit, scores.n_datasets)
print(f"at N = {ex.n}: two benchmarks would agree at tau = {ex.tau_two_benchmarks:.3f}, "
      f"the benchmark vs the population ranking at tau = {ex.tau_oracle:.3f}")
if not ex.in_range:
    print("(extrapolating beyond the sampled sizes)")
