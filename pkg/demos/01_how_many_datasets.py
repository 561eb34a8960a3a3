"""How many datasets does a benchmark need before its ranking settles?

We take a five-model performance model, compare the closed-form expected
Kendall tau with a Monte Carlo check, then ask for the benchmark size that
keeps the expected disagreement under 5%.
"""

from __future__ import annotations

from benchstab.simulation import mc_expected_tau
from benchstab.theory import (
    PerformanceModel,
    expected_tau_oracle,
    expected_tau_two_benchmarks,
    gap_summary,
    required_benchmark_size,
)

model = PerformanceModel([0.0, 0.1, 0.25, 0.3, 0.6], sigma=1.0)
gaps = gap_summary(model)
print(f"k = {gaps.k}, smallest gap {gaps.delta_min:.2f} (appears {gaps.m_min}x)")

print("\n   N   tau(two benchmarks)  MC estimate        tau(vs oracle)")
for n in (5, 20, 80, 320):
    closed = expected_tau_two_benchmarks(gaps, n)
    mc = mc_expected_tau(model, n, replicates=4000, seed=0)
    print(f"{n:4d}   {closed:.4f}              {mc.mean:.4f} +/- {mc.std_error:.4f}   "
          f"{expected_tau_oracle(gaps, n):.4f}")

# the oracle column always sits at half the disagreement of the two-benchmark column
for crit in ("kendall", "position1"):
    n_exact = required_benchmark_size(gaps, 0.05, crit, exact=True)
    print(f"\n{crit}: {n_exact} datasets keep the expected disagreement under 5%")
