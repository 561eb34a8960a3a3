"""Choosing a target transform and capping a large table before training."""

from __future__ import annotations

import numpy as np

from benchstab.prep import apply_transform, downsample, sample_skewness, select_target_transform

rng = np.random.default_rng(3)
prices = rng.lognormal(mean=3.0, sigma=1.1, size=5000)
t = select_target_transform(prices)
print(f"raw skewness {sample_skewness(prices):.2f}; chose {t.kind!r} "
      f"(skewness after: {sample_skewness(apply_transform(t, prices)):.3f})")

losses = -rng.exponential(2.0, size=2000) + rng.exponential(0.2, size=2000)
print("mixed-sign, left-skewed target ->", select_target_transform(losses).kind)

# keep class balance exactly (to within a row) when capping 200k rows at 75k
labels = rng.choice(["churn", "stay"], size=200_000, p=[0.13, 0.87])
keep = downsample(len(labels), labels, seed=0)
before = np.mean(labels == "churn")
after = np.mean(labels[keep] == "churn")
print(f"kept {len(keep)} rows; churn share {before:.4f} -> {after:.4f}")
