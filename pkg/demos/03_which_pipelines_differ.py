"""Friedman test, Conover-Iman post-hoc comparisons and critical-difference groups."""

from __future__ import annotations

import numpy as np

from benchstab.ranking import ScoreMatrix
from benchstab.significance import cd_groups, conover_iman, friedman_test, holm_correction, wilcoxon_signed_rank

rng = np.random.default_rng(7)
n = 30
base = rng.normal(size=(n, 1))
scores = base + np.array([0.0, 0.05, 0.4, 0.45, 1.0]) + 0.5 * rng.normal(size=(n, 5))
m = ScoreMatrix(scores, pipeline_ids=("tfidf", "hashing", "minhash", "skrub", "llm-embed"))

fr = friedman_test(m)
print(f"Friedman chi2 = {fr.statistic:.2f} (df {fr.df:g}), p = {fr.p_value:.2e}")

ci = conover_iman(m)
print("\nConover-Iman p-values")
print("          " + " ".join(f"{p:>9s}" for p in m.pipeline_ids))
for p, row in zip(m.pipeline_ids, ci.p_values):
    print(f"{p:>9s} " + " ".join(f"{v:9.3f}" for v in row))

cd = cd_groups(m, alpha=0.05)
print("\naverage ranks:", dict(zip(m.pipeline_ids, np.round(cd.average_ranks, 2).tolist())))
print("indistinguishable groups:", cd.cliques)

# paired Wilcoxon of the two closest pipelines, Holm-adjusted with one other pair
p1 = wilcoxon_signed_rank(scores[:, 1] - scores[:, 0]).p_value
p2 = wilcoxon_signed_rank(scores[:, 4] - scores[:, 3]).p_value
print("\nWilcoxon p (raw -> Holm):", [round(p1, 4), round(p2, 4)], "->",
      [round(float(v), 4) for v in holm_correction([p1, p2])])
