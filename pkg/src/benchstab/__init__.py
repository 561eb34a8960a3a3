"""Ranking stability of benchmarks: closed-form agreement laws, Monte Carlo checks,
bootstrap stability curves, rank-based significance tests, string-column profiling
and target preparation."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import DegenerateModelError, NumericalError, ValidationError
from .ranking import (
    Ranking,
    ScoreMatrix,
    aggregate_ranking,
    disagreement_fraction,
    kendall_tau,
    ranks_from_scores,
    tau_from_scores,
)
from .theory import (
    GapSummary,
    PerformanceModel,
    asymptotic_disagreement,
    expected_tau_oracle,
    expected_tau_two_benchmarks,
    gap_summary,
    position1_bound,
    required_benchmark_size,
)
from .simulation import McEstimate, mc_expected_tau, mc_position1_disagreement, simulate_scores
from .stability import (
    GroupStability,
    StabilityFit,
    disjoint_subset_tau,
    extrapolate_oracle,
    fit_stability_curve,
    leave_one_group_out,
    metafeature_split_tau,
    stability_curve,
)
from .significance import (
    CdSummary,
    TestResult,
    cd_groups,
    conover_iman,
    friedman_test,
    holm_correction,
    wilcoxon_signed_rank,
)
from .profiling import (
    ColumnProfile,
    StructuralMetrics,
    TaxonomyTag,
    classify_column,
    gini_concentration,
    mean_offdiag_cosine,
    profile_column,
    structural_metrics,
)
from .prep import TargetTransform, apply_transform, downsample, sample_skewness, select_target_transform
from .io import load_score_matrix, write_score_matrix
from .report import ReportBundle
from .cli import run_subcommand
