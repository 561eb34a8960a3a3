"""Command-line entry point.

Each subcommand reads one INI configuration (built-in defaults, then an
optional ``--config`` file, then ``--set section.key=value`` overrides and
the shortcut flags) and writes ``report.json``, its ``report.meta.json``
sidecar, and any CSV tables and SVG figures into the output directory.

Exit status is 0 on success, 2 on invalid input and 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys
import warnings
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import io as bio
from . import prep, profiling, significance, simulation, stability, theory
from .errors import NumericalError, ValidationError
from .plots import cd_diagram_svg, csv_table, stability_curve_svg
from .ranking import ScoreMatrix, aggregate_ranking
from .report import ReportBundle

__all__ = ["DEFAULTS", "SUBCOMMANDS", "main", "resolve_config", "run_subcommand"]

DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"seed": "0", "jobs": "1", "output": "benchstab-out", "plots": "yes"},
    "theory": {"model": "", "n_grid": "1, 2, 5, 10, 20, 50, 100, 200, 500", "epsilon": "0.05",
               "mode": "auto"},
    "simulate": {"model": "", "n": "20", "replicates": "10000", "position1": "yes",
                 "write_matrix": "yes"},
    "stability": {"scores": "", "sizes": "auto", "replicates": "200", "by": "mean_score",
                  "extrapolate_to": "auto", "groups": "", "features": "", "null_draws": "200",
                  "percentile": "0.3333333333333333"},
    "significance": {"scores": "", "alpha": "0.05", "iman_davenport": "yes", "pairwise_wilcoxon": "yes"},
    "profile": {"table": "", "config": ""},
    "prep": {"table": "", "target": "", "labels": "", "cap": "75000"},
}

# keys that may change between identical runs without changing results
_VOLATILE = {("run", "jobs"), ("run", "output")}


# -- configuration -----------------------------------------------------------

def resolve_config(config_file=None, overrides: Mapping[str, str] | None = None) -> configparser.ConfigParser:
    """Defaults, then ``config_file``, then ``section.key -> value`` overrides."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_dict(DEFAULTS)
    if config_file is not None:
        p = Path(config_file)
        if not p.is_file():
            raise ValidationError(f"config file not found: {p}")
        try:
            cp.read(p, encoding="utf-8")
        except configparser.Error as exc:
            raise ValidationError(f"cannot parse {p}: {exc}") from exc
    for dotted, value in (overrides or {}).items():
        if "." not in dotted:
            raise ValidationError(f"override {dotted!r} must look like section.key")
        sec, key = dotted.split(".", 1)
        if sec not in DEFAULTS:
            raise ValidationError(f"unknown config section {sec!r}")
        cp[sec][key] = str(value)
    for sec in cp.sections():
        if sec not in DEFAULTS:
            raise ValidationError(f"unknown config section [{sec}]")
        unknown = set(cp[sec]) - set(DEFAULTS[sec])
        if unknown:
            raise ValidationError(f"unknown keys in [{sec}]: {sorted(unknown)}")
    return cp


def _as_parser(config) -> configparser.ConfigParser:
    if isinstance(config, configparser.ConfigParser):
        return config
    flat = {}
    for sec, kv in (config or {}).items():
        for k, v in kv.items():
            flat[f"{sec}.{k}"] = v
    return resolve_config(None, flat)


def dump_config(cp: configparser.ConfigParser) -> str:
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


class _Section:
    """Typed access to one config section with actionable error messages."""

    def __init__(self, cp: configparser.ConfigParser, name: str):
        self.name, self.s = name, cp[name]

    def _err(self, key, kind):
        return ValidationError(f"[{self.name}] {key} = {self.s.get(key)!r} is not {kind}")

    def str(self, key) -> str:
        return self.s.get(key, "").strip()

    def path(self, key, required=True) -> Path | None:
        v = self.str(key)
        if not v:
            if required:
                raise ValidationError(f"[{self.name}] {key} is required")
            return None
        return Path(v)

    def int(self, key, lo=None) -> int:
        try:
            v = int(self.s[key])
        except ValueError:
            raise self._err(key, "an integer") from None
        if lo is not None and v < lo:
            raise ValidationError(f"[{self.name}] {key} must be >= {lo}, got {v}")
        return v

    def float(self, key) -> float:
        try:
            v = float(self.s[key])
        except ValueError:
            raise self._err(key, "a number") from None
        if not math.isfinite(v):
            raise self._err(key, "finite")
        return v

    def bool(self, key) -> bool:
        try:
            return self.s.getboolean(key)
        except ValueError:
            raise self._err(key, "a boolean (yes/no)") from None

    def ints(self, key) -> list[int]:
        try:
            return [int(x) for x in self.s[key].replace(";", ",").split(",") if x.strip()]
        except ValueError:
            raise self._err(key, "a comma-separated list of integers") from None


def _report_config(cp: configparser.ConfigParser, name: str) -> dict:
    out = {}
    for sec in ("run", name):
        out[sec] = {k: v for k, v in cp[sec].items() if (sec, k) not in _VOLATILE}
    return out


# -- subcommands -------------------------------------------------------------

def _mode(model: theory.PerformanceModel, requested: str) -> str:
    if requested == "auto":
        return "inductive" if model.has_bias else "homoskedastic"
    if requested not in ("homoskedastic", "inductive"):
        raise ValidationError(f"[theory] mode must be auto, homoskedastic or inductive, got {requested!r}")
    return requested


def _guarded(fn: Callable, warn: list, label: str):
    try:
        return fn()
    except ValidationError as exc:
        warn.append(f"{label}: {exc}")
        return None


def _cmd_theory(cp, seed, jobs, bundle):
    s = _Section(cp, "theory")
    model = bio.load_model(s.path("model"))
    mode = _mode(model, s.str("mode"))
    eps = s.float("epsilon")
    if not 0 < eps < 1:
        raise ValidationError(f"[theory] epsilon must lie in (0, 1), got {eps}")
    grid = s.ints("n_grid")
    if not grid or min(grid) < 1:
        raise ValidationError("[theory] n_grid needs positive integers")
    g = theory.gap_summary(model)
    w = bundle.warnings
    rows = []
    for n in grid:
        row = {
            "n": n,
            "tau_two_benchmarks": theory.expected_tau_two_benchmarks(g, n, mode),
            "tau_oracle": theory.expected_tau_oracle(g, n, mode),
            "disagreement_two": theory.exact_disagreement(g, n, "two_benchmarks", mode),
            "disagreement_oracle": theory.exact_disagreement(g, n, "oracle", mode),
            "asymptotic_two": _guarded(lambda: theory.asymptotic_disagreement(g, n, "two_benchmarks", mode), [], ""),
            "position1_bound": _guarded(lambda: theory.position1_bound(g, n, mode), [], ""),
        }
        rows.append(row)
    summary = {
        "mode": mode,
        "k": g.k,
        "delta_min": g.delta_min, "m_min": g.m_min, "rho_min": g.rho_min, "m_min_rho": g.m_min_rho,
        "best_model": g.best, "delta_1": g.delta_1, "rho_1": g.rho_1,
        "constant": _guarded(lambda: theory.disagreement_constant(g, mode), w, "constant"),
        "rate": _guarded(lambda: theory.disagreement_rate(g, mode), w, "rate"),
    }
    sizes = {}
    for crit in ("kendall", "position1"):
        sizes[crit] = {
            "asymptotic": _guarded(lambda: theory.required_benchmark_size(g, eps, crit, mode), w, f"{crit} size"),
            "exact": _guarded(lambda: theory.required_benchmark_size(g, eps, crit, mode, exact=True), w,
                              f"{crit} exact size"),
            "leading_order": _guarded(lambda: theory.leading_order_size(g, eps, crit, mode), w,
                                      f"{crit} leading order"),
        }
    bundle.results = {"model": model.to_dict(), "summary": summary, "epsilon": eps,
                      "required_size": sizes, "grid": rows}
    cols = list(rows[0])
    bundle.artifacts["theory_grid.csv"] = csv_table(cols, [[r[c] if r[c] is not None else "" for c in cols]
                                                           for r in rows])


def _cmd_simulate(cp, seed, jobs, bundle):
    s = _Section(cp, "simulate")
    model = bio.load_model(s.path("model"))
    n = s.int("n", 1)
    reps = s.int("replicates", 2)
    mode = "inductive" if model.has_bias else "homoskedastic"
    g = theory.gap_summary(model)
    res = {"model": model.to_dict(), "n": n, "replicates": reps}
    for target in ("two_benchmarks", "oracle"):
        mc = simulation.mc_expected_tau(model, n, reps, seed, target=target, workers=jobs)
        closed = (theory.expected_tau_two_benchmarks if target == "two_benchmarks"
                  else theory.expected_tau_oracle)(g, n, mode)
        res[f"tau_{target}"] = {"monte_carlo": mc.to_dict(), "closed_form": closed,
                                "z": (mc.mean - closed) / mc.std_error if mc.std_error > 0 else None}
    if s.bool("position1"):
        if g.best_tied:
            bundle.warnings.append("position-1 skipped: several models share the largest mean")
        else:
            mc = simulation.mc_position1_disagreement(model, n, reps, seed, workers=jobs)
            res["position1"] = {"monte_carlo": mc.to_dict(), "bound": theory.position1_bound(g, n, mode)}
    bundle.results = res
    if s.bool("write_matrix"):
        bundle.artifacts["simulated_scores.csv"] = bio.write_score_matrix(simulation.simulate_scores(model, n, seed))


def _auto_sizes(n: int) -> list[int]:
    top = n // 2
    if top < 1:
        raise ValidationError("stability needs at least 2 datasets")
    lo = max(2, top // 8) if top >= 2 else 1
    return sorted({int(round(x)) for x in np.linspace(lo, top, 6)})


def _cmd_stability(cp, seed, jobs, bundle):
    s = _Section(cp, "stability")
    m = bio.load_score_matrix(s.path("scores"))
    reps = s.int("replicates", 1)
    by = s.str("by")
    sizes = _auto_sizes(m.n_datasets) if s.str("sizes") == "auto" else s.ints("sizes")
    curve = stability.stability_curve(m, sizes, reps, seed, by, jobs)
    points = [(n, e.mean, e.std_error) for n, e in curve]
    res: dict = {"n_datasets": m.n_datasets, "pipelines": list(m.pipeline_ids), "by": by,
                 "curve": [{"subset_size": n, **e.to_dict()} for n, e in curve]}
    fit = _guarded(lambda: stability.fit_stability_curve(points), bundle.warnings, "curve fit")
    res["fit"] = fit.to_dict() if fit else None
    target = m.n_datasets if s.str("extrapolate_to") == "auto" else s.int("extrapolate_to", 1)
    if fit:
        ex = stability.extrapolate_oracle(fit, target)
        res["extrapolation"] = ex._asdict() | {"in_range": ex.in_range}
        if not fit.valid_range:
            bundle.warnings.append("fitted disagreement leaves (0, 1) on the sampled range")
    gpath = s.path("groups", required=False)
    if gpath:
        lodo = stability.leave_one_group_out(m, bio.load_mapping(gpath), s.int("null_draws", 2), seed, jobs)
        res["leave_one_group_out"] = [gs.to_dict() for gs in lodo]
        bundle.artifacts["leave_one_group_out.csv"] = csv_table(
            ["group_id", "n_group", "tau", "null_low", "null_high", "inside_band"],
            [[g.group_id, g.n_group, g.tau, g.null_low, g.null_high, g.inside_band] for g in lodo])
    feats = [f.strip() for f in s.str("features").split(",") if f.strip()]
    if feats:
        pct = s.float("percentile")
        res["metafeature_splits"] = {}
        for f in feats:
            tau, low, high = stability.metafeature_split_tau(m, bio.load_mapping(f, numeric=True), pct)
            res["metafeature_splits"][Path(f).stem] = {"tau": tau, "low": low, "high": high}
    bundle.results = res
    bundle.artifacts["stability_curve.csv"] = csv_table(["subset_size", "tau_mean", "tau_se", "tau_median"],
                                                        [[n, e.mean, e.std_error, e.median] for n, e in curve])
    if _Section(cp, "run").bool("plots"):
        bundle.artifacts["stability_curve.svg"] = stability_curve_svg(points, fit, target)


def _cmd_significance(cp, seed, jobs, bundle):
    s = _Section(cp, "significance")
    m = bio.load_score_matrix(s.path("scores"))
    alpha = s.float("alpha")
    fr = significance.friedman_test(m)
    res: dict = {"pipelines": list(m.pipeline_ids), "alpha": alpha, "friedman": fr.to_dict()}
    if s.bool("iman_davenport"):
        res["iman_davenport"] = significance.friedman_test(m, iman_davenport=True).to_dict()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ci = significance.conover_iman(m, alpha)
    bundle.warnings.extend(str(c.message) for c in caught)
    res["conover_iman"] = {"statistics": ci.statistics, "p_values": ci.p_values,
                           "pooled_variance": ci.pooled_variance, "df": ci.df}
    cd = significance.cd_groups(m, alpha)
    res["cd"] = {"average_ranks": cd.average_ranks, "cliques": [list(c) for c in cd.cliques]}
    _, ranking = aggregate_ranking(m)
    res["ranking"] = dict(zip(m.pipeline_ids, ranking.ranks.tolist()))
    if s.bool("pairwise_wilcoxon"):
        pairs, pvals, stats_ = [], [], []
        sign = 1.0 if m.higher_is_better else -1.0
        k = m.n_pipelines
        for i in range(k):
            for j in range(i + 1, k):
                d = sign * (m.scores[:, i] - m.scores[:, j])
                pairs.append([m.pipeline_ids[i], m.pipeline_ids[j]])
                if np.all(d == 0):
                    stats_.append(None)
                    pvals.append(1.0)
                else:
                    t = significance.wilcoxon_signed_rank(d)
                    stats_.append(t.statistic)
                    pvals.append(t.p_value)
        res["wilcoxon"] = {"pairs": pairs, "statistic": stats_, "p_value": pvals,
                           "p_holm": significance.holm_correction(pvals)}
    bundle.results = res
    bundle.artifacts["average_ranks.csv"] = csv_table(["pipeline", "average_rank"],
                                                      list(zip(m.pipeline_ids, cd.average_ranks.tolist())))
    if _Section(cp, "run").bool("plots"):
        bundle.artifacts["cd_diagram.svg"] = cd_diagram_svg(cd)


def _cmd_profile(cp, seed, jobs, bundle):
    s = _Section(cp, "profile")
    table = bio.load_table(s.path("table"))
    pcfg = profiling.load_profiler_config(s.path("config", required=False))
    cols = profiling.profile_table(table, pcfg)
    sm = profiling.structural_metrics(table, pcfg)
    counts: dict[str, int] = {}
    for c in cols.values():
        counts[c["tag"]] = counts.get(c["tag"], 0) + 1
    bundle.results = {"columns": cols, "tag_counts": dict(sorted(counts.items())),
                      "structural_metrics": sm.to_dict()}
    bundle.artifacts["column_tags.csv"] = csv_table(["column", "tag"], [[k, v["tag"]] for k, v in cols.items()])


def _cmd_prep(cp, seed, jobs, bundle):
    s = _Section(cp, "prep")
    table = bio.load_table(s.path("table"))
    target = s.str("target")
    if target not in table:
        raise ValidationError(f"[prep] target column {target!r} not in table (columns: {sorted(table)[:10]})")
    cells = table[target]
    if any(c is None for c in cells):
        raise ValidationError(f"[prep] target column {target!r} has empty cells")
    label_col = s.str("labels")
    if label_col:
        if label_col not in table:
            raise ValidationError(f"[prep] label column {label_col!r} not in table")
        labels = np.array(["" if v is None else v for v in table[label_col]])
    else:
        labels = None
    res: dict = {"rows": len(cells)}
    try:
        y = np.array([float(c) for c in cells])
    except ValueError:
        y = None
        bundle.warnings.append(f"target {target!r} is not numeric; transform selection skipped")
    if y is not None:
        t = prep.select_target_transform(y)
        cand = {}
        for kind in prep.CANDIDATES:
            try:
                cand[kind] = abs(prep.sample_skewness(prep.apply_transform(kind, y)))
            except ValidationError:
                cand[kind] = None
        res["transform"] = t.to_dict()
        res["candidate_abs_skewness"] = cand
    cap = s.int("cap", 1)
    idx = prep.downsample(len(cells), labels, cap, seed)
    res["downsample"] = {"cap": cap, "selected": len(idx), "stratified": labels is not None}
    if labels is not None:
        cls, before = np.unique(labels, return_counts=True)
        after = np.array([(labels[idx] == c).sum() for c in cls])
        res["downsample"]["classes"] = {str(c): {"before": int(b), "after": int(a)}
                                        for c, b, a in zip(cls, before, after)}
    bundle.results = res
    bundle.artifacts["selected_rows.csv"] = csv_table(["row"], [[int(i)] for i in idx])


SUBCOMMANDS: dict[str, Callable] = {
    "theory": _cmd_theory,
    "simulate": _cmd_simulate,
    "stability": _cmd_stability,
    "significance": _cmd_significance,
    "profile": _cmd_profile,
    "prep": _cmd_prep,
}


def run_subcommand(name: str, config=None) -> ReportBundle:
    """Run one analysis and return its report bundle (nothing is written).

    ``config`` is a resolved ``ConfigParser`` or a ``{section: {key: value}}``
    mapping layered over :data:`DEFAULTS`.
    """
    if name not in SUBCOMMANDS:
        raise ValidationError(f"unknown subcommand {name!r}; choose from {sorted(SUBCOMMANDS)}")
    cp = _as_parser(config)
    run = _Section(cp, "run")
    seed = run.int("seed", 0)
    jobs = run.int("jobs", 1)
    bundle = ReportBundle(name, seed, _report_config(cp, name))
    try:
        SUBCOMMANDS[name](cp, seed, jobs, bundle)
    except FloatingPointError as exc:
        raise NumericalError(str(exc)) from exc
    return bundle


def write_bundle(bundle: ReportBundle, outdir, extra_meta: dict | None = None) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for fname, text in sorted(bundle.artifacts.items()):
        (out / fname).write_text(text, encoding="utf-8")
    meta = {"artifacts": sorted(bundle.artifacts), **(extra_meta or {})}
    return bundle.write(out / "report.json", meta)


# -- argument parsing --------------------------------------------------------

_SHORTCUTS = {"theory": "model", "simulate": "model", "stability": "scores",
              "significance": "scores", "profile": "table", "prep": "table"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="benchstab", description="Benchmark ranking stability toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("input", nargs="?", help=f"shortcut for --set {name}.{_SHORTCUTS[name]}=PATH")
        sp.add_argument("--config", "-c", help="INI configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
        sp.add_argument("--seed", type=int, help="top-level random seed")
        sp.add_argument("--jobs", "-j", type=int, help="worker threads (results do not depend on it)")
        sp.add_argument("--output", "-o", help="output directory")
        sp.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    return p


def _overrides(args) -> dict[str, str]:
    out = {}
    if args.input:
        out[f"{args.command}.{_SHORTCUTS[args.command]}"] = args.input
    for item in args.set:
        if "=" not in item:
            raise ValidationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    for flag, key in (("seed", "run.seed"), ("jobs", "run.jobs"), ("output", "run.output")):
        if getattr(args, flag) is not None:
            out[key] = str(getattr(args, flag))
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cp = resolve_config(args.config, _overrides(args))
        if args.print_config:
            sys.stdout.write(dump_config(cp))
            return 0
        bundle = run_subcommand(args.command, cp)
        path = write_bundle(bundle, cp["run"]["output"], {"jobs": int(cp["run"]["jobs"])})
    except ValidationError as exc:
        print(f"benchstab: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError) as exc:
        print(f"benchstab: numerical failure: {exc}", file=sys.stderr)
        return 3
    for w in bundle.warnings:
        print(f"benchstab: warning: {w}", file=sys.stderr)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
