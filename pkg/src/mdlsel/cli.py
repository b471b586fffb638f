"""Command-line interface.

Exit codes: 0 success, 2 bad input or config, 3 degenerate sample, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from mdlsel import __version__, codes, harness, selection
from mdlsel.codes import Criterion, DegenerateSampleError
from mdlsel.harness import ConfigError, ExperimentConfig
from mdlsel.models import Family, as_sample

EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4

ERROR_CURVE_COLUMNS = ["criterion", "n", "mean", "pi", "err_p_gen", "err_g_gen", "err_mix", "bias", "ties", "reps"]
ERROR_COUNT_COLUMNS = ["criterion", "mean", "n", "pi", "reps", "reps_p", "reps_g", "errors_p", "errors_g",
                       "ties_p", "ties_g", "degenerate", "fallback"]
BASELINE_COLUMNS = ["criterion", "mean", "n", "bl_err_p_gen", "bl_err_g_gen", "bl_err_mix"]
CALIBRATION_COLUMNS = ["criterion", "mean", "n", "bin", "lower", "upper", "count", "poisson_count",
                       "freq", "mean_assessed"]
REGRET_COLUMNS = ["model", "generating", "mu", "n", "reps", "mean_regret", "stderr"]
SLOPE_COLUMNS = ["model", "generating", "mu", "slope", "intercept", "predicted_slope"]


class UsageError(Exception):
    pass


def fmt(value) -> str:
    """Round-trip, locale-free text for a CSV cell; censored/undefined values are empty."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_data(text: str) -> list[int]:
    try:
        return as_sample(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise UsageError(f"--data must be comma-separated nonnegative integers ({exc})") from None


def parse_int_list(text: str) -> list[int]:
    """``4,8,16`` or ranges such as ``4-30``."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if "-" in tok[1:]:
            lo, hi = tok.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif tok:
            out.append(int(tok))
    return out


def parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _criterion(args) -> Criterion:
    try:
        return Criterion.parse(args.criterion, mu_star=args.mu_star)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# codelength / select
# --------------------------------------------------------------------------

def cmd_codelength(args) -> int:
    criterion = _criterion(args)
    family = Family.parse(args.family)
    data = parse_data(args.data)
    if criterion.kind == codes.KNOWN_MU and args.mu is None:
        raise UsageError("known-mu needs --mu")
    report = codes.codelength(criterion, family, data, args.mu)
    try:
        regret = fmt(codes.regret_of(family, report, data))
    except DegenerateSampleError:
        regret = "undefined"
    rows = [
        ("family", family.value),
        ("criterion", criterion.label),
        ("total_nats", fmt(report.total)),
        ("model_dependent_nats", fmt(report.model_dependent)),
        ("conditioning", str(report.conditioning)),
        ("hyper_code_length_nats", fmt(report.hyper_code_length)),
        ("startup_length_nats", fmt(report.startup_length)),
        ("regret_nats", regret),
        ("degenerate", str(report.degenerate).lower()),
    ]
    if args.bits:
        rows.insert(3, ("total_bits", fmt(report.total / math.log(2.0))))
    for key, value in rows:
        print(f"{key}: {value}")
    return 0


def cmd_select(args) -> int:
    criterion = _criterion(args)
    data = parse_data(args.data)
    if criterion.kind == codes.KNOWN_MU and args.mu is None:
        raise UsageError("known-mu needs --mu")
    mu = args.mu if criterion.kind == codes.KNOWN_MU else None
    result = selection.evaluate(criterion, data, mu)
    print(f"criterion: {criterion.label}")
    print(f"delta_nats: {fmt(result.delta_nats)}")
    print(f"chosen: {result.chosen}")
    print(f"posterior_poisson: {fmt(result.posterior_poisson)}")
    print(f"degenerate: {str(result.degenerate).lower()}")
    return 0


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------

def build_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    if data.get("experiment", args.experiment) != args.experiment:
        raise UsageError(f"config is for experiment {data['experiment']!r}, not {args.experiment!r}")
    data["experiment"] = args.experiment
    cfg = ExperimentConfig.from_dict(data)
    overrides = {
        "means": args.means and parse_float_list(args.means),
        "n_values": args.n_values and parse_int_list(args.n_values),
        "replicates": args.replicates,
        "poisson_prior": args.pi,
        "criteria": args.criteria and [c.strip() for c in args.criteria.split(",") if c.strip()],
        "master_seed": args.seed,
        "calibration_bins": args.bins,
        "model_family": args.model_family,
        "generating_family": args.generating_family,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg.validate()


def write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def error_tables(cfg: ExperimentConfig, workers: int | None) -> dict[str, tuple[list[str], list[list]]]:
    points = harness.run_error_experiment(cfg, workers)
    curve = [[p.criterion, p.n, p.mean, p.pi, p.log10_error_poisson_generated,
              p.log10_error_geometric_generated, p.log10_error_mixture, p.bias, p.ties, p.reps]
             for p in points]
    counts = [[p.criterion, p.mean, p.n, p.pi, p.reps, p.reps_p, p.reps_g, p.errors_p, p.errors_g,
               p.ties_p, p.ties_g, p.degenerate, p.fallback] for p in points]
    base = [[r[c] for c in BASELINE_COLUMNS] for r in harness.baseline_subtracted(points)]
    return {
        "error_curve.csv": (ERROR_CURVE_COLUMNS, curve),
        "error_counts.csv": (ERROR_COUNT_COLUMNS, counts),
        "error_baseline.csv": (BASELINE_COLUMNS, base),
    }


def calibration_tables(cfg: ExperimentConfig, workers: int | None):
    bins = harness.run_calibration_experiment(cfg, workers)
    rows = [[b.criterion, b.mean, b.n, b.index, b.lower, b.upper, b.count, b.poisson_count,
             b.empirical_poisson_frequency, b.mean_assessed_probability] for b in bins]
    return {"calibration.csv": (CALIBRATION_COLUMNS, rows)}


def regret_tables(cfg: ExperimentConfig, workers: int | None):
    per_n, slopes = [], []
    for mu in cfg.means:
        r = harness.run_regret_slope_experiment(cfg.model_family, cfg.generating_family, mu,
                                                cfg.n_values, cfg.replicates, cfg.master_seed, workers)
        per_n += [[r.model_family, r.generating_family, r.mu, p.n, r.replicates, p.mean_regret, p.stderr]
                  for p in r.points]
        slopes.append([r.model_family, r.generating_family, r.mu, r.slope, r.intercept, r.predicted_slope])
    return {"regret.csv": (REGRET_COLUMNS, per_n), "regret_slope.csv": (SLOPE_COLUMNS, slopes)}


TABLE_BUILDERS = {
    harness.ERROR: error_tables,
    harness.CALIBRATION: calibration_tables,
    harness.REGRET_SLOPE: regret_tables,
}

PLOT_SCRIPTS = {
    harness.ERROR: '''\
import csv, collections
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("error_curve.csv")))
fig, axes = plt.subplots(1, 3, figsize=(15, 4))
for ax, col in zip(axes, ("err_p_gen", "err_g_gen", "bias")):
    series = collections.defaultdict(list)
    for r in rows:
        if r[col]:
            series[r["criterion"]].append((int(r["n"]), float(r[col])))
    for name, pts in series.items():
        ax.plot(*zip(*pts), label=name)
    ax.set_xlabel("n"); ax.set_title(col)
axes[0].legend(fontsize="small")
fig.savefig("error_curve.png", dpi=120)
''',
    harness.CALIBRATION: '''\
import csv, collections
import matplotlib.pyplot as plt

series = collections.defaultdict(list)
for r in csv.DictReader(open("calibration.csv")):
    if r["freq"]:
        mid = 0.5 * (float(r["lower"]) + float(r["upper"]))
        series[r["criterion"]].append((mid, float(r["freq"])))
fig, ax = plt.subplots(figsize=(6, 6))
ax.plot([0, 1], [0, 1], "k:", lw=1)
for name, pts in series.items():
    ax.plot(*zip(*pts), label=name)
ax.set_xlabel("assessed P(Poisson)"); ax.set_ylabel("observed frequency of Poisson")
ax.legend(fontsize="small")
fig.savefig("calibration.png", dpi=120)
''',
    harness.REGRET_SLOPE: '''\
import csv, math
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("regret.csv")))
fig, ax = plt.subplots()
ax.errorbar([math.log(int(r["n"])) for r in rows], [float(r["mean_regret"]) for r in rows],
            yerr=[float(r["stderr"]) for r in rows], marker="o")
ax.set_xlabel("ln n"); ax.set_ylabel("mean plug-in regret (nats)")
fig.savefig("regret.png", dpi=120)
''',
}


def cmd_experiment(args) -> int:
    cfg = build_config(args)
    workers = args.workers
    started = datetime.now(timezone.utc).isoformat()
    tables = TABLE_BUILDERS[cfg.experiment](cfg, workers)
    finished = datetime.now(timezone.utc).isoformat()
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, (columns, rows) in tables.items():
            write_csv(out / name, columns, rows)
        outputs = {name: str(out / name) for name in tables}
        if args.plot_script:
            script = out / f"plot_{cfg.experiment.replace('-', '_')}.py"
            script.write_text(PLOT_SCRIPTS[cfg.experiment])
            outputs["plot_script"] = str(script)
        manifest = {
            "tool": "mdlsel",
            "version": __version__,
            "experiment": cfg.experiment,
            "config": cfg.to_dict(),
            "master_seed": cfg.master_seed,
            "tie_policy": selection.TIE_POLICY,
            "bayes_approx_degenerate_policy": "score-with-bayes-exact",
            "started_at": started,
            "finished_at": finished,
            "outputs": outputs,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write outputs to {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in outputs.values():
        print(path)
    print(out / "manifest.json")
    return 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdlsel", description="MDL model selection: Poisson vs geometric.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--criterion", required=True,
                       help="known-mu, bic, anml (with --mu-star) or anml-<mu*>, anml-two-part, "
                            "plug-in, bayes-exact, bayes-approx")
        p.add_argument("--data", required=True, help="comma-separated nonnegative integers")
        p.add_argument("--mu", type=float, help="true mean, for known-mu")
        p.add_argument("--mu-star", type=float, help="upper end of the restricted range, for anml")

    p = sub.add_parser("codelength", help="codelength of a sample under one family")
    p.add_argument("--family", required=True, choices=[f.value for f in Family])
    add_common(p)
    p.add_argument("--bits", action="store_true", help="also print the total in bits")
    p.set_defaults(func=cmd_codelength)

    p = sub.add_parser("select", help="select a family for a sample")
    add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment and write CSV tables")
    p.add_argument("experiment", choices=harness.EXPERIMENTS)
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--means", help="comma-separated means")
    p.add_argument("--n-values", help="sample sizes, e.g. 4-30 or 16,32,64")
    p.add_argument("--replicates", type=int)
    p.add_argument("--pi", type=float, help="probability that a replicate is Poisson-generated")
    p.add_argument("--criteria", help="comma-separated criterion labels")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--bins", type=int, help="calibration bins")
    p.add_argument("--model-family", choices=[f.value for f in Family])
    p.add_argument("--generating-family", choices=[f.value for f in Family])
    p.add_argument("--workers", type=int, help=f"worker processes (default ${harness.WORKERS_ENV} or 1)")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--plot-script", action="store_true", help="also write a matplotlib script for the tables")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print("error: invalid experiment config:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateSampleError as exc:
        print(f"error: degenerate sample: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
