"""Command-line interface.

Commands
--------
estimate   plug-in index, variance and normal interval from a count CSV
catalog    Hoelder classification table over an (alpha, gamma) grid
validate   moderate-deviation scale check on an n grid
simulate   per-replicate plug-in estimates
rate       empirical moderate-deviation rate curve

Exit status: 0 success, 1 bad input or config, 2 scale condition failed,
3 degenerate variance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .estimation import DEGENERATE_MESSAGE, EmpiricalSample, estimate
from .indices import IndexFamily, holder_class, in_classification_regime
from .mdp import MdpContext, ScaleConditionError, validate_scale
from .montecarlo import ExperimentConfig, format_float, run_experiment, simulate_plugin

EXIT_INPUT = 1
EXIT_SCALE = 2
EXIT_DEGENERATE = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


# -- serialization ----------------------------------------------------------


def _json_value(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v) if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    return _json_value(obj) + "\n"


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return "" if v is None else v


def _table(columns, rows, fmt) -> str:
    if fmt == "json":
        return dumps([dict(zip(columns, row)) for row in rows])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


# -- input ------------------------------------------------------------------


def read_counts_csv(path) -> tuple[EmpiricalSample, list[str]]:
    """Parse ``label,count`` rows; a non-numeric first row is a header."""
    labels: list[str] = []
    counts: list[int] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise CliError(f"{path}: line {lineno}: expected 'label,count', got {len(row)} fields")
            label, raw = row[0].strip(), row[1].strip()
            try:
                c = int(raw)
            except ValueError:
                if lineno == 1:
                    continue
                raise CliError(f"{path}: line {lineno}: count {raw!r} is not an integer") from None
            if c < 0:
                raise CliError(f"{path}: line {lineno}: negative count {c}")
            if label in labels:
                raise CliError(f"{path}: line {lineno}: duplicate label {label!r}")
            labels.append(label)
            counts.append(c)
    n = sum(counts)
    if n == 0:
        raise CliError(f"{path}: sample size is zero (no positive counts)")
    return EmpiricalSample(n, {i + 1: c for i, c in enumerate(counts)}), labels


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# -- commands ---------------------------------------------------------------


def cmd_estimate(args) -> int:
    sample, _ = read_counts_csv(args.counts)
    try:
        family = IndexFamily(args.alpha, args.gamma, args.transform)
        if not 0 < args.level < 1:
            raise ValueError(f"level must lie in (0, 1), got {args.level}")
        report = estimate(sample, family, args.level)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    record = report.as_dict()
    if report.confidence_interval is None:
        record["level"] = args.level
    if args.format == "csv":
        text = _table(list(record), [list(record.values())], "csv")
    else:
        text = dumps(record)
    _emit(text, args.out)
    if report.confidence_interval is None:
        raise CliError(DEGENERATE_MESSAGE, EXIT_DEGENERATE)
    return 0


def cmd_catalog(args) -> int:
    rows = []
    for a in args.alpha:
        for c in args.gamma:
            if a > 0 and c >= 0 and in_classification_regime(a, c):
                hc = holder_class(IndexFamily(a, c))
                rows.append([a, c, hc.beta, hc.K, hc.M])
            else:
                rows.append([a, c, "unclassified", None, None])
    _emit(_table(["alpha", "gamma", "beta", "K", "M"], rows, args.format), args.out)
    return 0


def _load(args, command) -> RunConfig:
    try:
        cfg = load_config(args.config, command)
    except OSError as exc:
        raise CliError(f"cannot read config {args.config}: {exc.strerror}") from None
    except ConfigError as exc:
        raise CliError(f"config error: {exc}") from None
    if args.seed is not None:
        cfg.master_seed = args.seed
    if command != "validate" and cfg.master_seed is None:
        raise CliError("config error: config: missing required key 'master_seed' (or pass --seed)")
    return cfg


def _checked_context(cfg: RunConfig):
    ctx = MdpContext(cfg.family, cfg.source, cfg.scale, tol=cfg.tol)
    try:
        report = validate_scale(ctx, cfg.n_grid)
    except ScaleConditionError as exc:
        raise CliError(str(exc), EXIT_SCALE) from None
    return ctx, report


def _echo(cfg: RunConfig, ctx: MdpContext, args):
    resolved = {
        "command": cfg.command,
        "distribution": repr(cfg.source),
        "index": cfg.family.label(),
        "scale": cfg.scale.describe(),
        "beta": ctx.beta,
        "n_grid": cfg.n_grid,
        "b_n": [cfg.scale(n) for n in cfg.n_grid],
        "sigma_n": [ctx.sigma(n) for n in cfg.n_grid],
        "theta_n": [ctx.theta(n) for n in cfg.n_grid],
        "r_grid": cfg.r_grid,
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "tol": cfg.tol,
        "threads": args.threads,
    }
    sys.stderr.write("# resolved config: " + dumps(resolved))


def cmd_validate(args) -> int:
    cfg = _load(args, "validate")
    ctx, report = _checked_context(cfg)
    _emit(_table(["n", "b_n", "sigma_n", "ratio"], [list(r) for r in report.rows], args.format), args.out)
    sys.stderr.write(report.message() + "\n")
    return 0 if report.ok else EXIT_SCALE


def cmd_simulate(args) -> int:
    cfg = _load(args, "simulate")
    ctx, report = _checked_context(cfg)
    if not report.ok:
        raise CliError(report.message(), EXIT_SCALE)
    _echo(cfg, ctx, args)
    rows = []
    for k, n in enumerate(cfg.n_grid):
        est = simulate_plugin(ctx.dist(n), cfg.family, n, cfg.replicates, cfg.master_seed, k, args.threads)
        z = math.sqrt(n) * (est - ctx.theta(n)) / ctx.sigma(n)
        b = cfg.scale(n)
        for j in range(cfg.replicates):
            rows.append([n, j, float(est[j]), float(z[j]), float(z[j] / b)])
    _emit(_table(["n", "replicate", "theta_hat", "z", "scaled"], rows, args.format), args.out)
    return 0


def cmd_rate(args) -> int:
    cfg = _load(args, "rate")
    ctx, report = _checked_context(cfg)
    if not report.ok:
        raise CliError(report.message(), EXIT_SCALE)
    _echo(cfg, ctx, args)
    try:
        exp = ExperimentConfig(
            cfg.source, cfg.family, cfg.n_grid, cfg.replicates, cfg.r_grid, cfg.scale, cfg.master_seed, cfg.tol, args.threads
        )
    except ValueError as exc:
        raise CliError(f"config error: {exc}") from None
    curve = run_experiment(exp, check_scale=False)
    if args.format == "json":
        cols = list(curve.COLUMNS)
        rows = [[r.n, r.b_n, r.r, r.p_hat, r.L_hat, r.se, int(r.censored)] for r in curve.rows]
        text = _table(cols, rows, "json")
    else:
        text = curve.to_csv()
    _emit(text, args.out)
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for replicates")

    parser = argparse.ArgumentParser(prog="diversity-mdp", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="plug-in estimate from a count CSV")
    p.add_argument("counts", help="CSV of label,count rows (header optional)")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--transform", default="none", choices=["none", "tsallis", "renyi", "hill"])
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("catalog", parents=[common], help="Hoelder classification table")
    p.add_argument("--alpha", type=_float_list, default=[1.0, 1.5, 2.0, 3.0])
    p.add_argument("--gamma", type=_float_list, default=[0.0, 1.0, 1.5, 2.0])
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_catalog)

    for name, func, help_ in (
        ("validate", cmd_validate, "check the scale condition on the n grid"),
        ("simulate", cmd_simulate, "per-replicate plug-in estimates"),
        ("rate", cmd_rate, "empirical rate curve"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("config", help="YAML or JSON run config")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
