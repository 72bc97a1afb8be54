"""Command-line interface: ``bivrbs {fit,gof,dist,simulate}``.

JSON is the canonical output format; floats are written with full
round-trip precision.  CSV output is a flat convenience view.

Exit status: 0 success, 2 bad input or configuration, 3 estimation
failure, 4 numerical failure.
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

from . import brbs
from .brbs import PARAM_NAMES, BrbsParams
from .estimate import KX_DEFAULT_REPS, BivariateSample, attach_intervals, fit_ml, fit_mm
from .exceptions import (
    BrbsError,
    ConvergenceError,
    DegenerateSampleError,
    DomainError,
    IntervalError,
    NumericalError,
    ParseError,
    SampleTooSmallError,
)
from .gof import gof_report, pp_data, qq_data, ttt_data
from .sampling import SeededStream
from .simlab import SimConfig, run_bias_mse, run_coverage

__all__ = ["main", "ingest_csv", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATION, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(BrbsError, ValueError):
    """Invalid command-line options or configuration file."""


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def ingest_csv(path) -> BivariateSample:
    """Read two comma-separated positive columns, with an optional header line.

    Raises
    ------
    ParseError
        Malformed, non-numeric or nonpositive cell; ``row`` and ``column``
        are 1-based and count the header line if present.
    SampleTooSmallError
        Fewer than two data rows.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, cells in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in cells]
        if not cells or all(c == "" for c in cells):
            continue
        if len(cells) != 2:
            raise ParseError(f"row {lineno}: expected 2 columns, found {len(cells)}", row=lineno)
        if not rows and lineno == 1 and not any(_is_number(c) for c in cells):
            continue
        vals = []
        for col, c in enumerate(cells, start=1):
            try:
                v = float(c)
            except ValueError:
                raise ParseError(f"row {lineno}, column {col}: not a number: {c!r}", row=lineno, column=col) from None
            if not (math.isfinite(v) and v > 0):
                raise ParseError(f"row {lineno}, column {col}: value must be positive, got {c}", row=lineno, column=col)
            vals.append(v)
        rows.append(vals)
    if len(rows) < 2:
        raise SampleTooSmallError(f"{path}: need at least 2 data rows, found {len(rows)}")
    return BivariateSample.from_rows(rows)


def _floats(text: str, name: str, count=None) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"--{name}: expected {count} values, got {len(vals)}")
    return vals


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".10g")
    return "" if v is None else str(v)


def _write(args, payload: dict, csv_rows: list[dict]):
    if args.format == "json":
        text = json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        fields = []
        for r in csv_rows:
            fields.extend(k for k in r if k not in fields)
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in csv_rows:
            w.writerow({k: _fmt(r.get(k)) for k in fields})
        text = buf.getvalue()
    if args.output:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot write {args.output}: {exc}") from exc
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _fits(sample, args):
    levels = _floats(args.level, "level")
    methods = ["MM", "ML"] if args.method == "both" else [args.method.upper()]
    out = []
    for i, method in enumerate(methods):
        fit = fit_mm(sample) if method == "MM" else fit_ml(sample)
        stream = SeededStream(args.seed, i)
        out.append(attach_intervals(fit, levels, args.kx_reps, stream))
    return out


def cmd_fit(args) -> int:
    sample = ingest_csv(args.input)
    fits = _fits(sample, args)
    rows = []
    for f in fits:
        for name in PARAM_NAMES:
            rows.append({"method": f.method, "parameter": name, "estimate": f.estimate(name),
                         "std_error": f.std_errors.get(name), "technique": "", "level": None,
                         "lower": None, "upper": None})
        for iv in f.intervals:
            rows.append({"method": f.method, "parameter": iv.parameter, "estimate": f.estimate(iv.parameter),
                         "std_error": f.std_errors.get(iv.parameter), "technique": iv.technique,
                         "level": iv.level, "lower": iv.lower, "upper": iv.upper})
        rows.append({"method": f.method, "parameter": "loglik", "estimate": f.loglik})
    _write(args, {"n": sample.n, "fits": [f.to_dict() for f in fits]}, rows)
    return EXIT_OK


def cmd_gof(args) -> int:
    sample = ingest_csv(args.input)
    fit = fit_ml(sample) if args.method == "ml" else fit_mm(sample)
    rep = gof_report(fit.estimates, sample, args.band_level)
    margins = {}
    for k, m in ((1, fit.estimates.margin1), (2, fit.estimates.margin2)):
        pts, bands = pp_data(m, sample.column(k), args.band_level)
        margins[f"t{k}"] = {
            "pp_points": pts,
            "pp_bands": bands,
            "qq_points": qq_data(m, sample.column(k)),
            "ttt": ttt_data(sample.column(k)),
        }
    payload = {"method": fit.method, "estimates": dict(zip(PARAM_NAMES, fit.estimates.as_tuple())),
               "mahalanobis": rep.to_dict(), "margins": margins}
    rows = [{"row": i + 1, "distance": float(d), "transformed": float(z)}
            for i, (d, z) in enumerate(zip(rep.distances, rep.transformed))]
    rows.append({"row": "ks", "distance": rep.ks_statistic, "transformed": rep.ks_pvalue})
    _write(args, payload, rows)
    return EXIT_OK


_POINT_FUNCS = {
    "pdf": brbs.brbs_pdf,
    "cdf": brbs.brbs_cdf,
    "sf": brbs.brbs_sf,
    "hr": brbs.brbs_hr,
    "equilibrium": brbs.equilibrium_pdf,
    "ldf": brbs.ldf,
}


def _grid_axis(spec: str, name: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--{name}: expected lo:hi:count, got {spec!r}")
    lo, hi = float(parts[0]), float(parts[1])
    k = int(parts[2])
    if not (0 < lo < hi) or k < 2:
        raise ConfigError(f"--{name}: need 0 < lo < hi and count >= 2")
    return np.geomspace(lo, hi, k)


def cmd_dist(args) -> int:
    mu = _floats(args.mu, "mu", 2)
    delta = _floats(args.delta, "delta", 2)
    params = BrbsParams.from_values(mu[0], mu[1], delta[0], delta[1], args.rho)
    funcs = [name for name in _POINT_FUNCS if getattr(args, name)]
    points = [tuple(_floats(a, "at", 2)) for a in (args.at or [])]
    if args.grid1 or args.grid2:
        if not (args.grid1 and args.grid2):
            raise ConfigError("--grid1 and --grid2 must be given together")
        g1, g2 = _grid_axis(args.grid1, "grid1"), _grid_axis(args.grid2, "grid2")
        points.extend((float(a), float(b)) for a in g1 for b in g2)
    if funcs and not points:
        raise ConfigError("point functions need --at or --grid1/--grid2")
    if not funcs and not (args.mode or args.reliability):
        raise ConfigError("nothing to evaluate; pass at least one of --pdf --cdf --sf --hr --equilibrium --ldf --mode --reliability")
    rows = []
    for t1, t2 in points:
        row = {"t1": t1, "t2": t2}
        for name in funcs:
            row[name] = float(_POINT_FUNCS[name](t1, t2, params))
        rows.append(row)
    payload = {"params": dict(zip(PARAM_NAMES, params.as_tuple())), "points": rows}
    if args.mode:
        m = brbs.mode_find(params)
        h = brbs.hypothesis1_check(params)
        payload["mode"] = {"c": m.c, "t1": m.t1, "t2": m.t2, "gradient_norm": m.gradient_norm,
                           "hypothesis1_holds": m.hypothesis1_holds,
                           "hypothesis1": {"condition1": h.condition1, "condition2": h.condition2,
                                           "condition2_alpha2": h.condition2_alpha2}}
    if args.reliability:
        payload["reliability"] = brbs.reliability(params)
    csv_rows = list(rows)
    if args.mode:
        csv_rows.append({"t1": payload["mode"]["t1"], "t2": payload["mode"]["t2"], "mode_c": payload["mode"]["c"]})
    if args.reliability:
        csv_rows.append({"reliability": payload["reliability"]})
    _write(args, payload, csv_rows)
    return EXIT_OK


def _sim_config(args) -> SimConfig:
    kw = {}
    if args.config:
        try:
            kw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(kw, dict):
            raise ConfigError("config file must hold a JSON object")
    if args.n:
        kw["n_values"] = [int(v) for v in _floats(args.n, "n")]
    if args.rho:
        kw["rho_values"] = _floats(args.rho, "rho")
    if args.delta:
        kw["delta_values"] = _floats(args.delta, "delta")
    if args.mu is not None:
        kw["mu"] = args.mu
    if args.replications is not None:
        kw["replications"] = args.replications
    if args.method != "both" or "methods" not in kw:
        kw["methods"] = ["ML", "MM"] if args.method == "both" else [args.method.upper()]
    if args.level:
        kw["levels"] = _floats(args.level, "level")
    kw.setdefault("seed", args.seed)
    if args.kx_reps is not None:
        kw["kx_reps"] = args.kx_reps
    kw["workers"] = args.workers
    if args.study == "coverage":
        kw.setdefault("mu", 1.0)
        kw.setdefault("delta_values", [0.5])
        kw.setdefault("n_values", [50, 100])
        kw.setdefault("rho_values", [0.0, 0.5])
    try:
        return SimConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad simulation config: {exc}") from exc


def cmd_simulate(args) -> int:
    config = _sim_config(args)
    report = run_coverage(config) if args.study == "coverage" else run_bias_mse(config)
    payload = report.to_dict()
    if report.degraded:
        payload["warning"] = "more than 5% of fits failed in at least one cell"
    rows = []
    for c in report.cells:
        for r in c.rows():
            for tech, by_level in c.coverage.items():
                for lv, by_param in by_level.items():
                    for p, v in by_param.items():
                        r[f"cov_{tech}_{lv}_{p}"] = v
            rows.append(r)
    _write(args, payload, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common(p, level_default="0.95"):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", help="write to this file instead of stdout")
    p.add_argument("--seed", type=_u64, default=12345)
    p.add_argument("--level", default=level_default, help="comma-separated confidence levels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bivrbs", description="Bivariate Birnbaum-Saunders (mean/precision) toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a BRBS model to a two-column CSV")
    p.add_argument("input")
    p.add_argument("--method", choices=("ml", "mm", "both"), default="both")
    p.add_argument("--kx-reps", type=int, default=KX_DEFAULT_REPS)
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gof", help="goodness-of-fit diagnostics")
    p.add_argument("input")
    p.add_argument("--method", choices=("ml", "mm"), default="ml")
    p.add_argument("--band-level", type=float, default=0.95)
    _common(p)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("dist", help="evaluate distribution functions")
    p.add_argument("--mu", required=True, help="mu1,mu2")
    p.add_argument("--delta", required=True, help="delta1,delta2")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--at", action="append", help="t1,t2 (repeatable)")
    p.add_argument("--grid1", help="lo:hi:count geometric grid for t1")
    p.add_argument("--grid2", help="lo:hi:count geometric grid for t2")
    for name in _POINT_FUNCS:
        p.add_argument(f"--{name}", action="store_true")
    p.add_argument("--mode", action="store_true")
    p.add_argument("--reliability", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("simulate", help="Monte Carlo bias/MSE or coverage study")
    p.add_argument("--study", choices=("bias", "coverage"), default="bias")
    p.add_argument("--config", help="JSON file with SimConfig fields")
    p.add_argument("--n", help="comma-separated sample sizes")
    p.add_argument("--rho", help="comma-separated correlations")
    p.add_argument("--delta", help="comma-separated precisions")
    p.add_argument("--mu", type=float)
    p.add_argument("--replications", type=int)
    p.add_argument("--method", choices=("ml", "mm", "both"), default="both")
    p.add_argument("--kx-reps", type=int)
    p.add_argument("--workers", type=int, default=1)
    _common(p, level_default="")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConvergenceError, DegenerateSampleError, IntervalError) as exc:
        print(f"bivrbs: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except NumericalError as exc:
        print(f"bivrbs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParseError, ConfigError, DomainError, SampleTooSmallError) as exc:
        print(f"bivrbs: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
