"""Batch command line front end.

Exit codes: 0 on success, 1 on usage or input errors, 2 on numerical
failures. All outputs are deterministic given the inputs and seed; volatile
diagnostics (wall time) go to stdout only.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import DataError, MapfiltError, NumericError
from .pipeline import PipelineConfig, default_lag_budget, run_privatize
from .privacy import nfd, rum, _correlation_tables
from .qwi import ingest_qwi
from .series import (
    MultiSeries,
    read_series_csv,
    sample_acvf,
    write_series_csv,
)
from .simulate import (
    VarArchModel,
    Varma11Model,
    VarModel,
    load_model_file,
    simulate_var,
    simulate_var_arch,
    simulate_varma11,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are 1
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate(args) -> int:
    model = load_model_file(args.model)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for rep in range(args.reps):
        seed = args.seed + rep
        if isinstance(model, VarModel):
            series = simulate_var(model, args.T, seed, args.burnin)
        elif isinstance(model, Varma11Model):
            series = simulate_varma11(model, args.T, seed, args.burnin)
        elif isinstance(model, VarArchModel):
            x, z = simulate_var_arch(model.a, model.arch, args.T, seed, args.burnin)
            series = MultiSeries(
                np.hstack([x.values, z.values]), x.names + z.names
            )
        else:
            raise DataError(f"cannot simulate {type(model).__name__}")
        name = f"series_{rep:04d}.csv"
        write_series_csv(out_dir / name, series)
        entries.append({"file": name, "seed": seed})
    manifest = {
        "model": str(args.model),
        "T": args.T,
        "reps": args.reps,
        "seed": args.seed,
        "burnin": args.burnin,
        "series": entries,
    }
    _write_json(out_dir / "manifest.json", manifest)
    print(f"wrote {args.reps} series and manifest.json to {out_dir}")
    return 0


def _load_config(args) -> PipelineConfig:
    doc = {}
    if args.config:
        with open(args.config) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{args.config}: invalid JSON: {exc}") from exc
    for key, value in (
        ("nx", args.nx),
        ("cepstral_order", args.r),
        ("grid_size", args.grid_size),
        ("seed", args.seed),
    ):
        if value is not None:
            doc[key] = value
    if args.restarts is not None:
        doc.setdefault("optimizer", {})["restarts"] = args.restarts
    for key, value in (("d", args.d), ("D", args.D), ("s", args.s)):
        if value is not None:
            doc.setdefault("diff", {})[key] = value
    return PipelineConfig.from_dict(doc)


def _cmd_privatize(args) -> int:
    config = _load_config(args)
    series, labels = read_series_csv(args.input)
    try:
        result = run_privatize(series, config)
    except MapfiltError as exc:
        raise type(exc)(f"privatize pipeline: {exc}") from exc
    write_series_csv(args.out, result.y, labels)
    report = dict(result.report)
    runtime = report.pop("runtime_seconds", None)
    report["config"] = config.to_dict()
    report_path = args.report or str(args.out) + ".report.json"
    _write_json(report_path, report)
    print(
        f"privacy={report['privacy']:.4f} rum={report['rum']:.4f} "
        f"halfwidth={report['filter_halfwidth']} runtime={runtime:.2f}s"
    )
    print(f"wrote {args.out} and {report_path}")
    return 0


def _cmd_qwi_ingest(args) -> int:
    series, labels = ingest_qwi(args.input, args.county, args.measure)
    write_series_csv(args.out, series, labels)
    print(f"wrote {series.T}x{series.n} series to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    x, _ = read_series_csv(args.x)
    y, _ = read_series_csv(args.y)
    if x.values.shape != y.values.shape:
        raise DataError(
            f"series shapes differ: {x.values.shape} vs {y.values.shape}"
        )
    maxlag = args.maxlag or min(x.T - 1, default_lag_budget(x.T))
    metrics = {
        "rum": rum(x, y, maxlag),
        "nfd": nfd(sample_acvf(x, maxlag), sample_acvf(y, maxlag)),
        "maxlag": maxlag,
    }
    prefix = args.out_prefix
    _write_json(f"{prefix}.metrics.json", metrics)
    corr_lag = min(maxlag, x.T - 1)
    acf_x, ccf_x = _correlation_tables(x, corr_lag)
    acf_y, ccf_y = _correlation_tables(y, corr_lag)
    with open(f"{prefix}.acf.csv", "w", newline="\n") as fh:
        fh.write("channel,lag,x,y\n")
        for name in x.names:
            for h in range(corr_lag + 1):
                fh.write(f"{name},{h},{acf_x[name][h]!r},{acf_y[name][h]!r}\n")
    with open(f"{prefix}.ccf.csv", "w", newline="\n") as fh:
        fh.write("pair,lag,x,y\n")
        for key in ccf_x:
            for i, h in enumerate(range(-corr_lag, corr_lag + 1)):
                fh.write(f"{key},{h},{ccf_x[key][i]!r},{ccf_y[key][i]!r}\n")
    print(f"rum={metrics['rum']:.4f} nfd={metrics['nfd']:.4f}")
    print(f"wrote {prefix}.metrics.json, {prefix}.acf.csv, {prefix}.ccf.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mapfilt",
        description=(
            "Privatize multivariate time series with spectrum-preserving "
            "all-pass matrix filters."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate Monte Carlo series from a model file")
    p.add_argument("--model", required=True, help="model JSON (ar/ma/sigma/arch)")
    p.add_argument("--T", type=int, required=True, help="series length")
    p.add_argument("--reps", type=int, default=1, help="number of replicates")
    p.add_argument("--seed", type=int, default=0, help="base seed; rep i uses seed+i")
    p.add_argument("--burnin", type=int, default=500)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("privatize", help="run the full privatization pipeline")
    p.add_argument("--input", required=True, help="joint series CSV (sensitive channels first)")
    p.add_argument("--config", help="pipeline config JSON; flags override")
    p.add_argument("--nx", type=int, help="number of leading sensitive channels")
    p.add_argument("--r", type=int, help="cepstral truncation order")
    p.add_argument("--grid-size", type=int, help="frequency grid size (even)")
    p.add_argument("--restarts", type=int, help="optimizer restarts (0 = identity filter)")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--d", type=int, help="nonseasonal differencing order")
    p.add_argument("--D", type=int, help="seasonal differencing order")
    p.add_argument("--s", type=int, help="seasonal period")
    p.add_argument("--out", required=True, help="privatized series CSV")
    p.add_argument("--report", help="report JSON path (default <out>.report.json)")
    p.set_defaults(func=_cmd_privatize)

    p = sub.add_parser("qwi-ingest", help="pivot a QWI explorer export to a series CSV")
    p.add_argument("--input", required=True, help="long-format export CSV")
    p.add_argument(
        "--county",
        action="append",
        required=True,
        help="county name (repeat; order defines the columns)",
    )
    p.add_argument("--measure", required=True, help="measure column name")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_qwi_ingest)

    p = sub.add_parser("evaluate", help="utility metrics and ACF/CCF tables for two series")
    p.add_argument("--x", required=True, help="original series CSV")
    p.add_argument("--y", required=True, help="released series CSV")
    p.add_argument("--maxlag", type=int, help="lag budget (default from length)")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"mapfilt {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"mapfilt {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
