"""Command-line driver.

Exit codes: 0 success, 1 runtime/numerical failure, 2 usage or input error.
Option precedence: command-line flags, then ``--config`` (``key = value``
lines), then built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from datetime import datetime, time, timedelta
from pathlib import Path

from .core import Dataset, fit_normalizer
from .errors import InputError, InvalidConfig, NumericalFailure, SparsecastError
from .forecast import EvaluationTrace, ForecastConfig, recursive_forecast, rolling_evaluate
from .ingest import ColumnMap, SyntheticSpec, generate_synthetic, load_csv, write_csv
from .metrics import format_report
from .regression import DEFAULT_ORDER
from .solvers import SolverConfig, coefficient_table, format_coefficient_table
from .svgplot import line_chart, stem_plot

log = logging.getLogger("sparsecast")

DEFAULTS = {
    "method": "blocksparse",
    "order": DEFAULT_ORDER,
    "orders_file": None,
    "k_blocks": None,
    "train_rows": 108,
    "horizon": 6,
    "train_window": "05:00-14:00",
    "test_window": "14:00-23:00",
    "out": ".",
    "mph": False,
    "exclude_self": False,
    "seed": 0,
    "no_plot": False,
    "refit_normalizer": False,
    "tolerance": 1e-6,
    "col_timestamp": "timestamp",
    "col_sensor": "sensor_id",
    "col_variable": "variable",
    "col_value": "value",
}
_BOOL_KEYS = {"mph", "exclude_self", "no_plot", "refit_normalizer"}
_INT_KEYS = {"order", "k_blocks", "train_rows", "horizon", "seed"}
_FLOAT_KEYS = {"tolerance"}


def read_key_values(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{n}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key] = value
    return out


def _coerce(key: str, value):
    if value is None or not isinstance(value, str):
        return value
    if key in _BOOL_KEYS:
        return value.lower() in ("1", "true", "yes", "on")
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    return value


def resolve_options(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from DEFAULTS."""
    file_values = {}
    if getattr(args, "config", None):
        raw = read_key_values(args.config)
        file_values = {k.replace("-", "_"): v for k, v in raw.items()}
        unknown = set(file_values) - set(DEFAULTS) - {"data", "target", "at", "spec"}
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) is None:
            try:
                setattr(args, key, _coerce(key, file_values.get(key, default)))
            except ValueError:
                raise InputError(f"bad config value for {key}: {file_values[key]!r}") from None
    for key in ("data", "target", "at", "spec"):
        if getattr(args, key, None) is None and key in file_values:
            setattr(args, key, file_values[key])
    return args


def parse_clock(text: str) -> timedelta:
    try:
        hh, mm = text.strip().split(":")
        hh, mm = int(hh), int(mm)
    except ValueError:
        raise InputError(f"bad time {text!r}, expected HH:MM") from None
    if not (0 <= hh <= 24 and 0 <= mm < 60) or (hh == 24 and mm):
        raise InputError(f"bad time {text!r}")
    return timedelta(hours=hh, minutes=mm)


def clock_index(dataset: Dataset, text: str) -> int:
    """Sample index of wall-clock ``HH:MM`` on the dataset's first day."""
    day = datetime.combine(dataset.start_time.date(), time(0), tzinfo=dataset.start_time.tzinfo)
    offset = day + parse_clock(text) - dataset.start_time
    k, rem = divmod(offset, dataset.step)
    if rem:
        raise InputError(f"{text} is not on the {dataset.step} sampling grid")
    return int(k)


def window_indices(dataset: Dataset, text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("-")
    except ValueError:
        raise InputError(f"bad window {text!r}, expected HH:MM-HH:MM") from None
    start, stop = clock_index(dataset, lo), clock_index(dataset, hi)
    if not 0 <= start < stop <= dataset.length:
        raise InputError(f"window {text} is not inside the data ({dataset.timestamp(0)} + {dataset.length} samples)")
    return start, stop


def _read_orders(args, dataset: Dataset):
    if not args.orders_file:
        return args.order
    table = read_key_values(args.orders_file)
    orders = []
    for s in dataset.series:
        value = table.get(s.label, table.get(s.sensor_id, args.order))
        try:
            orders.append(int(value))
        except ValueError:
            raise InputError(f"bad order for {s.label}: {value!r}") from None
    unknown = set(table) - {s.label for s in dataset.series} - {s.sensor_id for s in dataset.series}
    if unknown:
        raise InputError(f"orders file names unknown sensors: {', '.join(sorted(unknown))}")
    return orders


def build_config(args, dataset: Dataset, method: str | None = None) -> ForecastConfig:
    excluded = frozenset({dataset.target_index}) if args.exclude_self else frozenset()
    return ForecastConfig(
        horizon_steps=args.horizon,
        training_rows=args.train_rows,
        orders=_read_orders(args, dataset),
        solver=SolverConfig(
            max_active_blocks=args.k_blocks,
            residual_tolerance=args.tolerance,
            excluded_blocks=excluded,
        ),
        refit_normalizer_each_window=args.refit_normalizer,
        method=method or args.method,
    )


def load_dataset(args, target: str | None = None) -> Dataset:
    schema = ColumnMap(args.col_timestamp, args.col_sensor, args.col_variable, args.col_value)
    if not args.data:
        raise InputError("--data is required")
    return load_csv(args.data, schema, target=target, mph=args.mph)


def _out_dir(args, *sub) -> Path:
    path = Path(args.out, *sub)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _plot_csv(dataset: Dataset, traces: dict[str, EvaluationTrace]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(traces)
    writer.writerow(["timestamp", "actual_kmh"] + [f"{n}_kmh" for n in names])
    first = traces[names[0]]
    for j, p in enumerate(first.points):
        writer.writerow([p.timestamp.isoformat(), f"{p.actual:.6f}"] + [f"{traces[n].points[j].predicted:.6f}" for n in names])
    return buf.getvalue()


def _write_evaluation(args, dataset: Dataset, traces: dict[str, EvaluationTrace], out: Path) -> None:
    target = dataset.target.label
    for name, trace in traces.items():
        fname = "trace.csv" if len(traces) == 1 else f"trace_{name}.csv"
        (out / fname).write_text(trace.to_csv())
    reports = {name: t.errors() for name, t in traces.items()}
    md = [
        f"# Forecast errors for {target}",
        "",
        f"Test window {args.test_window}, horizon {args.horizon} steps, "
        f"{args.train_rows} training rows. NRMSE is RMSE over the range of the actual values.",
        "",
        format_report(reports, "markdown"),
    ]
    (out / "report.md").write_text("\n".join(md))
    (out / "report.csv").write_text(format_report(reports, "csv"))
    (out / "forecast_plot.csv").write_text(_plot_csv(dataset, traces))
    if not args.no_plot:
        first = next(iter(traces.values()))
        lines = {"actual": first.actuals}
        lines.update({f"predicted ({n})": t.predictions for n, t in traces.items()})
        labels = [p.timestamp.strftime("%H:%M") for p in first.points]
        (out / "forecast.svg").write_text(line_chart(lines, labels, title=f"Average speed, {target}"))


def _evaluate_target(args, dataset: Dataset, methods: list[str], out: Path) -> dict[str, EvaluationTrace]:
    train = window_indices(dataset, args.train_window)
    test = window_indices(dataset, args.test_window)
    traces = {}
    for m in methods:
        cfg = build_config(args, dataset, m)
        traces[m] = rolling_evaluate(dataset, test, cfg, normalizer_window=train)
    _write_evaluation(args, dataset, traces, out)
    for name, t in traces.items():
        r = t.errors()
        nrmse = "n/a" if r.nrmse is None else f"{r.nrmse:.2f}%"
        log.info("%s %s: MAE %.3f RMSE %.3f NRMSE %s (%d refits)", dataset.target.label, name, r.mae, r.rmse, nrmse, t.n_refits)
    return traces


def _run_evaluation(args, methods: list[str]) -> int:
    if args.all_targets:
        base = load_dataset(args)
        jobs = [(base.with_target(i), _out_dir(args, s.label.replace(os.sep, "_"))) for i, s in enumerate(base.series)]
        with ThreadPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as pool:
            futures = [pool.submit(_evaluate_target, args, ds, methods, out) for ds, out in jobs]
            for f in futures:
                f.result()
        return 0
    if not args.target:
        raise InputError("--target is required (or use --all-targets)")
    dataset = load_dataset(args, args.target)
    _evaluate_target(args, dataset, methods, _out_dir(args))
    return 0


def cmd_evaluate(args) -> int:
    return _run_evaluation(args, [args.method])


def cmd_compare(args) -> int:
    return _run_evaluation(args, ["ar", "blocksparse"])


def _origin(args, dataset: Dataset) -> int:
    if args.at:
        return clock_index(dataset, args.at)
    return window_indices(dataset, args.test_window)[0]


def cmd_forecast(args) -> int:
    if not args.target:
        raise InputError("--target is required")
    dataset = load_dataset(args, args.target)
    at = _origin(args, dataset)
    result = recursive_forecast(dataset, at, build_config(args, dataset))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestamp", "predicted_kmh", "horizon_step", "active_block_list"])
    for k, p in enumerate(result.predictions):
        writer.writerow([dataset.timestamp(at + k).isoformat(), f"{p:.6f}", k + 1, ";".join(result.active_labels)])
    (_out_dir(args) / "forecast.csv").write_text(buf.getvalue())
    return 0


def cmd_coefficients(args) -> int:
    if not args.target:
        raise InputError("--target is required")
    dataset = load_dataset(args, args.target)
    at = _origin(args, dataset)
    config = build_config(args, dataset)
    normalizer = None
    if not config.refit_normalizer_each_window:
        normalizer = fit_normalizer(dataset, window_indices(dataset, args.train_window))
    result = recursive_forecast(dataset, at, config, normalizer)
    coef = result.coefficients
    labels = [dataset.series[i].label for i in result.series_indices]
    out = _out_dir(args)
    (out / "coefficients.tsv").write_text(format_coefficient_table(coefficient_table(coef, labels)))
    if not args.no_plot:
        svg = stem_plot(
            coef.x,
            coef.layout.offsets[:-1],
            labels,
            title=f"Coefficient vector, {dataset.target.label} at {dataset.timestamp(at):%H:%M}",
        )
        (out / "coefficients.svg").write_text(svg)
    return 0


def cmd_synthesize(args) -> int:
    if not args.spec:
        raise InputError("--spec is required")
    try:
        with open(args.spec) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.spec}: {exc}") from None
    spec = SyntheticSpec.from_dict(raw)
    dataset, graph = generate_synthetic(spec, args.seed)
    out = _out_dir(args)
    write_csv(dataset, out / "synthetic.csv")
    description = {
        "seed": args.seed,
        "target": dataset.target.label,
        "sensors": [s.label for s in dataset.series],
        "dependencies": [asdict(d) for d in graph],
    }
    (out / "dependencies.json").write_text(json.dumps(description, indent=2) + "\n")
    return 0


def _add_common(p: argparse.ArgumentParser, data: bool = True) -> None:
    # defaults are None so config-file values can fill in (see resolve_options)
    p.add_argument("--config", help="key = value file with option defaults")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--seed", type=int)
    if not data:
        return
    p.add_argument("--data", help="long-format CSV: timestamp, sensor_id, [variable,] value")
    p.add_argument("--target", help="sensor id of the link to forecast")
    p.add_argument("--method", choices=["ar", "blocksparse", "mar"])
    p.add_argument("--order", type=int, help=f"lags per series (default {DEFAULT_ORDER})")
    p.add_argument("--orders-file", help="per-sensor orders as sensor = order lines")
    p.add_argument("--k-blocks", type=int, help="max active blocks (default: 20%% of blocks)")
    p.add_argument("--tolerance", type=float, help="relative residual stopping tolerance")
    p.add_argument("--train-rows", type=int, help="training rows M (default 108)")
    p.add_argument("--horizon", type=int, help="forecast horizon in steps (default 6)")
    p.add_argument("--train-window", help="HH:MM-HH:MM normalizer window (default 05:00-14:00)")
    p.add_argument("--test-window", help="HH:MM-HH:MM evaluation window (default 14:00-23:00)")
    p.add_argument("--mph", action="store_const", const=True, help="input speeds are in mph")
    p.add_argument("--exclude-self", action="store_const", const=True, help="never select the target's own block")
    p.add_argument("--refit-normalizer", action="store_const", const=True, help="refit min/max at every stride")
    p.add_argument("--no-plot", action="store_const", const=True, help="skip SVG output")
    p.add_argument("--col-timestamp")
    p.add_argument("--col-sensor")
    p.add_argument("--col-variable")
    p.add_argument("--col-value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsecast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="rolling evaluation of one method")
    _add_common(p)
    p.add_argument("--all-targets", action="store_true", help="evaluate every sensor as target")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="rolling evaluation of AR and block-sparse side by side")
    _add_common(p)
    p.add_argument("--all-targets", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("forecast", help="one recursive forecast from a given time")
    _add_common(p)
    p.add_argument("--at", help="HH:MM of the first forecast sample (default: test window start)")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("coefficients", help="dump the fitted coefficient vector")
    _add_common(p)
    p.add_argument("--at", help="HH:MM forecast origin (default: test window start)")
    p.set_defaults(func=cmd_coefficients)

    p = sub.add_parser("synthesize", help="write a synthetic dataset from a JSON spec")
    _add_common(p, data=False)
    p.add_argument("--spec", help="JSON synthetic dataset spec")
    p.set_defaults(func=cmd_synthesize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        resolve_options(args)
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (InputError, InvalidConfig) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SparsecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
