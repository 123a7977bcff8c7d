"""Loading 5-minute sensor exports and generating synthetic test datasets."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Sequence, TextIO

import numpy as np

from .core import DEFAULT_STEP, SPEED, Dataset, MeasurementSeries
from .errors import GridViolation, InvalidSpec, ParseError, TargetNotFound, TooSparse

MPH_TO_KMH = 1.609344
MAX_MISSING_FRACTION = 0.05

_PEMS_FORMAT = "%m/%d/%Y %H:%M:%S"


@dataclass(frozen=True)
class ColumnMap:
    """Names of the CSV columns. A missing variable column means all speed."""

    timestamp: str = "timestamp"
    sensor_id: str = "sensor_id"
    variable: str | None = "variable"
    value: str = "value"


def _parse_iso(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        return datetime.strptime(text, _PEMS_FORMAT)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_timestamps(raw: Sequence[str], lines: Sequence[int] | None = None) -> list[datetime]:
    """Parse a whole column: epoch seconds if every cell is numeric, else ISO-8601.

    Epoch seconds become naive UTC datetimes. ``lines`` gives the file line of
    each cell for error messages.
    """
    if lines is None:
        lines = range(2, 2 + len(raw))
    if raw and all(_is_number(t) for t in raw):
        return [
            datetime.fromtimestamp(float(t), tz=timezone.utc).replace(tzinfo=None)
            for t in raw
        ]
    out = []
    aware = None
    for line, text in zip(lines, raw):
        try:
            ts = _parse_iso(text)
        except ValueError:
            raise ParseError(line, f"unparseable timestamp {text!r}") from None
        if aware is None:
            aware = ts.tzinfo is not None
        elif aware != (ts.tzinfo is not None):
            raise ParseError(line, "mixed naive and timezone-aware timestamps")
        out.append(ts)
    return out


def _fill_gaps(values: np.ndarray) -> np.ndarray:
    # interior gaps: linear interpolation; edge gaps: nearest observation
    missing = np.isnan(values)
    if not missing.any():
        return values
    idx = np.arange(len(values))
    return np.interp(idx, idx[~missing], values[~missing])


def read_csv(
    source: str | os.PathLike | TextIO,
    schema: ColumnMap | None = None,
    target: str | None = None,
    step: timedelta = DEFAULT_STEP,
    mph: bool = False,
    max_missing: float = MAX_MISSING_FRACTION,
) -> Dataset:
    """Like :func:`load_csv` but also accepts an open text stream."""
    schema = schema or ColumnMap()
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return read_csv(fh, schema, target, step, mph, max_missing)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "empty file, header row required") from None
    header = [h.strip() for h in header]
    try:
        ts_col = header.index(schema.timestamp)
        sid_col = header.index(schema.sensor_id)
        val_col = header.index(schema.value)
    except ValueError as exc:
        raise ParseError(1, f"missing column ({exc})") from None
    var_col = header.index(schema.variable) if schema.variable in header else None

    raw_ts, keys, vals, lines = [], [], [], []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(line_no, f"expected {len(header)} fields, got {len(row)}")
        sid = row[sid_col].strip()
        if not sid:
            raise ParseError(line_no, "empty sensor id")
        var = row[var_col].strip().lower() if var_col is not None else SPEED
        text = row[val_col].strip()
        if text == "" or text.lower() in ("nan", "na", "null"):
            value = np.nan
        else:
            try:
                value = float(text)
            except ValueError:
                raise ParseError(line_no, f"bad value {text!r}") from None
            if not np.isfinite(value):
                value = np.nan
        raw_ts.append(row[ts_col])
        keys.append((sid, var or SPEED))
        vals.append(value)
        lines.append(line_no)
    if not vals:
        raise ParseError(2, "no data rows")

    stamps = parse_timestamps(raw_ts, lines)
    origin = min(stamps)
    n_samples = int((max(stamps) - origin) / step) + 1

    order: dict[tuple[str, str], np.ndarray] = {}
    for key, ts, value in zip(keys, stamps, vals):
        offset = ts - origin
        k, rem = divmod(offset, step)
        if rem:
            raise GridViolation(key[0], ts.isoformat())
        series = order.setdefault(key, np.full(n_samples, np.nan))
        if not np.isnan(series[k]):
            raise GridViolation(key[0], ts.isoformat(), "duplicate sample")
        # a present-but-empty cell still claims the slot
        series[k] = value if not np.isnan(value) else series[k]

    built = []
    for (sid, var), values in order.items():
        frac = float(np.isnan(values).mean())
        if frac > max_missing:
            raise TooSparse(sid, frac)
        values = _fill_gaps(values)
        if mph and var == SPEED:
            values = values * MPH_TO_KMH
        built.append(MeasurementSeries(sid, values, start_time=origin, step=step, variable=var))

    dataset = Dataset(tuple(built))
    if target is not None:
        try:
            dataset = dataset.with_target(dataset.index_of(target))
        except KeyError:
            raise TargetNotFound(target) from None
    return dataset


def load_csv(path, schema: ColumnMap | None = None, **kwargs) -> Dataset:
    """Load a long-format CSV (one row per sensor/variable/timestamp).

    Samples must sit on a common ``step`` grid starting at the earliest
    timestamp in the file. Missing samples are linearly interpolated; a series
    missing more than 5% of the grid raises :class:`TooSparse`.
    """
    return read_csv(path, schema, **kwargs)


def write_csv(dataset: Dataset, dest: str | os.PathLike | TextIO | None = None) -> str:
    """Serialize in the long format ``load_csv`` reads. Returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestamp", "sensor_id", "variable", "value"])
    stamps = [dataset.timestamp(t).isoformat() for t in range(dataset.length)]
    for s in dataset.series:
        for ts, v in zip(stamps, s.values):
            writer.writerow([ts, s.sensor_id, s.variable, repr(float(v))])
    text = buf.getvalue()
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    elif dest is not None:
        dest.write(text)
    return text


@dataclass(frozen=True)
class SensorSpec:
    """One synthetic series.

    Without ``source`` the series is an AR(1) process around ``mean`` with
    stationary standard deviation ``scale`` (``ar_coef=0`` gives white noise).
    With ``source`` it is ``gain * source[t - delay]`` plus Gaussian noise of
    standard deviation ``noise * std(source)``.
    """

    sensor_id: str
    source: str | None = None
    delay: int = 0
    gain: float = 1.0
    noise: float = 0.0
    mean: float = 90.0
    scale: float = 5.0
    ar_coef: float = 0.0
    variable: str = SPEED


@dataclass(frozen=True)
class SyntheticSpec:
    sensors: tuple[SensorSpec, ...]
    length: int = 288
    target: str | None = None
    start_time: datetime = datetime(2016, 1, 1)
    step: timedelta = DEFAULT_STEP

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticSpec":
        try:
            sensors = tuple(SensorSpec(**s) for s in data["sensors"])
            kwargs = {}
            if "length" in data:
                kwargs["length"] = int(data["length"])
            if "target" in data:
                kwargs["target"] = data["target"]
            if "start_time" in data:
                kwargs["start_time"] = _parse_iso(data["start_time"])
            if "step_seconds" in data:
                kwargs["step"] = timedelta(seconds=float(data["step_seconds"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"malformed synthetic spec: {exc}") from None
        return cls(sensors, **kwargs)


@dataclass(frozen=True)
class Dependency:
    sensor: str
    source: str
    delay: int
    gain: float
    noise: float


def _generation_order(sensors: Sequence[SensorSpec]) -> list[int]:
    ids = {s.sensor_id: i for i, s in enumerate(sensors)}
    if len(ids) != len(sensors):
        raise InvalidSpec("duplicate sensor ids")
    for s in sensors:
        if s.source is not None and s.source not in ids:
            raise InvalidSpec(f"{s.sensor_id}: unknown source {s.source!r}")
        if s.delay < 0:
            raise InvalidSpec(f"{s.sensor_id}: negative delay")
    order: list[int] = []
    state = [0] * len(sensors)  # 0 new, 1 visiting, 2 done

    def visit(i, path):
        if state[i] == 2:
            return
        if state[i] == 1:
            cycle = " -> ".join(sensors[j].sensor_id for j in path + [i])
            raise InvalidSpec(f"cyclic dependency: {cycle}")
        state[i] = 1
        src = sensors[i].source
        if src is not None:
            visit(ids[src], path + [i])
        state[i] = 2
        order.append(i)

    for i in range(len(sensors)):
        visit(i, [])
    return order


def generate_synthetic(spec: SyntheticSpec, seed: int = 0) -> tuple[Dataset, list[Dependency]]:
    """Deterministic dataset from ``spec`` and ``seed``, plus its dependency graph."""
    sensors = spec.sensors
    if not sensors:
        raise InvalidSpec("no sensors")
    if spec.length < 1:
        raise InvalidSpec("length must be >= 1")
    order = _generation_order(sensors)
    pad = sum(s.delay for s in sensors) + 50
    total = spec.length + pad

    rng = np.random.default_rng(seed)
    shocks = [rng.standard_normal(total) for _ in sensors]
    ids = {s.sensor_id: i for i, s in enumerate(sensors)}
    out: list[np.ndarray | None] = [None] * len(sensors)
    for i in order:
        s = sensors[i]
        z = shocks[i]
        if s.source is None:
            if not -1 < s.ar_coef < 1:
                raise InvalidSpec(f"{s.sensor_id}: ar_coef must lie in (-1, 1)")
            dev = np.empty(total)
            dev[0] = s.scale * z[0]
            innov = s.scale * np.sqrt(1 - s.ar_coef**2)
            for t in range(1, total):
                dev[t] = s.ar_coef * dev[t - 1] + innov * z[t]
            out[i] = s.mean + dev
        else:
            src = out[ids[s.source]]
            shifted = np.empty(total)
            shifted[s.delay :] = src[: total - s.delay]
            shifted[: s.delay] = src[0]
            out[i] = s.gain * shifted + s.noise * float(np.std(src)) * z

    start = total - spec.length
    dataset = Dataset(
        tuple(
            MeasurementSeries(s.sensor_id, out[i][start:], spec.start_time, spec.step, s.variable)
            for i, s in enumerate(sensors)
        )
    )
    if spec.target is not None:
        try:
            dataset = dataset.with_target(dataset.index_of(spec.target))
        except KeyError:
            raise InvalidSpec(f"target {spec.target!r} is not a sensor") from None
    graph = [
        Dependency(s.sensor_id, s.source, s.delay, s.gain, s.noise)
        for s in sensors
        if s.source is not None
    ]
    return dataset, graph
