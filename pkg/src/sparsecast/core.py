"""Time-series containers and min-max normalization.

All algorithms work on integer sample indices; timestamps are carried along
for reporting only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from typing import Sequence

import numpy as np

from .errors import EmptyWindow, IndexOutOfRange, InputError, SeriesCountMismatch

SPEED = "speed"
FLOW = "flow"

DEFAULT_STEP = timedelta(seconds=300)


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise InputError("series values must be one-dimensional")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MeasurementSeries:
    """One sensor/variable stream on a uniform grid.

    Sample ``t`` sits at ``start_time + t * step``. ``variable`` is ``"speed"``,
    ``"flow"`` or any other free-form label.
    """

    sensor_id: str
    values: np.ndarray
    start_time: datetime = datetime(1970, 1, 1)
    step: timedelta = DEFAULT_STEP
    variable: str = SPEED

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if not np.all(np.isfinite(self.values)):
            raise InputError(f"series {self.sensor_id} contains non-finite values")
        if self.step <= timedelta(0):
            raise InputError("step must be positive")

    def __len__(self):
        return len(self.values)

    @property
    def label(self) -> str:
        """Sensor id, suffixed with the variable name for non-speed streams."""
        if self.variable == SPEED:
            return self.sensor_id
        return f"{self.sensor_id}:{self.variable}"

    def timestamp(self, t: int) -> datetime:
        return self.start_time + t * self.step


@dataclass(frozen=True)
class Dataset:
    """P aligned series plus the index of the series to forecast."""

    series: tuple[MeasurementSeries, ...]
    target_index: int = 0
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        series = tuple(self.series)
        object.__setattr__(self, "series", series)
        if not series:
            raise InputError("a dataset needs at least one series")
        if not 0 <= self.target_index < len(series):
            raise IndexOutOfRange(
                f"target_index {self.target_index} outside 0..{len(series) - 1}"
            )
        first = series[0]
        for s in series[1:]:
            if len(s) != len(first) or s.start_time != first.start_time or s.step != first.step:
                raise InputError(
                    f"series {s.label} is not aligned with series {first.label}"
                )
        matrix = np.vstack([s.values for s in series])
        matrix.flags.writeable = False
        object.__setattr__(self, "_matrix", matrix)

    @classmethod
    def from_arrays(
        cls,
        values,
        sensor_ids: Sequence[str] | None = None,
        target_index: int = 0,
        start_time: datetime = datetime(1970, 1, 1),
        step: timedelta = DEFAULT_STEP,
    ) -> "Dataset":
        """Build a dataset from a ``(P, T)`` array (or a list of 1-D arrays)."""
        rows = [np.asarray(v, dtype=float) for v in values]
        if sensor_ids is None:
            sensor_ids = [str(i) for i in range(len(rows))]
        return cls(
            tuple(
                MeasurementSeries(sid, v, start_time=start_time, step=step)
                for sid, v in zip(sensor_ids, rows, strict=True)
            ),
            target_index=target_index,
        )

    @property
    def values(self) -> np.ndarray:
        """Read-only ``(P, T)`` matrix of all series."""
        return self._matrix

    @property
    def n_series(self) -> int:
        return len(self.series)

    @property
    def length(self) -> int:
        return self._matrix.shape[1]

    def __len__(self):
        return self.length

    @property
    def target(self) -> MeasurementSeries:
        return self.series[self.target_index]

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.series]

    @property
    def start_time(self) -> datetime:
        return self.series[0].start_time

    @property
    def step(self) -> timedelta:
        return self.series[0].step

    def timestamp(self, t: int) -> datetime:
        return self.series[0].timestamp(t)

    def index_of(self, label: str) -> int:
        """Index of the series whose label or sensor id equals ``label``."""
        for i, s in enumerate(self.series):
            if s.label == label:
                return i
        for i, s in enumerate(self.series):
            if s.sensor_id == label:
                return i
        raise KeyError(label)

    def with_target(self, target_index: int) -> "Dataset":
        return replace(self, target_index=target_index)

    def with_values(self, values: np.ndarray) -> "Dataset":
        """Same metadata, new ``(P, T)`` values."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.n_series:
            raise SeriesCountMismatch(
                f"expected {self.n_series} series, got {values.shape[0]}"
            )
        return Dataset(
            tuple(replace(s, values=v) for s, v in zip(self.series, values)),
            target_index=self.target_index,
        )


def window_bounds(window, length: int) -> tuple[int, int]:
    """Normalize a ``range``, ``slice`` or ``(start, stop)`` pair to bounds."""
    if isinstance(window, range):
        if window.step != 1:
            raise InputError("windows must be contiguous")
        start, stop = window.start, window.stop
    elif isinstance(window, slice):
        start, stop, step = window.indices(length)
        if step != 1:
            raise InputError("windows must be contiguous")
    else:
        start, stop = window
    start, stop = int(start), int(stop)
    if start < 0 or stop > length:
        raise IndexOutOfRange(f"window [{start}, {stop}) outside [0, {length})")
    return start, stop


@dataclass(frozen=True)
class Normalizer:
    """Per-series min/max used to map values onto [0, 1]."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins, maxs = _frozen_array(self.mins), _frozen_array(self.maxs)
        if mins.shape != maxs.shape:
            raise SeriesCountMismatch("mins and maxs differ in length")
        if np.any(maxs < mins):
            raise InputError("normalizer max below min")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    def __len__(self):
        return len(self.mins)

    @property
    def spans(self) -> np.ndarray:
        return self.maxs - self.mins

    def scale(self, values: np.ndarray) -> np.ndarray:
        """Normalize a ``(P, ...)`` array; constant series map to 0."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != len(self):
            raise SeriesCountMismatch(
                f"normalizer has {len(self)} series, data has {values.shape[0]}"
            )
        shape = (len(self),) + (1,) * (values.ndim - 1)
        spans = self.spans.reshape(shape)
        mins = self.mins.reshape(shape)
        safe = np.where(spans > 0, spans, 1.0)
        return np.where(spans > 0, (values - mins) / safe, 0.0)

    def unscale(self, series_index: int, value):
        if not 0 <= series_index < len(self):
            raise IndexOutOfRange(f"series index {series_index} outside 0..{len(self) - 1}")
        return value * self.spans[series_index] + self.mins[series_index]


def fit_normalizer(dataset: Dataset, window=None) -> Normalizer:
    """Per-series min/max over ``window`` (whole dataset when omitted)."""
    if window is None:
        window = (0, dataset.length)
    start, stop = window_bounds(window, dataset.length)
    if stop <= start:
        raise EmptyWindow(f"window [{start}, {stop}) has no samples")
    block = dataset.values[:, start:stop]
    return Normalizer(block.min(axis=1), block.max(axis=1))


def normalize(normalizer: Normalizer, dataset: Dataset) -> Dataset:
    """Map each value to ``(v - min) / (max - min)``; no clamping."""
    if len(normalizer) != dataset.n_series:
        raise SeriesCountMismatch(
            f"normalizer has {len(normalizer)} series, dataset has {dataset.n_series}"
        )
    return dataset.with_values(normalizer.scale(dataset.values))


def denormalize(normalizer: Normalizer, series_index: int, value):
    """Inverse of ``normalize`` for one series; works on scalars and arrays."""
    return normalizer.unscale(series_index, value)
