"""Recursive multi-step forecasting and rolling re-estimation.

For a forecast origin ``at`` (index of the first unseen sample) the model is
fitted on the ``training_rows`` rows that end just before ``at``, then rolled
forward ``horizon_steps`` times: every prediction of the target is written
back into its lag buffer, while the other series are held at their last
observed value. ``rolling_evaluate`` repeats this every ``horizon_steps``
samples, sliding the training window over the newly measured data and
re-selecting the support each time.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Sequence

import numpy as np

from .core import Dataset, Normalizer, fit_normalizer, window_bounds
from .errors import InputError, InsufficientHistory, InvalidConfig, InvalidOrders
from .metrics import ErrorReport, compute_errors
from .regression import DEFAULT_ORDER, BlockLayout, build_block_problem, lag_rows
from .solvers import CoefficientVector, SolverConfig, solve_block_sparse, solve_least_squares

METHODS = ("blocksparse", "ar", "mar")


@dataclass(frozen=True)
class ForecastConfig:
    """Forecast settings.

    ``method`` is ``"blocksparse"`` (block OMP over all series), ``"ar"``
    (least squares on the target's own lags) or ``"mar"`` (dense least
    squares over all series). ``orders`` is one order for every series or a
    per-series sequence; ``n_max`` defaults to the largest order.
    """

    horizon_steps: int = 6
    training_rows: int = 108
    orders: int | Sequence[int] = DEFAULT_ORDER
    n_max: int | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    refit_normalizer_each_window: bool = False
    method: str = "blocksparse"

    def __post_init__(self):
        if self.horizon_steps < 1:
            raise InvalidConfig("horizon_steps must be >= 1")
        if self.training_rows < 1:
            raise InvalidConfig("training_rows must be >= 1")
        if self.method not in METHODS:
            raise InvalidConfig(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not isinstance(self.orders, int):
            object.__setattr__(self, "orders", tuple(int(n) for n in self.orders))

    def orders_for(self, n_series: int) -> tuple[int, ...]:
        if isinstance(self.orders, int):
            return (self.orders,) * n_series
        if len(self.orders) != n_series:
            raise InvalidOrders(f"{len(self.orders)} orders for {n_series} series")
        return self.orders

    def layout_for(self, dataset: Dataset) -> tuple[list[int], BlockLayout]:
        """Series indices entering the model and their block layout."""
        orders = self.orders_for(dataset.n_series)
        if self.method == "ar":
            t = dataset.target_index
            n_max = orders[t] if self.n_max is None else self.n_max
            return [t], BlockLayout.from_orders([orders[t]], n_max)
        return list(range(dataset.n_series)), BlockLayout.from_orders(orders, self.n_max)

    def history_needed(self, dataset: Dataset) -> int:
        return self.layout_for(dataset)[1].n_max + self.training_rows


@dataclass
class ForecastResult:
    at: int
    predictions: np.ndarray  # km/h, clamped at 0
    normalized_predictions: np.ndarray  # before denormalization and clamping
    coefficients: CoefficientVector
    series_indices: list[int]  # dataset index of each block
    active_blocks: tuple[int, ...]  # dataset indices, sorted
    active_labels: tuple[str, ...]
    normalizer: Normalizer

    @property
    def horizon(self) -> int:
        return len(self.predictions)


def _check_origin(dataset: Dataset, at: int, config: ForecastConfig) -> int:
    needed = config.history_needed(dataset)
    if at > dataset.length:
        raise InputError(f"forecast origin {at} is past the end of the data ({dataset.length})")
    if at < needed:
        raise InsufficientHistory(
            f"forecast origin {at} needs {needed} samples of history"
        )
    return at - needed


def recursive_forecast(
    dataset: Dataset,
    at: int,
    config: ForecastConfig | None = None,
    normalizer: Normalizer | None = None,
) -> ForecastResult:
    """Fit on the window ending at ``at`` and predict samples ``at .. at+H-1``.

    When ``normalizer`` is omitted it is fitted on that same training window.
    """
    config = config or ForecastConfig()
    at = int(at)
    start = _check_origin(dataset, at, config)
    indices, layout = config.layout_for(dataset)
    if normalizer is None:
        normalizer = fit_normalizer(dataset, (start, at))

    history = normalizer.scale(dataset.values[:, :at])[indices]
    target_row = indices.index(dataset.target_index)
    model_data = Dataset.from_arrays(history, target_index=target_row)
    problem = build_block_problem(
        model_data, layout.orders, layout.n_max, config.training_rows, start
    )

    if config.method == "blocksparse":
        solver = config.solver
        if solver.excluded_blocks:
            local = frozenset(indices.index(i) for i in solver.excluded_blocks if i in indices)
            solver = replace(solver, excluded_blocks=local)
        coef = solve_block_sparse(problem, solver)
    else:
        coef = solve_least_squares(problem)

    h = config.horizon_steps
    buf = np.empty((len(indices), at + h))
    buf[:, :at] = history
    # non-target series persist at their last observation
    buf[:, at:] = history[:, at - 1 : at]
    norm_preds = np.empty(h)
    for step in range(h):
        t = at + step
        row = lag_rows(buf, layout, [t - 1])[0]
        norm_preds[step] = row @ coef.x
        buf[target_row, t] = norm_preds[step]

    preds = np.maximum(normalizer.unscale(dataset.target_index, norm_preds), 0.0)
    active = tuple(sorted(indices[i] for i in coef.active_blocks))
    return ForecastResult(
        at=at,
        predictions=preds,
        normalized_predictions=norm_preds,
        coefficients=coef,
        series_indices=indices,
        active_blocks=active,
        active_labels=tuple(dataset.series[i].label for i in active),
        normalizer=normalizer,
    )


@dataclass(frozen=True)
class TracePoint:
    index: int
    timestamp: datetime
    actual: float
    predicted: float
    horizon_step: int
    active_labels: tuple[str, ...]


@dataclass
class EvaluationTrace:
    method: str
    points: list[TracePoint] = field(default_factory=list)
    strides: list[ForecastResult] = field(default_factory=list)

    @property
    def n_refits(self) -> int:
        return len(self.strides)

    @property
    def actuals(self) -> np.ndarray:
        return np.array([p.actual for p in self.points])

    @property
    def predictions(self) -> np.ndarray:
        return np.array([p.predicted for p in self.points])

    def errors(self) -> ErrorReport:
        return compute_errors(self.actuals, self.predictions)

    def support_frequency(self, n_series: int) -> np.ndarray:
        """Fraction of strides in which each series' block was active."""
        counts = np.zeros(n_series)
        for s in self.strides:
            for i in s.active_blocks:
                counts[i] += 1
        return counts / max(1, len(self.strides))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["timestamp", "actual_kmh", "predicted_kmh", "horizon_step", "active_block_list"])
        for p in self.points:
            writer.writerow([
                p.timestamp.isoformat(),
                f"{p.actual:.6f}",
                f"{p.predicted:.6f}",
                p.horizon_step,
                ";".join(p.active_labels),
            ])
        return buf.getvalue()


def rolling_evaluate(
    dataset: Dataset,
    eval_range,
    config: ForecastConfig | None = None,
    normalizer_window=None,
) -> EvaluationTrace:
    """Forecast ``eval_range`` in strides of H, refitting at every stride.

    A trailing partial stride is forecast with a shortened horizon. Unless
    ``config.refit_normalizer_each_window`` is set, one normalizer is fitted
    on ``normalizer_window`` (default: the training window of the first
    stride) and reused for every stride.
    """
    config = config or ForecastConfig()
    begin, end = window_bounds(eval_range, dataset.length)
    if end <= begin:
        raise InputError("evaluation range is empty")
    needed = config.history_needed(dataset)
    if begin < needed:
        raise InsufficientHistory(f"evaluation start {begin} needs {needed} samples of history")

    normalizer = None
    if not config.refit_normalizer_each_window:
        if normalizer_window is None:
            full_nmax = replace(config, method="blocksparse").layout_for(dataset)[1].n_max
            normalizer_window = (max(0, begin - config.training_rows - full_nmax), begin)
        normalizer = fit_normalizer(dataset, normalizer_window)

    target = dataset.values[dataset.target_index]
    trace = EvaluationTrace(config.method)
    for s in range(begin, end, config.horizon_steps):
        h = min(config.horizon_steps, end - s)
        stride_cfg = config if h == config.horizon_steps else replace(config, horizon_steps=h)
        result = recursive_forecast(dataset, s, stride_cfg, normalizer)
        trace.strides.append(result)
        for k in range(h):
            trace.points.append(TracePoint(
                index=s + k,
                timestamp=dataset.timestamp(s + k),
                actual=float(target[s + k]),
                predicted=float(result.predictions[k]),
                horizon_step=k + 1,
                active_labels=result.active_labels,
            ))
    return trace
