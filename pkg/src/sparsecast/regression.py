"""Stacked lagged design matrices for the multivariate AR model.

The target sample at (0-based) index ``t`` is regressed on the ``n_i`` most
recent samples of every series ``i``::

    y*[t] = sum_i sum_{k=1..n_i} y_i[t - k] * x_i[k] + e[t]

Row ``r`` of a problem built over a window starting at ``start`` predicts
``t = start + n_max + r``. In 1-based terms this is the ``y_{n_max+1+r}``
row of the stacked system. Inside each block the columns run newest lag first
(``y_i[t-1], y_i[t-2], ...``), so column ``c`` of block ``i`` in row ``r``
holds ``y_i[start + n_max - 1 + r - c]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Dataset
from .errors import InputError, InsufficientData, InvalidOrders

# One hour of 5-minute lags.
DEFAULT_ORDER = 12


@dataclass(frozen=True)
class BlockLayout:
    orders: tuple[int, ...]
    n_max: int
    offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        orders = tuple(int(n) for n in self.orders)
        object.__setattr__(self, "orders", orders)
        if not orders:
            raise InvalidOrders("at least one block is required")
        if any(n < 1 for n in orders):
            raise InvalidOrders(f"every order must be >= 1, got {orders}")
        if self.n_max < max(orders):
            raise InvalidOrders(f"n_max={self.n_max} is below max order {max(orders)}")
        object.__setattr__(self, "offsets", tuple(np.concatenate([[0], np.cumsum(orders)]).tolist()))

    @classmethod
    def uniform(cls, order: int, n_blocks: int) -> "BlockLayout":
        return cls((order,) * n_blocks, order)

    @classmethod
    def from_orders(cls, orders: Sequence[int], n_max: int | None = None) -> "BlockLayout":
        orders = tuple(orders)
        if n_max is None:
            if not orders:
                raise InvalidOrders("at least one block is required")
            n_max = max(orders)
        return cls(orders, n_max)

    @property
    def n_blocks(self) -> int:
        return len(self.orders)

    @property
    def total_cols(self) -> int:
        return self.offsets[-1]

    def block_slice(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i + 1])

    def block_of_column(self, col: int) -> int:
        return int(np.searchsorted(self.offsets, col, side="right") - 1)


@dataclass
class RegressionProblem:
    """``b ≈ a @ x`` with ``a`` laid out in blocks.

    ``residual`` is filled in by the solvers. ``start`` is the first sample
    index of the window the problem was built from.
    """

    b: np.ndarray
    a: np.ndarray
    layout: BlockLayout
    residual: np.ndarray | None = None
    start: int = 0

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        if self.b.ndim != 1 or len(self.b) < 1:
            raise InputError("b must be a non-empty vector")
        if self.a.shape != (len(self.b), self.layout.total_cols):
            raise InputError(
                f"design matrix shape {self.a.shape} does not match "
                f"({len(self.b)}, {self.layout.total_cols})"
            )

    @property
    def n_rows(self) -> int:
        return len(self.b)

    def block(self, i: int) -> np.ndarray:
        return self.a[:, self.layout.block_slice(i)]


def lag_rows(values: np.ndarray, layout: BlockLayout, ends) -> np.ndarray:
    """Design-matrix rows whose newest lag sits at each index in ``ends``.

    ``values`` is ``(P, T)``. Row ``j`` holds, block by block,
    ``values[i, ends[j]], values[i, ends[j] - 1], ...`` for ``n_i`` entries.
    """
    ends = np.atleast_1d(np.asarray(ends, dtype=int))
    cols = []
    for i, n in enumerate(layout.orders):
        idx = ends[:, None] - np.arange(n)[None, :]
        cols.append(values[i][idx])
    return np.hstack(cols)


def build_block_problem(
    dataset: Dataset,
    orders: Sequence[int],
    n_max: int | None = None,
    training_rows: int = 108,
    start: int = 0,
) -> RegressionProblem:
    """Non-uniform-order system; block ``i`` carries ``orders[i]`` lags.

    Needs ``n_max + training_rows`` samples from ``start`` on.
    """
    if len(orders) != dataset.n_series:
        raise InvalidOrders(f"{len(orders)} orders for {dataset.n_series} series")
    layout = BlockLayout.from_orders(orders, n_max)
    m = int(training_rows)
    if m < 1:
        raise InputError("training_rows must be >= 1")
    if start < 0:
        raise InputError("start must be >= 0")
    needed = layout.n_max + m
    if dataset.length - start < needed:
        raise InsufficientData(
            f"need {needed} samples from index {start}, have {dataset.length - start}"
        )
    first = start + layout.n_max
    values = dataset.values
    b = values[dataset.target_index, first : first + m].copy()
    a = lag_rows(values, layout, np.arange(first - 1, first - 1 + m))
    return RegressionProblem(b, a, layout, start=start)


def build_uniform_problem(
    dataset: Dataset, order: int, training_rows: int = 108, start: int = 0
) -> RegressionProblem:
    """Every series gets the same number of lags ``order``; N = order * P."""
    if order < 1:
        raise InvalidOrders(f"order must be >= 1, got {order}")
    return build_block_problem(
        dataset, (order,) * dataset.n_series, order, training_rows, start
    )
