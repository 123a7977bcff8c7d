"""Coefficient estimation: dense least squares and block OMP."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NumericalFailure
from .regression import BlockLayout, RegressionProblem


def default_max_blocks(n_blocks: int) -> int:
    """Keep roughly a fifth of the blocks, at least one."""
    return max(1, math.ceil(0.2 * n_blocks))


@dataclass(frozen=True)
class SolverConfig:
    """Block OMP settings.

    ``max_active_blocks=None`` resolves to :func:`default_max_blocks` of the
    problem's block count; ``max_iterations=None`` resolves to K.
    ``excluded_blocks`` are never selected.
    """

    max_active_blocks: int | None = None
    residual_tolerance: float = 1e-6
    max_iterations: int | None = None
    excluded_blocks: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "excluded_blocks", frozenset(self.excluded_blocks))
        if self.max_active_blocks is not None and self.max_active_blocks < 1:
            raise InvalidConfig("max_active_blocks must be >= 1")
        if self.residual_tolerance < 0:
            raise InvalidConfig("residual_tolerance must be >= 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidConfig("max_iterations must be >= 1")

    def resolve_k(self, n_blocks: int) -> int:
        k = default_max_blocks(n_blocks) if self.max_active_blocks is None else self.max_active_blocks
        if k > n_blocks:
            raise InvalidConfig(f"K={k} exceeds the number of blocks ({n_blocks})")
        return k


@dataclass
class CoefficientVector:
    x: np.ndarray
    layout: BlockLayout
    active_blocks: frozenset[int]
    # blocks in the order they were selected (BOMP) or all blocks (dense)
    selection_order: tuple[int, ...] = ()
    residual_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.active_blocks = frozenset(int(i) for i in self.active_blocks)

    def block(self, i: int) -> np.ndarray:
        return self.x[self.layout.block_slice(i)]

    def block_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(self.block(i)) for i in range(self.layout.n_blocks)])


def _lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # SVD-based: rank-revealing, minimum-norm on rank deficiency
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NumericalFailure("non-finite entries in least-squares system")
    try:
        x, *_ = np.linalg.lstsq(a, b, rcond=None)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise NumericalFailure("least-squares solution is not finite")
    return x


def residual_norm(problem: RegressionProblem, x) -> float:
    """``||b - A x||_2``; also stores ``b - A x`` as ``problem.residual``."""
    if isinstance(x, CoefficientVector):
        x = x.x
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.a.shape[1],):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({problem.a.shape[1]},)")
    problem.residual = problem.b - problem.a @ x
    return float(np.linalg.norm(problem.residual))


def solve_least_squares(problem: RegressionProblem) -> CoefficientVector:
    """Minimum-norm least-squares fit over every column."""
    x = _lstsq(problem.a, problem.b)
    res = residual_norm(problem, x)
    blocks = tuple(range(problem.layout.n_blocks))
    return CoefficientVector(x, problem.layout, frozenset(blocks), blocks, [res])


def column_scaling(a: np.ndarray) -> np.ndarray:
    """Reciprocal column norms; zero for all-zero columns."""
    norms = np.linalg.norm(a, axis=0)
    return np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)


def block_scores(
    a: np.ndarray, layout: BlockLayout, residual: np.ndarray, scaling: np.ndarray | None = None
) -> np.ndarray:
    """``||D_i A_i^T r||_2`` for every block ``i``.

    ``D`` rescales each column to unit norm, so a block is scored by how well
    its columns align with the residual rather than by their magnitude.
    """
    if scaling is None:
        scaling = column_scaling(a)
    corr = (a.T @ residual) * scaling
    return np.array(
        [np.linalg.norm(corr[layout.block_slice(i)]) for i in range(layout.n_blocks)]
    )


def solve_block_sparse(problem: RegressionProblem, config: SolverConfig | None = None) -> CoefficientVector:
    """Block orthogonal matching pursuit.

    Each iteration adds the block whose unit-normalized columns correlate most
    strongly (in l2 norm) with the current residual, then refits by least squares on all
    selected columns. Stops after K blocks, ``max_iterations`` iterations, or
    once ``||r|| <= tol * ||b||``. Ties go to the lowest block index.
    """
    config = config or SolverConfig()
    layout = problem.layout
    k = config.resolve_k(layout.n_blocks)
    max_iter = k if config.max_iterations is None else config.max_iterations
    a, b = problem.a, problem.b

    threshold = config.residual_tolerance * np.linalg.norm(b)
    x = np.zeros(layout.total_cols)
    residual = b.copy()
    history = [float(np.linalg.norm(residual))]
    selected: list[int] = []
    scaling = column_scaling(a)
    eligible = np.ones(layout.n_blocks, dtype=bool)
    for i in config.excluded_blocks:
        if 0 <= i < layout.n_blocks:
            eligible[i] = False

    while len(selected) < k and len(selected) < max_iter and history[-1] > threshold:
        if not eligible.any():
            break
        scores = np.where(eligible, block_scores(a, layout, residual, scaling), -np.inf)
        best = int(np.argmax(scores))
        if not scores[best] > 0:
            # residual is orthogonal to every remaining block
            break
        selected.append(best)
        eligible[best] = False
        cols = np.concatenate([np.arange(layout.offsets[i], layout.offsets[i + 1]) for i in selected])
        coef = _lstsq(a[:, cols], b)
        x = np.zeros(layout.total_cols)
        x[cols] = coef
        residual = b - a[:, cols] @ coef
        history.append(float(np.linalg.norm(residual)))

    problem.residual = residual
    return CoefficientVector(x, layout, frozenset(selected), tuple(selected), history)


@dataclass(frozen=True)
class CoefficientRow:
    block: int
    sensor_id: str
    lag: int
    coefficient: float


def coefficient_table(coef: CoefficientVector, labels: Sequence[str]) -> list[CoefficientRow]:
    """One row per coefficient: block index, series label, lag (1 = newest), value."""
    layout = coef.layout
    if len(labels) != layout.n_blocks:
        raise DimensionMismatch(f"{len(labels)} labels for {layout.n_blocks} blocks")
    rows = []
    for i, n in enumerate(layout.orders):
        for lag in range(1, n + 1):
            rows.append(CoefficientRow(i, labels[i], lag, float(coef.x[layout.offsets[i] + lag - 1])))
    return rows


def format_coefficient_table(rows: Sequence[CoefficientRow]) -> str:
    lines = ["block\tsensor_id\tlag\tcoefficient"]
    for r in rows:
        lines.append(f"{r.block}\t{r.sensor_id}\t{r.lag}\t{r.coefficient:.10g}")
    return "\n".join(lines) + "\n"
