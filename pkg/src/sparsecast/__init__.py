"""Short-term link speed forecasting with block-sparse multivariate AR models."""

from .core import (
    Dataset,
    MeasurementSeries,
    Normalizer,
    denormalize,
    fit_normalizer,
    normalize,
)
from .forecast import (
    EvaluationTrace,
    ForecastConfig,
    ForecastResult,
    recursive_forecast,
    rolling_evaluate,
)
from .ingest import ColumnMap, SensorSpec, SyntheticSpec, generate_synthetic, load_csv, write_csv
from .metrics import ErrorReport, compute_errors, format_report
from .regression import BlockLayout, RegressionProblem, build_block_problem, build_uniform_problem
from .solvers import (
    CoefficientVector,
    SolverConfig,
    coefficient_table,
    residual_norm,
    solve_block_sparse,
    solve_least_squares,
)

__version__ = "0.1.0"
