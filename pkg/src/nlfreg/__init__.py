"""Nonlinear global Frechet regression for metric-space valued data."""

from .errors import (
    ConvergenceError,
    DegenerateSampleError,
    FrechetError,
    IncompatibleObjectsError,
    InvalidObjectError,
    ParseError,
)
from .kernel import EPSILON_GRID, GramSystem, KernelSpec, bandwidth_heuristic, build_gram
from .metric import (
    EuclideanVector,
    GaussianMeasure,
    LaplacianObject,
    PointCloud,
    ProbGrid,
    QuantileObject,
    SampledFunction,
    SpdObject,
    distance,
    empirical_quantiles,
)
from .regression import (
    FittedModel,
    fit,
    gcv_tune,
    glfr_weights,
    objective_value,
    predict,
    predict_many,
    weights_at,
)

from .projections import (
    project_correlation,
    project_laplacian,
    project_monotone,
    project_psd,
)
from .simulate import MODEL_IDS, MpeReport, ScenarioSpec, generate, run_scenario
from .analysis import ingest_binned, loo_predict, residual_maps

__version__ = "0.1.0"
