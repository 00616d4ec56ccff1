"""Fitting, weights, prediction and GCV tuning.

The estimator at a query point ``x`` minimizes

    J_n(y) = (1/n) sum_i w_i(x) d^2(Y_i, y),

with weights ``w_i(x) = 1 + n [G (G + eps I)^{-1} c_x]_i``.  For every
supported response kind this minimizer is the weighted linear average of
the responses projected back onto the valid object set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleError, IncompatibleObjectsError
from .kernel import DEFAULT_EPSILON, EPSILON_GRID, GramSystem, KernelSpec
from .metric import (
    EuclideanVector,
    GaussianMeasure,
    LaplacianObject,
    QuantileObject,
    SpdObject,
    as_object,
    check_compatible,
    distance,
)
from .projections import (
    DEFAULT_CONFIG,
    ProjectionConfig,
    gaussian_barycenter,
    project_correlation,
    project_laplacian,
    project_monotone,
    project_psd,
)

__all__ = [
    "FittedModel",
    "GcvRow",
    "fit",
    "weights_at",
    "glfr_weights",
    "predict",
    "predict_many",
    "predict_glfr",
    "gcv_tune",
    "objective_value",
    "objective_matrix_form",
    "weighted_frechet_mean",
]

log = logging.getLogger(__name__)

COORDINATES = ("centered", "uncentered")


# ---------------------------------------------------------------------------
# weighted Frechet means of responses


def _stack(responses):
    r0 = responses[0]
    if isinstance(r0, QuantileObject):
        return np.stack([r.values for r in responses])
    if isinstance(r0, (SpdObject, LaplacianObject)):
        return np.stack([r.mat for r in responses])
    if isinstance(r0, EuclideanVector):
        return np.stack([r.values for r in responses])
    if isinstance(r0, GaussianMeasure):
        return None
    raise IncompatibleObjectsError(f"unsupported response kind {type(r0).__name__}")


def weighted_frechet_mean(
    responses,
    weights,
    *,
    stacked=None,
    cfg: ProjectionConfig = DEFAULT_CONFIG,
    spd_projection: str = "psd",
):
    """Minimizer of ``sum_i w_i d^2(Y_i, y)`` for weights summing to n.

    Linear kinds: project ``(1/n) sum_i w_i Y_i`` onto the object set.
    Gaussian measures: W2 barycenter with negative weights clipped.
    """
    w = np.asarray(weights, dtype=float)
    r0 = responses[0]
    if isinstance(r0, GaussianMeasure):
        return gaussian_barycenter(responses, w, cfg).measure
    if stacked is None:
        stacked = _stack(responses)
    avg = np.tensordot(w, stacked, axes=1) / w.size
    if isinstance(r0, QuantileObject):
        return QuantileObject(r0.grid, project_monotone(avg))
    if isinstance(r0, SpdObject):
        if spd_projection == "correlation":
            return SpdObject(project_correlation(avg, cfg))
        return SpdObject(project_psd(avg, cfg.psd_floor))
    if isinstance(r0, LaplacianObject):
        return project_laplacian(avg, r0.bound, cfg)
    return EuclideanVector(avg)


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class GcvRow:
    epsilon: float
    mean_sq_error: float
    trace: float
    denominator: float
    gcv: float


@dataclass(frozen=True, eq=False)
class FittedModel:
    """Training sample, Gram system and tuned epsilon.

    ``coordinates`` selects how the query point is expressed in the span of
    the centered training features: ``"centered"`` uses the exact inner
    products <k(.,x) - mu, k(.,X_i) - mu> and solves against G + eps I;
    ``"uncentered"`` uses k_x - mean(k_x) solved against K + eps I.
    """

    gram: GramSystem
    responses: tuple
    coordinates: str = "centered"
    spd_projection: str = "psd"
    projection: ProjectionConfig = DEFAULT_CONFIG
    gcv_table: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if len(self.responses) != self.gram.n:
            raise ValueError("responses and predictors differ in length")
        if self.coordinates not in COORDINATES:
            raise ValueError(f"coordinates must be one of {COORDINATES}")
        check_compatible(self.responses)
        object.__setattr__(self, "_stacked", _stack(self.responses))

    @property
    def epsilon(self):
        return self.gram.epsilon

    @property
    def kernel(self) -> KernelSpec:
        return self.gram.kernel

    @property
    def n(self):
        return self.gram.n

    def with_epsilon(self, epsilon: float) -> "FittedModel":
        return FittedModel(
            self.gram.with_epsilon(epsilon),
            self.responses,
            self.coordinates,
            self.spd_projection,
            self.projection,
            self.gcv_table,
        )

    def mean_of(self, w):
        return weighted_frechet_mean(
            self.responses,
            w,
            stacked=self._stacked,
            cfg=self.projection,
            spd_projection=self.spd_projection,
        )


def fit(
    predictors,
    responses,
    kernel: KernelSpec | None = None,
    epsilon="gcv",
    *,
    grid=EPSILON_GRID,
    coordinates: str = "centered",
    spd_projection: str = "psd",
    projection: ProjectionConfig = DEFAULT_CONFIG,
) -> FittedModel:
    """Fit on paired samples; ``epsilon="gcv"`` tunes over ``grid``."""
    kernel = kernel or KernelSpec()
    predictors = [as_object(x) for x in predictors]
    responses = tuple(as_object(y) for y in responses)
    if len(predictors) != len(responses):
        raise ValueError("predictors and responses differ in length")
    tune = isinstance(epsilon, str)
    if tune and epsilon != "gcv":
        raise ValueError("epsilon must be a positive number or 'gcv'")
    gram = GramSystem(predictors, kernel, DEFAULT_EPSILON if tune else float(epsilon))
    model = FittedModel(gram, responses, coordinates, spd_projection, projection)
    if tune:
        eps, table = gcv_tune(model, grid)
        model = model.with_epsilon(eps)
        object.__setattr__(model, "gcv_table", tuple(table))
    return model


def _coordinates(model: FittedModel, x, epsilon=None) -> np.ndarray:
    gram = model.gram
    if model.coordinates == "centered":
        d = gram.centered_coordinates(x)
        return gram.center(gram.solve_G(d, epsilon))
    k = gram.kernel_column(x)
    d = k - k.mean(axis=0)
    return gram.center(gram.solve_K(d, epsilon))


def weights_at(model: FittedModel, x, epsilon: float | None = None) -> np.ndarray:
    """Regression weights at ``x`` (an (n,) vector; (len(x), n) for a list)."""
    c = _coordinates(model, x, epsilon)
    # QG = G exactly; centering again strips rounding in G's null space
    w = 1.0 + model.n * model.gram.center(model.gram.smoother_G(c, epsilon))
    return w.T if w.ndim == 2 else w


def _training_weights(model: FittedModel, epsilon: float) -> np.ndarray:
    """Weights at every training predictor, one row per query."""
    gram = model.gram
    if model.coordinates == "centered":
        c = gram.center(gram.solve_G(gram.G, epsilon))
    else:
        K = np.asarray(gram.K)
        c = gram.center(gram.solve_K(K - K.mean(axis=0), epsilon))
    return (1.0 + gram.n * gram.center(gram.smoother_G(c, epsilon))).T


def predict(model: FittedModel, x):
    return model.mean_of(weights_at(model, x))


def predict_many(model: FittedModel, xs) -> list:
    W = weights_at(model, [as_object(x) for x in xs])
    return [model.mean_of(w) for w in W]


def objective_value(model: FittedModel, x, y) -> float:
    """``J_n(y) = (1/n) sum_i w_i d^2(Y_i, y)``."""
    w = weights_at(model, x)
    h = np.array([distance(r, y) ** 2 for r in model.responses])
    return float(np.mean(w * h))


def objective_matrix_form(model: FittedModel, x, y) -> float:
    """``(1/n) h'1 + h' G (G + eps I)^{-1} c_x`` with dense solves."""
    gram = model.gram
    n, eps = gram.n, gram.epsilon
    G = np.asarray(gram.G)
    h = np.array([distance(r, y) ** 2 for r in model.responses])
    Q = np.eye(n) - 1.0 / n
    if model.coordinates == "centered":
        k = gram.kernel_column(x)
        d = Q @ (k - np.asarray(gram.K).mean(axis=1))
        c = Q @ np.linalg.solve(G + eps * np.eye(n), d)
    else:
        k = gram.kernel_column(x)
        c = Q @ np.linalg.solve(np.asarray(gram.K) + eps * np.eye(n), k - k.mean())
    return float(h.mean() + h @ (G @ np.linalg.solve(G + eps * np.eye(n), c)))


# ---------------------------------------------------------------------------
# GCV


def gcv_tune(model: FittedModel, grid=EPSILON_GRID):
    """Pick epsilon minimizing GCV; returns ``(eps, rows)`` ordered by eps.

    For each eps the model predicts at every training predictor; the
    criterion is mean squared response distance over
    ``(1 - tr[Q G (G + eps I)^{-1} + 11'/n] / n)^2``.  A nonpositive
    denominator scores +inf.
    """
    grid = sorted(float(e) for e in grid)
    if not grid or min(grid) <= 0:
        raise ValueError("epsilon grid must be nonempty and positive")
    n = model.n
    rows = []
    for eps in grid:
        trace = model.gram.hat_trace(eps)
        base = 1.0 - trace / n
        if base <= 0:
            rows.append(GcvRow(eps, np.nan, trace, base**2, np.inf))
            continue
        W = _training_weights(model, eps)
        fitted = [model.mean_of(w) for w in W]
        mse = float(np.mean([distance(y, f) ** 2 for y, f in zip(model.responses, fitted)]))
        rows.append(GcvRow(eps, mse, trace, base**2, mse / base**2))
    scores = np.array([r.gcv for r in rows])
    if not np.any(np.isfinite(scores)):
        raise DegenerateSampleError("GCV denominator is nonpositive for every epsilon")
    best = rows[int(np.argmin(scores))].epsilon
    log.debug("gcv picked eps=%g", best)
    return best, rows


# ---------------------------------------------------------------------------
# global linear baseline


def glfr_weights(X, x) -> np.ndarray:
    """Global linear weights ``1 + (x - xbar)' S^{-1} (X_i - xbar)``.

    ``S`` is the empirical covariance with 1/n normalization.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xbar = X.mean(axis=0)
    Xc = X - xbar
    S = Xc.T @ Xc / X.shape[0]
    if np.linalg.cond(S) > 1e12:
        raise DegenerateSampleError("predictor covariance is singular")
    return 1.0 + Xc @ np.linalg.solve(S, x - xbar)


def predict_glfr(X, responses, x, *, cfg: ProjectionConfig = DEFAULT_CONFIG):
    responses = [as_object(y) for y in responses]
    return weighted_frechet_mean(responses, glfr_weights(X, x), cfg=cfg)
