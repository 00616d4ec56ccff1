"""Object types and distances.

Every object kind used by the regression lives here together with its
distance.  All supported distances are Hilbertian: each object has an
``embed`` vector such that the distance between two objects is the
Euclidean norm of the difference of their embeddings.  The kernel module
relies on this to assemble Gram matrices with one ``cdist`` call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special

from .errors import IncompatibleObjectsError, InvalidObjectError

__all__ = [
    "ProbGrid",
    "EuclideanVector",
    "QuantileObject",
    "GaussianMeasure",
    "SpdObject",
    "LaplacianObject",
    "SampledFunction",
    "PointCloud",
    "MetricObject",
    "as_object",
    "sym_sqrtm",
    "distance",
    "embed",
    "wasserstein2_quantile",
    "wasserstein2_gaussian",
    "frobenius",
    "sliced_wasserstein2_mc",
    "sliced_wasserstein2_gaussian",
    "random_directions",
    "hellinger_beta",
    "l2_function_distance",
    "empirical_quantiles",
    "beta_quantiles",
]


# ---------------------------------------------------------------------------
# probability grid


@dataclass(frozen=True, eq=False)
class ProbGrid:
    """Strictly increasing probabilities in (0, 1) with quadrature weights.

    The weights integrate a function sampled on the grid over all of [0, 1]:
    trapezoid between grid points, and the end values held flat over
    ``[0, u_1]`` and ``[u_M, 1]``.  On the default midpoint grid this reduces
    to equal weights ``1/M``.
    """

    points: np.ndarray
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u = np.asarray(self.points, dtype=float)
        if u.ndim != 1 or u.size < 2:
            raise InvalidObjectError("grid needs at least 2 points")
        if not (u[0] > 0 and u[-1] < 1 and np.all(np.diff(u) > 0)):
            raise InvalidObjectError("grid must be strictly increasing inside (0, 1)")
        u.setflags(write=False)
        h = np.diff(u)
        w = np.zeros_like(u)
        w[:-1] += h / 2
        w[1:] += h / 2
        w[0] += u[0]
        w[-1] += 1 - u[-1]
        w.setflags(write=False)
        object.__setattr__(self, "points", u)
        object.__setattr__(self, "weights", w)

    @classmethod
    def midpoint(cls, M: int = 100) -> "ProbGrid":
        """Equispaced grid ``u_j = (j - 1/2) / M``."""
        return cls((np.arange(1, M + 1) - 0.5) / M)

    @classmethod
    def open_equispaced(cls, M: int = 100) -> "ProbGrid":
        """Equispaced grid ``u_j = j / (M + 1)``."""
        return cls(np.arange(1, M + 1) / (M + 1))

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, ProbGrid):
            return NotImplemented
        return self.points.shape == other.points.shape and np.array_equal(
            self.points, other.points
        )

    def __hash__(self):
        return hash(self.points.tobytes())


DEFAULT_GRID_SIZE = 100


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _check_symmetric(mat, tol, what):
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidObjectError(f"{what} must be a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise InvalidObjectError(f"{what} has non-finite entries")
    # tolerances scale with the entries so large matrices are judged fairly
    if np.max(np.abs(mat - mat.T), initial=0.0) > tol * _scale(mat):
        raise InvalidObjectError(f"{what} is not symmetric")


def _scale(mat):
    return max(1.0, float(np.max(np.abs(mat), initial=0.0)))


def _check_psd(mat, tol, what):
    if np.linalg.eigvalsh((mat + mat.T) / 2)[0] < -tol * _scale(mat):
        raise InvalidObjectError(f"{what} is not positive semidefinite")


# ---------------------------------------------------------------------------
# object kinds


@dataclass(frozen=True, eq=False)
class EuclideanVector:
    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise InvalidObjectError("Euclidean vector must be a finite 1-D array")
        object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True, eq=False)
class QuantileObject:
    """A 1-D distribution stored as its quantile function on a grid."""

    grid: ProbGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise InvalidObjectError(
                f"quantile vector has length {v.size}, grid has {len(self.grid)}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidObjectError("quantile values must be finite")
        if np.any(np.diff(v) < 0):
            raise InvalidObjectError("quantile values must be nondecreasing")
        object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        c = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if c.shape != (m.size, m.size):
            raise InvalidObjectError("covariance shape does not match mean")
        _check_symmetric(c, 1e-10, "covariance")
        _check_psd(c, 1e-10, "covariance")
        object.__setattr__(self, "mean", _frozen(m))
        object.__setattr__(self, "cov", _frozen((c + c.T) / 2))

    @property
    def dim(self):
        return self.mean.size


@dataclass(frozen=True, eq=False)
class SpdObject:
    mat: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.mat, dtype=float)
        _check_symmetric(a, 1e-10, "SPD matrix")
        _check_psd(a, 1e-8, "matrix")
        object.__setattr__(self, "mat", _frozen((a + a.T) / 2))


@dataclass(frozen=True, eq=False)
class LaplacianObject:
    """Graph Laplacian: symmetric, zero row sums, off-diagonals in [-bound, 0]."""

    mat: np.ndarray
    bound: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.mat, dtype=float)
        _check_symmetric(a, 1e-10, "Laplacian")
        if np.max(np.abs(a.sum(axis=1))) > 1e-8:
            raise InvalidObjectError("Laplacian rows must sum to zero")
        off = a[~np.eye(a.shape[0], dtype=bool)]
        if off.size and (off.max() > 1e-12 or off.min() < -self.bound - 1e-12):
            raise InvalidObjectError("Laplacian off-diagonals must lie in [-bound, 0]")
        object.__setattr__(self, "mat", _frozen((a + a.T) / 2))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A trajectory observed at (possibly few) times in [0, 1]."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InvalidObjectError("times and values must be equal-length 1-D, length >= 2")
        if np.any(np.diff(t) <= 0):
            raise InvalidObjectError("times must be strictly increasing")
        if t[0] < 0 or t[-1] > 1 or not np.all(np.isfinite(v)):
            raise InvalidObjectError("times must lie in [0, 1] and values be finite")
        object.__setattr__(self, "times", _frozen(t))
        object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Empirical measure of ``m`` points in R^d, stored as an (m, d) array."""

    points: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.points, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1:
            raise InvalidObjectError("point cloud must be a nonempty (m, d) array")
        object.__setattr__(self, "points", _frozen(x))


MetricObject = Union[
    EuclideanVector,
    QuantileObject,
    GaussianMeasure,
    SpdObject,
    LaplacianObject,
    SampledFunction,
    PointCloud,
]

_KINDS = (
    EuclideanVector,
    QuantileObject,
    GaussianMeasure,
    SpdObject,
    LaplacianObject,
    SampledFunction,
    PointCloud,
)


def as_object(x) -> MetricObject:
    """Pass metric objects through; wrap numbers and 1-D arrays as Euclidean."""
    if isinstance(x, _KINDS):
        return x
    return EuclideanVector(x)


# ---------------------------------------------------------------------------
# linear algebra helpers


def sym_sqrtm(a: np.ndarray) -> np.ndarray:
    """Symmetric square root with eigenvalues clipped at zero.

    Works on a single matrix or a stack of shape (..., d, d).
    """
    a = np.asarray(a, dtype=float)
    lam, vec = np.linalg.eigh((a + np.swapaxes(a, -1, -2)) / 2)
    root = np.sqrt(np.clip(lam, 0, None))
    return (vec * root[..., None, :]) @ np.swapaxes(vec, -1, -2)


# ---------------------------------------------------------------------------
# distances


def _same_grid(a: QuantileObject, b: QuantileObject):
    if a.grid != b.grid:
        raise IncompatibleObjectsError("quantile objects live on different grids")


def wasserstein2_quantile(a: QuantileObject, b: QuantileObject) -> float:
    _same_grid(a, b)
    diff = a.values - b.values
    return float(np.sqrt(max(a.grid.weights @ diff**2, 0.0)))


def wasserstein2_gaussian(a: GaussianMeasure, b: GaussianMeasure) -> float:
    if a.dim != b.dim:
        raise IncompatibleObjectsError(f"Gaussian dimensions differ: {a.dim} vs {b.dim}")
    d2 = np.sum((a.mean - b.mean) ** 2) + np.sum((sym_sqrtm(a.cov) - sym_sqrtm(b.cov)) ** 2)
    return float(np.sqrt(d2))


def frobenius(a, b) -> float:
    a = getattr(a, "mat", a)
    b = getattr(b, "mat", b)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise IncompatibleObjectsError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def random_directions(d: int, L: int, rng: np.random.Generator) -> np.ndarray:
    """``L`` directions drawn uniformly on the unit sphere in R^d, shape (L, d)."""
    z = rng.standard_normal((L, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _sorted_projections(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    return np.sort(points @ directions.T, axis=0)


def sliced_wasserstein2_mc(a, b, L: int, rng: np.random.Generator) -> float:
    """Monte Carlo sliced W2 between two equal-size point clouds.

    ``a`` and ``b`` are (m, d) arrays or ``PointCloud``.  Each of the ``L``
    random directions contributes the squared 1-D W2 of the projected
    samples, i.e. the mean squared gap between matched order statistics.
    """
    a = np.asarray(getattr(a, "points", a), dtype=float)
    b = np.asarray(getattr(b, "points", b), dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] == 0 or b.shape[0] == 0:
        raise InvalidObjectError("point clouds must be nonempty (m, d) arrays")
    if a.shape != b.shape:
        raise IncompatibleObjectsError(f"point clouds differ in shape: {a.shape} vs {b.shape}")
    if L < 1:
        raise ValueError("L must be positive")
    theta = random_directions(a.shape[1], L, rng)
    diff = _sorted_projections(a, theta) - _sorted_projections(b, theta)
    return float(np.sqrt(np.mean(diff**2)))


def sliced_wasserstein2_gaussian(
    a: GaussianMeasure, b: GaussianMeasure, directions: np.ndarray
) -> float:
    """Sliced W2 between Gaussians, exact per direction, averaged over ``directions``."""
    if a.dim != b.dim:
        raise IncompatibleObjectsError("Gaussian dimensions differ")
    dm = directions @ (a.mean - b.mean)
    sa = np.sqrt(np.clip(np.einsum("li,ij,lj->l", directions, a.cov, directions), 0, None))
    sb = np.sqrt(np.clip(np.einsum("li,ij,lj->l", directions, b.cov, directions), 0, None))
    return float(np.sqrt(np.mean(dm**2 + (sa - sb) ** 2)))


def hellinger_beta(a1: float, b1: float, a2: float, b2: float) -> float:
    """Hellinger-type affinity distance ``1 - int sqrt(f1 f2)`` between two Betas."""
    if min(a1, b1, a2, b2) <= 0:
        raise ValueError("Beta parameters must be positive")
    log_bc = special.betaln((a1 + a2) / 2, (b1 + b2) / 2) - 0.5 * (
        special.betaln(a1, b1) + special.betaln(a2, b2)
    )
    return float(np.clip(1.0 - np.exp(log_bc), 0.0, 1.0))


def _function_grid(grid_size: int):
    s = np.linspace(0.0, 1.0, grid_size)
    w = np.full(grid_size, 1.0 / (grid_size - 1))
    w[[0, -1]] /= 2
    return s, w


def _interp_function(f: SampledFunction, s: np.ndarray) -> np.ndarray:
    # np.interp holds end values flat outside the observed range
    return np.interp(s, f.times, f.values)


def l2_function_distance(a: SampledFunction, b: SampledFunction, grid_size: int = 101) -> float:
    s, w = _function_grid(grid_size)
    diff = _interp_function(a, s) - _interp_function(b, s)
    return float(np.sqrt(w @ diff**2))


def empirical_quantiles(samples, grid: ProbGrid | None = None) -> QuantileObject:
    """Quantiles of a sample by linear interpolation between order statistics.

    Order statistic ``x_(k)`` (k = 1..N) sits at probability ``(k - 1/2)/N``;
    grid points outside ``[1/(2N), 1 - 1/(2N)]`` take the extreme values.
    """
    grid = grid or ProbGrid.midpoint(DEFAULT_GRID_SIZE)
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size < 2:
        raise InvalidObjectError("need at least 2 samples for empirical quantiles")
    if not np.all(np.isfinite(x)):
        raise InvalidObjectError("samples must be finite")
    p = (np.arange(1, x.size + 1) - 0.5) / x.size
    q = np.interp(grid.points, p, x)
    # interpolation of sorted values is monotone, but guard rounding
    return QuantileObject(grid, np.maximum.accumulate(q))


def beta_quantiles(a: float, b: float, grid: ProbGrid) -> QuantileObject:
    """Quantile function of Beta(a, b) on ``grid``."""
    q = special.betaincinv(a, b, grid.points)
    bad = ~np.isfinite(q)
    if np.any(bad):
        q[bad] = [_beta_ppf_bisect(a, b, u) for u in grid.points[bad]]
    return QuantileObject(grid, np.maximum.accumulate(q))


def _beta_ppf_bisect(a, b, u, tol=1e-10):
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if special.betainc(a, b, mid) < u:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


# ---------------------------------------------------------------------------
# generic dispatch


def embed(obj: MetricObject, *, directions=None, grid_size: int = 101) -> np.ndarray:
    """Vector whose Euclidean distances reproduce the object distance.

    Point clouds need a shared ``directions`` array (L, d); the embedding is
    the stack of sorted projections scaled so that distances equal the
    sliced W2 Monte Carlo estimate over those directions.
    """
    if isinstance(obj, EuclideanVector):
        return obj.values
    if isinstance(obj, QuantileObject):
        return np.sqrt(obj.grid.weights) * obj.values
    if isinstance(obj, GaussianMeasure):
        return np.concatenate([obj.mean, sym_sqrtm(obj.cov).ravel()])
    if isinstance(obj, (SpdObject, LaplacianObject)):
        return obj.mat.ravel()
    if isinstance(obj, SampledFunction):
        s, w = _function_grid(grid_size)
        return np.sqrt(w) * _interp_function(obj, s)
    if isinstance(obj, PointCloud):
        if directions is None:
            raise IncompatibleObjectsError("point clouds need a direction set to be embedded")
        proj = _sorted_projections(obj.points, directions)
        return proj.ravel() / np.sqrt(proj.size)
    raise TypeError(f"not a metric object: {type(obj).__name__}")


def _signature(obj):
    if isinstance(obj, QuantileObject):
        return (QuantileObject, obj.grid)
    if isinstance(obj, EuclideanVector):
        return (EuclideanVector, obj.values.size)
    if isinstance(obj, GaussianMeasure):
        return (GaussianMeasure, obj.dim)
    if isinstance(obj, (SpdObject, LaplacianObject)):
        return (type(obj), obj.mat.shape)
    if isinstance(obj, PointCloud):
        return (PointCloud, obj.points.shape)
    return (type(obj),)


def check_compatible(objects) -> None:
    """Raise unless all objects share one kind and compatible dimensions."""
    objects = list(objects)
    if not objects:
        raise IncompatibleObjectsError("empty object list")
    sig = _signature(objects[0])
    for i, o in enumerate(objects[1:], start=1):
        if _signature(o) != sig:
            raise IncompatibleObjectsError(
                f"object {i} ({type(o).__name__}) is incompatible with object 0 "
                f"({type(objects[0]).__name__})"
            )


def distance(a, b, *, directions=None, grid_size: int = 101) -> float:
    """Distance between two objects of the same kind."""
    a, b = as_object(a), as_object(b)
    check_compatible([a, b])
    if isinstance(a, QuantileObject):
        return wasserstein2_quantile(a, b)
    if isinstance(a, GaussianMeasure):
        return wasserstein2_gaussian(a, b)
    if isinstance(a, (SpdObject, LaplacianObject)):
        return frobenius(a, b)
    if isinstance(a, SampledFunction):
        return l2_function_distance(a, b, grid_size)
    ea = embed(a, directions=directions, grid_size=grid_size)
    eb = embed(b, directions=directions, grid_size=grid_size)
    return float(np.linalg.norm(ea - eb))
