"""Kernels on metric objects and the centered Gram system."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist, pdist

from .errors import DegenerateSampleError, IncompatibleObjectsError
from .metric import EuclideanVector, as_object, check_compatible, embed

__all__ = [
    "KernelSpec",
    "GramSystem",
    "EPSILON_GRID",
    "DEFAULT_EPSILON",
    "kernel_eval",
    "embed_all",
    "bandwidth_heuristic",
    "build_gram",
    "cross_vector",
]

EPSILON_GRID = tuple(10.0**k for k in range(-6, 0))
DEFAULT_EPSILON = 1e-3

_ALIASES = {"gaussian": "gaussian", "gaussian_rbf": "gaussian", "rbf": "gaussian",
            "laplacian": "laplacian", "linear": "linear"}


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Kernel choice.

    ``gaussian``: exp(-gamma d^2); ``laplacian``: exp(-gamma d);
    ``linear``: offset + <x1, x2> (Euclidean vectors only).  ``gamma=None``
    means "pick with the bandwidth heuristic at fit time".  ``directions``
    is the shared projection set used when predictors are point clouds.
    """

    kind: str = "gaussian"
    gamma: float | None = None
    offset: float = 1.0
    directions: np.ndarray | None = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def with_gamma(self, gamma: float) -> "KernelSpec":
        return KernelSpec(self.kind, gamma, self.offset, self.directions)


def embed_all(objects, directions=None) -> np.ndarray:
    objects = [as_object(o) for o in objects]
    check_compatible(objects)
    return np.stack([embed(o, directions=directions) for o in objects])


def _kernel_from_embeddings(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if spec.kind == "linear":
        return spec.offset + A @ B.T
    if spec.gamma is None:
        raise ValueError("kernel gamma is unset; call bandwidth_heuristic first")
    d2 = cdist(A, B, "sqeuclidean")
    if spec.kind == "gaussian":
        return np.exp(-spec.gamma * d2)
    return np.exp(-spec.gamma * np.sqrt(d2))


def _centered_gram_extended(spec: KernelSpec, E: np.ndarray) -> np.ndarray:
    """QKQ in long double (same as float64 where the platform lacks it)."""
    E = E.astype(np.longdouble)
    inner = E @ E.T
    if spec.kind == "linear":
        K = spec.offset + inner
    else:
        sq = np.diag(inner)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * inner, 0)
        K = np.exp(-spec.gamma * (d2 if spec.kind == "gaussian" else np.sqrt(d2)))
    K = (K + K.T) / 2
    r = K.mean(axis=1)
    return K - r[:, None] - r[None, :] + r.mean()


def _check_linear(spec, objects):
    if spec.kind == "linear" and not all(isinstance(o, EuclideanVector) for o in objects):
        raise IncompatibleObjectsError("the linear kernel needs Euclidean vectors")


def kernel_eval(spec: KernelSpec, x1, x2) -> float:
    x1, x2 = as_object(x1), as_object(x2)
    _check_linear(spec, (x1, x2))
    E = embed_all([x1, x2], spec.directions)
    return float(_kernel_from_embeddings(spec, E[:1], E[1:])[0, 0])


def bandwidth_heuristic(objects, directions=None) -> float:
    """``1 / (2 * mean pairwise squared distance)`` over all pairs."""
    E = objects if isinstance(objects, np.ndarray) else embed_all(objects, directions)
    if E.shape[0] < 2:
        raise DegenerateSampleError("need at least 2 objects")
    sigma2 = np.mean(pdist(E, "sqeuclidean"))
    if not sigma2 > 0:
        raise DegenerateSampleError("all pairwise distances are zero")
    return 1.0 / (2.0 * sigma2)


class GramSystem:
    """Gram matrix K, centered Gram G = QKQ and regularized solvers.

    Solves against ``G + eps I`` go through a cached eigendecomposition of G,
    so any eps can be used without refactorizing.  The Cholesky factor of
    ``K + eps I`` is built lazily for the uncentered coordinate form.
    """

    def __init__(self, objects, spec: KernelSpec, epsilon: float = DEFAULT_EPSILON):
        objects = [as_object(o) for o in objects]
        n = len(objects)
        if n < 2:
            raise DegenerateSampleError("need at least 2 training objects")
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        _check_linear(spec, objects)
        self.objects = objects
        self.embeddings = embed_all(objects, spec.directions)
        if spec.kind != "linear" and spec.gamma is None:
            spec = spec.with_gamma(bandwidth_heuristic(self.embeddings))
        self.kernel = spec
        self.epsilon = float(epsilon)
        K = _kernel_from_embeddings(spec, self.embeddings, self.embeddings)
        self.K = (K + K.T) / 2
        self.row_means = self.K.mean(axis=1)
        G = self.K - self.row_means[:, None] - self.row_means[None, :] + self.row_means.mean()
        self.G = (G + G.T) / 2
        for a in (self.K, self.G, self.row_means):
            a.setflags(write=False)

    @property
    def n(self):
        return self.K.shape[0]

    def with_epsilon(self, epsilon: float) -> "GramSystem":
        """Same Gram system with another epsilon; caches are shared."""
        new = object.__new__(GramSystem)
        new.__dict__.update(self.__dict__)
        new.epsilon = float(epsilon)
        return new

    @cached_property
    def G_eigh(self):
        lam, vec = np.linalg.eigh(self.G)
        # eigenvalues below the rounding floor n * u * lambda_max are noise
        # (G is PSD and has at least the constant vector in its null space)
        floor = self.n * np.finfo(float).eps * max(lam[-1], 0.0)
        lam[lam <= floor] = 0.0
        return lam, vec

    def _K_cho(self, eps):
        cache = self.__dict__.setdefault("_K_cho_cache", {})
        if eps not in cache:
            cache[eps] = linalg.cho_factor(self.K + eps * np.eye(self.n), lower=True)
        return cache[eps]

    def center(self, v: np.ndarray) -> np.ndarray:
        """Apply Q = I - 11'/n along the first axis."""
        return v - v.mean(axis=0, keepdims=True)

    def solve_G(self, v: np.ndarray, epsilon: float | None = None, power: int = 1) -> np.ndarray:
        """``(G + eps I)^{-power} v``."""
        eps = self.epsilon if epsilon is None else epsilon
        lam, vec = self.G_eigh
        return vec @ ((vec.T @ v) / _col((lam + eps) ** power, v))

    def smoother_G(self, v: np.ndarray, epsilon: float | None = None, power: int = 1) -> np.ndarray:
        """``G (G + eps I)^{-power} v`` computed spectrally."""
        eps = self.epsilon if epsilon is None else epsilon
        lam, vec = self.G_eigh
        return vec @ ((vec.T @ v) * _col(lam / (lam + eps) ** power, v))

    def solve_K(self, v: np.ndarray, epsilon: float | None = None) -> np.ndarray:
        """``(K + eps I)^{-1} v`` via a cached Cholesky factor."""
        eps = self.epsilon if epsilon is None else epsilon
        return linalg.cho_solve(self._K_cho(eps), v)

    @cached_property
    def trace_spectrum(self) -> np.ndarray:
        """Eigenvalues of G refined for trace evaluation.

        Rounding in the stored float64 G moves sum lam/(lam+eps) by about
        u ||G|| / eps, which is 1e-10 at eps = 1e-6.  Rayleigh quotients of
        the float64 eigenvectors against a Gram matrix rebuilt from the
        embeddings in long double remove that error to first order.
        """
        _, V = np.linalg.eigh(self.G)
        G = _centered_gram_extended(self.kernel, self.embeddings)
        Vl = V.astype(np.longdouble)
        mu = np.einsum("ij,ij->j", Vl, G @ Vl)
        return np.maximum(mu.astype(float), 0.0)

    def hat_trace(self, epsilon: float | None = None) -> float:
        """``tr[Q G (G + eps I)^{-1} + 11'/n]``."""
        eps = self.epsilon if epsilon is None else epsilon
        lam = self.trace_spectrum
        return float(np.sum(lam / (lam + eps)) + 1.0)

    def kernel_column(self, x) -> np.ndarray:
        """``k_x`` with entries kappa(X_i, x)."""
        batch = is_batch(x)
        xs = list(x) if batch else [x]
        xs = [as_object(o) for o in xs]
        check_compatible([self.objects[0], *xs])
        _check_linear(self.kernel, xs)
        E = np.stack([embed(o, directions=self.kernel.directions) for o in xs])
        k = _kernel_from_embeddings(self.kernel, self.embeddings, E)
        return k if batch else k[:, 0]

    def centered_coordinates(self, x) -> np.ndarray:
        """Inner products <k(.,x) - mu, k(.,X_i) - mu> for each training X_i.

        Accepts one object or a list (then returns an (n, len) array).
        """
        k = self.kernel_column(x)
        rm = self.row_means if k.ndim == 1 else self.row_means[:, None]
        return self.center(k - rm)


def is_batch(x) -> bool:
    """A list or tuple of objects or arrays, as opposed to one point given as a list of numbers."""
    return isinstance(x, (list, tuple)) and len(x) > 0 and not np.isscalar(x[0])


def _col(d, v):
    return d if v.ndim == 1 else d[:, None]


def build_gram(objects, spec: KernelSpec, epsilon: float = DEFAULT_EPSILON) -> GramSystem:
    return GramSystem(objects, spec, epsilon)


def cross_vector(sys: GramSystem, x):
    """``(k_x, d_x)`` with ``d_x = k_x - mean(k_x)``."""
    k = sys.kernel_column(x)
    return k, k - k.mean(axis=0)
