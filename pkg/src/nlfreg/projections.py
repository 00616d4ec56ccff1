"""Projections of weighted linear averages back onto valid object sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateSampleError, InvalidObjectError
from .metric import GaussianMeasure, LaplacianObject, sym_sqrtm

__all__ = [
    "ProjectionConfig",
    "project_monotone",
    "project_psd",
    "project_correlation",
    "project_laplacian",
    "gaussian_barycenter",
    "BarycenterResult",
    "vech",
    "vech_inverse",
]


@dataclass(frozen=True)
class ProjectionConfig:
    max_iter: int = 1000
    tol: float = 1e-9
    psd_floor: float = 0.0

    def __post_init__(self):
        if self.max_iter < 1 or not self.tol > 0 or self.psd_floor < 0:
            raise ValueError("need max_iter >= 1, tol > 0, psd_floor >= 0")


DEFAULT_CONFIG = ProjectionConfig()


def project_monotone(v) -> np.ndarray:
    """L2 projection onto nondecreasing vectors (pool adjacent violators)."""
    y = np.asarray(v, dtype=float)
    if y.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if y.size < 2 or np.all(np.diff(y) >= 0):
        return y.copy()
    # block means, block sizes; merge while the last two blocks violate order
    means = np.empty(y.size)
    sizes = np.empty(y.size, dtype=np.int64)
    k = -1
    for val in y:
        k += 1
        means[k] = val
        sizes[k] = 1
        while k > 0 and means[k - 1] > means[k]:
            tot = sizes[k - 1] + sizes[k]
            means[k - 1] = (sizes[k - 1] * means[k - 1] + sizes[k] * means[k]) / tot
            sizes[k - 1] = tot
            k -= 1
    return np.repeat(means[: k + 1], sizes[: k + 1])


def _symmetrize(a, tol=1e-8):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidObjectError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, np.max(np.abs(a), initial=0.0))
    if np.max(np.abs(a - a.T), initial=0.0) > tol * scale:
        raise InvalidObjectError("matrix is not symmetric")
    return (a + a.T) / 2


def project_psd(a, floor: float = 0.0) -> np.ndarray:
    """Clip eigenvalues at ``floor``; Frobenius-nearest PSD matrix for floor 0."""
    a = _symmetrize(a)
    lam, vec = np.linalg.eigh(a)
    if lam[0] >= floor:
        return a
    out = (vec * np.maximum(lam, floor)) @ vec.T
    return (out + out.T) / 2


def project_correlation(a, cfg: ProjectionConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Nearest correlation matrix by alternating projections.

    Alternates the PSD cone and the unit-diagonal set, with Dykstra's
    correction on the PSD step so the limit is the Frobenius-nearest point
    of the intersection rather than just a feasible one.
    """
    a = _symmetrize(a)
    y = a.copy()
    ds = np.zeros_like(a)
    x = y
    for it in range(1, cfg.max_iter + 1):
        r = y - ds
        x = project_psd(r, cfg.psd_floor)
        ds = x - r
        y_new = x.copy()
        np.fill_diagonal(y_new, 1.0)
        change = np.linalg.norm(y_new - y) / max(1.0, np.linalg.norm(y))
        y = y_new
        if change < cfg.tol:
            break
    else:
        raise ConvergenceError(
            f"nearest correlation did not converge in {cfg.max_iter} iterations",
            iterations=cfg.max_iter,
            residual=change,
        )
    out = project_psd(y, cfg.psd_floor)
    # unit diagonal exactly; rescale keeps PSD
    d = np.sqrt(np.clip(np.diag(out), 1e-300, None))
    out = out / np.outer(d, d)
    out = (out + out.T) / 2
    np.fill_diagonal(out, 1.0)
    return out


def project_laplacian(a, bound: float = 1.0, cfg: ProjectionConfig = DEFAULT_CONFIG) -> LaplacianObject:
    """Map a matrix into the Laplacian set by cyclic constraint enforcement.

    Symmetrize, clip off-diagonals into ``[-bound, 0]``, then set the
    diagonal to minus the off-diagonal row sums.  The result is feasible
    but not guaranteed Frobenius-nearest.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidObjectError(f"expected a square matrix, got shape {a.shape}")
    off = ~np.eye(a.shape[0], dtype=bool)
    x = a.copy()
    for it in range(1, cfg.max_iter + 1):
        prev = x
        x = (x + x.T) / 2
        x[off] = np.clip(x[off], -bound, 0.0)
        np.fill_diagonal(x, 0.0)
        np.fill_diagonal(x, -x.sum(axis=1))
        if it > 1 and np.linalg.norm(x - prev) <= cfg.tol * max(1.0, np.linalg.norm(prev)):
            break
    else:
        if cfg.max_iter > 1:
            raise ConvergenceError(
                "Laplacian projection did not settle", iterations=cfg.max_iter
            )
    return LaplacianObject(x, bound)


def vech(mat) -> np.ndarray:
    """Strict upper triangle, row-major."""
    mat = np.asarray(getattr(mat, "mat", mat), dtype=float)
    return mat[np.triu_indices(mat.shape[0], 1)]


def vech_inverse(v) -> np.ndarray:
    """Symmetric matrix with ``v`` off the diagonal and zero row sums."""
    v = np.asarray(v, dtype=float)
    d = v.size
    r = int(round((1 + np.sqrt(1 + 8 * d)) / 2))
    if r * (r - 1) // 2 != d or d < 1:
        raise ValueError(f"length {d} is not a triangular number r(r-1)/2")
    out = np.zeros((r, r))
    iu = np.triu_indices(r, 1)
    out[iu] = v
    out = out + out.T
    np.fill_diagonal(out, -out.sum(axis=1))
    return out


@dataclass(frozen=True)
class BarycenterResult:
    measure: GaussianMeasure
    iterations: int
    clipped: bool


def gaussian_barycenter(
    measures, weights, cfg: ProjectionConfig = DEFAULT_CONFIG
) -> BarycenterResult:
    """W2 barycenter of Gaussians by the standard fixed-point iteration.

    ``weights`` follow the regression convention (they sum to n and may be
    negative).  Negative weights are clipped to zero and the rest
    renormalized; ``clipped`` reports whether that happened.
    """
    w = np.asarray(weights, dtype=float)
    if len(measures) != w.size or w.size == 0:
        raise ValueError("need one weight per measure")
    clipped = bool(np.any(w < 0))
    w = np.clip(w, 0.0, None)
    if not w.sum() > 0:
        raise DegenerateSampleError("all barycenter weights are nonpositive")
    w = w / w.sum()
    keep = w > 0
    w = w[keep]
    means = np.stack([m.mean for m in measures])[keep]
    covs = np.stack([m.cov for m in measures])[keep]
    mean = w @ means
    if w.size == 1:
        return BarycenterResult(GaussianMeasure(mean, covs[0]), 0, clipped)
    # start from the sqrt-average, exact when covariances commute
    root = np.einsum("i,ijk->jk", w, sym_sqrtm(covs))
    S = root @ root
    for it in range(1, cfg.max_iter + 1):
        Sh = sym_sqrtm(S)
        Shi = np.linalg.pinv(Sh, hermitian=True)
        T = np.einsum("i,ijk->jk", w, sym_sqrtm(Sh @ covs @ Sh))
        S_new = Shi @ T @ T @ Shi
        S_new = (S_new + S_new.T) / 2
        change = np.linalg.norm(S_new - S)
        S = S_new
        if change < cfg.tol * max(1.0, np.linalg.norm(S)):
            break
    else:
        raise ConvergenceError(
            "Gaussian barycenter did not converge", iterations=cfg.max_iter, residual=change
        )
    return BarycenterResult(GaussianMeasure(mean, project_psd(S)), it, clipped)
