"""Real-data style workflow: binned histograms, leave-one-out prediction, transport maps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import FrechetError, ParseError
from .kernel import KernelSpec
from .metric import DEFAULT_GRID_SIZE, ProbGrid, QuantileObject, distance
from .regression import fit, predict

__all__ = [
    "BinnedTable",
    "TransportMap",
    "LooResult",
    "parse_binned",
    "ingest_binned",
    "binned_to_quantiles",
    "loo_predict",
    "residual_map",
    "residual_maps",
    "pooled_abscissae",
    "mortality_like_fixture",
    "write_binned",
]


@dataclass(frozen=True)
class BinnedTable:
    """Histogram of one subject: ``counts[k]`` falls in ``[edges[k], edges[k+1])``."""

    row_id: str
    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        c = np.asarray(self.counts, dtype=float)
        if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
            raise ValueError("bin edges must be strictly increasing with at least 2 entries")
        if c.shape != (e.size - 1,):
            raise ValueError(f"row {self.row_id!r}: expected {e.size - 1} counts, got {c.size}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError(f"row {self.row_id!r}: counts must be finite and nonnegative")
        if not c.sum() > 0:
            raise ValueError(f"row {self.row_id!r}: total count is zero")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "counts", c)


def binned_to_quantiles(table: BinnedTable, grid: ProbGrid | None = None) -> QuantileObject:
    """Quantiles of the within-bin uniform law.

    The CDF is piecewise linear through the cumulative proportions at the
    bin edges.  Its left-continuous inverse ``Q(u) = inf{t: F(t) >= u}``
    skips empty bins.
    """
    grid = grid or ProbGrid.midpoint(DEFAULT_GRID_SIZE)
    cum = np.concatenate([[0.0], np.cumsum(table.counts)]) / table.counts.sum()
    cum[-1] = 1.0
    u = grid.points
    k = np.searchsorted(cum, u, side="left")  # cum[k-1] < u <= cum[k]
    k = np.clip(k, 1, cum.size - 1)
    lo, hi = cum[k - 1], cum[k]
    frac = (u - lo) / (hi - lo)
    vals = table.edges[k - 1] + frac * (table.edges[k] - table.edges[k - 1])
    return QuantileObject(grid, np.maximum.accumulate(vals))


def parse_binned(text: str) -> list[BinnedTable]:
    """Parse ``edges,e0,...,eK`` followed by ``id,c1,...,cK`` rows."""
    rows = list(csv.reader(io.StringIO(text)))
    lines = [(i, r) for i, r in enumerate(rows, start=1) if any(cell.strip() for cell in r)]
    if not lines:
        raise ParseError("line 1: empty file")
    lineno, head = lines[0]
    if head[0].strip() != "edges":
        raise ParseError(f"line {lineno}: first field must be 'edges', got {head[0]!r}")
    try:
        edges = np.array([float(v) for v in head[1:]])
    except ValueError as exc:
        raise ParseError(f"line {lineno}: bad edge value ({exc})") from None
    if edges.size < 2 or np.any(~np.isfinite(edges)) or np.any(np.diff(edges) <= 0):
        raise ParseError(f"line {lineno}: edges must be finite and strictly increasing")
    tables = []
    for lineno, r in lines[1:]:
        rid = r[0].strip()
        cells = [c.strip() for c in r[1:]]
        if not any(cells):
            raise ParseError(f"line {lineno}: row {rid!r} is empty")
        if len(cells) != edges.size - 1:
            raise ParseError(
                f"line {lineno}: row {rid!r} has {len(cells)} counts, expected {edges.size - 1}"
            )
        try:
            counts = np.array([float(c) for c in cells])
            tables.append(BinnedTable(rid, edges, counts))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    if not tables:
        raise ParseError(f"line {lineno}: no subject rows")
    return tables


def ingest_binned(path, grid: ProbGrid | None = None) -> tuple[list[str], list[QuantileObject]]:
    """Read a binned CSV and return ``(ids, quantile objects)``."""
    tables = parse_binned(Path(path).read_text())
    return [t.row_id for t in tables], [binned_to_quantiles(t, grid) for t in tables]


def write_binned(edges, ids, counts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edges", *(repr(float(e)) for e in edges)])
    for rid, c in zip(ids, counts):
        w.writerow([rid, *(repr(float(v)) for v in c)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# leave-one-out


@dataclass(frozen=True)
class LooResult:
    predictions: list
    distances: np.ndarray
    epsilons: np.ndarray

    @property
    def mean_distance(self) -> float:
        return float(self.distances.mean())


def loo_predict(predictors, responses, kernel: KernelSpec | None = None, epsilon="gcv") -> LooResult:
    """Refit without subject i and predict at X_i, for each i.

    With ``epsilon="gcv"`` each fold is tuned separately.  The bandwidth
    heuristic is also applied per fold when ``kernel.gamma`` is unset.
    """
    n = len(predictors)
    if n < 3:
        raise ValueError("leave-one-out needs at least 3 subjects")
    if len(responses) != n:
        raise ValueError("predictors and responses differ in length")
    preds, dists, eps = [], [], []
    for i in range(n):
        keep = [j for j in range(n) if j != i]
        try:
            model = fit([predictors[j] for j in keep], [responses[j] for j in keep], kernel, epsilon)
            yhat = predict(model, predictors[i])
        except FrechetError as exc:
            raise type(exc)(f"subject {i}: {exc}") from exc
        preds.append(yhat)
        dists.append(distance(responses[i], yhat))
        eps.append(model.epsilon)
    return LooResult(preds, np.array(dists), np.array(eps))


# ---------------------------------------------------------------------------
# transport maps


@dataclass(frozen=True)
class TransportMap:
    """Monotone map sampled at ``abscissae``; NaN outside the observed support."""

    abscissae: np.ndarray
    values: np.ndarray


def _cdf_from_quantiles(q: QuantileObject, a: np.ndarray) -> np.ndarray:
    v, u = q.values, q.grid.points
    # for tied quantile values keep the largest probability, so the
    # interpolated F jumps across atoms and stays right-continuous
    last = np.r_[np.diff(v) > 0, True]
    v, u = v[last], u[last]
    out = np.full(a.shape, np.nan)
    inside = (a >= v[0]) & (a <= v[-1])
    out[inside] = np.interp(a[inside], v, u) if v.size > 1 else u[-1]
    return out


def residual_map(observed: QuantileObject, fitted: QuantileObject, abscissae=None) -> TransportMap:
    """``T = Q_fitted o F_observed`` evaluated on response-domain points.

    ``F_observed`` is the piecewise-linear inverse of the observed quantile
    samples.  Points outside ``[Q_obs(u_1), Q_obs(u_M)]`` map to NaN.
    """
    if observed.grid != fitted.grid:
        raise ValueError("observed and fitted quantiles use different grids")
    a = pooled_abscissae([observed]) if abscissae is None else np.asarray(abscissae, dtype=float)
    F = _cdf_from_quantiles(observed, a)
    vals = np.full(a.shape, np.nan)
    ok = ~np.isnan(F)
    vals[ok] = np.interp(F[ok], fitted.grid.points, fitted.values)
    return TransportMap(a, vals)


def pooled_abscissae(objects, size: int = 200) -> np.ndarray:
    lo = min(float(q.values[0]) for q in objects)
    hi = max(float(q.values[-1]) for q in objects)
    return np.linspace(lo, hi, size)


def residual_maps(observed, fitted, size: int = 200):
    """Per-subject maps on pooled abscissae and their pointwise mean.

    Returns ``(abscissae, maps (n, size), mean_map)``; the mean ignores
    subjects whose observed support misses a point.
    """
    a = pooled_abscissae(observed, size)
    maps = np.stack([residual_map(o, f, a).values for o, f in zip(observed, fitted)])
    counts = np.sum(~np.isnan(maps), axis=0)
    mean = np.where(counts > 0, np.nansum(maps, axis=0) / np.maximum(counts, 1), np.nan)
    return a, maps, mean


# ---------------------------------------------------------------------------
# synthetic fixture


def mortality_like_fixture(n: int = 40, seed: int = 7, total: int = 100_000):
    """Age-at-death style histograms driven by four covariates.

    Each subject's law is a mixture of an early-life component and a main
    adult component whose location and scale move smoothly (and
    nonlinearly) with the covariates.  Returns ``(ids, X, edges, counts)``.
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, 4))
    loc = 72 + 6 * X[:, 0] + 3 * np.sin(math.pi * X[:, 1]) - 2 * X[:, 2] ** 2
    scale = 10 + 2 * X[:, 3] + X[:, 0] * X[:, 1]
    early = 0.03 + 0.02 * (1 - X[:, 0]) / 2
    edges = np.arange(0.0, 115.0, 5.0)
    counts = []
    for i in range(n):
        main = stats.truncnorm.cdf(edges, (0 - loc[i]) / scale[i], (110 - loc[i]) / scale[i],
                                   loc[i], scale[i])
        infant = stats.expon.cdf(edges, scale=2.0)
        cdf = (1 - early[i]) * main + early[i] * infant
        cdf = (cdf - cdf[0]) / (cdf[-1] - cdf[0])
        counts.append(np.round(np.diff(cdf) * total))
    ids = [f"S{i:03d}" for i in range(n)]
    return ids, X, edges, np.array(counts)
