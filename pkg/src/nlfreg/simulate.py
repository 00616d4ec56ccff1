"""Seeded generators for the simulation models and the replication harness.

Each generator draws ``n`` paired observations and returns a ``Sample``
holding the predictor objects, the observed response objects, and the true
conditional Frechet mean at each predictor (used as the prediction target).
Model ids: I1 ... I7, I8dense, I8sparse, II1, II2, III1, III2, IV1.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import integrate, stats

from .kernel import KernelSpec
from .metric import (
    EuclideanVector,
    GaussianMeasure,
    LaplacianObject,
    PointCloud,
    ProbGrid,
    QuantileObject,
    SampledFunction,
    SpdObject,
    beta_quantiles,
    distance,
    empirical_quantiles,
    hellinger_beta,
    random_directions,
    sliced_wasserstein2_gaussian,
    wasserstein2_gaussian,
    wasserstein2_quantile,
)
from .projections import vech_inverse
from .regression import fit, glfr_weights, predict_many, weighted_frechet_mean

__all__ = [
    "MODEL_IDS",
    "ScenarioSpec",
    "Sample",
    "MpeReport",
    "generate",
    "gen_euclidean_X",
    "transport_map",
    "run_scenario",
    "run_replicate",
    "replicate_rng",
    "eigenfunctions",
    "sample_truncated_gamma",
]

MODEL_IDS = (
    "I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8dense", "I8sparse",
    "II1", "II2", "III1", "III2", "IV1",
)

NU1_SQ = 0.1
NU2 = 0.25
BETA = np.array([1.0, -2.0, 0.0, 1.0])
GAMMA = np.array([0.1, 0.2, 1.0, 0.3])
MU1_GAUSS = GaussianMeasure([-1.0, 0.0], np.diag([1.0, 0.5]))
MU2_GAUSS = GaussianMeasure([0.0, 1.0], np.diag([0.5, 1.0]))
ROT = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2)


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation setting.

    ``n`` is split in halves for training and testing.  ``method`` is
    ``gnlfr`` (kernel estimator) or ``glfr`` (global linear baseline,
    Euclidean predictors only); ``target`` is ``truth`` (true conditional
    Frechet mean) or ``observed`` (the noisy test response).
    """

    model_id: str = "I1"
    n: int = 200
    m: int = 50
    p: int = 4
    r: int = 5
    seed: int = 0
    B: int = 20
    L: int = 50
    method: str = "gnlfr"
    target: str = "truth"
    grid_size: int = 100

    def __post_init__(self):
        if self.model_id not in MODEL_IDS:
            raise ValueError(f"unknown model_id {self.model_id!r}; choose from {MODEL_IDS}")
        if self.n < 4 or self.n % 2:
            raise ValueError("n must be even and at least 4")
        if min(self.m, self.p, self.r, self.B, self.L) < 1 or self.seed < 0:
            raise ValueError("dimensions, B and L must be positive; seed nonnegative")
        if self.method not in ("gnlfr", "glfr"):
            raise ValueError("method must be gnlfr or glfr")
        if self.target not in ("truth", "observed"):
            raise ValueError("target must be truth or observed")

    def to_config(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def from_config(cls, text: str) -> "ScenarioSpec":
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (s.strip() for s in line.partition("="))
            if not sep or key not in types:
                raise ValueError(f"line {lineno}: expected 'key = value' with a known key, got {line!r}")
            kw[key] = int(value) if types[key] in ("int", int) else value
        return cls(**kw)


@dataclass
class Sample:
    predictors: list
    responses: list
    truth: list
    raw_responses: np.ndarray | None = None
    directions: np.ndarray | None = None
    flags: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.predictors)

    def subset(self, idx) -> "Sample":
        raw = None if self.raw_responses is None else self.raw_responses[idx]
        take = lambda seq: [seq[i] for i in idx]  # noqa: E731
        return Sample(take(self.predictors), take(self.responses), take(self.truth),
                      raw, self.directions, self.flags)


# ---------------------------------------------------------------------------
# shared pieces


def gen_euclidean_X(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """AR(1) latent Gaussians with correlation 0.5^|i-j|, mapped by 2 Phi(U) - 1."""
    z = rng.standard_normal((n, p))
    u = np.empty_like(z)
    u[:, 0] = z[:, 0]
    for j in range(1, p):
        u[:, j] = 0.5 * u[:, j - 1] + math.sqrt(0.75) * z[:, j]
    return 2.0 * stats.norm.cdf(u) - 1.0


def _padded(v, p):
    if p < v.size:
        raise ValueError(f"this model needs p >= {v.size}")
    return np.concatenate([v, np.zeros(p - v.size)])


def transport_map(x, k):
    """Distortion ``T_k(x) = x - sin(k x) / |k|``; increasing for integer k != 0."""
    return x - np.sin(k * x) / abs(k)


def _quantile_objects(raw, grid):
    return [empirical_quantiles(row, grid) for row in raw]


def _gaussian_quantiles(mu, sigma, grid):
    z = stats.norm.ppf(grid.points)
    return [QuantileObject(grid, m + s * z) for m, s in zip(mu, sigma)]


def _location_scale_draws(mu, sigma, m, rng):
    return mu[:, None] + sigma[:, None] * rng.standard_normal((mu.size, m))


# ---------------------------------------------------------------------------
# Scenario 1: distributional responses


def _gen_I1_I2(spec, rng, transported):
    p = spec.p
    beta, gamma = _padded(BETA, p), _padded(GAMMA, p)
    X = gen_euclidean_X(spec.n, p, rng)
    g = X @ gamma
    while np.any(g == 0):  # probability zero; redraw offending rows
        bad = g == 0
        X[bad] = gen_euclidean_X(int(bad.sum()), p, rng)
        g = X @ gamma
    zeta = (X @ beta) ** 2
    ag = np.abs(g)
    mu = rng.normal(zeta, math.sqrt(NU1_SQ))
    sigma = rng.gamma(g**2 / NU2, NU2 / ag)
    raw = _location_scale_draws(mu, sigma, spec.m, rng)
    if transported:
        k = rng.choice(np.array([-2, -1, 1, 2]), size=spec.n)
        raw = transport_map(raw, k[:, None])
    grid = ProbGrid.midpoint(spec.grid_size)
    return Sample(
        [EuclideanVector(x) for x in X],
        _quantile_objects(raw, grid),
        _gaussian_quantiles(zeta, ag, grid),
        raw,
    )


_BETA_REF = ((2.0, 1.0), (2.0, 3.0))


def _gen_I3_to_I5(spec, rng, which):
    grid = ProbGrid.midpoint(spec.grid_size)
    a = rng.gamma(2.0, 1.0, size=spec.n)
    b = rng.gamma(2.0, 1.0 / 3.0, size=spec.n)
    xraw = np.stack([rng.beta(ai, bi, size=spec.m) for ai, bi in zip(a, b)])
    X = _quantile_objects(xraw, grid)
    ref1, ref2 = (beta_quantiles(*ab, grid) for ab in _BETA_REF)
    w1 = np.array([wasserstein2_quantile(x, ref1) for x in X])
    w2 = np.array([wasserstein2_quantile(x, ref2) for x in X])
    if which == "I3":
        zeta = np.exp(w1**2) + np.exp(w2**2)
        mu = rng.normal(zeta, math.sqrt(NU1_SQ))
        sigma = np.full(spec.n, 0.1)
        true_sigma = sigma
    elif which == "I4":
        zeta = np.exp(w1**2)
        mu = rng.normal(zeta, math.sqrt(NU1_SQ))
        # Gamma(shape W^2, rate W) has mean W
        w2s = np.maximum(w2, 1e-12)
        sigma = rng.gamma(w2s**2, 1.0 / w2s)
        true_sigma = w2s
    else:
        h1 = np.array([hellinger_beta(ai, bi, *_BETA_REF[0]) for ai, bi in zip(a, b)])
        h2 = np.array([hellinger_beta(ai, bi, *_BETA_REF[1]) for ai, bi in zip(a, b)])
        zeta = np.exp(h1)
        mu = rng.normal(zeta, 0.2)
        sigma = true_sigma = np.exp(h2)
    raw = _location_scale_draws(mu, sigma, spec.m, rng)
    return Sample(X, _quantile_objects(raw, grid), _gaussian_quantiles(zeta, true_sigma, grid), raw)


def _gaussian_clouds(spec, rng):
    a = rng.normal(0.5, 0.5, size=spec.n)
    b = rng.beta(2.0, 3.0, size=spec.n)
    clouds = a[:, None, None] + np.sqrt(b)[:, None, None] * rng.standard_normal((spec.n, spec.m, 2))
    ridged = False
    fitted = []
    for c in clouds:
        cov = np.atleast_2d(np.cov(c.T, bias=True)) if spec.m > 1 else np.zeros((2, 2))
        if np.linalg.eigvalsh(cov)[0] <= 0:
            cov = cov + 1e-8 * np.eye(2)
            ridged = True
        fitted.append(GaussianMeasure(c.mean(axis=0), cov))
    w1 = np.array([wasserstein2_gaussian(g, MU1_GAUSS) for g in fitted])
    w2 = np.array([wasserstein2_gaussian(g, MU2_GAUSS) for g in fitted])
    return [PointCloud(c) for c in clouds], w1, w2, {"covariance_ridge": ridged}


def _gen_I6_I7(spec, rng, which):
    grid = ProbGrid.midpoint(spec.grid_size)
    X, w1, w2, flags = _gaussian_clouds(spec, rng)
    zeta = np.exp(w1)
    mu = rng.normal(zeta, math.sqrt(NU1_SQ))
    if which == "I6":
        sigma = np.full(spec.n, 0.1)
        true_sigma = sigma
    else:
        lam = rng.normal(w2[:, None], 0.5, size=(spec.n, 2))
        # tau1' diag(lam) tau2 = (lam1 - lam2) / 2 can be negative; use its size
        sigma = np.abs(lam[:, 0] - lam[:, 1]) / 2
        true_sigma = np.full(spec.n, math.sqrt(0.125) * math.sqrt(2 / math.pi))
    raw = _location_scale_draws(mu, sigma, spec.m, rng)
    directions = random_directions(2, spec.L, rng)
    return Sample(X, _quantile_objects(raw, grid), _gaussian_quantiles(zeta, true_sigma, grid),
                  raw, directions, flags)


def _gen_I8(spec, rng, dense):
    lam = np.array([1.0, 0.7])
    xi = rng.standard_normal((spec.n, 2)) * np.sqrt(lam)
    preds = []
    for i in range(spec.n):
        N = 50 if dense else int(rng.integers(3, 6))
        s = np.sort(rng.uniform(0.0, 1.0, size=N))
        preds.append(SampledFunction(s, _trajectory(s, xi[i]) + rng.normal(0.0, math.sqrt(0.1), N)))
    zeta = xi @ (lam * np.array([1.0, -1.0]))
    mu = rng.normal(zeta, math.sqrt(NU1_SQ))
    sigma = np.full(spec.n, 0.1)
    raw = _location_scale_draws(mu, sigma, spec.m, rng)
    grid = ProbGrid.midpoint(spec.grid_size)
    return Sample(preds, _quantile_objects(raw, grid), _gaussian_quantiles(zeta, sigma, grid), raw)


def eigenfunctions(s, k: int = 1):
    s = np.asarray(s, dtype=float)
    return np.stack([math.sqrt(2) * np.sin(2 * np.pi * k * s), math.sqrt(2) * np.cos(2 * np.pi * k * s)])


def _trajectory(s, scores):
    return s + np.sin(s) + scores @ eigenfunctions(s)


# ---------------------------------------------------------------------------
# Scenario 2: Gaussian measure responses


def sample_truncated_gamma(shape, rate, low, high, rng, size=None):
    """Gamma(shape, rate) conditioned on [low, high], by inverse survival function."""
    dist = stats.gamma(shape, scale=1.0 / rate)
    s_hi, s_lo = dist.sf(low), dist.sf(high)
    u = rng.uniform(s_lo, s_hi, size=size)
    if s_hi - s_lo <= 0:
        return np.clip(np.full(np.shape(u), dist.mean()), low, high)
    return np.clip(dist.isf(u), low, high)


def _truncated_gamma_mean_sqrt(shape, rate, low, high):
    dist = stats.gamma(shape, scale=1.0 / rate)
    mass = dist.cdf(high) - dist.cdf(low)
    if not mass > 0:
        return math.sqrt(np.clip(dist.mean(), low, high))
    val, _ = integrate.quad(lambda t: math.sqrt(t) * dist.pdf(t), low, high)
    return val / mass


def _gen_II(spec, rng, which):
    X, w1, w2, flags = _gaussian_clouds(spec, rng)
    means = w1[:, None] * np.ones(2) + rng.standard_normal((spec.n, 2))
    resp, truth = [], []
    for i in range(spec.n):
        if which == "II1":
            cov = np.eye(2)
            true_cov = np.eye(2)
        else:
            w = max(w2[i], 1e-12)
            lam = sample_truncated_gamma(w**2, w, 0.2, 2.0, rng, size=2)
            cov = ROT @ np.diag(lam) @ ROT.T
            true_cov = _truncated_gamma_mean_sqrt(w**2, w, 0.2, 2.0) ** 2 * np.eye(2)
        resp.append(GaussianMeasure(means[i], cov))
        truth.append(GaussianMeasure(w1[i] * np.ones(2), true_cov))
    directions = random_directions(2, spec.L, rng)
    return Sample(X, resp, truth, None, directions, flags)


# ---------------------------------------------------------------------------
# Scenario 3: SPD responses


def _sym_expm(a):
    lam, vec = np.linalg.eigh((a + a.T) / 2)
    return (vec * np.exp(lam)) @ vec.T, lam, vec


class _SpdLaw:
    """Per-replicate parameters of the rank-one SPD response model."""

    def __init__(self, r, rng):
        self.b = rng.uniform(2.0, 4.0, size=r)
        self.c = rng.uniform(0.0, 1.0, size=r)
        A = rng.normal(0.0, math.sqrt(0.5), size=(r, r))
        self.S = 0.5 * (A + A.T)
        V = rng.uniform(0.0, 0.5, size=(r, r))
        self.theta = 0.5 * (V + V.T)

    def mean(self, x):
        return self.b - 2.0 * (x - self.c) ** 2

    def inv_sqrt_cov(self, x):
        """``Sigma(x)^{-1/2}`` and ``Sigma(x)^{-1}``; ridge flag if near singular."""
        scale = x + 2 * x**3
        ridged = scale < 1e-10
        scale = max(scale, 1e-10)
        _, lam, vec = _sym_expm(self.S * np.sin(2 * np.pi * self.theta * (x + 0.1)))
        inv_sqrt = (vec * np.exp(-lam / 2)) @ vec.T / math.sqrt(scale)
        inv = (vec * np.exp(-lam)) @ vec.T / scale
        return inv_sqrt, inv, ridged

    def draw(self, x, rng):
        inv_sqrt, inv, ridged = self.inv_sqrt_cov(x)
        mu = self.mean(x)
        yt = mu + inv_sqrt @ rng.standard_normal(mu.size)
        Y = np.outer(yt, yt)
        truth = np.outer(mu, mu) + inv
        return SpdObject(Y), SpdObject((truth + truth.T) / 2), ridged


def _gen_III(spec, rng, which):
    law = _SpdLaw(spec.r, rng)
    if which == "III1":
        x = rng.beta(0.5, 2.0, size=spec.n)
        preds = [EuclideanVector([xi]) for xi in x]
    else:
        q = 5
        beta = rng.uniform(0.0, 1.0, size=q)
        mats = []
        for _ in range(spec.n):
            z = rng.standard_normal((max(spec.m, 2), q))
            mats.append(np.cov(z.T, bias=False))
        preds = [SpdObject(mt) for mt in mats]
        score = np.array([beta @ mt @ beta for mt in mats])
        # empirical-CDF standardization into (0, 1)
        x = (stats.rankdata(score) / (spec.n + 1)).astype(float)
    resp, truth = [], []
    ridged = False
    for xi in x:
        y, t, rflag = law.draw(float(xi), rng)
        resp.append(y)
        truth.append(t)
        ridged |= rflag
    return Sample(preds, resp, truth, None, None, {"sigma_ridge": ridged})


# ---------------------------------------------------------------------------
# Scenario 4: network responses


def _gen_IV1(spec, rng):
    if spec.r < 2:
        raise ValueError("IV1 needs r >= 2")
    d = spec.r * (spec.r - 1) // 2
    x = rng.uniform(0.0, 1.0, size=spec.n)
    while np.any((x <= 0) | (x >= 1)):
        bad = (x <= 0) | (x >= 1)
        x[bad] = rng.uniform(0.0, 1.0, size=int(bad.sum()))
    resp, truth = [], []
    for xi in x:
        beta = rng.beta(xi, 1.0 - xi, size=d)
        resp.append(LaplacianObject(vech_inverse(-beta), 1.0))
        truth.append(LaplacianObject(vech_inverse(-xi * np.ones(d)), 1.0))
    return Sample([EuclideanVector([xi]) for xi in x], resp, truth)


# ---------------------------------------------------------------------------
# dispatch and harness


def generate(spec: ScenarioSpec, rng: np.random.Generator) -> Sample:
    mid = spec.model_id
    if mid in ("I1", "I2"):
        return _gen_I1_I2(spec, rng, transported=mid == "I2")
    if mid in ("I3", "I4", "I5"):
        return _gen_I3_to_I5(spec, rng, mid)
    if mid in ("I6", "I7"):
        return _gen_I6_I7(spec, rng, mid)
    if mid in ("I8dense", "I8sparse"):
        return _gen_I8(spec, rng, dense=mid == "I8dense")
    if mid in ("II1", "II2"):
        return _gen_II(spec, rng, mid)
    if mid in ("III1", "III2"):
        return _gen_III(spec, rng, mid)
    return _gen_IV1(spec, rng)


@dataclass(frozen=True)
class MpeReport:
    errors: np.ndarray
    mean: float
    stderr: float

    @classmethod
    def from_errors(cls, errors) -> "MpeReport":
        e = np.asarray(errors, dtype=float)
        se = float(e.std(ddof=1) / math.sqrt(e.size)) if e.size > 1 else 0.0
        return cls(e, float(e.mean()), se)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "error"])
        for i, e in enumerate(self.errors):
            w.writerow([i, repr(float(e))])
        w.writerow(["summary", repr(self.mean), repr(self.stderr)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MpeReport":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["replicate", "error"] or rows[-1][0] != "summary":
            raise ValueError("not an MPE report")
        errors = np.array([float(r[1]) for r in rows[1:-1]])
        return cls(errors, float(rows[-1][1]), float(rows[-1][2]))


def _response_distance(a, b, directions):
    if isinstance(a, GaussianMeasure):
        return sliced_wasserstein2_gaussian(a, b, directions)
    return distance(a, b)


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng([seed, replicate])


def run_replicate(spec: ScenarioSpec, replicate: int) -> float:
    """Generate, split in halves, fit on the first, return test error."""
    rng = replicate_rng(spec.seed, replicate)
    sample = generate(spec, rng)
    half = spec.n // 2
    train, test = sample.subset(range(half)), sample.subset(range(half, spec.n))
    if spec.method == "gnlfr":
        model = fit(train.predictors, train.responses,
                    KernelSpec("gaussian", directions=sample.directions), "gcv")
        preds = predict_many(model, test.predictors)
    else:
        if not isinstance(train.predictors[0], EuclideanVector):
            raise ValueError(f"glfr needs Euclidean predictors; {spec.model_id} has "
                             f"{type(train.predictors[0]).__name__}")
        Xtr = np.stack([x.values for x in train.predictors])
        preds = [weighted_frechet_mean(train.responses, glfr_weights(Xtr, x.values))
                 for x in test.predictors]
    targets = test.truth if spec.target == "truth" else test.responses
    directions = random_directions(2, spec.L, rng)
    return float(np.mean([_response_distance(t, f, directions) for t, f in zip(targets, preds)]))


def run_scenario(spec: ScenarioSpec) -> MpeReport:
    errors = []
    for b in range(spec.B):
        try:
            errors.append(run_replicate(spec, b))
        except Exception as exc:
            raise type(exc)(f"replicate {b}: {exc}") from exc
    return MpeReport.from_errors(errors)


def with_n(spec: ScenarioSpec, n: int) -> ScenarioSpec:
    return replace(spec, n=n)
