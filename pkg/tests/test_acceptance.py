"""The ten acceptance criteria, each at its stated tolerance and runtime budget."""

import time

import numpy as np
import pytest
from conftest import record
from oracles import dense_hat_trace, gram_longdouble
from scipy import optimize, stats

from nlfreg.cli import main
from nlfreg.kernel import EPSILON_GRID, KernelSpec
from nlfreg.metric import (
    EuclideanVector,
    GaussianMeasure,
    LaplacianObject,
    ProbGrid,
    QuantileObject,
    SampledFunction,
    SpdObject,
    PointCloud,
    random_directions,
    sliced_wasserstein2_gaussian,
    sliced_wasserstein2_mc,
    wasserstein2_gaussian,
    wasserstein2_quantile,
)
from nlfreg.projections import project_monotone, project_psd
from nlfreg.regression import fit, gcv_tune, glfr_weights, objective_matrix_form, objective_value, predict_many, weights_at
from nlfreg.analysis import loo_predict, residual_maps
from nlfreg.simulate import MODEL_IDS, ScenarioSpec, generate, replicate_rng, run_scenario

KINDS = ("gaussian", "laplacian", "linear")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def _check(number, ok, detail, budget, timer):
    within = timer.elapsed < budget
    record(number, ok and within, f"{detail}; {timer.elapsed:.2f}s (budget {budget:g}s)")
    assert ok, detail
    assert within, f"runtime {timer.elapsed:.2f}s over budget {budget}s"


def test_1_glfr_equivalence():
    rng = np.random.default_rng(101)
    with Timer() as t:
        X = rng.standard_normal((50, 3)) @ np.diag([1.0, 2.0, 0.5]) + [1.0, -2.0, 0.0]
        Y = list(rng.standard_normal((50, 1)))
        model = fit(list(X), Y, KernelSpec("linear", offset=1.0), 1e-10)
        err = max(np.max(np.abs(weights_at(model, x) - glfr_weights(X, x)))
                  for x in rng.standard_normal((10, 3)) * 2)
    _check(1, err <= 1e-4, f"max |w - w_glfr| = {err:.2e} (tol 1e-4)", 1, t)


def test_2_weight_mean():
    rng = np.random.default_rng(102)
    with Timer() as t:
        worst = 0.0
        for i in range(100):
            kind = KINDS[i % 3]
            n, p = int(rng.integers(5, 40)), int(rng.integers(1, 4))
            X = rng.uniform(-2, 2, (n, p))
            model = fit(list(X), list(rng.standard_normal((n, 1))), KernelSpec(kind),
                        float(rng.choice(EPSILON_GRID)))
            worst = max(worst, abs(weights_at(model, rng.uniform(-3, 3, p)).mean() - 1))
    _check(2, worst <= 1e-8, f"max |mean(w) - 1| = {worst:.2e} (tol 1e-8)", 5, t)


def _qp_monotone(v):
    n = v.size
    A = np.tril(np.ones((n, n)))
    res = optimize.lsq_linear(A, v, bounds=(np.r_[-np.inf, np.zeros(n - 1)], np.inf),
                              method="bvls", tol=1e-14)
    return A @ res.x


def test_3_projection_oracles():
    rng = np.random.default_rng(103)
    with Timer() as t:
        mono = max(np.max(np.abs(project_monotone(v) - _qp_monotone(v)))
                   for v in (rng.standard_normal(int(rng.integers(1, 9))) for _ in range(500)))
        min_eig, probe_ok = np.inf, True
        for _ in range(100):
            a = rng.standard_normal((5, 5))
            a = (a + a.T) / 2
            pa = project_psd(a)
            min_eig = min(min_eig, np.linalg.eigvalsh(pa)[0])
            for _ in range(100):
                z = rng.standard_normal((5, int(rng.integers(1, 6))))
                probe_ok &= np.linalg.norm(a - pa) <= np.linalg.norm(a - z @ z.T) + 1e-9
    ok = mono <= 1e-8 and min_eig >= -1e-10 and probe_ok
    _check(3, ok, f"PAVA vs QP {mono:.1e} (tol 1e-8); PSD min eig {min_eig:.1e}; "
                  f"optimality probe {'ok' if probe_ok else 'violated'}", 10, t)


def test_4_distance_oracles():
    rng = np.random.default_rng(104)
    M = 1000
    g = ProbGrid.midpoint(M)
    z = stats.norm.ppf(g.points)
    with Timer() as t:
        gap = 0.0
        for _ in range(50):
            m1, m2 = rng.uniform(-3, 3, 2)
            s1, s2 = rng.uniform(0.2, 3, 2)
            exact = wasserstein2_gaussian(GaussianMeasure([m1], [[s1**2]]), GaussianMeasure([m2], [[s2**2]]))
            grid = wasserstein2_quantile(QuantileObject(g, m1 + s1 * z), QuantileObject(g, m2 + s2 * z))
            gap = max(gap, abs(exact - grid))
        rel = 0.0
        for _ in range(5):
            means = rng.uniform(-2, 2, (2, 2))
            covs = []
            for _ in range(2):
                a = rng.standard_normal((2, 2))
                covs.append(a @ a.T + 0.2 * np.eye(2))
            ga, gb = (GaussianMeasure(m, c) for m, c in zip(means, covs))
            ca = rng.multivariate_normal(ga.mean, ga.cov, 2000)
            cb = rng.multivariate_normal(gb.mean, gb.cov, 2000)
            mc = sliced_wasserstein2_mc(ca, cb, 500, rng)
            oracle = sliced_wasserstein2_gaussian(ga, gb, random_directions(2, 10_000, rng))
            rel = max(rel, abs(mc - oracle) / oracle)
    ok = gap <= 2 / M and rel <= 0.05
    _check(4, ok, f"quantile vs closed-form W2 {gap:.1e} (tol {2 / M:g}); sliced MC rel err "
                  f"{rel:.3f} (tol 0.05)", 30, t)


def test_5_objective_consistency():
    rng = np.random.default_rng(105)
    g = ProbGrid.midpoint(25)
    with Timer() as t:
        worst = 0.0
        for i in range(100):
            n = int(rng.integers(6, 30))
            X = rng.uniform(-1, 1, (n, 2))
            Y = [QuantileObject(g, np.sort(rng.standard_normal(25)) + x[0]) for x in X]
            model = fit(list(X), Y, KernelSpec(KINDS[i % 3]), float(rng.choice(EPSILON_GRID)))
            x = rng.uniform(-1.5, 1.5, 2)
            y = QuantileObject(g, np.sort(rng.standard_normal(25)))
            a, b = objective_value(model, x, y), objective_matrix_form(model, x, y)
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    _check(5, worst <= 1e-8, f"max relative gap {worst:.1e} (tol 1e-8)", 10, t)


def test_6_gcv_formula():
    rng = np.random.default_rng(106)
    with Timer() as t:
        worst = 0.0
        for kind in KINDS:
            n = 50
            X = rng.uniform(-1, 1, (n, 3))
            model = fit(list(X), list(rng.standard_normal((n, 1))), KernelSpec(kind), 1e-3)
            G = gram_longdouble(X, kind, model.kernel.gamma, model.kernel.offset)
            for eps in EPSILON_GRID:
                worst = max(worst, abs(model.gram.hat_trace(eps) - dense_hat_trace(G, eps)))
        _, rows = gcv_tune(model, [1e14])
        limit_gap = abs(rows[0].denominator - (1 - 1 / n) ** 2)
    ok = worst <= 1e-10 and limit_gap <= 1e-10
    _check(6, ok, f"trace vs long-double dense trace from data {worst:.1e} (tol 1e-10); "
                  f"denominator limit gap {limit_gap:.1e}", 5, t)


def test_7_error_band_and_trend():
    with Timer() as t:
        small = run_scenario(ScenarioSpec("I1", n=200, m=50, p=4, B=20, seed=7))
        large = run_scenario(ScenarioSpec("I1", n=400, m=50, p=4, B=20, seed=7))
        wins = int(np.sum(large.errors < small.errors))
        pval = stats.binomtest(wins, 20, 0.5, alternative="greater").pvalue
    in_band = 0.01 <= small.mean <= 0.12
    trend = large.mean < small.mean and pval < 0.05
    _check(7, in_band and trend,
           f"MPE(n=200) = {small.mean:.3f} ({small.stderr:.3f}) band [0.01, 0.12] "
           f"{'met' if in_band else 'missed'}; MPE(n=400) = {large.mean:.3f}; "
           f"{wins}/20 replicates improve, sign-test p = {pval:.1e}", 600, t)


def _revalidate(obj):
    # rebuilding through the constructor re-runs every invariant check
    if isinstance(obj, EuclideanVector):
        EuclideanVector(obj.values)
    elif isinstance(obj, QuantileObject):
        QuantileObject(obj.grid, obj.values)
    elif isinstance(obj, GaussianMeasure):
        GaussianMeasure(obj.mean, obj.cov)
    elif isinstance(obj, SpdObject):
        SpdObject(obj.mat)
    elif isinstance(obj, LaplacianObject):
        LaplacianObject(obj.mat, obj.bound)
    elif isinstance(obj, SampledFunction):
        SampledFunction(obj.times, obj.values)
    elif isinstance(obj, PointCloud):
        PointCloud(obj.points)
    else:
        raise TypeError(type(obj).__name__)


def test_8_simulation_invariants():
    checked = 0
    with Timer() as t:
        for mid in MODEL_IDS:
            spec = ScenarioSpec(mid, n=40, m=20, p=4, r=5, B=2, seed=8)
            for b in range(spec.B):
                s = generate(spec, replicate_rng(spec.seed, b))
                model = fit(s.predictors[:20], s.responses[:20],
                            KernelSpec(directions=s.directions), "gcv")
                preds = predict_many(model, s.predictors[20:])
                for obj in [*s.predictors, *s.responses, *s.truth, *preds]:
                    _revalidate(obj)
                    checked += 1
    _check(8, True, f"{checked} objects across {len(MODEL_IDS)} models valid", 120, t)


def test_9_residual_map_identity():
    with Timer() as t:
        s = generate(ScenarioSpec("I1", n=200, m=50, p=4), replicate_rng(9, 0))
        loo = loo_predict(s.predictors, s.responses, KernelSpec(), "gcv")
        a, maps, mean = residual_maps(s.responses, loo.predictions)
        span = a[-1] - a[0]
        dev = float(np.mean(np.abs(mean - a)))
        counts = np.sum(~np.isnan(maps), axis=0)
        weighted = float(np.sum(counts * np.abs(mean - a)) / counts.sum())
    _check(9, dev <= 0.05 * span,
           f"mean |T(a) - a| = {dev:.3f} = {dev / span:.3f} of range {span:.1f} (tol 0.05); "
           f"support-weighted {weighted / span:.3f}", 120, t)


def test_10_reproducible_cli(tmp_path):
    cfg = tmp_path / "spec.cfg"
    cfg.write_text(ScenarioSpec("I3", n=40, m=20, B=3, seed=10).to_config())
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    with Timer() as t:
        codes = [main(["simulate", "--config", str(cfg), "--out", str(o)]) for o in outs]
    same = outs[0].read_bytes() == outs[1].read_bytes()
    _check(10, codes == [0, 0] and same, f"exit codes {codes}; byte-identical {same}", 60, t)
