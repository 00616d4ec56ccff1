import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import optimize, stats

from nlfreg.errors import ConvergenceError, DegenerateSampleError, InvalidObjectError
from nlfreg.metric import GaussianMeasure, LaplacianObject, ProbGrid
from nlfreg.projections import (
    ProjectionConfig,
    gaussian_barycenter,
    project_correlation,
    project_laplacian,
    project_monotone,
    project_psd,
    vech,
    vech_inverse,
)

finite = st.floats(-100, 100, allow_nan=False)


def monotone_qp(v):
    """QP oracle: q = A z with z_0 free and increments z_1.. >= 0."""
    n = len(v)
    A = np.tril(np.ones((n, n)))
    lb = np.r_[-np.inf, np.zeros(n - 1)]
    res = optimize.lsq_linear(A, v, bounds=(lb, np.inf), method="bvls", tol=1e-14)
    return A @ res.x


def test_monotone_examples():
    assert np.allclose(project_monotone([3, 1, 2]), [2, 2, 2])
    assert np.allclose(project_monotone([1, 3, 2, 4]), [1, 2.5, 2.5, 4])
    assert np.array_equal(project_monotone([1.0, 1.0, 5.0]), [1.0, 1.0, 5.0])


@given(arrays(float, st.integers(1, 8), elements=finite))
def test_monotone_matches_qp(v):
    out = project_monotone(v)
    assert np.allclose(out, monotone_qp(v), atol=1e-8 * max(1.0, np.abs(v).max()))
    assert np.all(np.diff(out) >= 0)
    assert np.array_equal(project_monotone(out), out)


def test_monotone_rejects_matrix():
    with pytest.raises(ValueError):
        project_monotone(np.zeros((2, 2)))


def test_psd_examples():
    assert np.allclose(project_psd([[1, 2], [2, 1]]), [[1.5, 1.5], [1.5, 1.5]])
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert np.allclose(project_psd(a), a, atol=1e-12)
    with pytest.raises(InvalidObjectError):
        project_psd([[1, 2], [0, 1]])


def test_psd_floor():
    out = project_psd(np.diag([3.0, -1.0]), floor=0.5)
    assert np.allclose(out, np.diag([3.0, 0.5]))


@given(arrays(float, (5, 5), elements=st.floats(-10, 10)), st.integers(0, 2**32 - 1))
def test_psd_is_nearest(a, seed):
    a = (a + a.T) / 2
    p = project_psd(a)
    assert np.linalg.eigvalsh(p)[0] >= -1e-10
    assert np.allclose(project_psd(p), p, atol=1e-10)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        z = rng.standard_normal((5, 5))
        b = z @ z.T * rng.uniform(0, 3)
        assert np.linalg.norm(a - p) <= np.linalg.norm(a - b) + 1e-9


def test_correlation_examples():
    c = np.array([[1, 0.9], [0.9, 1]])
    assert np.allclose(project_correlation(c), c, atol=1e-9)
    out = project_correlation(np.array([[1, 1.2], [1.2, 1]]))
    assert np.allclose(out, np.ones((2, 2)), atol=1e-6)


def test_correlation_grid_search_oracle():
    a = np.array([[2.0, -0.3], [-0.3, 0.5]])
    rho = np.linspace(-1, 1, 200_001)
    cost = (2 - 1) ** 2 + (0.5 - 1) ** 2 + 2 * (rho + 0.3) ** 2
    assert project_correlation(a)[0, 1] == pytest.approx(rho[np.argmin(cost)], abs=1e-5)


@given(arrays(float, (4, 4), elements=st.floats(-3, 3)))
def test_correlation_output_valid(a):
    a = (a + a.T) / 2
    out = project_correlation(a)
    assert np.array_equal(np.diag(out), np.ones(4))
    assert np.linalg.eigvalsh(out)[0] >= -1e-8


def test_correlation_nonconvergence_reports_diagnostics():
    a = np.array([[0.0, 3.0, -2.0], [3.0, 0.0, 4.0], [-2.0, 4.0, 0.0]])
    with pytest.raises(ConvergenceError) as exc:
        project_correlation(a, ProjectionConfig(max_iter=2, tol=1e-15))
    assert exc.value.iterations == 2


def test_laplacian_fixed_point_and_clip():
    L = vech_inverse([-0.5, -0.2, -1.0])
    assert np.allclose(project_laplacian(L).mat, L)
    a = np.array([[0.0, 0.3, -0.5], [0.3, 0.0, -0.2], [-0.5, -0.2, 0.0]])
    out = project_laplacian(a).mat
    assert out[0, 1] == 0.0 and out[1, 0] == 0.0
    assert np.allclose(np.diag(out), [0.5, 0.2, 0.7])


def test_laplacian_convex_combination_unchanged(rng):
    Ls = [vech_inverse(-rng.uniform(0, 1, 6)) for _ in range(5)]
    w = rng.dirichlet(np.ones(5))
    avg = np.tensordot(w, np.stack(Ls), axes=1)
    assert np.allclose(project_laplacian(avg).mat, avg)


@given(arrays(float, (4, 4), elements=st.floats(-3, 3)), st.floats(0.1, 2))
def test_laplacian_output_feasible(a, bound):
    out = project_laplacian(a, bound)
    assert isinstance(out, LaplacianObject)
    off = out.mat[~np.eye(4, dtype=bool)]
    assert np.all(off <= 0) and np.all(off >= -bound)
    assert np.allclose(out.mat.sum(axis=1), 0, atol=1e-8)
    assert np.allclose(project_laplacian(out.mat, bound).mat, out.mat, atol=1e-10)


def test_vech_roundtrip_and_complete_graph():
    L = vech_inverse([-1.0, -2.0, -0.5])
    assert np.allclose(vech(L), [-1.0, -2.0, -0.5])
    assert np.allclose(vech_inverse(vech(L)), L)
    x = 0.4
    K3 = x * (3 * np.eye(3) - np.ones((3, 3)))
    assert np.allclose(vech_inverse([-x] * 3), K3)
    assert vech(np.eye(2)).size == 1
    with pytest.raises(ValueError):
        vech_inverse([1.0, 2.0])


def test_barycenter_single_and_scalar():
    g = GaussianMeasure([1.0, 2.0], [[2.0, 0.3], [0.3, 1.0]])
    res = gaussian_barycenter([g], [1.0])
    assert np.allclose(res.measure.cov, g.cov) and not res.clipped
    a = GaussianMeasure([0.0], [[1.0]])
    b = GaussianMeasure([0.0], [[9.0]])
    assert np.allclose(gaussian_barycenter([a, b], [1.0, 1.0]).measure.cov, [[4.0]])


def test_barycenter_commuting_oracle(rng):
    covs = [np.diag(rng.uniform(0.2, 3, 3)) for _ in range(4)]
    means = [rng.standard_normal(3) for _ in range(4)]
    w = np.array([0.5, 1.5, 1.0, 1.0])
    res = gaussian_barycenter([GaussianMeasure(m, c) for m, c in zip(means, covs)], w)
    wt = w / w.sum()
    expect = np.diag((sum(wi * np.sqrt(np.diag(c)) for wi, c in zip(wt, covs))) ** 2)
    assert np.allclose(res.measure.cov, expect, atol=1e-8)
    assert np.allclose(res.measure.mean, wt @ np.stack(means))


def test_barycenter_fixed_point_noncommuting(rng):
    gs = []
    for _ in range(3):
        z = rng.standard_normal((2, 2))
        gs.append(GaussianMeasure(np.zeros(2), z @ z.T + 0.1 * np.eye(2)))
    w = np.array([1.0, 2.0, 0.5])
    S = gaussian_barycenter(gs, w).measure.cov
    wt = w / w.sum()
    from nlfreg.metric import sym_sqrtm

    Sh = sym_sqrtm(S)
    T = sum(wi * sym_sqrtm(Sh @ g.cov @ Sh) for wi, g in zip(wt, gs))
    assert np.allclose(T, S, atol=1e-7)


def test_barycenter_clips_negative_weights():
    a = GaussianMeasure([0.0], [[1.0]])
    b = GaussianMeasure([5.0], [[4.0]])
    res = gaussian_barycenter([a, b], [-1.0, 3.0])
    assert res.clipped
    assert np.allclose(res.measure.mean, [5.0]) and np.allclose(res.measure.cov, [[4.0]])
    with pytest.raises(DegenerateSampleError):
        gaussian_barycenter([a, b], [-1.0, -1.0])


def test_barycenter_matches_quantile_average_in_1d():
    M = 200
    g = ProbGrid.midpoint(M)
    z = stats.norm.ppf(g.points)
    ms, ss, w = np.array([0.0, 1.0, -2.0]), np.array([1.0, 0.5, 2.0]), np.array([1.0, 1.0, 1.0])
    bary = gaussian_barycenter([GaussianMeasure([m], [[s * s]]) for m, s in zip(ms, ss)], w).measure
    qavg = project_monotone(sum(wi * (m + s * z) for wi, m, s in zip(w / 3, ms, ss)))
    qbar = bary.mean[0] + np.sqrt(bary.cov[0, 0]) * z
    assert np.sqrt(np.mean((qavg - qbar) ** 2)) < 1e-10


def test_projection_config_validation():
    with pytest.raises(ValueError):
        ProjectionConfig(max_iter=0)
    with pytest.raises(ValueError):
        ProjectionConfig(tol=0)
