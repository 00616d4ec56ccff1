"""Matrix-valued responses: graph Laplacians and covariance matrices.

The weighted Frechet mean of matrices is computed in the Frobenius
geometry and then projected back onto the constraint set, so predictions
are valid Laplacians (or positive semidefinite matrices) by construction.
"""

import numpy as np

import nlfreg
from nlfreg.simulate import generate, replicate_rng

for mid in ("IV1", "III2"):
    spec = nlfreg.ScenarioSpec(mid, n=80, B=1, seed=3)
    s = generate(spec, replicate_rng(spec.seed, 0))
    model = nlfreg.fit(s.predictors[:60], s.responses[:60],
                       nlfreg.KernelSpec(directions=s.directions), "gcv")
    preds = nlfreg.predict_many(model, s.predictors[60:])
    err = np.mean([nlfreg.distance(t, p) for t, p in zip(s.truth[60:], preds)])
    mat = preds[0].mat
    print(f"model {mid}: {type(preds[0]).__name__}, held-out error {err:.4f}")
    print(f"  smallest eigenvalue of a prediction {np.linalg.eigvalsh(mat)[0]: .2e}")
    if isinstance(preds[0], nlfreg.LaplacianObject):
        print(f"  largest row sum {np.abs(mat.sum(axis=1)).max():.1e}, "
              f"off-diagonal range [{mat[~np.eye(len(mat), dtype=bool)].min():.3f}, "
              f"{mat[~np.eye(len(mat), dtype=bool)].max():.3f}]")

# projections on their own
a = np.array([[2.0, -1.5, 0.3], [-1.5, 1.0, 0.4], [0.3, 0.4, -0.2]])
print("\nnearest PSD eigenvalues:", np.round(np.linalg.eigvalsh(nlfreg.project_psd(a)), 4))
print("nearest correlation diagonal:", np.diag(nlfreg.project_correlation(a)))
print("monotone projection of [3, 1, 2, 0]:", nlfreg.project_monotone([3.0, 1, 2, 0]))
