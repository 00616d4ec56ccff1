"""Leave-one-out fits and residual transport maps for binned histograms.

The bundled data mimic age-at-death histograms for 40 subjects with four
covariates.  Each histogram is converted to a quantile function, each
subject is predicted from the other 39, and the map pushing the observed
law onto its prediction is summarized.  A good fit keeps the average map
close to the identity.
"""

import csv
from importlib import resources

import numpy as np

import nlfreg

data = resources.files("nlfreg") / "data"
ids, Y = nlfreg.ingest_binned(data / "mortality_binned.csv", nlfreg.ProbGrid.midpoint(100))
with (data / "mortality_covariates.csv").open() as fh:
    rows = list(csv.reader(fh))[1:]
X = np.array([[float(v) for v in r[1:]] for r in rows])

loo = nlfreg.loo_predict(list(X), Y, nlfreg.KernelSpec("gaussian"), "gcv")
print(f"{len(ids)} subjects; leave-one-out W2 error {loo.mean_distance:.3f} years")
print(f"epsilon chosen per fold: {sorted(set(loo.epsilons.tolist()))}")

a, maps, mean = nlfreg.residual_maps(Y, loo.predictions)
covered = np.sum(~np.isnan(maps), axis=0)
print("\n  age    mean map   subjects covering")
for j in range(0, a.size, 20):
    shown = "   nan" if np.isnan(mean[j]) else f"{mean[j]:8.2f}"
    print(f"{a[j]:6.1f}  {shown}   {covered[j]:4d}")
