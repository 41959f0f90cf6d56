"""
The noise distance and its covering numbers
===========================================

``rho(x, y)`` is the standard deviation of ``h(x) - h(y)``.  For the massless
circle field with ``s = 1`` it behaves like ``sqrt(r)``, so the circle has
covering numbers of order ``eps^{-2}`` and a finite Dudley entropy integral.
"""

import numpy as np

from fgflab import KernelQuery, ManifoldModel
from fgflab.noise_geometry import (
    NoiseMetric, covering_profile, dudley_bound, dudley_mesh_term, holder_scan,
)

nm = NoiseMetric(KernelQuery(ManifoldModel.circle(), s=1.0, m=0.0, grounded=True))

r = np.array([1e-4, 1e-3, 1e-2, 0.1, 0.5])
print("rho(r) / sqrt(r):", np.round(nm.radial(r) / np.sqrt(r), 4))

# Holder ratios rho / r^alpha stay bounded for alpha below 1/2.
grid = np.arange(1024) / 1024
for a in (0.25, 0.45):
    print(f"max rho / r^{a}: {holder_scan(nm, grid, a):.4f}")

# Greedy farthest-point traversal gives every covering number at once.
prof = covering_profile(nm, grid, n_eps=12)
print("\n   eps        N  sqrt(log N)")
for e, n, s in prof.to_rows():
    print(f"{e:8.4f} {n:8d} {s:12.4f}")
print(f"Dudley integral {dudley_bound(prof):.4f}, sub-mesh term {dudley_mesh_term(prof):.2e}")
