"""
Three ways to evaluate a Green kernel
=====================================

The kernel of ``(m^2 - Delta/2)^{-s}`` on a closed model can be evaluated in
closed form (when one exists), as an eigenfunction series with a Weyl tail
bound, or as a heat-kernel integral.  Here the three routes are put side by
side on the circle and on the 2-sphere.
"""

import numpy as np

from fgflab import KernelQuery, ManifoldModel, kernel_radial

# On the circle with s = 1 the kernel is a hyperbolic cosine; it is our
# yardstick for the two numerical routes.
q = KernelQuery(ManifoldModel.circle(), s=1.0, m=1.0)
r = np.array([0.0, 0.05, 0.2, 0.5])

closed = kernel_radial(q, r, "closed_form")
series = kernel_radial(q, r, "eigen_series")
heat = kernel_radial(q, r, "heat_integral")

print("circle, s=1, m=1")
print(f"{'r':>6} {'closed form':>20} {'series - closed':>16} {'tail bound':>11} {'heat - closed':>14}")
for ri, c, se, h in zip(r, closed, series, heat):
    print(f"{ri:6.2f} {c.value:20.15f} {se.value - c.value:16.2e} {se.error_estimate:11.1e} "
          f"{h.value - c.value:14.2e}")

# The grounded massless kernel on the 2-sphere is a logarithm; with s = 2 it
# still has a dilogarithm closed form, so the same comparison works.
q = KernelQuery(ManifoldModel.sphere2(), s=2.0, m=0.0, grounded=True)
r = np.array([0.0, 0.3, 1.5, np.pi])
print("\nsphere2, s=2, grounded")
for ri, c, se in zip(r, kernel_radial(q, r, "closed_form"), kernel_radial(q, r, "eigen_series")):
    print(f"r={ri:5.3f}  closed {c.value: .12f}  series {se.value: .12f}  (tail {se.error_estimate:.1e})")
