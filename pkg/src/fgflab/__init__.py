"""Fractional Gaussian fields on the circle, spheres and model spaces.

Kernels, field sampling, noise geometry, random conformal geometry, the
perturbed spectral gap and the perturbed Brownian motion, with an acceptance
suite runnable through ``fgflab verify``.
"""

from importlib.metadata import PackageNotFoundError, version as _dist_version

try:
    __version__ = _dist_version("fgflab")
except PackageNotFoundError:  # pragma: no cover - source checkout without install
    __version__ = "0.0.0"

from .spectral_basis import ManifoldModel, eigen_data, eigen_data_degree  # noqa: E402
from .green_kernels import KernelQuery, kernel_radial, theta  # noqa: E402
from .fgf import FieldRealization, sample_field  # noqa: E402

__all__ = ["ManifoldModel", "eigen_data", "eigen_data_degree", "KernelQuery", "kernel_radial",
           "theta", "FieldRealization", "sample_field", "__version__"]
