"""monolab: a numerical laboratory for a two-phase parabolic monotonicity
functional on curved charts in normal coordinates.

Submodules: geometry (charts), kernels (Gaussian kernel and order-zero
parametrix), cutoff, quadrature (kernel-weighted space-time rules),
solutions (two-phase pairs, heat solver, admissibility), functional (the
scale functional and its inequality checks), gauss_transforms (reduction to
Gauss measure and the Gaussian inequalities), config/report/cli (scenario
runner).
"""

from . import (cli, config, cutoff, functional, gauss_transforms, geometry,
               kernels, quadrature, report, solutions)

__version__ = "0.1.0"

__all__ = [
    "cli", "config", "cutoff", "functional", "gauss_transforms", "geometry",
    "kernels", "quadrature", "report", "solutions", "__version__",
]
