"""Two-stage prediction for drifting nonlinear stochastic systems.

Offline: approximate nonlinear least squares over a compact parameter
box, with a sub-optimality certificate.  Online: an ensemble of
projected-LMS models combined by exponentially weighted prediction
aggregation.  Plus evaluators for the associated generalization and
prediction error bounds, divergence/dependence diagnostics, and an
experiment harness.
"""

from ._kernels import active_engine, available_engines

__version__ = "0.1.0"

__all__ = ["active_engine", "available_engines", "__version__"]
