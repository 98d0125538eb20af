"""Pathwise calculus for fractional Brownian motion and bounded-variation functions.

Submodules:

* :mod:`fracpath.fbm` exact fBm samplers;
* :mod:`fracpath.bv` running maxima, record sets and record integrals of
  piecewise-linear and jump functions;
* :mod:`fracpath.fraccalc` Riemann-Liouville and Weyl operators, Besov-type
  norms and the generalized Lebesgue-Stieltjes integral;
* :mod:`fracpath.experiments` Monte Carlo experiments and reports;
* :mod:`fracpath.cli` the ``fracpath`` command.
"""

__version__ = "0.1.0"

from .fbm import FbmConfig, Method, SampledPath, SamplerError, sample_cholesky, sample_circulant
from .bv import MixedFn, PiecewiseLinearFn, StepFn, record_integral, running_max
from .fraccalc import FracParams, GridFn, gls_integral

__all__ = [
    "__version__",
    "FbmConfig",
    "Method",
    "SampledPath",
    "SamplerError",
    "sample_cholesky",
    "sample_circulant",
    "PiecewiseLinearFn",
    "StepFn",
    "MixedFn",
    "running_max",
    "record_integral",
    "FracParams",
    "GridFn",
    "gls_integral",
]
