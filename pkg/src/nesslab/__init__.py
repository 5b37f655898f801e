"""Steady states of the spatially homogeneous Boltzmann equation for Maxwellian
molecules coupled to thermal reservoirs: a Fourier-space fixed-point solver,
time integration, a particle (DSMC) oracle, and an entropy-production ledger.
"""

from .errors import ConfigError, DomainError, NessLabError
from .kernel import AngularKernel, contraction_factor, make_kernel, moment_decay_rate
from .metrics import gtw_distance, moments, radial_w2
from .spectral import RadialCharFn, RadialDensity, charfn_maxwellian, charfn_mixture, inverse_transform, phi_map
from .steady import FixedPointReport, solve_ness

__version__ = "0.1.0"

__all__ = [
    "AngularKernel",
    "ConfigError",
    "DomainError",
    "FixedPointReport",
    "NessLabError",
    "RadialCharFn",
    "RadialDensity",
    "charfn_maxwellian",
    "charfn_mixture",
    "contraction_factor",
    "gtw_distance",
    "inverse_transform",
    "make_kernel",
    "moment_decay_rate",
    "moments",
    "phi_map",
    "radial_w2",
    "solve_ness",
]
