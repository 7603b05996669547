"""Numerical laboratory for diffusion-driven instability in a three-component
reaction-diffusion model of early carcinogenesis."""

from .errors import *  # noqa: F401,F403
from .model import (
    DDIReport,
    ModelParams,
    SteadyState,
    a12_eigenvalues,
    constant_states,
    ddi_check,
    linearization_matrix,
    reaction_jacobian,
    reaction_rhs,
    theta,
)

__version__ = "0.1.0"
