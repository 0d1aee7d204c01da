"""Twisting-echo spin squeezing: internal OAT dynamics, an exact few-atom
QND engine, a Gaussian collective model and a small CLI."""

from ._kernels import BACKEND
from .exact_collective import QndConfig, perturbative_state, rf_map, run_echo_protocol, wineland
from .gaussian_model import NoiseConfig, optimize_od, xi_squared
from .internal_dynamics import (
    OatParams,
    echo_coupled_state,
    internal_squeezing,
    reference_state,
    zeta_sq_analytic,
    zeta_sq_numeric,
)
from .physical_layer import AtomLightParams, reduction_report
from .protocol import ScenarioConfig, SqueezingReport, run_scenario, sweep
from .spin_algebra import PureState, SpinSpace, make_spin_space

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AtomLightParams",
    "NoiseConfig",
    "OatParams",
    "PureState",
    "QndConfig",
    "ScenarioConfig",
    "SpinSpace",
    "SqueezingReport",
    "echo_coupled_state",
    "internal_squeezing",
    "make_spin_space",
    "optimize_od",
    "perturbative_state",
    "reduction_report",
    "reference_state",
    "rf_map",
    "run_echo_protocol",
    "run_scenario",
    "sweep",
    "wineland",
    "xi_squared",
    "zeta_sq_analytic",
    "zeta_sq_numeric",
]
