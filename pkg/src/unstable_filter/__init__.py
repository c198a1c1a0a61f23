"""Simulator for a GW interferometer whose signal-recycling cavity is coupled
to an unstable optomechanical filter providing negative dispersion."""
__version__ = "0.1.0"

from .linalg import BACKEND, SingularSystemError
from .params import (
    CONSTANTS,
    DerivedRates,
    FilterParams,
    IfoParams,
    ParameterError,
    derive_rates,
    nominal_filter,
    nominal_ifo,
    thermal_bound,
    validate_regime,
)
from .filter_model import exact_response, filter_transfer, rwa_transfer, thermal_transfer
from .coupled import (
    NoiseBudget,
    build_model,
    conventional_sensitivity,
    log_grid,
    mizuno_integral,
    open_loop_eigs,
    sensitivity,
)
from .control import design_controller, published_gains, snr_invariance, youla_controller
from .rigorous import total_noise

__all__ = [
    "__version__", "BACKEND", "SingularSystemError", "CONSTANTS", "DerivedRates",
    "FilterParams", "IfoParams", "ParameterError", "derive_rates", "nominal_filter",
    "nominal_ifo", "thermal_bound", "validate_regime", "exact_response",
    "filter_transfer", "rwa_transfer", "thermal_transfer", "NoiseBudget", "build_model",
    "conventional_sensitivity", "log_grid", "mizuno_integral", "open_loop_eigs",
    "sensitivity", "design_controller", "published_gains", "snr_invariance",
    "youla_controller", "total_noise",
]
