"""Sign-restricted proxy FAVAR with stochastic volatility."""
from .model import (
    DataSet,
    McmcSettings,
    McmcState,
    ModelSpec,
    PosteriorDraws,
    PriorConfig,
    initialize_state,
    simulate_dgp,
    validate_spec,
)

__version__ = "0.1.0"

__all__ = [
    "DataSet",
    "McmcSettings",
    "McmcState",
    "ModelSpec",
    "PosteriorDraws",
    "PriorConfig",
    "initialize_state",
    "simulate_dgp",
    "validate_spec",
]
