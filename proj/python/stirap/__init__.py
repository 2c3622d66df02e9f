"""Three-level transmon STIRAP simulator."""

from ._stirap import (
    ConfigError,
    InvalidStateError,
    NumericalError,
    PreconditionError,
    StirapError,
    __version__,
    adiabaticity,
    berry_phase,
    config_hash,
    default_config,
    run,
    run_and_emit,
    tomography_round_trip,
    validate_config,
)

__all__ = [
    "ConfigError",
    "InvalidStateError",
    "NumericalError",
    "PreconditionError",
    "StirapError",
    "__version__",
    "adiabaticity",
    "berry_phase",
    "config_hash",
    "default_config",
    "run",
    "run_and_emit",
    "tomography_round_trip",
    "validate_config",
]
