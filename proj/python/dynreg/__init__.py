"""Python access to the dynreg C++ core."""

from ._dynreg import (
    DomainError,
    PreconditionError,
    alpha_schedule,
    delta_tag,
    eit_currents,
    run_experiment,
    speed_rescale,
    verify_lemmas,
)

__all__ = [
    "DomainError",
    "PreconditionError",
    "alpha_schedule",
    "delta_tag",
    "eit_currents",
    "run_experiment",
    "speed_rescale",
    "verify_lemmas",
]
