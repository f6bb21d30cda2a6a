"""Age-structured Ricker model with inter-stage interaction, with orbit simulation
and certified extinction/survival regions."""
from .core import (
    Certificate,
    Limits,
    ModelParams,
    OrbitRecord,
    Verdict,
    fold_initials,
    normalize,
    simulate,
    simulate_planar,
    step_planar,
    step_scalar,
    unfold_juveniles,
)

__all__ = [
    "Certificate",
    "Limits",
    "ModelParams",
    "OrbitRecord",
    "Verdict",
    "fold_initials",
    "normalize",
    "simulate",
    "simulate_planar",
    "step_planar",
    "step_scalar",
    "unfold_juveniles",
]

__version__ = "0.1.0"
