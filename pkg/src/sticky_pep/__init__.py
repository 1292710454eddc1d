"""Exact event-driven sticky-particle dynamics for the one-dimensional
repulsive pressureless Euler-Poisson system."""
from ._backend import BACKEND
from .core import (
    DEFAULT_TOL,
    CollapsedAt,
    Diverges,
    Frame,
    InvalidStateError,
    Outcome,
    Particle,
    ParticleState,
    Tolerances,
    TruncatedAt,
    normalize_galilean,
    validate,
    w2_to_dirac,
)
from .dynamics import CollisionEvent, EventLog, sample_trajectory, simulate
from .energy import audit, hamiltonian
from .perfect import synthesize_perfect, verify_perfect

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DEFAULT_TOL",
    "CollapsedAt",
    "CollisionEvent",
    "Diverges",
    "EventLog",
    "Frame",
    "InvalidStateError",
    "Outcome",
    "Particle",
    "ParticleState",
    "Tolerances",
    "TruncatedAt",
    "audit",
    "hamiltonian",
    "normalize_galilean",
    "sample_trajectory",
    "simulate",
    "synthesize_perfect",
    "validate",
    "verify_perfect",
    "w2_to_dirac",
]
