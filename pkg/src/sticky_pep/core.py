"""Particle-state data model shared by every other module.

A state is an ordered list of point masses on the line. Positions must be
strictly increasing; particles that meet are merged by the dynamics, never
stored twice at the same spot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "Particle",
    "ParticleState",
    "Frame",
    "Outcome",
    "CollapsedAt",
    "Diverges",
    "TruncatedAt",
    "InvalidStateError",
    "validate",
    "check_valid",
    "normalize_galilean",
    "apply_frame",
    "center_of_mass",
    "total_momentum",
    "w2_to_dirac",
    "w2_discrete",
    "kahan_sum",
]


class InvalidStateError(ValueError):
    """Raised when a state violates the data-model invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Tolerances:
    """Global tolerance record threaded through the simulation and audits.

    ``time`` groups simultaneous collisions, ``pos`` decides co-location and
    tangency, ``vel`` decides whether a collision is glancing.
    """

    time: float = 1e-9
    pos: float = 1e-9
    vel: float = 1e-7


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Particle:
    mass: float
    position: float
    velocity: float


@dataclass(frozen=True)
class ParticleState:
    """Immutable snapshot of a finite particle system at ``time``.

    Stored column-wise since every kernel walks the three arrays together.
    """

    masses: tuple[float, ...]
    positions: tuple[float, ...]
    velocities: tuple[float, ...]
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "positions", tuple(float(y) for y in self.positions))
        object.__setattr__(self, "velocities", tuple(float(v) for v in self.velocities))
        object.__setattr__(self, "time", float(self.time))
        if not (len(self.masses) == len(self.positions) == len(self.velocities)):
            raise ValueError("masses, positions and velocities differ in length")

    @classmethod
    def from_particles(cls, particles: Iterable[Particle | tuple], time: float = 0.0) -> "ParticleState":
        ms, ys, vs = [], [], []
        for p in particles:
            m, y, v = (p.mass, p.position, p.velocity) if isinstance(p, Particle) else p
            ms.append(m)
            ys.append(y)
            vs.append(v)
        return cls(tuple(ms), tuple(ys), tuple(vs), time)

    @property
    def particles(self) -> list[Particle]:
        return [Particle(m, y, v) for m, y, v in zip(self.masses, self.positions, self.velocities)]

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    def __len__(self) -> int:
        return len(self.masses)

    def replace(self, **changes) -> "ParticleState":
        data = dict(masses=self.masses, positions=self.positions,
                    velocities=self.velocities, time=self.time)
        data.update(changes)
        return ParticleState(**data)


@dataclass(frozen=True)
class Frame:
    """Galilean frame removed by :func:`normalize_galilean`.

    The original solution is ``y(t) = ybar(t) + center_of_mass + t * drift``
    where ``drift = total_momentum / total_mass`` (equal to the momentum when
    the total mass is one).
    """

    center_of_mass: float
    total_momentum: float
    total_mass: float = 1.0

    @property
    def drift(self) -> float:
        return self.total_momentum / self.total_mass


@dataclass(frozen=True)
class Outcome:
    time: float | None = None

    @property
    def kind(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        d = {"outcome": self.kind}
        if self.time is not None:
            d["t"] = self.time
        return d


@dataclass(frozen=True)
class CollapsedAt(Outcome):
    """The state became a single particle at ``time``."""


@dataclass(frozen=True)
class Diverges(Outcome):
    """No further collision ever happens and more than one particle remains."""


@dataclass(frozen=True)
class TruncatedAt(Outcome):
    """Simulation stopped at the requested horizon ``time``."""


def validate(state: ParticleState) -> list[str]:
    """Return every violated invariant, with the offending index."""
    problems = []
    if state.n == 0:
        problems.append("state is empty")
    for i, (m, y, v) in enumerate(zip(state.masses, state.positions, state.velocities)):
        if not math.isfinite(m):
            problems.append(f"mass not finite at index {i}")
        elif m <= 0:
            problems.append(f"mass <= 0 at index {i}")
        if not math.isfinite(y):
            problems.append(f"position not finite at index {i}")
        if not math.isfinite(v):
            problems.append(f"velocity not finite at index {i}")
    ys = state.positions
    for i in range(len(ys) - 1):
        if not ys[i] < ys[i + 1]:
            problems.append(f"positions not strictly increasing at index {i}")
    if not (math.isfinite(state.time) and state.time >= 0):
        problems.append("time must be finite and nonnegative")
    return problems


def check_valid(state: ParticleState) -> None:
    problems = validate(state)
    if problems:
        raise InvalidStateError(problems)


def kahan_sum(values: Iterable[float]) -> float:
    total = 0.0
    comp = 0.0
    for x in values:
        y = x - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def center_of_mass(state: ParticleState) -> float:
    return math.fsum(m * y for m, y in zip(state.masses, state.positions)) / state.total_mass


def total_momentum(state: ParticleState) -> float:
    return math.fsum(m * v for m, v in zip(state.masses, state.velocities))


def normalize_galilean(state: ParticleState) -> tuple[ParticleState, Frame]:
    """Shift to the frame with zero center of mass and zero momentum."""
    check_valid(state)
    mass = state.total_mass
    com = center_of_mass(state)
    mom = total_momentum(state)
    drift = mom / mass
    shifted = state.replace(
        positions=tuple(y - com for y in state.positions),
        velocities=tuple(v - drift for v in state.velocities),
    )
    return shifted, Frame(com, mom, mass)


def apply_frame(state: ParticleState, frame: Frame) -> ParticleState:
    """Inverse of :func:`normalize_galilean` at the state's own time."""
    shift = frame.center_of_mass + state.time * frame.drift
    return state.replace(
        positions=tuple(y + shift for y in state.positions),
        velocities=tuple(v + frame.drift for v in state.velocities),
    )


def w2_to_dirac(state: ParticleState, at: float = 0.0) -> float:
    """2-Wasserstein distance between the state's mass distribution and a
    Dirac mass at ``at``; the state is assumed to carry unit total mass."""
    return math.sqrt(math.fsum(m * (y - at) ** 2 for m, y in zip(state.masses, state.positions)))


def w2_discrete(masses_a: Sequence[float], positions_a: Sequence[float],
                masses_b: Sequence[float], positions_b: Sequence[float]) -> float:
    """2-Wasserstein distance between two discrete measures of equal mass,
    through their (step) quantile functions."""
    ca = list(_cumulative(masses_a))
    cb = list(_cumulative(masses_b))
    if abs(ca[-1] - cb[-1]) > 1e-9 * max(1.0, ca[-1]):
        raise ValueError("measures carry different total mass")
    ca[-1] = cb[-1] = max(ca[-1], cb[-1])
    i = j = 0
    u = 0.0
    acc = []
    while i < len(ca) and j < len(cb):
        nxt = min(ca[i], cb[j])
        acc.append((nxt - u) * (positions_a[i] - positions_b[j]) ** 2)
        u = nxt
        if ca[i] <= nxt:
            i += 1
        if cb[j] <= nxt:
            j += 1
    return math.sqrt(max(math.fsum(acc), 0.0))


def _cumulative(masses):
    total = 0.0
    for m in masses:
        total += m
        yield total
