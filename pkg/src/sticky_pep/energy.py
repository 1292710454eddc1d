"""Energy bookkeeping for sticky solutions.

The Hamiltonian is ``sum m v**2 - 1/2 sum_ij m_i m_j |y_i - y_j|``. It is
constant between collisions, unchanged by glancing merges and drops at every
other merge; :func:`audit` checks all of that on an event log.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import DEFAULT_TOL, ParticleState, Tolerances

__all__ = [
    "kinetic",
    "potential",
    "potential_pairwise",
    "hamiltonian",
    "is_glancing",
    "EnergySample",
    "EventEnergy",
    "EnergyReport",
    "audit",
]


def kinetic(state: ParticleState) -> float:
    # no factor 1/2: this is the squared L2(rho) norm of the velocity
    return math.fsum(m * v * v for m, v in zip(state.masses, state.velocities))


def potential(state: ParticleState) -> float:
    """Interaction energy in O(n) from prefix sums over the ordered positions."""
    acc = []
    left_mass = 0.0
    left_moment = 0.0
    for m, y in zip(state.masses, state.positions):
        acc.append(m * (y * left_mass - left_moment))
        left_mass += m
        left_moment += m * y
    return -math.fsum(acc)


def potential_pairwise(state: ParticleState) -> float:
    """Direct double sum; kept as an independent check on :func:`potential`."""
    ms, ys = state.masses, state.positions
    return -0.5 * math.fsum(ms[i] * ms[j] * abs(ys[i] - ys[j])
                            for i in range(len(ms)) for j in range(len(ms)))


def hamiltonian(state: ParticleState) -> float:
    return kinetic(state) + potential(state)


def is_glancing(event, tol: Tolerances | float = DEFAULT_TOL) -> tuple[bool, ...]:
    """Per cluster: do all merging particles arrive with the same velocity?"""
    eps = tol.vel if isinstance(tol, Tolerances) else float(tol)
    return tuple(max(vs) - min(vs) <= eps for vs in event.pre_velocities)


@dataclass(frozen=True)
class EnergySample:
    t: float
    kinetic: float
    potential: float

    @property
    def hamiltonian(self) -> float:
        return self.kinetic + self.potential


@dataclass(frozen=True)
class EventEnergy:
    t: float
    before: EnergySample
    after: EnergySample
    glancing: tuple[bool, ...]
    # sum over clusters of  sum m v^2 - (sum m v)^2 / sum m
    predicted_ke_drop: float

    @property
    def ke_drop(self) -> float:
        return self.before.kinetic - self.after.kinetic

    @property
    def h_jump(self) -> float:
        return self.after.hamiltonian - self.before.hamiltonian


@dataclass
class EnergyReport:
    segments: list[list[EnergySample]] = field(default_factory=list)
    events: list[EventEnergy] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def max_segment_spread(self) -> float:
        spreads = [max(s.hamiltonian for s in seg) - min(s.hamiltonian for s in seg)
                   for seg in self.segments if seg]
        return max(spreads, default=0.0)

    def samples(self) -> list[EnergySample]:
        return [s for seg in self.segments for s in seg]


def _sample(state: ParticleState) -> EnergySample:
    return EnergySample(state.time, kinetic(state), potential(state))


def _cluster_ke_drop(event) -> float:
    drop = []
    for ms, vs in zip(event.cluster_masses, event.pre_velocities):
        mass = math.fsum(ms)
        mom = math.fsum(m * v for m, v in zip(ms, vs))
        drop.append(math.fsum(m * v * v for m, v in zip(ms, vs)) - mom * mom / mass)
    return math.fsum(drop)


def audit(log, samples: int = 100, tail: float = 1.0, rel_tol: float = 1e-9) -> EnergyReport:
    """Sample the energies of an event log and flag every broken law.

    Each collision-free segment gets ``samples`` evenly spaced evaluations;
    the open-ended last segment is sampled over ``tail`` time units. Flags:
    H varying inside a segment, H or KE rising across an event, H jumping at
    a glancing event, and the potential jumping at any event.
    """
    if samples < 2:
        raise ValueError("need at least two samples per segment")
    # local import keeps this module free of a dynamics dependency at import time
    from .dynamics import free_flight

    report = EnergyReport()
    for k, (t0, t1, start) in enumerate(log.segments()):
        if math.isinf(t1):
            t1 = t0 + tail
        seg = [_sample(free_flight(start, (t1 - t0) * j / (samples - 1)))
               for j in range(samples)]
        report.segments.append(seg)
        hs = [s.hamiltonian for s in seg]
        scale = 1.0 + max(abs(h) for h in hs)
        if max(hs) - min(hs) > rel_tol * scale:
            report.violations.append(
                f"segment {k}: H not constant (spread {max(hs) - min(hs):.3e})")

    for e in log.events:
        before, after = _sample(e.pre_state), _sample(e.post_state)
        ev = EventEnergy(e.time, before, after, tuple(e.glancing), _cluster_ke_drop(e))
        report.events.append(ev)
        scale = 1.0 + abs(before.hamiltonian)
        if ev.h_jump > rel_tol * scale:
            report.violations.append(f"t={e.time:.12g}: H increased by {ev.h_jump:.3e}")
        if all(ev.glancing) and abs(ev.h_jump) > rel_tol * scale:
            report.violations.append(
                f"t={e.time:.12g}: H discontinuous at glancing event ({ev.h_jump:.3e})")
        if abs(after.potential - before.potential) > rel_tol * (1.0 + abs(before.potential)):
            report.violations.append(f"t={e.time:.12g}: potential discontinuous")
        if ev.ke_drop < -rel_tol * (1.0 + before.kinetic):
            report.violations.append(f"t={e.time:.12g}: kinetic energy increased")
    return report
