"""Perfect velocity fields: every collision glancing, ending in equilibrium.

For a finite mass distribution with zero center of mass there is exactly one
such velocity field. :func:`synthesize_perfect` builds it by repeatedly fusing
the adjacent pair that would glance first and then unwinding the fusions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import DEFAULT_TOL, CollapsedAt, Outcome, ParticleState, Tolerances, check_valid
from .dynamics import simulate
from .energy import audit

__all__ = ["MIN_GAP", "synthesize_perfect", "PerfectReport", "verify_perfect", "glancing_time"]

MIN_GAP = 1e-10


def glancing_time(m0: float, m1: float, gap: float) -> float:
    """Time at which two adjacent particles meet tangentially, absent
    interference: ``2 sqrt(gap / (m0 + m1))``."""
    return 2.0 * math.sqrt(gap / (m0 + m1))


def synthesize_perfect(masses: Sequence[float], positions: Sequence[float],
                       tol: Tolerances = DEFAULT_TOL) -> tuple[float, ...]:
    masses = [float(m) for m in masses]
    positions = [float(y) for y in positions]
    if len(masses) != len(positions) or not masses:
        raise ValueError("masses and positions must be nonempty and equally long")
    check_valid(ParticleState(masses, positions, [0.0] * len(masses)))
    for i in range(len(positions) - 1):
        if positions[i + 1] - positions[i] < MIN_GAP:
            raise ValueError(f"gap below {MIN_GAP:g} at index {i}; too degenerate to synthesize")
    moment = math.fsum(m * y for m, y in zip(masses, positions))
    scale = math.fsum(m * abs(y) for m, y in zip(masses, positions))
    if abs(moment) > tol.pos * max(1.0, scale):
        raise ValueError(f"center of mass must be 0 (mass moment is {moment:.3g})")

    # fuse down to one particle, remembering how to split each fusion
    ms, ys = masses[:], positions[:]
    stack = []
    while len(ms) > 1:
        j = min(range(len(ms) - 1), key=lambda i: (ys[i + 1] - ys[i]) / (ms[i] + ms[i + 1]))
        mm = ms[j] + ms[j + 1]
        root = math.sqrt((ys[j + 1] - ys[j]) / mm)
        stack.append((j, ms[j], ms[j + 1], root))
        ys[j:j + 2] = [(ms[j] * ys[j] + ms[j + 1] * ys[j + 1]) / mm]
        ms[j:j + 2] = [mm]

    vs = [0.0]
    while stack:
        j, mj, mk, root = stack.pop()
        vstar = vs[j]
        vs[j:j + 1] = [vstar + mk * root, vstar - mj * root]
    return tuple(vs)


@dataclass(frozen=True)
class PerfectReport:
    perfect: bool
    velocities: tuple[float, ...]
    outcome: Outcome
    collapse_time: float | None
    glancing: tuple[bool, ...]
    h_residual: float
    final_particle: tuple[float, float, float] | None
    reason: str = ""


def verify_perfect(state: ParticleState, tol: Tolerances = DEFAULT_TOL,
                   h_tol: float = 1e-8, samples: int = 20) -> PerfectReport:
    """Simulate ``state`` and decide whether the solution is perfect.

    Perfect means: it collapses, every merge is glancing, and the Hamiltonian
    stays at ``momentum**2 / mass`` (within ``h_tol``) at every sample and on
    both sides of every event.
    """
    log = simulate(state, tol=tol)
    mass = state.total_mass
    mom = math.fsum(m * v for m, v in zip(state.masses, state.velocities))
    target = mom * mom / mass
    report = audit(log, samples=samples)
    hs = [s.hamiltonian for s in report.samples()]
    for ev in report.events:
        hs += [ev.before.hamiltonian, ev.after.hamiltonian]
    residual = max(abs(h - target) for h in hs)
    glancing = tuple(g for e in log.events for g in e.glancing)

    reasons = []
    if not isinstance(log.outcome, CollapsedAt):
        reasons.append(f"outcome {log.outcome.kind}")
    if not all(glancing):
        reasons.append("non-glancing collision")
    if residual > h_tol:
        reasons.append(f"Hamiltonian residual {residual:.3e}")
    final = None
    collapse = None
    if isinstance(log.outcome, CollapsedAt):
        collapse = log.outcome.time
        fs = log.final_state
        final = (fs.masses[0], fs.positions[0], fs.velocities[0])
    return PerfectReport(not reasons, state.velocities, log.outcome, collapse,
                         glancing, residual, final, "; ".join(reasons))
