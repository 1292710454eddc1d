"""Equilibrium criteria and collapse-time bounds for finite systems.

Every criterion here is stated for unit total mass, zero center of mass and
zero momentum; :func:`require_zero_frame` guards that.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .core import (
    DEFAULT_TOL,
    Particle,
    ParticleState,
    Tolerances,
    center_of_mass,
    check_valid,
    total_momentum,
)

__all__ = [
    "FrameError",
    "require_zero_frame",
    "SplitState",
    "k_split",
    "two_particle_converges",
    "CriterionResult",
    "necessary_condition",
    "sufficient_condition",
    "Envelope",
    "EnvelopePiece",
    "EnvelopeCheck",
    "check_envelope",
    "collapse_time_bound",
    "w2_envelope_bound",
    "extremal_pair",
    "combine_group",
]


class FrameError(ValueError):
    """The state is not in the unit-mass, zero-center, zero-momentum frame."""


def require_zero_frame(state: ParticleState, tol: float = 1e-9) -> None:
    check_valid(state)
    problems = []
    mass = state.total_mass
    if abs(mass - 1.0) > tol:
        problems.append(f"total mass {mass!r} != 1")
    ys = max(abs(y) for y in state.positions)
    vs = max(abs(v) for v in state.velocities)
    if abs(center_of_mass(state)) > tol * max(1.0, ys):
        problems.append(f"center of mass {center_of_mass(state):.3g} != 0")
    if abs(total_momentum(state)) > tol * max(1.0, vs):
        problems.append(f"total momentum {total_momentum(state):.3g} != 0")
    if problems:
        raise FrameError("; ".join(problems))


def _lump(masses, positions, velocities) -> Particle:
    mass = math.fsum(masses)
    y = math.fsum(m * q for m, q in zip(masses, positions)) / mass
    v = math.fsum(m * q for m, q in zip(masses, velocities)) / mass
    return Particle(mass, y, v)


@dataclass(frozen=True)
class SplitState:
    """Two-particle reduction: the ``k`` leftmost particles lumped into
    ``left``, the rest into ``right``."""

    left: Particle
    right: Particle
    k: int

    def as_state(self) -> ParticleState:
        return ParticleState.from_particles([self.left, self.right])


def k_split(state: ParticleState, k: int, frame_tol: float = 1e-9) -> SplitState:
    require_zero_frame(state, frame_tol)
    n = state.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} outside 1..{n - 1}")
    ms, ys, vs = state.masses, state.positions, state.velocities
    return SplitState(_lump(ms[:k], ys[:k], vs[:k]), _lump(ms[k:], ys[k:], vs[k:]), k)


def _approach_margin(left: Particle, right: Particle) -> float:
    # velocity gap minus the gap needed to ever meet: dv - sqrt(M * d0)
    return (left.velocity - right.velocity) - math.sqrt(
        (left.mass + right.mass) * (right.position - left.position))


def two_particle_converges(split: SplitState, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Do the two lumps ever meet?

    Same tangency rule as the simulator: the pair meets when it approaches
    and the discriminant ``dv**2 - M*d0`` is at least ``-M * tol.pos``.
    """
    left, right = split.left, split.right
    dv = left.velocity - right.velocity
    if dv <= 0.0:
        return False
    mm = left.mass + right.mass
    disc = dv * dv - mm * (right.position - left.position)
    return disc >= -mm * tol.pos


@dataclass(frozen=True)
class CriterionResult:
    holds: bool
    # necessary: k values whose split converges; sufficient: k values that fail
    ks: tuple[int, ...]
    margins: tuple[float, ...] = field(repr=False, default=())

    def __bool__(self) -> bool:
        return self.holds


def _splits(state, tol):
    require_zero_frame(state)
    if state.n == 1:
        return []
    out = []
    for k in range(1, state.n):
        sp = k_split(state, k)
        out.append((k, two_particle_converges(sp, tol), _approach_margin(sp.left, sp.right)))
    return out


def necessary_condition(state: ParticleState, tol: Tolerances = DEFAULT_TOL) -> CriterionResult:
    """False certifies the state never reaches equilibrium."""
    rows = _splits(state, tol)
    if not rows:
        return CriterionResult(True, ())
    good = tuple(k for k, ok, _ in rows if ok)
    return CriterionResult(bool(good), good, tuple(r[2] for r in rows))


def sufficient_condition(state: ParticleState, tol: Tolerances = DEFAULT_TOL) -> CriterionResult:
    """True certifies the state reaches equilibrium."""
    rows = _splits(state, tol)
    if not rows:
        return CriterionResult(True, ())
    bad = tuple(k for k, ok, _ in rows if not ok)
    return CriterionResult(not bad, bad, tuple(r[2] for r in rows))


@dataclass(frozen=True)
class Envelope:
    """Shrinking parabolic tube ``[y_L0 f(t), y_R0 f(t)]``."""

    y_L0: float
    y_R0: float

    @property
    def width(self) -> float:
        return self.y_R0 - self.y_L0

    @property
    def closing_time(self) -> float:
        return 2.0 * math.sqrt(self.width)

    def f(self, t: float) -> float:
        r = max(self.closing_time - t, 0.0)
        return r * r / (4.0 * self.width)

    def f_L(self, t: float) -> float:
        return self.y_L0 * self.f(t)

    def f_R(self, t: float) -> float:
        return self.y_R0 * self.f(t)


@dataclass(frozen=True)
class EnvelopePiece:
    """Signed excursions past the envelope on ``[t0, t1]`` as quadratics in
    ``tau = t - t0``: ``right`` is ``y_R - f_R`` and ``left`` is
    ``f_L - y_L``; each is ``(a0, a1, a2)`` for ``a0 + a1 tau + a2 tau**2``."""

    t0: float
    t1: float
    right: tuple[float, float, float]
    left: tuple[float, float, float]


@dataclass(frozen=True)
class EnvelopeCheck:
    within: bool
    first_exit_time: float | None
    envelope: Envelope
    pieces: tuple[EnvelopePiece, ...]

    def __bool__(self) -> bool:
        return self.within


def _quad_roots(a0: float, a1: float, a2: float) -> list[float]:
    """Real roots of ``a0 + a1 x + a2 x**2``, sorted."""
    if a2 == 0.0:
        if a1 == 0.0:
            return []
        return [-a0 / a1]
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        return []
    q = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
    if q == 0.0:
        return [0.0]
    return sorted({q / a2, a0 / q})


def _eval(c, x):
    return c[0] + x * (c[1] + x * c[2])


def _first_exceed(c, lo: float, hi: float, tol: float) -> float | None:
    """Infimum of ``{x in [lo, hi] : q(x) > tol}``; ``hi`` may be inf."""
    if _eval(c, lo) > tol:
        return lo
    # q - tol keeps one sign between consecutive roots
    pts = [lo] + [r for r in _quad_roots(c[0] - tol, c[1], c[2]) if lo < r < hi]
    if not math.isinf(hi):
        pts.append(hi)
    for i, p in enumerate(pts):
        if i + 1 < len(pts):
            probe = 0.5 * (p + pts[i + 1])
        elif math.isinf(hi):
            probe = p + 1.0
        else:
            break
        if _eval(c, probe) > tol:
            return p
    return None


def _last_zero(c, lo: float, hit: float) -> float:
    zeros = [r for r in _quad_roots(*c) if lo <= r <= hit]
    return max(zeros) if zeros else lo


def check_envelope(log, tol: Tolerances = DEFAULT_TOL) -> EnvelopeCheck:
    """Exact test of whether the support stays inside the envelope.

    The extreme particles move on one parabola per segment and the envelope
    is a parabola until it closes, so each piece reduces to the sign of a
    quadratic. Touching the envelope (within ``tol.pos``) counts as inside.
    """
    init = log.initial
    require_zero_frame(init)
    env = Envelope(init.positions[0], init.positions[-1])
    T = env.closing_time
    k = 1.0 / (4.0 * env.width)
    pieces = []
    exit_time = None
    for t0, t1, s in log.segments():
        if t1 - t0 <= tol.time and not math.isinf(t1):
            continue
        nL = 0
        nR = s.n - 1
        left_m = math.fsum(s.masses[:-1])
        right_m = math.fsum(s.masses[1:])
        cR = 0.25 * left_m
        cL = -0.25 * right_m
        yR, vR = s.positions[nR], s.velocities[nR]
        yL, vL = s.positions[nL], s.velocities[nL]
        bounds = []
        if t0 < T:
            bounds.append((t0, min(t1, T), True))
        if t1 > T:
            bounds.append((max(t0, T), t1, False))
        for a, b, shrinking in bounds:
            if b - a <= tol.time and not math.isinf(b):
                continue
            u = a - t0
            # extreme trajectories re-expanded about tau = 0 at time a
            yRa = yR + vR * u + cR * u * u
            vRa = vR + 2 * cR * u
            yLa = yL + vL * u + cL * u * u
            vLa = vL + 2 * cL * u
            if shrinking:
                r = T - a
                right = (yRa - env.y_R0 * k * r * r, vRa + 2 * env.y_R0 * k * r, cR - env.y_R0 * k)
                left = (env.y_L0 * k * r * r - yLa, -2 * env.y_L0 * k * r - vLa, env.y_L0 * k - cL)
            else:
                right = (yRa, vRa, cR)
                left = (-yLa, -vLa, -cL)
            pieces.append(EnvelopePiece(a, b, right, left))
            if exit_time is None and s.n == 1 and math.isinf(b) and not shrinking:
                # collapsed: the equilibrium sits at the closed envelope
                if abs(yRa) > tol.pos or abs(vRa) > tol.vel:
                    exit_time = a
            elif exit_time is None:
                span = b - a
                hits = []
                for c in (right, left):
                    h = _first_exceed(c, 0.0, span, tol.pos)
                    if h is not None:
                        hits.append(_last_zero(c, 0.0, h) if h > 0 else 0.0)
                if hits:
                    exit_time = a + min(hits)
    return EnvelopeCheck(exit_time is None, exit_time, env, tuple(pieces))


def collapse_time_bound(state: ParticleState) -> float:
    """Latest possible collapse time, ``2 sqrt(y_R(0) - y_L(0))``."""
    require_zero_frame(state)
    return 2.0 * math.sqrt(state.positions[-1] - state.positions[0])


def w2_envelope_bound(state0: ParticleState, t: float) -> float:
    """Upper bound on the distance to equilibrium at time ``t`` for any
    collapsing solution started from ``state0``'s support."""
    require_zero_frame(state0)
    yl, yr = state0.positions[0], state0.positions[-1]
    r = max(2.0 * math.sqrt(yr - yl) - t, 0.0)
    return math.sqrt(-yr * yl) / (4.0 * (yr - yl)) * r * r


def extremal_pair(y_L0: float, y_R0: float) -> ParticleState:
    """Two-particle perfect system that traces the envelope exactly."""
    if not y_L0 < 0 < y_R0:
        raise ValueError("need y_L0 < 0 < y_R0")
    from .perfect import synthesize_perfect

    w = y_R0 - y_L0
    ms = (y_R0 / w, -y_L0 / w)
    ys = (y_L0, y_R0)
    return ParticleState(ms, ys, synthesize_perfect(ms, ys))


def combine_group(state: ParticleState, indices: Iterable[int]) -> ParticleState:
    """Replace a contiguous group by one particle at its center of mass with
    its total mass and momentum."""
    idx = sorted(set(indices))
    if not idx:
        raise ValueError("empty group")
    a, b = idx[0], idx[-1]
    if idx != list(range(a, b + 1)):
        raise ValueError(f"group {idx} is not contiguous")
    if a < 0 or b >= state.n:
        raise IndexError(f"group {idx} out of range")
    ms, ys, vs = state.masses, state.positions, state.velocities
    p = _lump(ms[a:b + 1], ys[a:b + 1], vs[a:b + 1])
    return ParticleState(ms[:a] + (p.mass,) + ms[b + 1:],
                         ys[:a] + (p.position,) + ys[b + 1:],
                         vs[:a] + (p.velocity,) + vs[b + 1:], state.time)
