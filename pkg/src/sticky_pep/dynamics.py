"""Exact kinematics, collision solving and the sticky event loop.

Between collisions every particle follows a parabola whose curvature is set
by the mass imbalance across it, so a whole solution is a finite list of
merge events. :func:`simulate` produces that list; :func:`sample_trajectory`
replays it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _pykernel
from ._backend import run_events
from .core import (
    DEFAULT_TOL,
    CollapsedAt,
    Diverges,
    Outcome,
    ParticleState,
    Tolerances,
    TruncatedAt,
    check_valid,
)
from .energy import hamiltonian

__all__ = [
    "CollisionEvent",
    "EventLog",
    "acceleration",
    "free_flight",
    "ghost_trajectory",
    "next_collision",
    "merge",
    "simulate",
    "sample_trajectory",
]


@dataclass(frozen=True)
class CollisionEvent:
    """One merge instant.

    ``clusters`` are inclusive ``(first, last)`` index ranges into
    ``pre_state``; each collapses to one particle of ``post_state``.
    """

    time: float
    clusters: tuple[tuple[int, int], ...]
    pre_state: ParticleState
    post_state: ParticleState
    glancing: tuple[bool, ...]
    hamiltonian_before: float
    hamiltonian_after: float

    @property
    def pre_velocities(self) -> tuple[tuple[float, ...], ...]:
        vs = self.pre_state.velocities
        return tuple(tuple(vs[a:b + 1]) for a, b in self.clusters)

    @property
    def post_velocities(self) -> tuple[float, ...]:
        out = []
        shift = 0
        for a, b in self.clusters:
            out.append(self.post_state.velocities[a - shift])
            shift += b - a
        return tuple(out)

    @property
    def cluster_masses(self) -> tuple[tuple[float, ...], ...]:
        ms = self.pre_state.masses
        return tuple(tuple(ms[a:b + 1]) for a, b in self.clusters)

    def to_dict(self) -> dict:
        return {
            "t": self.time,
            "clusters": [list(c) for c in self.clusters],
            "pre_velocities": [list(v) for v in self.pre_velocities],
            "post_velocities": list(self.post_velocities),
            "glancing": list(self.glancing),
            "H_before": self.hamiltonian_before,
            "H_after": self.hamiltonian_after,
        }


@dataclass(frozen=True)
class EventLog:
    initial: ParticleState
    events: tuple[CollisionEvent, ...]
    outcome: Outcome
    tol: Tolerances = DEFAULT_TOL

    @property
    def horizon(self) -> float:
        """Last time the log describes; infinite unless truncated."""
        if isinstance(self.outcome, TruncatedAt):
            return self.outcome.time
        return math.inf

    @property
    def final_state(self) -> ParticleState:
        return self.events[-1].post_state if self.events else self.initial

    def segment_starts(self) -> list[ParticleState]:
        return [self.initial] + [e.post_state for e in self.events]

    def segments(self) -> list[tuple[float, float, ParticleState]]:
        """``(t_start, t_end, state_at_start)`` for each collision-free piece."""
        starts = self.segment_starts()
        ends = [e.time for e in self.events] + [self.horizon]
        return [(s.time, te, s) for s, te in zip(starts, ends)]

    def state_at(self, t: float, side: str = "+") -> ParticleState:
        """Exact state at time ``t``.

        At an event time, ``side="-"`` gives the pre-merge state and ``"+"``
        the merged one.
        """
        if t < self.initial.time:
            raise ValueError(f"time {t} precedes the initial state")
        if t > self.horizon:
            raise ValueError(f"time {t} beyond log horizon {self.horizon}")
        seg = self.initial
        for e in self.events:
            if e.time < t:
                seg = e.post_state
            elif e.time == t:
                return e.pre_state if side == "-" else e.post_state
            else:
                break
        return free_flight(seg, t - seg.time)

    def membership(self) -> list[list[int]]:
        """For each segment, the current index of every initial particle."""
        cur = list(range(self.initial.n))
        out = [cur[:]]
        for e in self.events:
            remap = []
            shift = 0
            ci = 0
            clusters = e.clusters
            for k in range(e.pre_state.n):
                while ci < len(clusters) and k > clusters[ci][1]:
                    shift += clusters[ci][1] - clusters[ci][0]
                    ci += 1
                if ci < len(clusters) and clusters[ci][0] <= k <= clusters[ci][1]:
                    remap.append(clusters[ci][0] - shift)
                else:
                    remap.append(k - shift)
            cur = [remap[c] for c in cur]
            out.append(cur[:])
        return out


def _left_right(masses: Sequence[float], i: int) -> tuple[float, float]:
    left = math.fsum(masses[:i])
    right = math.fsum(masses[i + 1:])
    return left, right


def acceleration(state: ParticleState, i: int) -> float:
    """Acceleration of particle ``i``: half the mass to its left minus half
    the mass to its right."""
    if not 0 <= i < state.n:
        raise IndexError(f"particle index {i} out of range for {state.n} particles")
    left, right = _left_right(state.masses, i)
    return 0.5 * (left - right)


def free_flight(state: ParticleState, dt: float) -> ParticleState:
    """Advance every particle along its parabola for ``dt``.

    Only valid when no collision happens inside ``(0, dt)``.
    """
    if dt == 0:
        return state
    ys, vs = _pykernel.flight(state.masses, state.positions, state.velocities, dt)
    return ParticleState(state.masses, tuple(ys), tuple(vs), state.time + dt)


def ghost_trajectory(state: ParticleState, i: int, t: float) -> float:
    """Position at time ``state.time + t`` of particle ``i``'s initial
    parabola, ignoring all collisions."""
    a = acceleration(state, i)
    return state.positions[i] + t * state.velocities[i] + 0.5 * a * t * t


def next_collision(state: ParticleState, tol: Tolerances = DEFAULT_TOL):
    """Time until the next collision and the clusters merging then.

    Returns ``None`` when no adjacent pair ever meets, which certifies that
    the state never collides again. Clusters are inclusive index ranges.
    """
    if state.n < 2:
        raise ValueError("next_collision needs at least two particles")
    dt, clusters = _pykernel.next_collision(
        state.masses, state.positions, state.velocities, tol.time, tol.pos)
    if dt == math.inf:
        return None
    return dt, clusters


def merge(state: ParticleState, clusters, tol: Tolerances = DEFAULT_TOL) -> ParticleState:
    """Replace each co-located contiguous cluster by one particle carrying
    the summed mass and momentum."""
    clusters = [tuple(c) for c in clusters]
    prev = -1
    for c in clusters:
        if len(c) != 2:
            raise ValueError(f"cluster {c} is not an index range")
        a, b = c
        if not (prev < a < b < state.n):
            raise ValueError(f"cluster {c} is not contiguous, ordered and disjoint")
        span = state.positions[b] - state.positions[a]
        if span > tol.pos:
            raise ValueError(f"cluster {c} is not co-located (spread {span:.3g})")
        prev = b
    ms, ys, vs = _pykernel.merge_clusters(state.masses, state.positions, state.velocities, clusters)
    return ParticleState(tuple(ms), tuple(ys), tuple(vs), state.time)


def _spread(values: Sequence[float]) -> float:
    return max(values) - min(values)


def simulate(state: ParticleState, t_max: float = math.inf,
             tol: Tolerances = DEFAULT_TOL) -> EventLog:
    """Run the sticky dynamics until collapse, certified divergence, or
    ``t_max`` (absolute time)."""
    check_valid(state)
    if not t_max > state.time:
        raise ValueError("t_max must exceed the state's time")
    raw, code, t_end = run_events(state.masses, state.positions, state.velocities,
                                  state.time, t_max, tol.time, tol.pos)
    events = []
    for t, clusters, pre_y, pre_v, post_m, post_y, post_v in raw:
        pre_m = events[-1].post_state.masses if events else state.masses
        pre = ParticleState(pre_m, pre_y, pre_v, t)
        post = ParticleState(post_m, post_y, post_v, t)
        clusters = tuple(tuple(c) for c in clusters)
        glancing = tuple(_spread(pre_v[a:b + 1]) <= tol.vel for a, b in clusters)
        events.append(CollisionEvent(t, clusters, pre, post, glancing,
                                     hamiltonian(pre), hamiltonian(post)))
    if code == _pykernel.COLLAPSED:
        outcome = CollapsedAt(t_end)
    elif code == _pykernel.DIVERGES:
        outcome = Diverges()
    else:
        outcome = TruncatedAt(t_end)
    return EventLog(state, tuple(events), outcome, tol)


def sample_trajectory(log: EventLog, times: Sequence[float]) -> np.ndarray:
    """Positions of every initial particle at each query time.

    Merged particles report the merged trajectory, so the result always has
    one column per initial particle.
    """
    times = np.asarray(times, dtype=float)
    if times.size and np.any(np.diff(times) < 0):
        raise ValueError("query times must be sorted")
    if times.size and (times[0] < log.initial.time or times[-1] > log.horizon):
        raise ValueError("query time outside the log's time span")
    segs = log.segments()
    members = log.membership()
    out = np.empty((times.size, log.initial.n))
    k = 0
    for row, t in enumerate(times):
        while k + 1 < len(segs) and t >= segs[k + 1][0]:
            k += 1
        s = segs[k][2]
        cur = free_flight(s, t - s.time).positions
        out[row] = [cur[c] for c in members[k]]
    return out
