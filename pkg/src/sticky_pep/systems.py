"""Reference systems with known behaviour, plus random generators for
property checks."""
from __future__ import annotations

import math

import numpy as np

from .core import ParticleState

__all__ = [
    "glancing_pair",
    "near_miss_pair",
    "perfect_thirds",
    "split_uniform_approximation",
    "nested_pairs",
    "nested_pair_collision_time",
    "random_state",
    "random_zero_frame_positions",
]

SQRT2_2 = math.sqrt(2.0) / 2.0


def glancing_pair() -> ParticleState:
    """Two halves at -1 and 1 closing at exactly the glancing speed; they
    meet at the origin at time ``2 sqrt 2`` and stay there."""
    return ParticleState((0.5, 0.5), (-1.0, 1.0), (SQRT2_2, -SQRT2_2))


def near_miss_pair(eps: float) -> ParticleState:
    """The glancing pair pushed ``eps`` further apart: the particles stop
    short of each other and separate forever."""
    return ParticleState((0.5, 0.5), (-1.0 - eps, 1.0 + eps), (SQRT2_2, -SQRT2_2))


def perfect_thirds() -> ParticleState:
    v = math.sqrt(2.0 / 3.0)
    return ParticleState((1 / 3, 1 / 3, 1 / 3), (-1.0, 0.0, 1.0), (v, 0.0, -v))


def split_uniform_approximation(n: int) -> ParticleState:
    """``2n+1`` equal masses approximating the uniform density on [-1, 1]
    with velocity ``-y``, with the two halves nudged apart by ``1/n``.

    As ``n`` grows the solution tends to two half-masses that separate and
    then fall back together, sitting at ``+-(t-2)**2/8`` for ``t >= 2``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    idx = np.arange(-n, n + 1)
    ys = (idx + np.sign(idx)) / n
    vs = np.sign(ys) / n - ys
    m = 1.0 / (2 * n + 1)
    return ParticleState((m,) * (2 * n + 1), tuple(ys.tolist()), tuple(vs.tolist()))


def nested_pairs(pairs: int) -> ParticleState:
    """Finite truncation of an infinite nest of mirrored pairs.

    Pair ``i`` (1-based, outermost first) carries ``2**-(i+1)`` on each side at
    ``+-3**(1-i)`` and falls inward at ``(3 sqrt2 / 2) 6**(-i/2)``. The total
    mass is ``1 - 2**-pairs``.
    """
    if pairs < 1:
        raise ValueError("need at least one pair")
    right = [(2.0 ** -(i + 1), 3.0 ** (1 - i), -1.5 * math.sqrt(2.0) * 6.0 ** (-i / 2))
             for i in range(1, pairs + 1)]
    left = [(m, -y, -v) for m, y, v in right]
    rows = left + right[::-1]
    ms, ys, vs = zip(*rows)
    return ParticleState(ms, ys, vs)


def nested_pair_collision_time(i: int, pairs: int) -> float:
    """Time at which pair ``i`` of :func:`nested_pairs` reaches the origin.

    The mass imbalance across the right member is ``3 * 2**-(i+1) - 2**-pairs``
    and stays so until it arrives, since everything inside it collapses onto
    the origin first.
    """
    y0 = 3.0 ** (1 - i)
    speed = 1.5 * math.sqrt(2.0) * 6.0 ** (-i / 2)
    # speed**2 - 4 c y0 simplifies to 2**-pairs * 3**(1-i); without the
    # truncation the pair would arrive exactly tangent
    disc = 2.0 ** -pairs * y0
    return 2.0 * y0 / (speed + math.sqrt(disc))


def random_state(rng: np.random.Generator, n: int, zero_frame: bool = False,
                 vel_scale: float = 1.0, min_gap: float = 1e-3) -> ParticleState:
    """Random valid state with total mass 1, positions in about [-1, 1]."""
    ms = rng.uniform(0.1, 1.0, n)
    ms /= ms.sum()
    while True:
        ys = np.sort(rng.uniform(-1.0, 1.0, n))
        if n == 1 or np.diff(ys).min() > min_gap:
            break
    vs = rng.normal(0.0, vel_scale, n)
    if zero_frame:
        ys -= ms @ ys
        vs -= ms @ vs
    return ParticleState(tuple(ms.tolist()), tuple(ys.tolist()), tuple(vs.tolist()))


def random_zero_frame_positions(rng: np.random.Generator, n: int,
                                min_gap: float = 1e-3) -> tuple[tuple[float, ...], tuple[float, ...]]:
    s = random_state(rng, n, zero_frame=True, min_gap=min_gap)
    return s.masses, s.positions
