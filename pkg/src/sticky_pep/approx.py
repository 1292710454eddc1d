"""Continuous initial data and their finite-particle discretizations.

A measure on the line is handled through its quantile function ``N`` on
``[0, 1]``: masses are lengths of ``u``-intervals and moments are integrals
of ``N``. Integrals use adaptive Simpson, split at known kinks and jumps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .analysis import FrameError
from .core import ParticleState

__all__ = [
    "adaptive_simpson",
    "MeasureSpec",
    "velocity_field",
    "parse_measure_config",
    "load_measure_config",
    "discretize",
    "w2_to_discrete",
    "SplitFunctional",
    "split_functional",
    "continuous_margin",
]

SIMPSON_TOL = 1e-10


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = SIMPSON_TOL, max_depth: int = 50) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute accuracy ``tol``."""
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    return _simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_step(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


@dataclass(frozen=True)
class MeasureSpec:
    """A probability measure given by its quantile function, plus an
    initial velocity field on its support.

    ``u_breaks`` lists quantile levels where ``quantile`` has a kink or jump,
    ``y_breaks`` positions where ``velocity`` does. ``cdf``, when given, is
    the closed-form ``mu((-inf, y])`` and ``cdf_left`` is ``mu((-inf, y))``.
    """

    quantile: Callable[[float], float]
    velocity: Callable[[float], float]
    support: tuple[float, float]
    u_breaks: tuple[float, ...] = ()
    y_breaks: tuple[float, ...] = ()
    cdf: Callable[[float], float] | None = field(default=None, repr=False)
    cdf_left: Callable[[float], float] | None = field(default=None, repr=False)
    label: str = ""

    @classmethod
    def uniform(cls, a: float, b: float, velocity: Callable[[float], float],
                y_breaks: Sequence[float] = ()) -> "MeasureSpec":
        a, b = float(a), float(b)
        if not a < b:
            raise ValueError("uniform measure needs a < b")

        def cdf(y):
            return min(max((y - a) / (b - a), 0.0), 1.0)

        return cls(lambda u: a + (b - a) * u, velocity, (a, b), (), tuple(y_breaks),
                   cdf, cdf, f"uniform {a} {b}")

    @classmethod
    def diracs(cls, masses: Sequence[float], positions: Sequence[float],
               velocity: Callable[[float], float], y_breaks: Sequence[float] = ()) -> "MeasureSpec":
        order = np.argsort(positions)
        ys = np.asarray(positions, dtype=float)[order]
        ms = np.asarray(masses, dtype=float)[order]
        if np.any(ms <= 0) or abs(ms.sum() - 1.0) > 1e-12:
            raise ValueError("dirac masses must be positive and sum to 1")
        cum = np.cumsum(ms)
        cum[-1] = 1.0

        def quantile(u):
            j = int(np.searchsorted(cum, u, side="right"))
            return float(ys[min(j, len(ys) - 1)])

        def cdf(y):
            return float(cum[np.searchsorted(ys, y, side="right") - 1]) if y >= ys[0] else 0.0

        def cdf_left(y):
            return float(cum[np.searchsorted(ys, y, side="left") - 1]) if y > ys[0] else 0.0

        return cls(quantile, velocity, (float(ys[0]), float(ys[-1])), tuple(cum[:-1]),
                   tuple(y_breaks), cdf, cdf_left, "diracs")

    @classmethod
    def quantile_table(cls, us: Sequence[float], ys: Sequence[float],
                       velocity: Callable[[float], float],
                       y_breaks: Sequence[float] = ()) -> "MeasureSpec":
        """Piecewise-linear quantile through the points ``(u_k, y_k)``."""
        us = np.asarray(us, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if us[0] != 0.0 or us[-1] != 1.0 or np.any(np.diff(us) <= 0):
            raise ValueError("quantile table must run strictly upward from u=0 to u=1")
        if np.any(np.diff(ys) < 0):
            raise ValueError("quantile table values must be nondecreasing")
        return cls(lambda u: float(np.interp(u, us, ys)), velocity, (float(ys[0]), float(ys[-1])),
                   tuple(us[1:-1]), tuple(y_breaks), label="quantile-table")

    def mass_below(self, y: float, inclusive: bool = False) -> float:
        """``mu((-inf, y])`` if ``inclusive`` else ``mu((-inf, y))``."""
        closed = self.cdf if inclusive else self.cdf_left
        if closed is not None:
            return closed(y)
        lo, hi = 0.0, 1.0
        if inclusive:
            if self.quantile(1.0) <= y:
                return 1.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if self.quantile(mid) <= y:
                    lo = mid
                else:
                    hi = mid
            return hi
        if self.quantile(0.0) >= y:
            return 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if self.quantile(mid) < y:
                lo = mid
            else:
                hi = mid
        return hi

    def _cuts(self, u0: float, u1: float) -> list[float]:
        extra = list(self.u_breaks) + [self.mass_below(y) for y in self.y_breaks] \
            + [self.mass_below(y, inclusive=True) for y in self.y_breaks]
        return [u0] + sorted(u for u in set(extra) if u0 < u < u1) + [u1]

    def integrate(self, g: Callable[[float], float], u0: float, u1: float) -> float:
        """``int_{u0}^{u1} g(u) du`` split at the measure's break points.

        Pieces are evaluated just inside their ends so jump values never leak
        across a break.
        """
        cuts = self._cuts(u0, u1)
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b > a:
                pad = (b - a) * 1e-13
                total += adaptive_simpson(g, a + pad, b - pad) + pad * (g(a + pad) + g(b - pad))
        return total

    def moment(self, u0: float, u1: float) -> float:
        return self.integrate(self.quantile, u0, u1)

    def momentum(self, u0: float, u1: float) -> float:
        return self.integrate(lambda u: self.velocity(self.quantile(u)), u0, u1)


def velocity_field(kind: str, params: Sequence[float]) -> tuple[Callable[[float], float], tuple[float, ...]]:
    """Build ``v0`` from a config keyword; returns the field and its jump
    locations."""
    if kind == "linear":
        (c,) = params
        return (lambda y: c * y), ()
    if kind == "sgn-scaled":
        (c,) = params
        return (lambda y: c * (y > 0) - c * (y < 0)), (0.0,)
    if kind == "table":
        pts = np.asarray(params, dtype=float).reshape(-1, 2)
        xs, vs = pts[:, 0], pts[:, 1]
        if np.any(np.diff(xs) <= 0):
            raise ValueError("velocity table positions must increase")
        return (lambda y: float(np.interp(y, xs, vs))), ()
    raise ValueError(f"unknown velocity kind {kind!r}")


def parse_measure_config(text: str) -> MeasureSpec:
    """Parse a two-line measure description.

    Example::

        measure: uniform -1 1
        velocity: linear -2

    Measures: ``uniform a b``, ``diracs m1 y1 m2 y2 ...``,
    ``quantile-table u1 y1 u2 y2 ...``. Velocities: ``linear c``,
    ``sgn-scaled c``, ``table y1 v1 y2 v2 ...``.
    """
    fields = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise ValueError(f"expected 'key: value', got {raw!r}")
        fields[key.strip()] = rest.split()
    if "measure" not in fields or "velocity" not in fields:
        raise ValueError("config needs both 'measure:' and 'velocity:' lines")
    vkind, *vparams = fields["velocity"]
    vel, ybreaks = velocity_field(vkind, [float(x) for x in vparams])
    mkind, *mparams = fields["measure"]
    nums = [float(x) for x in mparams]
    if mkind == "uniform":
        return MeasureSpec.uniform(nums[0], nums[1], vel, ybreaks)
    if mkind == "diracs":
        if len(nums) % 2:
            raise ValueError("diracs needs mass/position pairs")
        return MeasureSpec.diracs(nums[0::2], nums[1::2], vel, ybreaks)
    if mkind == "quantile-table":
        if len(nums) % 2:
            raise ValueError("quantile-table needs u/y pairs")
        return MeasureSpec.quantile_table(nums[0::2], nums[1::2], vel, ybreaks)
    raise ValueError(f"unknown measure kind {mkind!r}")


def load_measure_config(path) -> MeasureSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_measure_config(fh.read())


def discretize(spec: MeasureSpec, n: int) -> ParticleState:
    """Lump the measure into bins of width ``1/n`` covering ``[-1, 1]``.

    Each nonempty bin becomes one particle at the bin's center of mass,
    carrying the bin's mass and the initial velocity evaluated there.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    lo, hi = spec.support
    if lo < -1.0 or hi > 1.0:
        raise ValueError(f"support [{lo}, {hi}] not inside [-1, 1]")
    ms, ys, vs = [], [], []
    for k in range(-n, n):
        a = k / n
        ua = spec.mass_below(a)
        ub = 1.0 if k == n - 1 else spec.mass_below((k + 1) / n)
        mass = ub - ua
        if mass <= 1e-14:
            continue
        y = spec.moment(ua, ub) / mass
        ms.append(mass)
        ys.append(y)
        vs.append(spec.velocity(y))
    if not ms:
        raise ValueError("no bin carries mass")
    return ParticleState(ms, ys, vs)


def w2_to_discrete(spec: MeasureSpec, state: ParticleState) -> float:
    """Quadratic Wasserstein distance from the measure to a particle state,
    through the quantile coupling."""
    cum = np.cumsum(state.masses)
    total = cum[-1]
    if abs(total - 1.0) > 1e-9:
        raise ValueError("particle state must carry unit mass")
    edges = [0.0] + list(cum[:-1]) + [1.0]
    acc = []
    for j, y in enumerate(state.positions):
        acc.append(spec.integrate(lambda u, y=y: (spec.quantile(u) - y) ** 2, edges[j], edges[j + 1]))
    return math.sqrt(max(math.fsum(acc), 0.0))


@dataclass(frozen=True)
class SplitFunctional:
    """Lumped left/right means at each admissible cut ``y`` and the margin
    ``V_L - V_R - sqrt(Y_R - Y_L)``."""

    y: np.ndarray
    Y_L: np.ndarray
    Y_R: np.ndarray
    V_L: np.ndarray
    V_R: np.ndarray
    E: np.ndarray

    @property
    def margin(self) -> float:
        return float(self.E.min())

    @property
    def argmin(self) -> float:
        return float(self.y[int(self.E.argmin())])


def _require_zero_frame(spec: MeasureSpec, tol: float = 1e-8) -> None:
    com = spec.moment(0.0, 1.0)
    mom = spec.momentum(0.0, 1.0)
    if abs(com) > tol or abs(mom) > tol:
        raise FrameError(f"need zero center of mass and momentum, got {com:.3g}, {mom:.3g}")


def split_functional(spec: MeasureSpec, grid_size: int) -> SplitFunctional:
    """Evaluate the split margin at the cuts ``y = N(k/G)``, ``k = 1..G-1``,
    keeping those with ``0 < mu((-inf, y]) < 1``."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    _require_zero_frame(spec)
    rows = []
    seen = set()
    for k in range(1, grid_size):
        y = spec.quantile(k / grid_size)
        if y in seen:
            continue
        seen.add(y)
        u = spec.mass_below(y, inclusive=True)
        if not 1e-12 < u < 1.0 - 1e-12:
            continue
        yl = spec.moment(0.0, u) / u
        yr = spec.moment(u, 1.0) / (1.0 - u)
        vl = spec.momentum(0.0, u) / u
        vr = spec.momentum(u, 1.0) / (1.0 - u)
        rows.append((y, yl, yr, vl, vr, vl - vr - math.sqrt(max(yr - yl, 0.0))))
    if not rows:
        raise ValueError("no admissible cut: the measure is a single point")
    cols = np.array(rows).T
    return SplitFunctional(*cols)


def continuous_margin(spec: MeasureSpec, grid_size: int = 200) -> tuple[float, float]:
    """Smallest split margin over the grid and where it occurs. A positive
    value means fine discretizations collapse by time ``2 sqrt(2)``."""
    sf = split_functional(spec, grid_size)
    return sf.margin, sf.argmin
