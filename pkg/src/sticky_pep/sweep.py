"""Convergence-region sweeps: shift one particle's position and velocity
over a grid and classify every resulting system.

Cells are independent, so they are farmed out to a process pool row by row
and reassembled by index. Output never depends on scheduling.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _pykernel
from ._backend import run_outcome
from .core import DEFAULT_TOL, ParticleState, Tolerances, check_valid, validate
from .energy import hamiltonian

__all__ = ["Cell", "RegionGrid", "sweep", "default_workers", "write_raster", "write_ppm",
           "format_cell", "colormap", "hamiltonian_trend"]

DIVERGES = "D"
INVALID = "I"


@dataclass(frozen=True)
class Cell:
    kind: str  # "C", "D" or "I"
    collapse_time: float | None = None
    hamiltonian: float | None = None

    @property
    def converges(self) -> bool:
        return self.kind == "C"


@dataclass(frozen=True)
class RegionGrid:
    """Sweep result. ``cells[r][c]`` has velocity offset ``dv[r]`` and
    position offset ``dx[c]``."""

    base: ParticleState
    particle: int
    dx: tuple[float, ...]
    dv: tuple[float, ...]
    cells: tuple[tuple[Cell, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.dv), len(self.dx)

    def cell_at(self, x_offset: float, v_offset: float) -> Cell:
        c = int(np.argmin(np.abs(np.asarray(self.dx) - x_offset)))
        r = int(np.argmin(np.abs(np.asarray(self.dv) - v_offset)))
        return self.cells[r][c]

    def counts(self) -> dict[str, int]:
        out = {"C": 0, "D": 0, "I": 0}
        for row in self.cells:
            for cell in row:
                out[cell.kind] += 1
        return out


def default_workers() -> int:
    env = os.environ.get("STICKY_PEP_WORKERS")
    if env:
        try:
            k = int(env)
        except ValueError:
            raise ValueError(f"STICKY_PEP_WORKERS must be an integer, got {env!r}") from None
        if k < 1:
            raise ValueError("STICKY_PEP_WORKERS must be at least 1")
        return k
    return os.cpu_count() or 1


def _classify(masses, positions, velocities, tol: Tolerances) -> Cell:
    state = ParticleState(masses, positions, velocities)
    if validate(state):
        return Cell(INVALID)
    code, t_end = run_outcome(masses, positions, velocities, tol.time, tol.pos)
    if code == _pykernel.DIVERGES:
        return Cell(DIVERGES)
    return Cell("C", t_end, hamiltonian(state))


def _row(args) -> tuple[int, tuple[Cell, ...]]:
    r, dv, dxs, masses, positions, velocities, i, tol = args
    ys = list(positions)
    vs = list(velocities)
    vs[i] = velocities[i] + dv
    out = []
    for dx in dxs:
        ys[i] = positions[i] + dx
        out.append(_classify(masses, tuple(ys), tuple(vs), tol))
    return r, tuple(out)


def _axis(lo: float, hi: float, n: int) -> tuple[float, ...]:
    if n < 1:
        raise ValueError("grid resolution must be positive")
    if n == 1:
        return (0.5 * (lo + hi),)
    return tuple(np.linspace(lo, hi, n).tolist())


def sweep(base: ParticleState, particle: int = 0, res_x: int = 101, res_y: int = 101,
          range_x: Sequence[float] = (-2.0, 2.0), range_y: Sequence[float] = (-2.0, 2.0),
          workers: int | None = None, tol: Tolerances = DEFAULT_TOL) -> RegionGrid:
    """Classify the base system with particle ``particle`` shifted by every
    (position, velocity) offset on the grid.

    Each cell runs to collapse or certified divergence, with no time cutoff.
    Offsets that break the strict ordering of positions give Invalid cells.
    """
    check_valid(base)
    if not 0 <= particle < base.n:
        raise ValueError(f"particle index {particle} out of range for {base.n} particles")
    dx = _axis(float(range_x[0]), float(range_x[1]), res_x)
    dv = _axis(float(range_y[0]), float(range_y[1]), res_y)
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ValueError("workers must be at least 1")
    jobs = [(r, v, dx, base.masses, base.positions, base.velocities, particle, tol)
            for r, v in enumerate(dv)]
    rows: list = [None] * len(dv)
    if workers == 1:
        for job in jobs:
            r, row = _row(job)
            rows[r] = row
    else:
        chunk = max(1, len(jobs) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for r, row in pool.map(_row, jobs, chunksize=chunk):
                rows[r] = row
    return RegionGrid(base, particle, dx, dv, tuple(rows))


def format_cell(cell: Cell) -> str:
    if cell.kind == "C":
        return f"{cell.collapse_time!r};{cell.hamiltonian!r}"
    return cell.kind


def write_raster(grid: RegionGrid, path) -> None:
    """One CSV line per velocity offset (lowest first), one field per
    position offset."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in grid.cells:
            fh.write(",".join(format_cell(c) for c in row))
            fh.write("\n")


_BLUE = np.array([40.0, 90.0, 220.0])
_ORANGE = np.array([250.0, 140.0, 20.0])


def colormap(s: float) -> tuple[int, int, int]:
    """Blue at ``s = 0`` to orange at ``s = 1``."""
    s = min(max(s, 0.0), 1.0)
    rgb = _BLUE + s * (_ORANGE - _BLUE)
    return tuple(int(round(c)) for c in rgb)


def write_ppm(grid: RegionGrid, path) -> None:
    """Binary PPM: black diverges, gray invalid, blue to orange with
    increasing Hamiltonian. Velocity offset grows upward."""
    hs = [c.hamiltonian for row in grid.cells for c in row if c.converges]
    lo, hi = (min(hs), max(hs)) if hs else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    h, w = grid.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    for r, row in enumerate(grid.cells):
        for c, cell in enumerate(row):
            if cell.kind == "I":
                img[h - 1 - r, c] = (128, 128, 128)
            elif cell.converges:
                img[h - 1 - r, c] = colormap((cell.hamiltonian - lo) / span)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def hamiltonian_trend(grid: RegionGrid) -> float:
    """Correlation between |velocity offset| and H over converging cells."""
    xs, hs = [], []
    for r, row in enumerate(grid.cells):
        for cell in row:
            if cell.converges:
                xs.append(abs(grid.dv[r]))
                hs.append(cell.hamiltonian)
    if len(xs) < 2 or np.std(xs) == 0 or np.std(hs) == 0:
        return math.nan
    return float(np.corrcoef(xs, hs)[0, 1])
