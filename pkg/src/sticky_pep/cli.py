"""Command-line entry point: ``sticky-pep <command> ...``.

Exit status is 0 on success, 2 when an input fails validation and 3 on I/O
trouble.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Sequence

import numpy as np

from .core import DEFAULT_TOL, InvalidStateError, ParticleState, Tolerances, normalize_galilean, validate

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3


class StateFormatError(ValueError):
    pass


def _parse_rows(path, need: int) -> list[list[float]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r, raw in enumerate(csv.reader(fh), start=1):
            if len(rows) == need:
                break  # later rows are cached data
            cells = [c.strip() for c in raw]
            if not any(cells):
                continue
            row = []
            for c, text in enumerate(cells, start=1):
                try:
                    row.append(float(text))
                except ValueError:
                    raise StateFormatError(f"row {r}, column {c}: cannot parse {text!r}") from None
            rows.append(row)
    return rows


def load_state(path) -> ParticleState:
    """Read a state CSV: masses, positions, velocities, one row each.

    Rows past the third are ignored.
    """
    rows = _parse_rows(path, 3)
    names = ("mass", "position", "velocity")
    if len(rows) < 3:
        raise StateFormatError(f"missing {names[len(rows)]} row")
    n = len(rows[0])
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != n:
            raise StateFormatError(f"row {r} has {len(row)} values, expected {n}")
    state = ParticleState(*rows)
    problems = validate(state)
    if problems:
        # report 1-based row/column as in the file
        raise InvalidStateError([_locate(p) for p in problems])
    return state


def _locate(problem: str) -> str:
    head, sep, idx = problem.rpartition(" at index ")
    if not sep:
        return problem
    row = 1 if head.startswith("mass") else 2 if head.startswith("position") else 3
    return f"{problem} (row {row}, column {int(idx) + 1})"


def save_state(state: ParticleState, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_state(state))


def format_state(state: ParticleState) -> str:
    return "".join(",".join(format(x, ".17g") for x in row) + "\n"
                   for row in (state.masses, state.positions, state.velocities))


def _json(obj) -> str:
    return json.dumps(obj, allow_nan=False, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _num(x):
    return None if x is None or not math.isfinite(x) else x


def cmd_simulate(args, tol: Tolerances, out) -> int:
    from .dynamics import sample_trajectory, simulate

    state = load_state(args.state)
    log = simulate(state, t_max=args.t_max, tol=tol)
    for e in log.events:
        rec = {"record": "event"}
        rec.update(e.to_dict())
        out.write(_json(rec) + "\n")
    summary = {"record": "outcome"}
    summary.update(log.outcome.to_dict())
    summary["events"] = len(log.events)
    fs = log.final_state
    summary["final_state"] = {"masses": list(fs.masses), "positions": list(fs.positions),
                              "velocities": list(fs.velocities)}
    out.write(_json(summary) + "\n")

    if args.trajectory:
        end = log.outcome.time
        if end is None:
            end = (log.events[-1].time if log.events else 0.0) + 1.0
        ts = np.linspace(0.0, end, max(args.samples, 2))
        ys = sample_trajectory(log, ts)
        with open(args.trajectory, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t," + ",".join(f"y{i}" for i in range(state.n)) + "\n")
            for t, row in zip(ts, ys):
                fh.write(",".join(format(x, ".17g") for x in (t, *row)) + "\n")
    return EXIT_OK


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        nx, ny = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 101x101, got {text!r}") from None
    if nx < 1 or ny < 1:
        raise argparse.ArgumentTypeError("grid dimensions must be positive")
    return nx, ny


def cmd_sweep(args, tol: Tolerances, out) -> int:
    from .sweep import default_workers, hamiltonian_trend, sweep, write_ppm, write_raster

    state = load_state(args.state)
    nx, ny = args.grid
    workers = args.workers if args.workers is not None else default_workers()
    grid = sweep(state, args.particle, nx, ny, args.range_x, args.range_y, workers, tol)
    write_raster(grid, args.out + ".csv")
    write_ppm(grid, args.out + ".ppm")
    origin = grid.cell_at(0.0, 0.0)
    out.write(_json({
        "raster": args.out + ".csv",
        "image": args.out + ".ppm",
        "grid": [nx, ny],
        "counts": grid.counts(),
        "origin": {"kind": origin.kind, "t_collapse": origin.collapse_time,
                   "H": origin.hamiltonian},
        "H_trend_vs_abs_velocity_offset": _num(hamiltonian_trend(grid)),
    }) + "\n")
    return EXIT_OK


def cmd_perfect(args, tol: Tolerances, out) -> int:
    from .perfect import synthesize_perfect, verify_perfect

    rows = _parse_rows(args.state, 2)
    if len(rows) < 2:
        raise StateFormatError("missing position row")
    if len(rows[0]) != len(rows[1]):
        raise StateFormatError("mass and position rows differ in length")
    vs = synthesize_perfect(rows[0], rows[1], tol)
    state = ParticleState(rows[0], rows[1], vs)
    rep = verify_perfect(state, tol)
    if args.out:
        save_state(state, args.out)
    out.write(_json({
        "velocities": list(vs),
        "perfect": rep.perfect,
        "collapse_time": rep.collapse_time,
        "h_residual": rep.h_residual,
        "reason": rep.reason,
    }) + "\n")
    return EXIT_OK


def cmd_check(args, tol: Tolerances, out) -> int:
    from .analysis import check_envelope, collapse_time_bound, necessary_condition, sufficient_condition
    from .dynamics import simulate

    state = load_state(args.state)
    if args.normalize:
        state, _ = normalize_galilean(state)
    nec = necessary_condition(state, tol)
    suf = sufficient_condition(state, tol)
    log = simulate(state, tol=tol)
    env = check_envelope(log, tol)
    lower = math.sqrt(max(max(state.positions), -min(state.positions), 0.0))
    out.write(_json({
        "necessary": {"holds": nec.holds, "witness_k": list(nec.ks)},
        "sufficient": {"holds": suf.holds, "failing_k": list(suf.ks)},
        "envelope": {"within": env.within, "first_exit_time": env.first_exit_time},
        "outcome": log.outcome.to_dict(),
        "bounds": {"lower": lower, "upper": collapse_time_bound(state)},
    }) + "\n")
    return EXIT_OK


def cmd_discretize(args, tol: Tolerances, out) -> int:
    from .approx import discretize, load_measure_config

    spec = load_measure_config(args.config)
    state = discretize(spec, args.n)
    if args.out:
        save_state(state, args.out)
    else:
        out.write(format_state(state))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps-time", type=float, default=DEFAULT_TOL.time)
    common.add_argument("--eps-pos", type=float, default=DEFAULT_TOL.pos)
    common.add_argument("--eps-vel", type=float, default=DEFAULT_TOL.vel)

    p = argparse.ArgumentParser(prog="sticky-pep",
                                description="Exact sticky-particle simulation and analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run the event loop")
    s.add_argument("state")
    s.add_argument("--t-max", type=float, default=math.inf)
    s.add_argument("--samples", type=int, default=101, help="trajectory sample count")
    s.add_argument("--trajectory", help="write sampled positions to this CSV")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", parents=[common], help="convergence-region raster")
    s.add_argument("state")
    s.add_argument("--grid", type=_parse_grid, default=(101, 101), metavar="NxM")
    s.add_argument("--range-x", type=float, nargs=2, default=(-2.0, 2.0), metavar=("A", "B"))
    s.add_argument("--range-y", type=float, nargs=2, default=(-2.0, 2.0), metavar=("A", "B"))
    s.add_argument("--particle", type=int, default=0)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", default="sweep", help="output prefix for .csv and .ppm")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("perfect", parents=[common], help="synthesize perfect velocities")
    s.add_argument("state", help="CSV with mass and position rows")
    s.add_argument("--out", help="write the full state CSV here")
    s.set_defaults(func=cmd_perfect)

    s = sub.add_parser("check", parents=[common], help="equilibrium criteria and bounds")
    s.add_argument("state")
    s.add_argument("--normalize", action="store_true",
                   help="shift to zero center of mass and momentum first")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("discretize", parents=[common], help="lump a measure config into particles")
    s.add_argument("config")
    s.add_argument("n", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_discretize)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = Tolerances(args.eps_time, args.eps_pos, args.eps_vel)
        return args.func(args, tol, sys.stdout)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
