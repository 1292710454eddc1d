"""End-to-end acceptance checks, one test (or a few sub-tests) per
criterion. Each records a PASS/FAIL line shown in the terminal summary."""
import math
import time

import numpy as np
import pytest

from conftest import audit_corpus, criteria_corpus, perfect_corpus
from sticky_pep.analysis import (
    check_envelope,
    combine_group,
    extremal_pair,
    necessary_condition,
    sufficient_condition,
)
from sticky_pep.approx import MeasureSpec, continuous_margin, discretize, w2_to_discrete
from sticky_pep.core import CollapsedAt, Diverges, ParticleState, normalize_galilean, w2_discrete, w2_to_dirac
from sticky_pep.dynamics import sample_trajectory, simulate
from sticky_pep.energy import audit
from sticky_pep.perfect import verify_perfect
from sticky_pep.sweep import format_cell, sweep
from sticky_pep.systems import (
    glancing_pair,
    near_miss_pair,
    nested_pair_collision_time,
    nested_pairs,
    random_state,
    split_uniform_approximation,
)

SQRT2 = math.sqrt(2.0)


def test_criterion_1_glancing_pair(acceptance):
    log = simulate(glancing_pair())
    t = 2 * SQRT2
    fs = log.final_state
    checks = [
        len(log.events) == 1,
        abs(log.events[0].time - t) <= 1e-9,
        log.events[0].glancing == (True,),
        isinstance(log.outcome, CollapsedAt) and abs(log.outcome.time - t) <= 1e-9,
        fs.n == 1 and abs(fs.masses[0] - 1) <= 1e-12 and abs(fs.positions[0]) <= 1e-12
        and abs(fs.velocities[0]) <= 1e-12,
    ]
    ok = acceptance(1, "single glancing event at 2 sqrt 2, final (1,0,0)", all(checks),
                    f"t={log.events[0].time!r}, final={fs.particles}")
    assert ok


@pytest.mark.parametrize("eps", [0.01, 0.1, 1.0])
def test_criterion_2_near_miss(acceptance, eps):
    log = simulate(near_miss_pair(eps))
    w2 = w2_to_dirac(log.state_at(3.0))
    expected = 1 + eps - (SQRT2 / 2) * 3 + 9 / 8
    ok = (isinstance(log.outcome, Diverges) and not log.events and abs(w2 - expected) <= 1e-9)
    acceptance(2, f"eps={eps}: diverges, no events, W2(t=3)", ok,
               f"{log.outcome.kind}, W2={w2!r}, expected {expected!r}")
    assert ok


def test_criterion_3_hamiltonian_audit(acceptance):
    t0 = time.perf_counter()
    bad = []
    n_events = 0
    for k, s in enumerate(audit_corpus()):
        log = simulate(s)
        n_events += len(log.events)
        rep = audit(log, samples=100, rel_tol=1e-9)
        if not rep.ok:
            bad.append((k, rep.violations))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed <= 10.0
    acceptance(3, "500 random systems, zero energy-law violations, <= 10 s", ok,
               f"{len(bad)} violating systems, {n_events} events, {elapsed:.2f} s")
    assert not bad, bad[:3]
    assert elapsed <= 10.0


def _perturbation(rng, masses, size):
    d = rng.normal(size=len(masses))
    ms = np.asarray(masses)
    d -= ms @ d / ms.sum()  # keep momentum
    norm = np.linalg.norm(d)
    return d * (size / norm)


def test_criterion_4_perfect_synthesis(acceptance):
    rng = np.random.default_rng(5)
    unsound, not_unique = [], []
    for k, s in enumerate(perfect_corpus()):
        rep = verify_perfect(s, h_tol=1e-8)
        fp = rep.final_particle
        if not (rep.perfect and fp and abs(fp[0] - 1) <= 1e-8 and abs(fp[1]) <= 1e-8
                and abs(fp[2]) <= 1e-8):
            unsound.append((k, rep.reason, fp))
        if s.n < 2:
            continue  # a lone particle has no momentum-preserving perturbation
        for _ in range(5):
            vs = np.asarray(s.velocities) + _perturbation(rng, s.masses, 1e-2)
            if verify_perfect(s.replace(velocities=tuple(vs.tolist()))).perfect:
                not_unique.append(k)
    ok = not unsound and not not_unique
    acceptance(4, "100 synthesized systems perfect; every perturbation not perfect", ok,
               f"{len(unsound)} unsound, {len(not_unique)} perturbations still perfect")
    assert not unsound, unsound[:3]
    assert not not_unique


def _collapsing_runs(corpus):
    out = []
    for s in corpus:
        log = simulate(s)
        if isinstance(log.outcome, CollapsedAt) and s.n > 1:
            z, _ = normalize_galilean(s)  # bounds refer to the zero frame
            out.append((z, log.outcome.time))
    return out


def _bounds(z):
    yl, yr = z.positions[0], z.positions[-1]
    return math.sqrt(max(yr, -yl)), 2 * math.sqrt(yr - yl)


def test_criterion_5_upper_bound(acceptance):
    runs = _collapsing_runs(audit_corpus()) + _collapsing_runs(perfect_corpus())
    bad = [(t, _bounds(z)[1]) for z, t in runs if not t <= _bounds(z)[1] + 1e-9]
    acceptance(5, "t_collapse <= 2 sqrt(y_R - y_L) + 1e-9 on all collapsing runs", not bad,
               f"{len(bad)} of {len(runs)} runs violate")
    assert not bad


def test_criterion_5_lower_bound_perfect_runs(acceptance):
    runs = _collapsing_runs(perfect_corpus())
    bad = [(t, _bounds(z)[0]) for z, t in runs if not _bounds(z)[0] < t]
    ratio = min(t / _bounds(z)[0] for z, t in runs)
    acceptance(5, "sqrt(max(y_R, -y_L)) < t_collapse on perfect runs", not bad,
               f"{len(bad)} of {len(runs)} runs violate, min ratio {ratio:.3f}")
    assert not bad


def test_criterion_5_lower_bound_all_runs(acceptance):
    """Literal statement over every collapsing run, perfect or not.

    The lower bound only governs perfect solutions. A non-perfect system can
    collapse arbitrarily fast (two halves at -1 and 1 thrown together at
    speed 10 merge at t ~ 0.1 < 1), so this check is expected to fail on the
    random audit corpus.
    """
    runs = _collapsing_runs(audit_corpus()) + _collapsing_runs(perfect_corpus())
    bad = [(t, _bounds(z)[0]) for z, t in runs if not _bounds(z)[0] < t]
    acceptance(5, "sqrt(max(y_R, -y_L)) < t_collapse on every collapsing run", not bad,
               f"{len(bad)} of {len(runs)} runs violate (non-perfect runs collapse faster)")
    assert not bad


def test_criterion_6_envelope_equivalence(acceptance):
    mismatch = []
    collapsed = 0
    for k, s in enumerate(criteria_corpus()):
        log = simulate(s)
        c = isinstance(log.outcome, CollapsedAt)
        collapsed += c
        if c != check_envelope(log).within:
            mismatch.append(k)
    pair = extremal_pair(-0.3, 0.7)
    env = check_envelope(simulate(pair))
    worst = max(abs(a) for p in env.pieces for a in p.right + p.left)
    ok = not mismatch and env.within and worst <= 1e-12
    acceptance(6, "collapse <=> within envelope; extremal pair traces envelope", ok,
               f"{len(mismatch)} counterexamples ({collapsed}/200 collapse), "
               f"extremal coeff max {worst:.2e}")
    assert not mismatch
    assert env.within and worst <= 1e-12


def test_criterion_7_k_split_logic(acceptance):
    suff_bad, nec_bad = [], []
    counts = [0, 0]
    for k, s in enumerate(criteria_corpus()):
        c = isinstance(simulate(s).outcome, CollapsedAt)
        suf = sufficient_condition(s).holds
        nec = necessary_condition(s).holds
        counts[0] += suf
        counts[1] += not nec
        if suf and not c:
            suff_bad.append(k)
        if c and not nec:
            nec_bad.append(k)
    ok = not suff_bad and not nec_bad
    acceptance(7, "sufficient => collapse, collapse => necessary", ok,
               f"{len(suff_bad)} + {len(nec_bad)} counterexamples; "
               f"sufficient held {counts[0]}x, necessary failed {counts[1]}x")
    assert ok


def _first_closed_group(log):
    """Largest group of initial particles that becomes one particle at some
    event without having merged with anything outside it earlier."""
    members = log.membership()
    best = None
    for e_idx, e in enumerate(log.events):
        after = members[e_idx + 1]
        before_all = members[:e_idx + 1]
        for a, b in e.clusters:
            cur = after[[i for i in range(len(after)) if members[e_idx][i] == a][0]]
            group = [i for i in range(len(after)) if after[i] == cur]
            # no earlier mixing with outsiders
            clean = all(
                {seg[i] for i in group}.isdisjoint({seg[j] for j in range(len(seg)) if j not in group})
                for seg in before_all)
            if clean and len(group) >= 2 and (best is None or len(group) > len(best[0])):
                best = (group, e.time)
    return best


def test_criterion_8_combine_group(acceptance):
    rng = np.random.default_rng(17)
    worst = 0.0
    tested = 0
    while tested < 100:
        s = random_state(rng, int(rng.integers(3, 9)), zero_frame=True, vel_scale=1.0)
        log = simulate(s)
        found = _first_closed_group(log)
        if found is None or found[0] == list(range(s.n)):
            continue
        group, t_q = found
        comb = combine_group(s, group)
        log_c = simulate(comb)
        end = log.outcome.time if log.outcome.time is not None else log.events[-1].time + 1.0
        end = max(end, t_q) + 0.5
        ts = np.linspace(t_q, end, 50)
        a = sample_trajectory(log, ts)
        b = sample_trajectory(log_c, ts)
        col = [i if i < group[0] else group[0] if i <= group[-1] else i - len(group) + 1
               for i in range(s.n)]
        worst = max(worst, float(np.max(np.abs(a - b[:, col]))))
        tested += 1
    ok = worst <= 1e-8
    acceptance(8, "combined group reproduces trajectories after merging", ok,
               f"100 systems, max deviation {worst:.2e}")
    assert ok


def test_criterion_9_uniform_discretization(acceptance):
    spec = MeasureSpec.uniform(-1.0, 1.0, lambda y: -2.0 * y)
    margin, _ = continuous_margin(spec, 200)
    details, ok = [f"margin {margin:.12f}"], abs(margin - 1.0) <= 1e-8
    for n in (4, 16, 64):
        st = discretize(spec, n)
        log = simulate(st)
        w2 = w2_to_discrete(spec, st)
        good = isinstance(log.outcome, CollapsedAt) and log.outcome.time <= 2 * SQRT2 + 1e-9 and w2 <= 1 / n
        ok &= good
        details.append(f"n={n}: {log.outcome.kind} t={log.outcome.time:.6f} W2={w2:.3e}")
    acceptance(9, "uniform data with v=-2y: discretizations collapse by 2 sqrt 2, W2 <= 1/n",
               ok, "; ".join(details))
    assert ok


@pytest.mark.parametrize("n", [10, 50])
def test_criterion_10_split_uniform_regression(acceptance, n):
    st = simulate(split_uniform_approximation(n), t_max=3.0).state_at(3.0)
    target = 1 / 8
    w2 = w2_discrete(st.masses, st.positions, (0.5, 0.5), (-target, target))
    ys, ms = np.asarray(st.positions), np.asarray(st.masses)
    left, right = ys < 0, ys >= 0
    mass_l, mass_r = ms[left].sum(), ms[right].sum()
    ctr_l = ms[left] @ ys[left] / mass_l
    ctr_r = ms[right] @ ys[right] / mass_r
    tol = 5 / n
    ok = (w2 <= tol and abs(mass_l - 0.5) <= tol and abs(mass_r - 0.5) <= tol
          and abs(ctr_l + target) <= tol and abs(ctr_r - target) <= tol)
    acceptance(10, f"n={n}: two half-mass clusters at +-1/8 within 5/n", ok,
               f"W2={w2:.3e}, masses ({mass_l:.4f}, {mass_r:.4f}), "
               f"centers ({ctr_l:.4f}, {ctr_r:.4f})")
    assert ok


def _central_times(pairs):
    log = simulate(nested_pairs(pairs))
    # each event absorbs the next pair into the central particle, innermost first
    return [e.time for e in log.events][::-1], log


def test_criterion_11_nested_pairs_times(acceptance):
    pairs = 10
    times, log = _central_times(pairs)
    exact = [nested_pair_collision_time(i, pairs) for i in range(1, pairs + 1)]
    err = max(abs(a - b) for a, b in zip(times, exact))
    ok = len(times) == pairs and err <= 1e-8 and isinstance(log.outcome, CollapsedAt)
    acceptance(11, "central collision times match recomputed closed form", ok,
               f"{len(times)} events, max error {err:.2e}")
    assert ok


def test_criterion_11_untruncated_limit(acceptance):
    # the truncation only perturbs a zero discriminant by 2**-pairs, so the
    # closed form approaches 2 sqrt2 (sqrt2/sqrt3)**i as pairs grows
    errs = [abs(nested_pair_collision_time(i, 200) - 2 * SQRT2 * math.sqrt(2 / 3) ** i)
            for i in range(1, 11)]
    ok = max(errs) <= 1e-12
    acceptance(11, "closed form tends to 2 sqrt2 (sqrt2/sqrt3)^i without truncation", ok,
               f"max error {max(errs):.2e}")
    assert ok


def test_criterion_11_nested_pairs_ratio(acceptance):
    """Literal ratio check: consecutive central times shrink by
    ``(sqrt2/sqrt3)**2 = 2/3`` per index.

    The untruncated closed form is ``2 sqrt2 (sqrt2/sqrt3)**i``, whose ratio
    is ``sqrt(2/3) ~ 0.816``, and the truncated times sit near 0.80. This is
    expected to fail.
    """
    pairs = 10
    times, _ = _central_times(pairs)
    ratios = [times[i + 1] / times[i] for i in range(4)]  # outer pairs, truncation effect small
    target = 2.0 / 3.0
    ok = all(abs(r - target) <= 0.02 for r in ratios)
    acceptance(11, "ratio (sqrt2/sqrt3)^2 per index on outer pairs", ok,
               f"ratios {[round(r, 4) for r in ratios]}, target {target:.4f}, "
               f"sqrt(2/3)={math.sqrt(2 / 3):.4f}")
    assert ok


def test_criterion_12_sweep(acceptance):
    base = glancing_pair()
    t0 = time.perf_counter()
    grid = sweep(base, 0, 101, 101, (-2, 2), (-2, 2), workers=8)
    elapsed = time.perf_counter() - t0
    again = sweep(base, 0, 101, 101, (-2, 2), (-2, 2), workers=8)
    serial = sweep(base, 0, 101, 101, (-2, 2), (-2, 2), workers=1)

    def raster(g):
        return "\n".join(",".join(format_cell(c) for c in row) for row in g.cells).encode()

    same = raster(grid) == raster(again) == raster(serial)
    counts = grid.counts()
    origin = grid.cells[50][50]
    ok = (elapsed <= 5.0 and same and counts["C"] > 0 and counts["D"] > 0 and origin.converges
          and abs(origin.hamiltonian) <= 1e-12 and grid.dx[50] == 0.0 and grid.dv[50] == 0.0)
    acceptance(12, "101x101 sweep: <= 5 s, deterministic, both regions, origin H = 0", ok,
               f"{elapsed:.2f} s, counts {counts}, origin H={origin.hamiltonian!r}")
    assert ok
