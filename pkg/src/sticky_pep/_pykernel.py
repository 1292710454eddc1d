"""Pure-Python event loop. Reference implementation for ``_ckernel.pyx``.

Both kernels must perform the same floating-point operations in the same
order so that the backends agree bit for bit.
"""
from math import inf, sqrt

COLLAPSED = 0
DIVERGES = 1
TRUNCATED = 2


def _halfaccel(masses):
    # coefficient c_i of dt**2 in the kinematic law: (M_left - M_right) / 4
    total = 0.0
    for m in masses:
        total += m
    out = []
    left = 0.0
    for m in masses:
        right = total - left - m
        out.append(0.25 * (left - right))
        left += m
    return out


def flight(masses, positions, velocities, dt):
    c = _halfaccel(masses)
    ys = []
    vs = []
    for i in range(len(masses)):
        ys.append(positions[i] + velocities[i] * dt + c[i] * dt * dt)
        vs.append(velocities[i] + 2.0 * c[i] * dt)
    return ys, vs


def pair_time(m0, m1, y0, y1, v0, v1, eps_pos):
    """Collision time of an adjacent pair, or ``inf`` when they never meet.

    The gap obeys ``d0 - dv*t + (M/4)*t**2``; the smaller root is taken in
    the cancellation-free form ``2*d0 / (dv + sqrt(disc))``. A discriminant
    whose vertex gap ``|disc|/M`` is within ``eps_pos`` counts as tangency.
    """
    dv = v0 - v1
    if dv <= 0.0:
        return inf
    mm = m0 + m1
    d0 = y1 - y0
    disc = dv * dv - mm * d0
    if disc < 0.0:
        if -disc > mm * eps_pos:
            return inf
        disc = 0.0
    elif disc <= mm * eps_pos:
        disc = 0.0
    return 2.0 * d0 / (dv + sqrt(disc))


def next_collision(masses, positions, velocities, eps_time, eps_pos):
    """Return ``(dt, clusters)`` for the next event or ``(inf, [])``.

    ``clusters`` holds inclusive ``(first, last)`` index ranges.
    """
    n = len(masses)
    times = []
    best = inf
    for i in range(n - 1):
        t = pair_time(masses[i], masses[i + 1], positions[i], positions[i + 1],
                      velocities[i], velocities[i + 1], eps_pos)
        times.append(t)
        if t < best:
            best = t
    if best == inf:
        return inf, []
    cut = best + eps_time
    clusters = []
    i = 0
    while i < n - 1:
        if times[i] <= cut:
            j = i
            while j + 1 < n - 1 and times[j + 1] <= cut:
                j += 1
            clusters.append((i, j + 1))
            i = j + 1
        else:
            i += 1
    return best, clusters


def merge_clusters(masses, positions, velocities, clusters):
    ms, ys, vs = [], [], []
    start = 0
    for a, b in clusters:
        for k in range(start, a):
            ms.append(masses[k])
            ys.append(positions[k])
            vs.append(velocities[k])
        msum = 0.0
        py = 0.0
        pv = 0.0
        for k in range(a, b + 1):
            msum += masses[k]
            py += masses[k] * positions[k]
            pv += masses[k] * velocities[k]
        ms.append(msum)
        ys.append(py / msum)
        vs.append(pv / msum)
        start = b + 1
    for k in range(start, len(masses)):
        ms.append(masses[k])
        ys.append(positions[k])
        vs.append(velocities[k])
    return ms, ys, vs


def run_events(masses, positions, velocities, t0, t_max, eps_time, eps_pos):
    """Run the sticky event loop from time ``t0``.

    Returns ``(events, code, t_end)``. Each event is
    ``(t, clusters, pre_y, pre_v, post_m, post_y, post_v)``.
    """
    ms = list(masses)
    ys = list(positions)
    vs = list(velocities)
    t = t0
    events = []
    while len(ms) > 1:
        dt, clusters = next_collision(ms, ys, vs, eps_time, eps_pos)
        if dt == inf:
            return events, DIVERGES, t
        if t + dt > t_max:
            return events, TRUNCATED, t_max
        ys, vs = flight(ms, ys, vs, dt)
        t = t + dt
        post_m, post_y, post_v = merge_clusters(ms, ys, vs, clusters)
        events.append((t, clusters, ys, vs, post_m, post_y, post_v))
        ms, ys, vs = post_m, post_y, post_v
    return events, COLLAPSED, t


def run_outcome(masses, positions, velocities, eps_time, eps_pos):
    """Unbounded run reporting only ``(code, t_end)``; the sweep hot path."""
    _, code, t_end = run_events(masses, positions, velocities, 0.0, inf, eps_time, eps_pos)
    return code, t_end
