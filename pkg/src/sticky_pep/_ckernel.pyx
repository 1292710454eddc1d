# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sticky event loop.

Mirrors ``_pykernel`` operation for operation; see that module for the
algorithm description.
"""
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free

cdef enum:
    COLLAPSED = 0
    DIVERGES = 1
    TRUNCATED = 2


cdef inline double _pair_time(double m0, double m1, double y0, double y1,
                              double v0, double v1, double eps_pos) nogil:
    cdef double dv = v0 - v1
    cdef double mm, d0, disc
    if dv <= 0.0:
        return INFINITY
    mm = m0 + m1
    d0 = y1 - y0
    disc = dv * dv - mm * d0
    if disc < 0.0:
        if -disc > mm * eps_pos:
            return INFINITY
        disc = 0.0
    elif disc <= mm * eps_pos:
        disc = 0.0
    return 2.0 * d0 / (dv + sqrt(disc))


cdef void _halfaccel(double* m, double* c, int n) nogil:
    cdef double total = 0.0, left = 0.0, right
    cdef int i
    for i in range(n):
        total += m[i]
    for i in range(n):
        right = total - left - m[i]
        c[i] = 0.25 * (left - right)
        left += m[i]


cdef void _flight(double* m, double* y, double* v, double* c, int n, double dt) nogil:
    cdef int i
    _halfaccel(m, c, n)
    for i in range(n):
        y[i] = y[i] + v[i] * dt + c[i] * dt * dt
        v[i] = v[i] + 2.0 * c[i] * dt


cdef double _next(double* m, double* y, double* v, double* times, int n,
                  double eps_pos) nogil:
    cdef double best = INFINITY, t
    cdef int i
    for i in range(n - 1):
        t = _pair_time(m[i], m[i + 1], y[i], y[i + 1], v[i], v[i + 1], eps_pos)
        times[i] = t
        if t < best:
            best = t
    return best


cdef int _clusters(double* times, int n, double cut, int* first, int* last) nogil:
    cdef int i = 0, j, k = 0
    while i < n - 1:
        if times[i] <= cut:
            j = i
            while j + 1 < n - 1 and times[j + 1] <= cut:
                j += 1
            first[k] = i
            last[k] = j + 1
            k += 1
            i = j + 1
        else:
            i += 1
    return k


cdef int _merge(double* m, double* y, double* v, int n, int* first, int* last, int nc) nogil:
    # in place, left to right; the write cursor never overtakes the read cursor
    cdef int w = 0, start = 0, a, b, k, c
    cdef double msum, py, pv
    for c in range(nc):
        a = first[c]
        b = last[c]
        for k in range(start, a):
            m[w] = m[k]
            y[w] = y[k]
            v[w] = v[k]
            w += 1
        msum = 0.0
        py = 0.0
        pv = 0.0
        for k in range(a, b + 1):
            msum += m[k]
            py += m[k] * y[k]
            pv += m[k] * v[k]
        m[w] = msum
        y[w] = py / msum
        v[w] = pv / msum
        w += 1
        start = b + 1
    for k in range(start, n):
        m[w] = m[k]
        y[w] = y[k]
        v[w] = v[k]
        w += 1
    return w


cdef list _tolist(double* a, int n):
    return [a[i] for i in range(n)]


def run_events(masses, positions, velocities, double t0, double t_max,
               double eps_time, double eps_pos):
    """Same contract as ``_pykernel.run_events``."""
    cdef int n = len(masses), i, nc
    cdef double t = t0, dt
    cdef double* buf = <double*> malloc(5 * max(n, 1) * sizeof(double))
    cdef int* ibuf = <int*> malloc(2 * max(n, 1) * sizeof(int))
    if buf == NULL or ibuf == NULL:
        free(buf)
        free(ibuf)
        raise MemoryError()
    cdef double* m = buf
    cdef double* y = buf + n
    cdef double* v = buf + 2 * n
    cdef double* c = buf + 3 * n
    cdef double* times = buf + 4 * n
    cdef int* first = ibuf
    cdef int* last = ibuf + n
    events = []
    try:
        for i in range(n):
            m[i] = masses[i]
            y[i] = positions[i]
            v[i] = velocities[i]
        while n > 1:
            dt = _next(m, y, v, times, n, eps_pos)
            if dt == INFINITY:
                return events, DIVERGES, t
            if t + dt > t_max:
                return events, TRUNCATED, t_max
            _flight(m, y, v, c, n, dt)
            t = t + dt
            nc = _clusters(times, n, dt + eps_time, first, last)
            pre_y = _tolist(y, n)
            pre_v = _tolist(v, n)
            cl = [(first[i], last[i]) for i in range(nc)]
            n = _merge(m, y, v, n, first, last, nc)
            events.append((t, cl, pre_y, pre_v, _tolist(m, n), _tolist(y, n), _tolist(v, n)))
        return events, COLLAPSED, t
    finally:
        free(buf)
        free(ibuf)


def run_outcome(masses, positions, velocities, double eps_time, double eps_pos):
    """Unbounded run reporting only ``(code, t_end)``; allocates no events."""
    cdef int n = len(masses), i, nc
    cdef double t = 0.0, dt
    cdef double* buf = <double*> malloc(5 * max(n, 1) * sizeof(double))
    cdef int* ibuf = <int*> malloc(2 * max(n, 1) * sizeof(int))
    if buf == NULL or ibuf == NULL:
        free(buf)
        free(ibuf)
        raise MemoryError()
    cdef double* m = buf
    cdef double* y = buf + n
    cdef double* v = buf + 2 * n
    cdef double* c = buf + 3 * n
    cdef double* times = buf + 4 * n
    cdef int* first = ibuf
    cdef int* last = ibuf + n
    cdef int code = COLLAPSED
    try:
        for i in range(n):
            m[i] = masses[i]
            y[i] = positions[i]
            v[i] = velocities[i]
        with nogil:
            while n > 1:
                dt = _next(m, y, v, times, n, eps_pos)
                if dt == INFINITY:
                    code = DIVERGES
                    break
                _flight(m, y, v, c, n, dt)
                t = t + dt
                nc = _clusters(times, n, dt + eps_time, first, last)
                n = _merge(m, y, v, n, first, last, nc)
        return code, t
    finally:
        free(buf)
        free(ibuf)
