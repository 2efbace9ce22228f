# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Semantics match ``_pykernels`` exactly."""

import numpy as np

from libc.stdint cimport int32_t, int64_t, uint8_t

cdef enum:
    DONE = 0
    NEED_MORE = 1
    BUDGET = 2


cdef inline bint _covers(const int64_t[::1] ptr, const int32_t[::1] vars_,
                         const int32_t[::1] colors, Py_ssize_t e, int k,
                         int64_t[::1] stamp, int64_t tick) noexcept nogil:
    cdef Py_ssize_t a = ptr[e], b = ptr[e + 1], i
    cdef int c, distinct = 0
    for i in range(a, b):
        c = colors[vars_[i]]
        if c >= 0 and c < k and stamp[c] != tick:
            stamp[c] = tick
            distinct += 1
            if distinct == k:
                return True
    return distinct == k


def coverage_mask(const int64_t[::1] indptr, const int32_t[::1] indices,
                  const int32_t[::1] colors, int k):
    cdef Py_ssize_t n = indptr.shape[0] - 1, x
    out = np.ones(n, dtype=np.uint8)
    if k <= 0:
        return out
    cdef uint8_t[::1] o = out
    cdef int64_t[::1] stamp = np.full(k, -1, dtype=np.int64)
    with nogil:
        for x in range(n):
            o[x] = _covers(indptr, indices, colors, x, k, stamp, x)
    return out


def explicit_resample(const int64_t[::1] ev_indptr, const int32_t[::1] ev_vars,
                      const int64_t[::1] var_indptr, const int32_t[::1] var_events,
                      int k, int32_t[::1] colors, uint8_t[::1] violated,
                      int64_t[::1] state, const int32_t[::1] draws,
                      Py_ssize_t pos, int64_t budget):
    cdef Py_ssize_t n_events = ev_indptr.shape[0] - 1
    cdef Py_ssize_t lo = state[0]
    cdef int64_t resamples = state[1]
    cdef Py_ssize_t ndraws = draws.shape[0]
    cdef Py_ssize_t a, b, i, v, j, e2
    cdef int64_t tick = 0
    cdef int status = DONE
    cdef bint bad
    cdef int64_t[::1] stamp = np.full(max(k, 1), -1, dtype=np.int64)
    with nogil:
        while True:
            while lo < n_events and not violated[lo]:
                lo += 1
            if lo == n_events:
                status = DONE
                break
            if resamples >= budget:
                status = BUDGET
                break
            a = ev_indptr[lo]
            b = ev_indptr[lo + 1]
            if pos + (b - a) > ndraws:
                status = NEED_MORE
                break
            for i in range(a, b):
                colors[ev_vars[i]] = draws[pos]
                pos += 1
            resamples += 1
            for i in range(a, b):
                v = ev_vars[i]
                for j in range(var_indptr[v], var_indptr[v + 1]):
                    e2 = var_events[j]
                    tick += 1
                    bad = not _covers(ev_indptr, ev_vars, colors, e2, k, stamp, tick)
                    violated[e2] = bad
                    if bad and e2 < lo:
                        lo = e2
    state[0] = lo
    state[1] = resamples
    return status, pos


cdef inline Py_ssize_t _idx(const int32_t[:, ::1] h, const int32_t[:, ::1] l,
                            Py_ssize_t r_lo, Py_ssize_t p, Py_ssize_t x) noexcept nogil:
    return h[p, x // r_lo] * r_lo + l[p, x % r_lo]


cdef inline bint _mono_any(const int32_t[:, ::1] lh, const int32_t[:, ::1] ll,
                           Py_ssize_t r_lo, const int64_t[::1] gptr,
                           const int32_t[::1] colors, Py_ssize_t x) noexcept nogil:
    cdef Py_ssize_t j, p, a, b
    cdef int32_t first
    cdef bint same
    for j in range(gptr.shape[0] - 1):
        a = gptr[j]
        b = gptr[j + 1]
        if a == b:
            continue
        first = colors[_idx(lh, ll, r_lo, a, x)]
        same = True
        for p in range(a + 1, b):
            if colors[_idx(lh, ll, r_lo, p, x)] != first:
                same = False
                break
        if same:
            return True
    return False


def translation_violations(const int32_t[:, ::1] lh, const int32_t[:, ::1] ll,
                           Py_ssize_t r_lo, const int64_t[::1] group_ptr,
                           const int32_t[::1] colors):
    cdef Py_ssize_t q = lh.shape[1] * r_lo, x
    out = np.zeros(q, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    with nogil:
        for x in range(q):
            o[x] = _mono_any(lh, ll, r_lo, group_ptr, colors, x)
    return out


def translation_resample(const int32_t[:, ::1] lh, const int32_t[:, ::1] ll,
                         const int32_t[:, ::1] ih, const int32_t[:, ::1] il,
                         Py_ssize_t r_lo, const int64_t[::1] group_ptr,
                         int32_t[::1] colors, uint8_t[::1] violated,
                         int64_t[::1] state, const int32_t[::1] draws,
                         Py_ssize_t pos, int64_t budget):
    cdef Py_ssize_t q = colors.shape[0]
    cdef Py_ssize_t n_points = lh.shape[0]
    cdef Py_ssize_t lo = state[0]
    cdef int64_t resamples = state[1]
    cdef Py_ssize_t ndraws = draws.shape[0]
    cdef Py_ssize_t p, p2, v, x2
    cdef int status = DONE
    cdef bint bad
    stamp_arr = np.full(q, -1, dtype=np.int64)
    dom_arr = np.empty(n_points, dtype=np.int64)
    cdef int64_t[::1] stamp = stamp_arr
    cdef int64_t[::1] dom = dom_arr
    with nogil:
        while True:
            while lo < q and not violated[lo]:
                lo += 1
            if lo == q:
                status = DONE
                break
            if resamples >= budget:
                status = BUDGET
                break
            if pos + n_points > ndraws:
                status = NEED_MORE
                break
            for p in range(n_points):
                dom[p] = _idx(lh, ll, r_lo, p, lo)
            for p in range(n_points):
                colors[dom[p]] = draws[pos]
                pos += 1
            resamples += 1
            for p in range(n_points):
                v = dom[p]
                for p2 in range(n_points):
                    x2 = _idx(ih, il, r_lo, p2, v)
                    if stamp[x2] == resamples:
                        continue
                    stamp[x2] = resamples
                    bad = _mono_any(lh, ll, r_lo, group_ptr, colors, x2)
                    violated[x2] = bad
                    if bad and x2 < lo:
                        lo = x2
    state[0] = lo
    state[1] = resamples
    return status, pos
