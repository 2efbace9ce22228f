"""Pure-Python/numpy implementations of the hot kernels.

Semantics (including the order in which random draws are consumed) match
``_ckernels.pyx`` exactly; the two are interchangeable.
"""

import numpy as np

DONE = 0
NEED_MORE = 1
BUDGET = 2


def coverage_mask(indptr, indices, colors, k):
    """1 where the colors on the CSR row cover ``range(k)``, else 0."""
    n = indptr.shape[0] - 1
    if k <= 0:
        return np.ones(n, dtype=np.uint8)
    deg = np.diff(indptr)
    rows = np.repeat(np.arange(n, dtype=np.int64), deg)
    cols = colors[indices] if indices.size else np.zeros(0, dtype=np.int32)
    keep = (cols >= 0) & (cols < k)
    seen = np.zeros((n, k), dtype=bool)
    seen[rows[keep], cols[keep]] = True
    return seen.all(axis=1).astype(np.uint8)


def _covers(colors, dom, k):
    seen = set()
    for v in dom:
        c = colors[v]
        if 0 <= c < k:
            seen.add(c)
    return len(seen) == k


def explicit_resample(ev_indptr, ev_vars, var_indptr, var_events, k,
                      colors, violated, state, draws, pos, budget):
    """Moser–Tardos on an explicit event system; each event needs all k colors.

    ``state`` holds ``[lowest possibly-violated event, resample count]`` and is
    updated in place, as are ``colors`` and ``violated``.
    """
    ev_ptr = ev_indptr.tolist()
    ev_v = ev_vars.tolist()
    var_ptr = var_indptr.tolist()
    var_e = var_events.tolist()
    n_events = len(ev_ptr) - 1
    lo, resamples = int(state[0]), int(state[1])
    cols = colors.tolist()
    viol = violated.tolist()
    ndraws = draws.shape[0]
    status = DONE
    try:
        while True:
            while lo < n_events and not viol[lo]:
                lo += 1
            if lo == n_events:
                status = DONE
                break
            if resamples >= budget:
                status = BUDGET
                break
            a, b = ev_ptr[lo], ev_ptr[lo + 1]
            if pos + (b - a) > ndraws:
                status = NEED_MORE
                break
            dom = ev_v[a:b]
            for v in dom:
                cols[v] = int(draws[pos])
                pos += 1
            resamples += 1
            for v in dom:
                for e2 in var_e[var_ptr[v]:var_ptr[v + 1]]:
                    bad = not _covers(cols, ev_v[ev_ptr[e2]:ev_ptr[e2 + 1]], k)
                    viol[e2] = bad
                    if bad and e2 < lo:
                        lo = e2
    finally:
        colors[:] = cols
        violated[:] = viol
        state[0] = lo
        state[1] = resamples
    return status, pos


def _rows(lh, ll, r_lo, p):
    return (lh[p][:, None] * r_lo + ll[p][None, :]).ravel()


def _index(lh, ll, r_lo, p, xs):
    return lh[p][xs // r_lo] * r_lo + ll[p][xs % r_lo]


def translation_violations(lh, ll, r_lo, group_ptr, colors):
    """1 at every x where some group ``{q·x : q in group}`` is monochromatic."""
    q = lh.shape[1] * r_lo
    bad = np.zeros(q, dtype=bool)
    for j in range(group_ptr.shape[0] - 1):
        a, b = int(group_ptr[j]), int(group_ptr[j + 1])
        if a == b:
            continue
        first = colors[_rows(lh, ll, r_lo, a)]
        same = np.ones(q, dtype=bool)
        for p in range(a + 1, b):
            same &= colors[_rows(lh, ll, r_lo, p)] == first
        bad |= same
    return bad.astype(np.uint8)


def _violated_at(lh, ll, r_lo, group_ptr, colors, xs):
    bad = np.zeros(xs.shape[0], dtype=bool)
    for j in range(group_ptr.shape[0] - 1):
        a, b = int(group_ptr[j]), int(group_ptr[j + 1])
        if a == b:
            continue
        first = colors[_index(lh, ll, r_lo, a, xs)]
        same = np.ones(xs.shape[0], dtype=bool)
        for p in range(a + 1, b):
            same &= colors[_index(lh, ll, r_lo, p, xs)] == first
        bad |= same
    return bad


def translation_resample(lh, ll, ih, il, r_lo, group_ptr, colors, violated,
                         state, draws, pos, budget):
    """Moser–Tardos for the translated-point events of the open pair problem.

    Event x has domain ``{q_p·x : p}`` in point order; it is violated when a
    point group is monochromatic. Events touching a resampled variable ``v``
    are ``q_p^{-1}·v``.
    """
    q = colors.shape[0]
    n_points = lh.shape[0]
    lo, resamples = int(state[0]), int(state[1])
    ndraws = draws.shape[0]
    points = np.arange(n_points)
    status = DONE
    while True:
        nz = np.flatnonzero(violated[lo:])
        if nz.size == 0:
            lo = q
            status = DONE
            break
        lo += int(nz[0])
        if resamples >= budget:
            status = BUDGET
            break
        if pos + n_points > ndraws:
            status = NEED_MORE
            break
        x = lo
        dom = lh[points, x // r_lo] * r_lo + ll[points, x % r_lo]
        colors[dom] = draws[pos:pos + n_points]
        pos += n_points
        resamples += 1
        hi, lo_part = dom // r_lo, dom % r_lo
        touched = np.unique((ih[:, hi] * r_lo + il[:, lo_part]).ravel())
        bad = _violated_at(lh, ll, r_lo, group_ptr, colors, touched)
        violated[touched] = bad.astype(np.uint8)
        newly = touched[bad]
        if newly.size and int(newly[0]) < lo:
            lo = int(newly[0])
    state[0] = lo
    state[1] = resamples
    return status, pos
