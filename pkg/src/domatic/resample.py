"""Seeded Moser–Tardos resampling drivers shared by the LLL constructions.

All randomness comes from one PCG64 stream per seed. Raw 64-bit words are
mapped to colors by ``((raw >> 32) * k) >> 32``, which is exactly uniform
when k divides 2**32 and otherwise biased by at most k / 2**32. Draws are
consumed in a fixed order (initial coloring, then each resampled domain in
stored order), so both kernel backends produce identical results.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend
from ._pykernels import BUDGET, DONE

DEFAULT_BUDGET = 10**6


class ResampleBudgetExceeded(RuntimeError):
    """Moser–Tardos did not terminate within the resample budget."""

    def __init__(self, budget, remaining):
        super().__init__(
            f"resample budget {budget} exhausted with {remaining} violated events left"
        )
        self.budget = budget
        self.remaining = remaining


class ColorStream:
    """Reproducible stream of uniform colors in ``range(k)``."""

    def __init__(self, seed, k, block=1 << 16):
        if k < 1:
            raise ValueError("need at least one color")
        self.k = k
        self._bits = np.random.PCG64(seed)
        self._block = block
        self._buf = np.zeros(0, dtype=np.int32)
        self._pos = 0

    def _refill(self, minimum):
        need = minimum - (self._buf.shape[0] - self._pos)
        if need <= 0:
            return
        raw = self._bits.random_raw(max(need, self._block))
        fresh = (((raw >> np.uint64(32)) * np.uint64(self.k)) >> np.uint64(32)).astype(np.int32)
        self._buf = np.concatenate((self._buf[self._pos:], fresh))
        self._pos = 0

    def take(self, count):
        self._refill(count)
        out = self._buf[self._pos:self._pos + count].copy()
        self._pos += count
        return out

    def window(self, minimum):
        self._refill(minimum)
        return self._buf, self._pos

    def seek(self, pos):
        self._pos = pos


@dataclass
class ResampleResult:
    colors: np.ndarray
    resamples: int


def run_explicit(ev_indptr, ev_vars, n_vars, k, seed, budget=DEFAULT_BUDGET):
    """Moser–Tardos where event e is violated unless its domain sees all k colors."""
    ev_indptr = np.ascontiguousarray(ev_indptr, dtype=np.int64)
    ev_vars = np.ascontiguousarray(ev_vars, dtype=np.int32)
    n_events = ev_indptr.shape[0] - 1
    owner = np.repeat(np.arange(n_events, dtype=np.int32), np.diff(ev_indptr))
    order = np.argsort(ev_vars, kind="stable")
    var_events = np.ascontiguousarray(owner[order], dtype=np.int32)
    var_indptr = np.zeros(n_vars + 1, dtype=np.int64)
    np.cumsum(np.bincount(ev_vars, minlength=n_vars), out=var_indptr[1:])

    kern = _backend.kernels
    stream = ColorStream(seed, k)
    colors = stream.take(n_vars)
    violated = (1 - kern.coverage_mask(ev_indptr, ev_vars, colors, k)).astype(np.uint8)
    state = np.zeros(2, dtype=np.int64)
    widest = int(np.diff(ev_indptr).max()) if n_events else 0
    while True:
        draws, pos = stream.window(widest)
        status, pos = kern.explicit_resample(
            ev_indptr, ev_vars, var_indptr, var_events, k,
            colors, violated, state, draws, pos, budget,
        )
        stream.seek(pos)
        if status == DONE:
            return ResampleResult(colors, int(state[1]))
        if status == BUDGET:
            raise ResampleBudgetExceeded(budget, int(violated.sum()))


def run_translation(lh, lh_inv, ll, ll_inv, r_lo, group_ptr, seed, budget=DEFAULT_BUDGET):
    """Moser–Tardos 2-coloring of a finite quotient against translated point groups."""
    kern = _backend.kernels
    n_points = lh.shape[0]
    q = lh.shape[1] * r_lo
    stream = ColorStream(seed, 2)
    colors = stream.take(q)
    state = np.zeros(2, dtype=np.int64)
    if n_points == 0:
        return ResampleResult(colors, 0)
    violated = kern.translation_violations(lh, ll, r_lo, group_ptr, colors)
    while True:
        draws, pos = stream.window(n_points)
        status, pos = kern.translation_resample(
            lh, ll, lh_inv, ll_inv, r_lo, group_ptr,
            colors, violated, state, draws, pos, budget,
        )
        stream.seek(pos)
        if status == DONE:
            return ResampleResult(colors, int(state[1]))
        if status == BUDGET:
            raise ResampleBudgetExceeded(budget, int(violated.sum()))
