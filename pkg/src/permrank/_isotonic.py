"""Numba kernels: pool-adjacent-violators and Dykstra's method.

Everything operates in the sorted frame, where a bimonotone matrix has
non-decreasing rows (left to right) and columns (top to bottom).  The
projection onto the intersection {row chains} ∩ {column chains} ∩ box
runs Dykstra's alternating scheme with correction terms; plain cyclic
projections would converge to a feasible point that is generally not
the nearest one.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["pava", "pava_rows", "pava_cols", "dykstra_bimonotone_box"]


@njit(cache=True)
def _pava_inplace(y):
    """Project a vector onto the non-decreasing cone, in place."""
    m = y.shape[0]
    level = np.empty(m)
    count = np.empty(m, np.int64)
    k = -1
    for i in range(m):
        k += 1
        level[k] = y[i]
        count[k] = 1
        while k > 0 and level[k - 1] > level[k]:
            merged = count[k - 1] + count[k]
            level[k - 1] = (count[k - 1] * level[k - 1] + count[k] * level[k]) / merged
            count[k - 1] = merged
            k -= 1
    pos = 0
    for b in range(k + 1):
        for _ in range(count[b]):
            y[pos] = level[b]
            pos += 1


@njit(cache=True)
def _pava_rows_inplace(x):
    for i in range(x.shape[0]):
        _pava_inplace(x[i])


@njit(cache=True)
def _pava_cols_inplace(x):
    n, d = x.shape
    buf = np.empty(n)
    for j in range(d):
        for i in range(n):
            buf[i] = x[i, j]
        _pava_inplace(buf)
        for i in range(n):
            x[i, j] = buf[i]


def pava(y) -> np.ndarray:
    """Euclidean projection of a vector onto the non-decreasing cone."""
    out = np.array(y, dtype=np.float64)
    _pava_inplace(out)
    return out


def pava_rows(x) -> np.ndarray:
    """Project every row of a matrix onto the non-decreasing cone."""
    out = np.array(x, dtype=np.float64)
    _pava_rows_inplace(out)
    return out


def pava_cols(x) -> np.ndarray:
    """Project every column of a matrix onto the non-decreasing cone."""
    out = np.array(x, dtype=np.float64)
    _pava_cols_inplace(out)
    return out


@njit(cache=True, fastmath=True)
def _dykstra_loop(target, lo, hi, tol, max_iter):
    # Convergence is measured on the full Dykstra state (iterate plus all
    # three correction terms): the iterate alone can sit still for many
    # sweeps while corrections drift toward a constraint flip, so its
    # per-sweep change is not a valid stopping signal.
    n, d = target.shape
    x = target.copy()
    inc_rows = np.zeros((n, d))
    inc_cols = np.zeros((n, d))
    inc_box = np.zeros((n, d))
    prev = np.empty((n, d))
    ybuf = np.empty(max(n, d))
    pbuf = np.empty(max(n, d))
    delta = np.inf
    sweeps = 0
    for it in range(max_iter):
        sweeps = it + 1
        acc = 0.0
        for i in range(n):
            for j in range(d):
                prev[i, j] = x[i, j]

        for i in range(n):
            for j in range(d):
                ybuf[j] = x[i, j] + inc_rows[i, j]
                pbuf[j] = ybuf[j]
            _pava_inplace(pbuf[:d])
            for j in range(d):
                new_inc = ybuf[j] - pbuf[j]
                diff = new_inc - inc_rows[i, j]
                acc += diff * diff
                inc_rows[i, j] = new_inc
                x[i, j] = pbuf[j]

        for j in range(d):
            for i in range(n):
                ybuf[i] = x[i, j] + inc_cols[i, j]
                pbuf[i] = ybuf[i]
            _pava_inplace(pbuf[:n])
            for i in range(n):
                new_inc = ybuf[i] - pbuf[i]
                diff = new_inc - inc_cols[i, j]
                acc += diff * diff
                inc_cols[i, j] = new_inc
                x[i, j] = pbuf[i]

        for i in range(n):
            for j in range(d):
                y = x[i, j] + inc_box[i, j]
                xb = min(max(y, lo[i, j]), hi[i, j])
                diff_inc = (y - xb) - inc_box[i, j]
                acc += diff_inc * diff_inc
                inc_box[i, j] = y - xb
                x[i, j] = xb
                diff = xb - prev[i, j]
                acc += diff * diff
        delta = np.sqrt(acc)
        if delta < tol:
            break
    return x, sweeps, delta


def dykstra_bimonotone_box(target, lo, hi, tol: float, max_iter: int):
    """Project onto {non-decreasing rows and columns} ∩ {lo <= x <= hi}.

    ``lo`` and ``hi`` are entrywise bound arrays.  Returns the iterate
    after the box step (box constraints hold exactly), the sweep count,
    and the final per-sweep Frobenius change.
    """
    t = np.ascontiguousarray(target, dtype=np.float64)
    lo = np.ascontiguousarray(np.broadcast_to(lo, t.shape), dtype=np.float64)
    hi = np.ascontiguousarray(np.broadcast_to(hi, t.shape), dtype=np.float64)
    return _dykstra_loop(t, lo, hi, float(tol), int(max_iter))
