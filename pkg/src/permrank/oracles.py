"""Independent reference solvers used to cross-check the projections.

The main projection path runs Dykstra's method over PAVA sub-problems;
the oracle here solves the same quadratic program with a dense primal
active-set method instead, sharing no code with the production path.
Intended for small instances only.
"""

from __future__ import annotations

import numpy as np

from .matrices import PermutationPair, apply_permutation_pair, as_dense

__all__ = ["bimonotone_qp_oracle", "active_set_qp"]

_FEAS_TOL = 1e-10
_MULT_TOL = 1e-9


def active_set_qp(y: np.ndarray, A: np.ndarray, b: np.ndarray, x0: np.ndarray):
    """Minimize 0.5*||x - y||^2 subject to A x <= b, from feasible x0.

    Primal active-set iteration for the identity-Hessian QP: solve the
    equality-constrained subproblem on the working set, step to the
    first blocking constraint, and drop constraints with negative
    multipliers at stationary points.
    """
    m = A.shape[0]
    x = x0.astype(np.float64).copy()
    if np.any(A @ x > b + 1e-8):
        raise ValueError("starting point is infeasible")
    working = [i for i in range(m) if A[i] @ x > b[i] - _FEAS_TOL]

    for _ in range(200 * (m + 1)):
        if working:
            Aw = A[working]
            bw = b[working]
            gram = Aw @ Aw.T
            rhs = Aw @ y - bw
            lam = np.linalg.lstsq(gram, rhs, rcond=None)[0]
            x_star = y - Aw.T @ lam
        else:
            lam = np.zeros(0)
            x_star = y.copy()

        d = x_star - x
        if np.linalg.norm(d) <= _FEAS_TOL:
            if len(working) == 0 or np.min(lam) >= -_MULT_TOL:
                return x
            working.pop(int(np.argmin(lam)))
            continue

        slack = b - A @ x
        rate = A @ d
        blocking = -1
        alpha = 1.0
        for i in range(m):
            if i in working or rate[i] <= _FEAS_TOL:
                continue
            step = slack[i] / rate[i]
            if step < alpha - 1e-14:
                alpha = max(step, 0.0)
                blocking = i
        x = x + alpha * d
        if blocking >= 0:
            working.append(blocking)
        elif alpha >= 1.0:
            # reached the subproblem optimum; loop re-checks multipliers
            continue
    raise RuntimeError("active-set iteration did not converge")


def _grid_constraints(n: int, d: int, lo: float, hi: float):
    """Inequalities for {non-decreasing rows and columns} ∩ [lo, hi]."""
    rows = []
    rhs = []

    def unit(i, j, v):
        r = np.zeros(n * d)
        r[i * d + j] = v
        return r

    for i in range(n):
        for j in range(d - 1):
            r = unit(i, j, 1.0)
            r[i * d + j + 1] = -1.0
            rows.append(r)
            rhs.append(0.0)
    for j in range(d):
        for i in range(n - 1):
            r = unit(i, j, 1.0)
            r[(i + 1) * d + j] = -1.0
            rows.append(r)
            rhs.append(0.0)
    for i in range(n):
        for j in range(d):
            rows.append(unit(i, j, 1.0))
            rhs.append(hi)
            rows.append(unit(i, j, -1.0))
            rhs.append(-lo)
    return np.array(rows), np.array(rhs)


def bimonotone_qp_oracle(
    target,
    perms: PermutationPair,
    lo: float = 0.0,
    hi: float = 1.0,
) -> np.ndarray:
    """Exact projection onto {bimonotone under perms} ∩ [lo, hi], via QP."""
    arr = as_dense(target)
    n, d = arr.shape
    if n * d > 64:
        raise ValueError(f"oracle limited to 64 variables, got {n * d}")
    sorted_target = apply_permutation_pair(arr, perms)
    A, b = _grid_constraints(n, d, lo, hi)
    mid = min(max((lo + hi) / 2.0, lo), hi)
    x0 = np.full(n * d, mid)
    x = active_set_qp(sorted_target.ravel(), A, b, x0)
    return apply_permutation_pair(x.reshape(n, d), perms.inverse())
