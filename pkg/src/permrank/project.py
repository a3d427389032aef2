"""Exact Euclidean projections onto bimonotone sets and sum-of-components fits.

``project_bimonotone`` handles a scalar box, ``project_bimonotone_below``
an entrywise cap, and ``fit_sum_of_bimonotone`` runs block-coordinate
descent over several components with fixed permutations whose sum must
stay inside [0, 1].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._isotonic import dykstra_bimonotone_box, pava_cols, pava_rows
from .matrices import (
    BimonotoneComponent,
    PermRankDecomposition,
    PermutationPair,
    UnitIntervalMatrix,
    apply_permutation_pair,
    as_dense,
)

__all__ = [
    "ProjectionConfig",
    "project_bimonotone",
    "project_bimonotone_below",
    "fit_sum_of_bimonotone",
]

# Solver-produced components carry Dykstra noise well above the exact
# constructors' 1e-12; validate them at this looser tolerance.
SOLVER_MONOTONE_TOL = 1e-7


@dataclass(frozen=True)
class ProjectionConfig:
    """Solver controls.

    ``tolerance`` bounds the per-sweep Frobenius change of the full
    Dykstra state (iterate plus correction terms); the iterate alone can
    sit still for whole sweeps while corrections drift, so it is not a
    valid convergence signal by itself.
    """

    tolerance: float = 1e-10
    max_iterations: int = 10000
    lower_bound: float = 0.0
    upper_bound: float = 1.0

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (0.0 <= self.lower_bound <= self.upper_bound <= 1.0):
            raise ValueError("need 0 <= lower_bound <= upper_bound <= 1")


def _warn_nonconvergence(op: str, sweeps: int, delta: float, tol: float):
    warnings.warn(
        f"{op}: no convergence within {sweeps} sweeps "
        f"(last per-sweep change {delta:.3e}, tolerance {tol:.1e})",
        stacklevel=3,
    )


def project_bimonotone(
    target,
    perms: PermutationPair,
    cfg: ProjectionConfig = ProjectionConfig(),
) -> UnitIntervalMatrix:
    """Nearest matrix bimonotone under ``perms`` within the scalar box.

    Dykstra's corrections run over row chains, column chains and the
    box; a final pass (row PAVA, column PAVA, clip) makes the output
    exactly feasible, which moves it by at most the solver tolerance.
    Clipping to a constant box preserves monotonicity, so both
    constraint families hold exactly on exit.
    """
    arr = as_dense(target)
    if arr.shape != perms.shape():
        raise ValueError(f"permutation shape {perms.shape()} != matrix {arr.shape}")
    sorted_target = apply_permutation_pair(arr, perms)
    x, sweeps, delta = dykstra_bimonotone_box(
        sorted_target, cfg.lower_bound, cfg.upper_bound, cfg.tolerance, cfg.max_iterations
    )
    if delta >= cfg.tolerance:
        _warn_nonconvergence("project_bimonotone", sweeps, delta, cfg.tolerance)
    x = np.clip(pava_cols(pava_rows(x)), cfg.lower_bound, cfg.upper_bound)
    out = apply_permutation_pair(x, perms.inverse())
    return UnitIntervalMatrix(out)


def project_bimonotone_below(
    target,
    perms: PermutationPair,
    cap,
    cfg: ProjectionConfig = ProjectionConfig(),
) -> UnitIntervalMatrix:
    """Nearest matrix bimonotone under ``perms`` with 0 <= out <= cap entrywise.

    The entrywise box is the last projection of every sweep, so the cap
    holds exactly on exit; monotonicity holds to within the solver
    tolerance (an exact monotone polish could violate a non-monotone
    cap, so none is applied here).
    """
    arr = as_dense(target)
    cap_arr = as_dense(cap)
    if cap_arr.shape != arr.shape:
        raise ValueError(f"cap shape {cap_arr.shape} != target {arr.shape}")
    if cap_arr.min() < 0.0:
        raise ValueError("cap must be entrywise non-negative")
    if arr.shape != perms.shape():
        raise ValueError(f"permutation shape {perms.shape()} != matrix {arr.shape}")
    sorted_target = apply_permutation_pair(arr, perms)
    sorted_cap = apply_permutation_pair(cap_arr, perms)
    x, sweeps, delta = dykstra_bimonotone_box(
        sorted_target,
        np.zeros_like(sorted_target),
        np.minimum(sorted_cap, 1.0),
        cfg.tolerance,
        cfg.max_iterations,
    )
    if delta >= cfg.tolerance:
        _warn_nonconvergence("project_bimonotone_below", sweeps, delta, cfg.tolerance)
    out = apply_permutation_pair(x, perms.inverse())
    return UnitIntervalMatrix(out)


def _bcd_run(arr, perm_list, comps, cfg, max_sweeps):
    """Block-coordinate descent from the given feasible components.

    Each block re-projects onto its bimonotone set intersected with the
    entrywise box [0, 1 - sum of the others], so the component sum stays
    inside [0, 1] throughout and the objective never increases sweep to
    sweep (asserted).  Stops when the per-sweep objective decrease drops
    below ``cfg.tolerance``.
    """
    k = len(perm_list)
    comps = [c.copy() for c in comps]
    total = sum(comps)
    objective = None  # set after the first sweep; the start may be sum-infeasible
    converged = False
    for _ in range(max_sweeps):
        for idx in range(k):
            others = total - comps[idx]
            cap = np.maximum(1.0 - others, 0.0)
            proj = project_bimonotone_below(arr - others, perm_list[idx], cap, cfg)
            comps[idx] = proj.values
            total = others + comps[idx]
        new_objective = float(np.sum((arr - total) ** 2))
        if objective is not None:
            if new_objective > objective + 100.0 * cfg.tolerance:
                raise AssertionError(
                    f"objective increased within a sweep: {objective} -> {new_objective}"
                )
            if objective - new_objective < cfg.tolerance:
                objective = new_objective
                converged = True
                break
        objective = new_objective
    return comps, total, objective, converged


def _admm_refine(arr, perm_list, cfg, iters):
    """Operator-splitting refinement for the joint fit.

    Alternates a closed-form per-cell update of the sum-box-constrained
    quadratic with projections of each component onto its bimonotone
    set; converges to the global optimum of the convex joint problem,
    where block descent alone can jam on cross-oriented components.
    Returns component iterates that are individually feasible (their sum
    may exceed the box by the splitting residual; callers re-sweep).
    """
    k = len(perm_list)
    z = [np.zeros_like(arr) for _ in range(k)]
    u = [np.zeros_like(arr) for _ in range(k)]
    rho = 1.0
    for _ in range(iters):
        v = [z[i] - u[i] for i in range(k)]
        sv = sum(v)
        s = np.clip((sv + (k / rho) * arr) / (1.0 + k / rho), 0.0, 1.0)
        shift = (s - sv) / k
        for i in range(k):
            ci = v[i] + shift
            z[i] = project_bimonotone(ci + u[i], perm_list[i], cfg).values
            u[i] = u[i] + ci - z[i]
    return z


def fit_sum_of_bimonotone(
    y_prime,
    perm_list: list[PermutationPair],
    cfg: ProjectionConfig = ProjectionConfig(),
    max_sweeps: int = 200,
    refine: bool | None = None,
):
    """Least-squares fit of a sum of bimonotone components to ``y_prime``.

    Component ``l`` is constrained bimonotone under ``perm_list[l]``,
    each component lies in [0, 1], and the component sum stays in
    [0, 1].  Runs block-coordinate descent from several deterministic
    starting points (all-zero, an equal split of the target, and the
    reversed block order), since a single descent can jam when
    oppositely-oriented components compete for the same cells.  With
    ``refine`` (defaulting on for problems up to 64 cells with at least
    two components) a splitting stage is run as well and kept when it
    lands a better feasible objective.

    Returns (decomposition, fitted_sum, objective).
    """
    if not perm_list:
        raise ValueError("perm_list must be non-empty")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    arr = as_dense(y_prime)
    for p in perm_list:
        if p.shape() != arr.shape:
            raise ValueError(f"permutation shape {p.shape()} != matrix {arr.shape}")

    k = len(perm_list)
    if refine is None:
        refine = k > 1 and arr.size <= 64

    zeros = [np.zeros_like(arr) for _ in range(k)]
    candidates = [(perm_list, zeros)]
    if refine:
        split = [
            project_bimonotone_below(
                arr / k, p, np.full_like(arr, 1.0 / k), cfg
            ).values
            for p in perm_list
        ]
        candidates.append((perm_list, split))
        reversed_perms = list(reversed(perm_list))
        candidates.append((reversed_perms, [np.zeros_like(arr) for _ in range(k)]))

    best = None
    any_converged = False
    for order, start in candidates:
        comps, total, obj, converged = _bcd_run(arr, order, start, cfg, max_sweeps)
        any_converged = any_converged or converged
        if order is not perm_list:
            # map components back to the caller's block order
            comps = list(reversed(comps))
        if best is None or obj < best[2]:
            best = (comps, total, obj)

    if refine:
        z = _admm_refine(arr, perm_list, cfg, iters=2000)
        comps, total, obj, converged = _bcd_run(arr, perm_list, z, cfg, max_sweeps)
        any_converged = any_converged or converged
        if obj < best[2]:
            best = (comps, total, obj)

    comps, total, objective = best
    if not any_converged:
        warnings.warn(
            f"fit_sum_of_bimonotone: objective still moving after {max_sweeps} "
            f"sweeps (last value {objective:.6e})",
            stacklevel=2,
        )

    components = tuple(
        BimonotoneComponent(
            UnitIntervalMatrix(comps[i]), perm_list[i], tol=SOLVER_MONOTONE_TOL
        )
        for i in range(k)
    )
    dec = PermRankDecomposition(components, atol=1e-7)
    return dec, total, objective
