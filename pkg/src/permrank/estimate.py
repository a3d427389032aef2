"""Estimators: singular-value thresholding, an exhaustive regularized
least-squares solver for tiny matrices, the two-step spectral estimator,
and the greedy one-component-at-a-time decomposition.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .matrices import (
    BimonotoneComponent,
    PermRankDecomposition,
    Permutation,
    PermutationPair,
    UnitIntervalMatrix,
)
from .observe import as_recentered
from .project import (
    SOLVER_MONOTONE_TOL,
    ProjectionConfig,
    fit_sum_of_bimonotone,
    project_bimonotone,
    project_bimonotone_below,
)

__all__ = [
    "SvtConfig",
    "RegularizerSpec",
    "svt_estimate",
    "default_svt_threshold",
    "regularizer_value",
    "brute_force_regularized_ls",
    "two_step_estimate",
    "greedy_decompose",
    "GreedyResult",
    "all_permutation_pairs",
]


@dataclass(frozen=True)
class SvtConfig:
    """Soft-threshold level and whether to clip the output into [0, 1]."""

    threshold: float
    clip_output: bool = True

    def __post_init__(self):
        if not np.isfinite(self.threshold) or self.threshold < 0.0:
            raise ValueError(f"threshold must be finite and >= 0, got {self.threshold}")


@dataclass(frozen=True)
class RegularizerSpec:
    """Rank penalty nu(k) = scale * k * max(n,d) * log^exponent(n*d) / p_obs."""

    scale: float = 1.0
    exponent: float = 2.01

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def default_svt_threshold(n: int, d: int, p_obs: float) -> float:
    """Threshold 2.1 * sqrt((n + d) / p_obs)."""
    if not (0.0 < p_obs <= 1.0):
        raise ValueError(f"p_obs must lie in (0, 1], got {p_obs}")
    return 2.1 * np.sqrt((n + d) / p_obs)


def svt_estimate(y, cfg: SvtConfig):
    """Soft-threshold the spectrum of the recentered observations.

    Accepts an ObservationMatrix (recentered first) or an
    already-recentered dense matrix.  Returns a UnitIntervalMatrix when
    clipping is on (clipping onto the truth's own range never increases
    the Frobenius error), otherwise the raw reconstruction array.
    """
    y_prime, _ = as_recentered(y)
    u, s, vt = np.linalg.svd(y_prime, full_matrices=False)
    s_shrunk = np.maximum(s - cfg.threshold, 0.0)
    out = (u * s_shrunk) @ vt
    if cfg.clip_output:
        return UnitIntervalMatrix(out, clamp=True)
    return out


def regularizer_value(
    spec: RegularizerSpec, k: int, n: int, d: int, p_obs: float
) -> float:
    """Penalty for fitting k components at the given problem size."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if not (0.0 < p_obs <= 1.0):
        raise ValueError(f"p_obs must lie in (0, 1], got {p_obs}")
    if k == 0:
        return 0.0
    return spec.scale * k * max(n, d) * np.log(n * d) ** spec.exponent / p_obs


def all_permutation_pairs(n: int, d: int) -> list[PermutationPair]:
    """Every (row, column) permutation pair, in lexicographic order."""
    return [
        PermutationPair(Permutation(rp), Permutation(cp))
        for rp in itertools.permutations(range(n))
        for cp in itertools.permutations(range(d))
    ]


def brute_force_regularized_ls(
    y,
    max_k: int,
    spec: RegularizerSpec = RegularizerSpec(),
    cfg: ProjectionConfig = ProjectionConfig(),
):
    """Exhaustive regularized least squares over component counts and permutations.

    Minimizes ||Y' - M||_F^2 + nu(k) over k in {0, ..., max_k} and over
    every k-tuple of permutation pairs, fitting each candidate tuple by
    block-coordinate descent.  k = 0 admits only the all-zeros matrix.
    Ties break to the lexicographically first permutation tuple.

    Factorial enumeration: refused above 5x5 for max_k = 1 and above
    3x3 for max_k = 2.

    Returns (estimate, chosen_k, chosen_pairs, objective).
    """
    y_prime, p_obs = as_recentered(y)
    n, d = y_prime.shape
    if max_k > 2 or max_k < 0:
        raise ValueError(f"max_k must be 0, 1 or 2, got {max_k}")
    if max_k >= 1 and max(n, d) > 5:
        raise ValueError(
            f"enumeration over single permutation pairs is limited to 5x5; got {n}x{d}"
        )
    if max_k == 2 and max(n, d) > 3:
        raise ValueError(
            f"enumeration over pairs of permutation pairs is limited to 3x3; got {n}x{d}"
        )

    best_m = np.zeros((n, d))
    best_k = 0
    best_pairs: tuple[PermutationPair, ...] = ()
    best_obj = float(np.sum(y_prime**2))

    pairs = all_permutation_pairs(n, d)
    for k in range(1, max_k + 1):
        penalty = regularizer_value(spec, k, n, d, p_obs)
        if penalty >= best_obj:
            # fit error is non-negative, so no k-tuple can win
            continue
        for tup in itertools.combinations_with_replacement(pairs, k):
            if k == 1:
                fitted = project_bimonotone(y_prime, tup[0], cfg).values
            else:
                # enumeration stays lean; the winning tuple is re-polished below
                _, fitted, _ = fit_sum_of_bimonotone(
                    y_prime, list(tup), cfg, refine=False
                )
            obj = float(np.sum((y_prime - fitted) ** 2)) + penalty
            assert obj >= 0.0
            if obj < best_obj - 1e-15:
                best_obj = obj
                best_m = fitted
                best_k = k
                best_pairs = tup
    if best_k >= 2:
        penalty = regularizer_value(spec, best_k, n, d, p_obs)
        _, fitted, _ = fit_sum_of_bimonotone(y_prime, list(best_pairs), cfg)
        obj = float(np.sum((y_prime - fitted) ** 2)) + penalty
        if obj < best_obj:
            best_obj = obj
            best_m = fitted
    return UnitIntervalMatrix(best_m), best_k, best_pairs, best_obj


def _signed_pair(u: np.ndarray, v: np.ndarray):
    """Resolve the joint sign of a singular vector pair.

    Flip when the positive part of u carries less mass than the negative
    part; exact ties fall through to v's masses and then to the sign of
    the first non-zero entry of u.
    """
    up = np.linalg.norm(np.maximum(u, 0.0))
    un = np.linalg.norm(np.maximum(-u, 0.0))
    flip = False
    if up < un:
        flip = True
    elif up == un:
        vp = np.linalg.norm(np.maximum(v, 0.0))
        vn = np.linalg.norm(np.maximum(-v, 0.0))
        if vp < vn:
            flip = True
        elif vp == vn:
            nz = u[u != 0.0]
            flip = bool(nz.size and nz[0] < 0.0)
    return (-u, -v) if flip else (u, v)


def _ordering_pair(a: np.ndarray, b: np.ndarray) -> PermutationPair:
    """Permutations sorting the factor entries ascending, ties by index."""
    return PermutationPair(
        Permutation.from_order(np.argsort(a, kind="stable")),
        Permutation.from_order(np.argsort(b, kind="stable")),
    )


def two_step_estimate(
    y,
    rho_star: int,
    cfg: ProjectionConfig = ProjectionConfig(),
    distinct_perms: bool = False,
):
    """Spectral permutations followed by a constrained least-squares fit.

    Step 1 factors the recentered observations as sums of sqrt(s)-scaled
    singular vector pairs in descending singular-value order, resolves
    each pair's global sign, and reads row/column permutations off the
    entry orderings of the first ``rho_star`` factors.  With
    ``distinct_perms`` the scan continues down the spectrum until
    ``rho_star`` distinct permutation pairs have been collected.  Step 2
    fits a sum of components bimonotone under those permutations.

    Returns (estimate, perm_pairs, decomposition).
    """
    y_prime, _ = as_recentered(y)
    n, d = y_prime.shape
    if not (1 <= rho_star <= min(n, d)):
        raise ValueError(f"need 1 <= rho_star <= min(n, d), got {rho_star}")
    u, s, vt = np.linalg.svd(y_prime, full_matrices=False)
    effective_rank = int(np.sum(s > 1e-12 * max(s[0], 1.0)))
    if effective_rank < rho_star:
        warnings.warn(
            f"rank {effective_rank} below requested {rho_star}; "
            f"proceeding with the available factors",
            stacklevel=2,
        )

    perms: list[PermutationPair] = []
    for ell in range(min(n, d)):
        ue, ve = _signed_pair(u[:, ell], vt[ell])
        pair = _ordering_pair(np.sqrt(s[ell]) * ue, np.sqrt(s[ell]) * ve)
        if distinct_perms and any(
            p.row_perm.mapping == pair.row_perm.mapping
            and p.col_perm.mapping == pair.col_perm.mapping
            for p in perms
        ):
            continue
        perms.append(pair)
        if len(perms) == rho_star:
            break

    dec, total, _ = fit_sum_of_bimonotone(y_prime, perms, cfg)
    return UnitIntervalMatrix(total), tuple(perms), dec


@dataclass(frozen=True)
class GreedyResult:
    """Outcome of the greedy decomposition loop."""

    components: tuple[BimonotoneComponent, ...]
    steps: int
    terminated: bool
    residual: np.ndarray = field(repr=False)
    residual_norm: float

    def decomposition(self) -> PermRankDecomposition:
        return PermRankDecomposition(self.components, atol=1e-7)


def greedy_decompose(
    m: UnitIntervalMatrix,
    norm_q: float = 2.0,
    capped: bool = True,
    max_steps: int = 16,
    cfg: ProjectionConfig = ProjectionConfig(),
) -> GreedyResult:
    """Repeatedly strip off the best single bimonotone component.

    Each step scans every permutation pair and removes the component
    minimizing the residual norm; the capped variant additionally
    confines the component below the running residual, which keeps the
    residual entrywise non-negative.  Stops when the residual Frobenius
    norm falls under ``cfg.tolerance``; hitting ``max_steps`` first is
    reported as non-termination (the uncapped variant can drive residual
    entries negative, after which no non-negative component can ever
    finish the job).

    Only the Euclidean inner norm (norm_q = 2) admits the exact
    projection used here; other exponents are refused.
    """
    n, d = m.shape
    if max(n, d) > 5:
        raise ValueError(f"permutation enumeration limited to 5x5, got {n}x{d}")
    if norm_q != 2.0:
        raise ValueError(f"only norm_q = 2 is solvable exactly; got {norm_q}")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")

    pairs = all_permutation_pairs(n, d)
    residual = m.values.copy()
    components: list[BimonotoneComponent] = []
    terminated = False
    steps = 0
    for _ in range(max_steps):
        norm = float(np.linalg.norm(residual))
        if norm < cfg.tolerance:
            terminated = True
            break
        best_err = np.inf
        best_comp = None
        best_pair = None
        for pair in pairs:
            if capped:
                cand = project_bimonotone_below(
                    residual, pair, np.maximum(residual, 0.0), cfg
                ).values
            else:
                cand = project_bimonotone(residual, pair, cfg).values
            err = float(np.linalg.norm(residual - cand))
            if err < best_err - 1e-15:
                best_err = err
                best_comp = cand
                best_pair = pair
        components.append(
            BimonotoneComponent(
                UnitIntervalMatrix(best_comp), best_pair, tol=SOLVER_MONOTONE_TOL
            )
        )
        residual = residual - best_comp
        if capped:
            assert residual.min() >= -1e-9
        steps += 1
    else:
        norm = float(np.linalg.norm(residual))
        if norm < cfg.tolerance:
            terminated = True

    result = GreedyResult(
        components=tuple(components),
        steps=steps,
        terminated=terminated,
        residual=residual,
        residual_norm=float(np.linalg.norm(residual)),
    )
    if not terminated:
        warnings.warn(
            f"greedy decomposition did not terminate in {steps} steps; "
            f"residual norm {result.residual_norm:.3e}",
            stacklevel=2,
        )
    return result
