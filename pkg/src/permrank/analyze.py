"""Spectral diagnostics: singular-value tails, grouped-column low-rank
approximations, best rank-one gaps, and the certified separation between
the non-negative-rank and permutation-rank families.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import make_convexity_witness_pair, make_hausdorff_block, pr1_membership
from .matrices import (
    BimonotoneComponent,
    PermRankDecomposition,
    Permutation,
    PermutationPair,
    UnitIntervalMatrix,
    apply_permutation_pair,
    as_dense,
)
from .project import SOLVER_MONOTONE_TOL, ProjectionConfig, project_bimonotone
from .rng import make_rng

__all__ = [
    "SpectralReport",
    "spectral_report",
    "numerical_rank",
    "singular_tail",
    "chatterjee_approximation",
    "verify_tail_bound_pr",
    "verify_tail_bound_nn",
    "best_rank_one_gap",
    "hausdorff_gap_report",
    "HausdorffGapReport",
    "TailBoundReport",
    "convexity_gap_estimate",
    "random_bimonotone",
    "random_permrank",
]

RANK_THRESHOLD = 1e-9  # relative to the top singular value


@dataclass(frozen=True)
class SpectralReport:
    """Descending singular values with the norms they determine."""

    singular_values: tuple[float, ...]
    frobenius_sq: float
    op_norm: float

    def __post_init__(self):
        s = np.asarray(self.singular_values)
        if s.size and (np.any(s < 0) or np.any(np.diff(s) > 0)):
            raise ValueError("singular values must be non-negative and descending")
        if abs(self.frobenius_sq - float(np.sum(s**2))) > 1e-8 * max(
            self.frobenius_sq, 1.0
        ):
            raise ValueError("frobenius_sq inconsistent with the singular values")


def spectral_report(matrix) -> SpectralReport:
    arr = as_dense(matrix)
    s = np.linalg.svd(arr, compute_uv=False)
    return SpectralReport(
        singular_values=tuple(float(v) for v in s),
        frobenius_sq=float(np.sum(s**2)),
        op_norm=float(s[0]) if s.size else 0.0,
    )


def numerical_rank(matrix, threshold: float = RANK_THRESHOLD) -> int:
    arr = as_dense(matrix)
    s = np.linalg.svd(arr, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > threshold * s[0]))


def singular_tail(matrix, s: int) -> float:
    """Sum of squared singular values with index above ``s`` (1-based count kept)."""
    arr = as_dense(matrix)
    sv = np.linalg.svd(arr, compute_uv=False)
    if not (0 <= s < min(arr.shape)):
        raise ValueError(f"need 0 <= s < min(n, d), got s={s} for shape {arr.shape}")
    return float(np.sum(sv[s:] ** 2))


def chatterjee_approximation(
    c: BimonotoneComponent, s_tilde: int, minimal_representative: bool = True
) -> UnitIntervalMatrix:
    """Rank-reducing column substitution for a bimonotone component.

    Working in the sorted frame, columns are grouped by which of
    ``s_tilde`` equal slices of [0, n] their column sum lands in, and
    every column in a group is replaced by one representative: the
    entrywise-minimal column of the group when ``minimal_representative``
    (well defined because bimonotone columns form a chain, and it keeps
    the output entrywise below the input), otherwise the group's first
    column.  The result has at most ``s_tilde`` distinct columns, hence
    rank at most ``s_tilde``, and each column moves by at most n/s_tilde
    in L1.
    """
    if s_tilde < 1:
        raise ValueError(f"s_tilde must be >= 1, got {s_tilde}")
    sorted_vals = np.array(c.sorted_values())
    n, d = sorted_vals.shape
    sums = sorted_vals.sum(axis=0)
    # interval index in [0, n], top edge closed
    groups = np.minimum((sums * s_tilde / n).astype(np.intp), s_tilde - 1)
    out = np.array(sorted_vals)
    for g in np.unique(groups):
        idx = np.flatnonzero(groups == g)
        if minimal_representative:
            rep = idx[np.argmin(sums[idx])]
        else:
            rep = idx[0]
        out[:, idx] = sorted_vals[:, [rep]]
    restored = apply_permutation_pair(out, c.perms.inverse())
    return UnitIntervalMatrix(restored)


@dataclass(frozen=True)
class TailBoundReport:
    measured: float
    bound: float
    passed: bool


def verify_tail_bound_pr(decomp: PermRankDecomposition, s: int) -> TailBoundReport:
    """Check the spectral-tail bound rho^2 * n * d / s for a decomposition sum."""
    total = decomp.total()
    n, d = total.shape
    rho = len(decomp)
    if not (1 <= s < min(n, d)):
        raise ValueError(f"need 1 <= s < min(n, d), got s={s}")
    measured = singular_tail(total, s)
    bound = rho**2 * n * d / s
    return TailBoundReport(measured, bound, measured <= bound)


def verify_tail_bound_nn(m: UnitIntervalMatrix, r: int, s: int) -> TailBoundReport:
    """Check the tail bound n*d*max((r-s)/r, 0) for a rank-<=r matrix.

    Refuses matrices whose numerical rank exceeds ``r``.  For s >= r the
    bound is zero and the measured tail must vanish to 1e-8 * n * d.
    """
    n, d = m.shape
    if not (1 <= s < min(n, d)):
        raise ValueError(f"need 1 <= s < min(n, d), got s={s}")
    actual_rank = numerical_rank(m.values)
    if actual_rank > r:
        raise ValueError(f"matrix has numerical rank {actual_rank} > r={r}")
    measured = singular_tail(m.values, s)
    bound = n * d * max((r - s) / r, 0.0)
    if s >= r:
        return TailBoundReport(measured, bound, measured <= 1e-8 * n * d)
    return TailBoundReport(measured, bound, measured <= bound)


def best_rank_one_gap(matrix) -> float:
    """Squared distance to the nearest rank-one matrix: ||m||_F^2 - sigma_1^2."""
    arr = as_dense(matrix)
    sv = np.linalg.svd(arr, compute_uv=False)
    return float(max(np.sum(sv**2) - sv[0] ** 2, 0.0))


@dataclass(frozen=True)
class HausdorffGapReport:
    """Certified squared-distance lower bound from the block construction."""

    k: int
    n_effective: int
    d_effective: int
    certificate: float
    normalized: float  # certificate / (n*d/k)


def hausdorff_gap_report(k: int, n: int, d: int) -> HausdorffGapReport:
    """Lower bound on the separation between rank-k approximable matrices
    and the k-block construction.

    The block-diagonal matrix of k quartered blocks keeps its distance
    to every matrix of rank at most k above k times the single block's
    rank-one gap (block-diagonal spectra add), and that certificate
    scales as n*d/k.
    """
    block_matrix = make_hausdorff_block(k, n, d)
    n_eff, d_eff = k * (n // k), k * (d // k)
    bn, bd = n // k, d // k
    block = block_matrix.values[:bn, :bd]
    certificate = k * best_rank_one_gap(block)
    return HausdorffGapReport(
        k=k,
        n_effective=n_eff,
        d_effective=d_eff,
        certificate=certificate,
        normalized=certificate / (n_eff * d_eff / k),
    )


def convexity_gap_estimate(
    n: int, d: int, cfg: ProjectionConfig = ProjectionConfig()
) -> float:
    """Exact squared distance from the quadrant midpoint to the
    permutation-rank-one set, by enumerating every permutation pair.
    """
    if max(n, d) > 5:
        raise ValueError(f"permutation enumeration limited to 5x5, got {n}x{d}")
    m1, m2 = make_convexity_witness_pair(n, d)
    midpoint = 0.5 * (m1.values + m2.values)
    best = np.inf
    for rp in itertools.permutations(range(n)):
        for cp in itertools.permutations(range(d)):
            pair = PermutationPair(Permutation(rp), Permutation(cp))
            proj = project_bimonotone(midpoint, pair, cfg).values
            best = min(best, float(np.sum((midpoint - proj) ** 2)))
    return best


def random_bimonotone(n: int, d: int, seed: int) -> BimonotoneComponent:
    """Random permutation-rank-one matrix.

    Uniform iid entries projected onto the identity-frame bimonotone set,
    then scrambled by a random permutation pair.
    """
    rng = make_rng(seed, 1)
    base = rng.random((n, d))
    sorted_frame = project_bimonotone(base, PermutationPair.identity(n, d)).values
    pair = PermutationPair(
        Permutation(rng.permutation(n)), Permutation(rng.permutation(d))
    )
    scrambled = apply_permutation_pair(sorted_frame, pair.inverse())
    ok, witness = pr1_membership(scrambled)
    assert ok
    return BimonotoneComponent(
        UnitIntervalMatrix(scrambled), witness, tol=SOLVER_MONOTONE_TOL
    )


def random_permrank(n: int, d: int, rho: int, seed: int) -> PermRankDecomposition:
    """Random permutation-rank-<=rho matrix as a sum of rho scaled components."""
    comps = []
    for ell in range(rho):
        raw = random_bimonotone(n, d, make_rng(seed, 2, ell).integers(2**63))
        scaled = UnitIntervalMatrix(raw.matrix.values / rho)
        comps.append(
            BimonotoneComponent(scaled, raw.perms, tol=SOLVER_MONOTONE_TOL)
        )
    return PermRankDecomposition(comps, atol=1e-7)
