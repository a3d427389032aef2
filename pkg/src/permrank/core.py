"""Structured matrix constructors and permutation-rank-one membership.

The generators here produce the structured families used throughout the
package: triangular all-ones blocks, block matrices realizing any
(permutation rank, non-negative rank) pair, the half-diagonal triangular
matrix, block-diagonal quartered witnesses, quadrant indicator pairs,
and random convex-combination models.
"""

from __future__ import annotations

import itertools

import numpy as np

from .matrices import (
    MONOTONE_TOL,
    BimonotoneComponent,
    PermRankDecomposition,
    Permutation,
    PermutationPair,
    UnitIntervalMatrix,
    as_dense,
    is_bimonotone,
)
from .rng import make_rng

__all__ = [
    "make_upper_triangular_ones",
    "make_rank_pair_matrix",
    "make_triangular_halves",
    "make_hausdorff_block",
    "make_convexity_witness_pair",
    "make_spectral_trap_matrix",
    "generate_convex_combination_model",
    "pr1_membership",
    "pr1_membership_bruteforce",
    "check_uniqueness_necessary",
    "as_bimonotone_component",
]


def make_upper_triangular_ones(k: int) -> UnitIntervalMatrix:
    """k-by-k matrix with ones on and above the diagonal, zeros below."""
    if k < 1:
        raise ValueError(f"size must be >= 1, got {k}")
    vals = np.triu(np.ones((k, k)))
    return UnitIntervalMatrix(vals)


def make_rank_pair_matrix(rho: int, r: int, n: int, d: int) -> UnitIntervalMatrix:
    """Block matrix with permutation rank ``rho`` and non-negative rank ``r``.

    Layout: an upper-triangular all-ones block of size r-rho+1, then an
    identity block of size rho-1 on the diagonal, zeros elsewhere,
    embedded in n-by-d.
    """
    if not (1 <= rho <= r <= min(n, d)):
        raise ValueError(
            f"need 1 <= rho <= r <= min(n, d), got rho={rho}, r={r}, n={n}, d={d}"
        )
    vals = np.zeros((n, d))
    j = r - rho + 1
    vals[:j, :j] = np.triu(np.ones((j, j)))
    for i in range(rho - 1):
        vals[j + i, j + i] = 1.0
    return UnitIntervalMatrix(vals)


def make_triangular_halves(n: int) -> UnitIntervalMatrix:
    """n-by-n matrix: 1 below the diagonal, 1/2 on it, 0 above.

    Permutation rank one, non-negative rank n.
    """
    if n < 1:
        raise ValueError(f"size must be >= 1, got {n}")
    vals = np.tril(np.ones((n, n)), k=-1)
    np.fill_diagonal(vals, 0.5)
    return UnitIntervalMatrix(vals)


def make_hausdorff_block(k: int, n: int, d: int) -> UnitIntervalMatrix:
    """Block-diagonal matrix of k quartered [[1,1],[1,0]] blocks.

    Each diagonal block is (n//k by d//k), split into four quadrants
    with the bottom-right quadrant zero.  Non-divisible sizes are
    floored and the remainder zero-padded; retrieve the effective sizes
    as k*(n//k) by k*(d//k).
    """
    if k < 1:
        raise ValueError(f"block count must be >= 1, got {k}")
    if k > min(n, d) // 2:
        raise ValueError(f"need k <= min(n, d)/2, got k={k}, n={n}, d={d}")
    bn, bd = n // k, d // k
    half_n, half_d = bn // 2, bd // 2
    block = np.ones((bn, bd))
    block[half_n:, half_d:] = 0.0
    vals = np.zeros((n, d))
    for i in range(k):
        vals[i * bn : (i + 1) * bn, i * bd : (i + 1) * bd] = block
    return UnitIntervalMatrix(vals)


def make_convexity_witness_pair(n: int, d: int):
    """Quadrant indicators: ones on the top-left and bottom-right blocks.

    Both matrices pass pr1_membership; their midpoint is far from every
    permutation-rank-one matrix.
    """
    if n < 2 or d < 2:
        raise ValueError(f"need n, d >= 2, got n={n}, d={d}")
    m1 = np.zeros((n, d))
    m1[: n // 2, : d // 2] = 1.0
    m2 = np.zeros((n, d))
    m2[n // 2 :, d // 2 :] = 1.0
    return UnitIntervalMatrix(m1), UnitIntervalMatrix(m2)


def make_spectral_trap_matrix(n: int, d: int):
    """Rank-3 matrix whose top singular pairs carry misleading orderings.

    Built as a1 b1^T + a2 b2^T + a3 b3^T with mutually orthogonal block
    vectors: after a leading entry, the blocks hold fractions of the
    remaining coordinates sized 0.304, 0.684 and 0.012, with values
    (.9, .2, 0), (.8, -.1, 0) and (0, 0, 1) for the three factors.  The
    first two factors sum to one bimonotone component, the third is a
    disjoint indicator block, so the matrix splits into two bimonotone
    parts; yet the orderings read off the top two singular vectors rank
    the indicator block's rows and columns last, which no sum of two
    components ordered that way can fit.

    The 9:4 block-length balance makes the factors exactly orthogonal
    whenever 9*round(.304*(n-1)) == 4*round(.684*(n-1)), as at the
    reference size n = d = 251.

    Returns (matrix, a_vectors, b_vectors) with the factor vectors as
    rows of (3, n) and (3, d) arrays.
    """

    def factor_vectors(m: int):
        len_a = round(0.304 * (m - 1))
        len_b = round(0.684 * (m - 1))
        len_c = m - 1 - len_a - len_b
        if min(len_a, len_b, len_c) < 1:
            raise ValueError(f"size {m} too small for the block construction")
        blocks = np.zeros((3, m))
        blocks[0] = np.concatenate(
            [[1.0], np.full(len_a, 0.9), np.full(len_b, 0.8), np.zeros(len_c)]
        )
        blocks[1] = np.concatenate(
            [[0.0], np.full(len_a, 0.2), np.full(len_b, -0.1), np.zeros(len_c)]
        )
        blocks[2] = np.concatenate(
            [[0.0], np.zeros(len_a), np.zeros(len_b), np.ones(len_c)]
        )
        return blocks

    a = factor_vectors(n)
    b = factor_vectors(d)
    vals = a.T @ b
    return UnitIntervalMatrix(vals), a, b


def generate_convex_combination_model(
    n: int, d: int, r: int, seed: int
) -> UnitIntervalMatrix:
    """Random non-negative-rank-<=r matrix from per-row simplex mixing.

    Draws r rank-one factor matrices u v^T with uniform [0,1] vectors and
    one simplex weight vector per row; entry (i, j) is the weighted
    combination of the factors' (i, j) entries.
    """
    if not (1 <= r <= min(n, d)):
        raise ValueError(f"need 1 <= r <= min(n, d), got r={r}, n={n}, d={d}")
    rng = make_rng(seed)
    u = rng.random((r, n))
    v = rng.random((r, d))
    alpha = rng.dirichlet(np.ones(r), size=n)  # rows on the simplex
    # entry (i, j) = sum_l alpha[i, l] * u[l, i] * v[l, j]
    left = alpha.T * u  # (r, n)
    vals = left.T @ v
    return UnitIntervalMatrix(vals)


def pr1_membership(matrix, tol: float = MONOTONE_TOL):
    """Decide membership in the permutation-rank-one set.

    Sorts rows by row sums and columns by column sums (ascending, ties
    kept in index order) and checks the arrangement for bimonotonicity.
    In any bimonotone arrangement the rows form an entrywise chain, so
    equal sums force equal rows and the sum order is always a valid
    witness when one exists.

    Returns (verdict, pair) where ``pair`` sorts the matrix bimonotone,
    or (False, None).
    """
    arr = as_dense(matrix)
    row_order = np.argsort(arr.sum(axis=1), kind="stable")
    col_order = np.argsort(arr.sum(axis=0), kind="stable")
    arranged = arr[np.ix_(row_order, col_order)]
    if not is_bimonotone(arranged, tol=tol):
        return False, None
    pair = PermutationPair(
        Permutation.from_order(row_order), Permutation.from_order(col_order)
    )
    return True, pair


def pr1_membership_bruteforce(matrix, tol: float = MONOTONE_TOL) -> bool:
    """Exhaustive check over all row/column arrangements (oracle, tiny sizes)."""
    arr = as_dense(matrix)
    n, d = arr.shape
    if n > 6 or d > 6:
        raise ValueError(f"exhaustive check limited to 6x6, got {arr.shape}")
    for rows in itertools.permutations(range(n)):
        sub = arr[list(rows), :]
        for cols in itertools.permutations(range(d)):
            if is_bimonotone(sub[:, list(cols)], tol=tol):
                return True
    return False


def check_uniqueness_necessary(dec: PermRankDecomposition, eq_tol: float = 1e-9):
    """Necessary condition for a decomposition to be the unique one.

    For each coordinate, counts the components whose entry there is
    non-zero and distinct (beyond ``eq_tol``) from every other entry of
    that component.  The condition holds iff every count is at most one.

    Returns (satisfied, violations) with ``violations`` the coordinates
    where two or more components have such an entry.
    """
    shape = dec.shape
    counts = np.zeros(shape, dtype=np.intp)
    for comp in dec.components:
        vals = comp.matrix.values
        flat = vals.ravel()
        for idx in range(flat.size):
            x = flat[idx]
            if abs(x) <= eq_tol:
                continue
            others = np.delete(flat, idx)
            if np.all(np.abs(others - x) > eq_tol):
                counts[np.unravel_index(idx, shape)] += 1
    violations = [(int(i), int(j)) for i, j in np.argwhere(counts >= 2)]
    return len(violations) == 0, violations


def as_bimonotone_component(matrix, tol: float = MONOTONE_TOL) -> BimonotoneComponent:
    """Wrap a permutation-rank-one matrix with its sum-order witness.

    Raises when no row/column arrangement sorts the matrix bimonotone.
    """
    ok, pair = pr1_membership(matrix, tol=tol)
    if not ok:
        raise ValueError("matrix is not permutation-rank one")
    return BimonotoneComponent(UnitIntervalMatrix(matrix), pair, tol=tol)
