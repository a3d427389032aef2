"""Matrix and permutation value types.

Matrices are plain float64 numpy arrays wrapped in thin immutable
holders that enforce the domain invariants once, at construction.  All
wrapped arrays are marked read-only; operations return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "as_dense",
    "UnitIntervalMatrix",
    "Permutation",
    "PermutationPair",
    "BimonotoneComponent",
    "PermRankDecomposition",
    "apply_permutation_pair",
    "is_bimonotone",
    "bimonotone_violation",
    "MONOTONE_TOL",
]

# Adjacent-pair violations below this are treated as exact ties: the
# constructors emit exact dyadic values, while the projection solvers
# leave noise around 1e-10 and are validated at a looser tolerance.
MONOTONE_TOL = 1e-12


def as_dense(values) -> np.ndarray:
    """Validate and return a 2-D float64 array with finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class UnitIntervalMatrix:
    """Dense matrix with every entry in [0, 1].

    Construction rejects out-of-range entries unless ``clamp=True`` is
    requested explicitly, in which case entries are clipped into [0, 1].
    """

    values: np.ndarray

    def __init__(self, values, clamp: bool = False):
        arr = as_dense(values)
        if clamp:
            arr = np.clip(arr, 0.0, 1.0)
        elif arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError(
                f"entries outside [0, 1]: range [{arr.min()}, {arr.max()}]"
            )
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0, ..., m-1}; ``mapping[i]`` is the new index of i."""

    mapping: tuple[int, ...]

    def __init__(self, mapping):
        m = tuple(int(v) for v in mapping)
        if sorted(m) != list(range(len(m))):
            raise ValueError(f"not a bijection on 0..{len(m) - 1}: {m}")
        object.__setattr__(self, "mapping", m)

    def __len__(self) -> int:
        return len(self.mapping)

    @classmethod
    def identity(cls, m: int) -> "Permutation":
        return cls(range(m))

    @classmethod
    def from_order(cls, order) -> "Permutation":
        """Permutation placing old index ``order[k]`` at position k."""
        order = list(order)
        mapping = [0] * len(order)
        for rank, old in enumerate(order):
            mapping[int(old)] = rank
        return cls(mapping)

    def inverse(self) -> "Permutation":
        return Permutation.from_order(self.mapping)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.mapping, dtype=np.intp)


@dataclass(frozen=True)
class PermutationPair:
    """Row and column permutations applied jointly to a matrix."""

    row_perm: Permutation
    col_perm: Permutation

    @classmethod
    def identity(cls, n_rows: int, n_cols: int) -> "PermutationPair":
        return cls(Permutation.identity(n_rows), Permutation.identity(n_cols))

    def inverse(self) -> "PermutationPair":
        return PermutationPair(self.row_perm.inverse(), self.col_perm.inverse())

    def shape(self) -> tuple[int, int]:
        return (len(self.row_perm), len(self.col_perm))


def apply_permutation_pair(matrix, pair: PermutationPair) -> np.ndarray:
    """Rearrange ``matrix`` so output[i, j] = matrix[row⁻¹(i), col⁻¹(j)].

    Applying a pair and then its inverse restores the input exactly.
    """
    arr = as_dense(matrix)
    if arr.shape != pair.shape():
        raise ValueError(f"permutation shape {pair.shape()} != matrix {arr.shape}")
    row_inv = np.argsort(pair.row_perm.as_array())
    col_inv = np.argsort(pair.col_perm.as_array())
    return arr[np.ix_(row_inv, col_inv)]


def bimonotone_violation(matrix) -> float:
    """Largest adjacent-pair decrease along any row or down any column.

    Zero (or negative) means the matrix is entrywise non-decreasing left
    to right and top to bottom.
    """
    arr = as_dense(matrix)
    worst = 0.0
    if arr.shape[1] > 1:
        worst = max(worst, float(np.max(arr[:, :-1] - arr[:, 1:])))
    if arr.shape[0] > 1:
        worst = max(worst, float(np.max(arr[:-1, :] - arr[1:, :])))
    return worst


def is_bimonotone(matrix, tol: float = MONOTONE_TOL) -> bool:
    """True when rows and columns are non-decreasing up to ``tol``."""
    return bimonotone_violation(matrix) <= tol


@dataclass(frozen=True)
class BimonotoneComponent:
    """A [0,1] matrix together with permutations that sort it bimonotone.

    The invariant is that ``apply_permutation_pair(matrix, perms)`` has
    non-decreasing rows and columns; ``tol`` loosens the check for
    solver-produced components.
    """

    matrix: UnitIntervalMatrix
    perms: PermutationPair
    tol: float = field(default=MONOTONE_TOL, compare=False)

    def __post_init__(self):
        if self.matrix.shape != self.perms.shape():
            raise ValueError(
                f"permutation shape {self.perms.shape()} != matrix {self.matrix.shape}"
            )
        violation = bimonotone_violation(self.sorted_values())
        if violation > self.tol:
            raise ValueError(
                f"matrix is not bimonotone under the given permutations "
                f"(violation {violation:.3e} > tol {self.tol:.1e})"
            )

    def sorted_values(self) -> np.ndarray:
        return apply_permutation_pair(self.matrix.values, self.perms)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class PermRankDecomposition:
    """Ordered list of bimonotone components whose sum stays in [0, 1].

    The component count is the decomposition's asserted upper bound on
    the permutation rank of the sum.
    """

    components: tuple[BimonotoneComponent, ...]
    atol: float = field(default=1e-9, compare=False)

    def __init__(self, components, atol: float = 1e-9):
        comps = tuple(components)
        if not comps:
            raise ValueError("decomposition needs at least one component")
        shape = comps[0].shape
        for c in comps:
            if c.shape != shape:
                raise ValueError("components must share one shape")
        total = sum(c.matrix.values for c in comps)
        if total.min() < -atol or total.max() > 1.0 + atol:
            raise ValueError(
                f"component sum leaves [0, 1]: range [{total.min()}, {total.max()}]"
            )
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "atol", atol)

    def __len__(self) -> int:
        return len(self.components)

    @property
    def shape(self) -> tuple[int, int]:
        return self.components[0].shape

    @property
    def rank_bound(self) -> int:
        return len(self.components)

    def total(self) -> np.ndarray:
        return sum(c.matrix.values for c in self.components)
