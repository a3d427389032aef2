"""Random-design Bernoulli observations and the matching noise law.

Each entry of the truth matrix is revealed independently with
probability ``p_obs``; revealed entries are Bernoulli draws of the true
preference, unrevealed entries are encoded as 1/2.  The recentering map
turns the observation matrix into an unbiased estimate of the truth.

Both samplers here consume one shared uniform draw per entry, so an
observation matrix and a noise matrix sampled with the same seed are
coupled: p_obs * (recenter(Y) - M*) equals the noise matrix exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .matrices import UnitIntervalMatrix, _frozen, as_dense
from .rng import child_seed, make_rng

__all__ = [
    "ObservationMatrix",
    "NoiseMatrix",
    "sample_observations",
    "recenter",
    "estimate_p_obs",
    "sample_noise_matrix",
    "empirical_opnorm_check",
    "operator_norm",
    "as_recentered",
]


@dataclass(frozen=True)
class ObservationMatrix:
    """Matrix over {0, 1/2, 1} with the observation probability attached."""

    values: np.ndarray
    p_obs: float

    def __init__(self, values, p_obs: float):
        arr = as_dense(values)
        ok = (arr == 0.0) | (arr == 0.5) | (arr == 1.0)
        if not ok.all():
            bad = arr[~ok]
            raise ValueError(f"entries must be exactly 0, 0.5 or 1; found {bad[:5]}")
        if not (0.0 < p_obs <= 1.0):
            raise ValueError(f"p_obs must lie in (0, 1], got {p_obs}")
        object.__setattr__(self, "values", _frozen(arr))
        object.__setattr__(self, "p_obs", float(p_obs))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class NoiseMatrix:
    """Zero-mean noise matrix with entries bounded by 1 in absolute value."""

    values: np.ndarray

    def __init__(self, values):
        arr = as_dense(values)
        if np.abs(arr).max() > 1.0 + 1e-12:
            raise ValueError(f"entries must lie in [-1, 1], max abs {np.abs(arr).max()}")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


# stream tag separating the per-entry uniform field from other draws
_OBS_STREAM = 0xB0B


def _uniform_field(shape, seed: int) -> np.ndarray:
    return make_rng(seed, _OBS_STREAM).random(shape)


def sample_observations(
    m_star: UnitIntervalMatrix, p_obs: float, seed: int
) -> ObservationMatrix:
    """Draw one observation matrix: per entry 1 w.p. p*M, 0 w.p. p*(1-M), 1/2 w.p. 1-p."""
    if not (0.0 < p_obs <= 1.0):
        raise ValueError(f"p_obs must lie in (0, 1], got {p_obs}")
    m = m_star.values
    u = _uniform_field(m.shape, seed)
    vals = np.where(u < p_obs * m, 1.0, np.where(u < p_obs, 0.0, 0.5))
    return ObservationMatrix(vals, p_obs)


def recenter(y: ObservationMatrix) -> np.ndarray:
    """Unbiased transform Y' = Y/p - (1-p)/(2p) * ones; E[Y'] is the truth."""
    p = y.p_obs
    return y.values / p - (1.0 - p) / (2.0 * p)


def estimate_p_obs(y: ObservationMatrix) -> float:
    """Empirical observation fraction: share of entries different from 1/2."""
    return float(np.mean(y.values != 0.5))


def as_recentered(y) -> tuple[np.ndarray, float]:
    """Coerce estimator input to (recentered matrix, p_obs).

    Observation matrices are recentered; unit-interval matrices and
    plain arrays are taken as already-recentered (noiseless) input with
    p_obs = 1, which is the identity regime of the recentering map.
    """
    if isinstance(y, ObservationMatrix):
        return recenter(y), y.p_obs
    if isinstance(y, UnitIntervalMatrix):
        return np.array(y.values), 1.0
    return np.array(as_dense(y)), 1.0


def sample_noise_matrix(
    m_star: UnitIntervalMatrix, p_obs: float, seed: int
) -> NoiseMatrix:
    """Draw the noise matrix whose law matches the recentered observations.

    Three branches per entry, sharing the uniform draw of
    ``sample_observations``: p*(1/2 - M) + 1/2 on observed likes,
    p*(1/2 - M) - 1/2 on observed dislikes, p*(1/2 - M) when unobserved.
    """
    if not (0.0 < p_obs <= 1.0):
        raise ValueError(f"p_obs must lie in (0, 1], got {p_obs}")
    m = m_star.values
    u = _uniform_field(m.shape, seed)
    base = p_obs * (0.5 - m)
    vals = np.where(u < p_obs * m, base + 0.5, np.where(u < p_obs, base - 0.5, base))
    return NoiseMatrix(vals)


def operator_norm(matrix, tol: float = 1e-8, max_iter: int = 5000) -> float:
    """Largest singular value via power iteration on A^T A.

    Falls back to a full SVD for matrices smaller than 64 on a side,
    where the iteration buys nothing.
    """
    arr = as_dense(matrix)
    n, d = arr.shape
    if min(n, d) < 64:
        return float(np.linalg.svd(arr, compute_uv=False)[0])
    rng = make_rng(0xA17, n, d)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = arr.T @ (arr @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v_next = w / norm
        sigma_next = np.sqrt(norm)
        if abs(sigma_next - sigma) <= tol * max(sigma_next, 1.0):
            return float(sigma_next)
        v, sigma = v_next, sigma_next
    return float(sigma)


def empirical_opnorm_check(
    n: int,
    d: int,
    p_obs: float,
    trials: int,
    seed: int,
    m_star: UnitIntervalMatrix | None = None,
) -> float:
    """Fraction of noise draws with operator norm within 2.01*sqrt(p*(n+d)).

    Uses the all-half truth profile by default (the highest-variance
    case).  The concentration bound is claimed only in the regime
    p_obs >= log^7(n*d)/min(n,d); outside it the check still runs and a
    warning records that the regime assumption fails.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    regime_floor = np.log(n * d) ** 7 / min(n, d)
    if p_obs < regime_floor:
        warnings.warn(
            f"p_obs={p_obs} below the concentration regime floor "
            f"{regime_floor:.3g}; the bound is not guaranteed here",
            stacklevel=2,
        )
    if m_star is None:
        m_star = UnitIntervalMatrix(np.full((n, d), 0.5))
    threshold = 2.01 * np.sqrt(p_obs * (n + d))
    within = 0
    for t in range(trials):
        w = sample_noise_matrix(m_star, p_obs, child_seed(seed, t))
        if operator_norm(w.values) <= threshold:
            within += 1
    return within / trials
