import numpy as np
import pytest
import warnings
from hypothesis import given, settings
from hypothesis import strategies as st

from permrank.matrices import UnitIntervalMatrix
from permrank.observe import (
    NoiseMatrix,
    ObservationMatrix,
    empirical_opnorm_check,
    estimate_p_obs,
    operator_norm,
    recenter,
    sample_noise_matrix,
    sample_observations,
)
from permrank.rng import child_seed, make_rng


def random_truth(n, d, seed):
    return UnitIntervalMatrix(make_rng(seed).random((n, d)))


class TestSampling:
    def test_all_ones_full_observation(self):
        m = UnitIntervalMatrix(np.ones((5, 5)))
        y = sample_observations(m, 1.0, seed=0)
        assert np.all(y.values == 1.0)

    def test_all_zeros_full_observation(self):
        m = UnitIntervalMatrix(np.zeros((5, 5)))
        y = sample_observations(m, 1.0, seed=0)
        assert np.all(y.values == 0.0)

    def test_values_exactly_coded(self):
        y = sample_observations(random_truth(20, 20, 1), 0.35, seed=9)
        assert set(np.unique(y.values)) <= {0.0, 0.5, 1.0}

    def test_deterministic_in_seed(self):
        m = random_truth(8, 8, 2)
        a = sample_observations(m, 0.7, seed=5)
        b = sample_observations(m, 0.7, seed=5)
        assert a.values.tobytes() == b.values.tobytes()

    def test_rejects_bad_p(self):
        m = random_truth(2, 2, 3)
        for p in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                sample_observations(m, p, seed=0)

    def test_unbiasedness_monte_carlo(self):
        m = random_truth(4, 4, 4)
        p = 0.6
        trials = 10_000
        acc = np.zeros((4, 4))
        for t in range(trials):
            acc += recenter(sample_observations(m, p, child_seed(11, t)))
        mean = acc / trials
        # per-entry variance of the recentered value is at most 1/(2p)-ish
        stderr = 1.0 / np.sqrt(trials)
        assert np.abs(mean - m.values).max() <= 3.5 * stderr / p


class TestRecenter:
    def test_identity_at_full_observation(self):
        y = sample_observations(random_truth(6, 6, 5), 1.0, seed=1)
        assert np.array_equal(recenter(y), y.values)

    def test_arithmetic_half(self):
        y = ObservationMatrix([[0.5]], 0.5)
        assert recenter(y)[0, 0] == pytest.approx(0.5)

    def test_arithmetic_one(self):
        y = ObservationMatrix([[1.0]], 0.5)
        assert recenter(y)[0, 0] == pytest.approx(1.5)

    @given(st.sampled_from([0.1, 0.25, 0.5, 0.75, 1.0]), st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_affine_invertible(self, p, seed):
        y = sample_observations(random_truth(3, 4, 6), p, seed=seed)
        y_prime = recenter(y)
        back = p * y_prime + (1.0 - p) / 2.0
        assert np.allclose(back, y.values, atol=1e-14)


class TestEstimatePObs:
    def test_all_unobserved(self):
        y = ObservationMatrix(np.full((3, 3), 0.5), 0.4)
        assert estimate_p_obs(y) == 0.0

    def test_all_observed(self):
        y = ObservationMatrix(np.zeros((3, 3)), 0.9)
        assert estimate_p_obs(y) == 1.0

    def test_concentration(self):
        m = random_truth(200, 200, 7)
        within = 0
        for t in range(50):
            y = sample_observations(m, 0.3, child_seed(13, t))
            if abs(estimate_p_obs(y) - 0.3) <= 0.02:
                within += 1
        assert within >= 49


class TestNoiseMatrix:
    def test_symmetric_branch_at_half(self):
        m = UnitIntervalMatrix(np.full((30, 30), 0.5))
        w = sample_noise_matrix(m, 1.0, seed=3)
        assert set(np.unique(w.values)) == {-0.5, 0.5}

    def test_zero_mean(self):
        m = random_truth(5, 5, 8)
        total = np.zeros((5, 5))
        trials = 20_000
        for t in range(trials):
            total += sample_noise_matrix(m, 0.7, child_seed(17, t)).values
        mean = total / trials
        assert np.abs(mean).max() <= 3.5 / np.sqrt(trials)

    def test_coupled_with_observations(self):
        m = random_truth(12, 9, 9)
        for p in (1.0, 0.55, 0.2):
            for seed in (0, 1, 2):
                y = sample_observations(m, p, seed)
                w = sample_noise_matrix(m, p, seed)
                lhs = p * (recenter(y) - m.values)
                assert np.abs(lhs - w.values).max() <= 1e-12

    def test_entries_bounded(self):
        with pytest.raises(ValueError):
            NoiseMatrix([[1.5]])


class TestOperatorNorm:
    def test_matches_svd_small(self):
        rng = make_rng(21)
        m = rng.standard_normal((10, 7))
        assert operator_norm(m) == pytest.approx(
            np.linalg.svd(m, compute_uv=False)[0]
        )

    def test_matches_svd_large(self):
        rng = make_rng(22)
        m = rng.standard_normal((80, 90))
        assert operator_norm(m) == pytest.approx(
            np.linalg.svd(m, compute_uv=False)[0], rel=1e-6
        )


class TestOpnormCheck:
    def test_tiny_always_within(self):
        # 2x2 all-half truth: |entries| = 1/2, so the norm is at most 1 < 2.01*2
        frac = empirical_opnorm_check(2, 2, 1.0, trials=50, seed=1)
        assert frac == 1.0

    def test_moderate_size(self):
        frac = empirical_opnorm_check(100, 100, 1.0, trials=30, seed=2)
        assert frac == 1.0

    def test_regime_warning(self):
        with pytest.warns(UserWarning, match="regime"):
            empirical_opnorm_check(50, 50, 0.05, trials=2, seed=3)

    def test_scaling_collapse(self):
        # median norm / sqrt(n + d) stays flat across sizes
        medians = {}
        for n in (100, 200, 400):
            m = UnitIntervalMatrix(np.full((n, n), 0.5))
            norms = [
                operator_norm(sample_noise_matrix(m, 1.0, child_seed(31, n, t)).values)
                for t in range(8)
            ]
            medians[n] = np.median(norms) / np.sqrt(2 * n)
        vals = list(medians.values())
        assert max(vals) / min(vals) <= 1.25
