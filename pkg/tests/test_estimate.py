import numpy as np
import pytest

from permrank.core import (
    make_spectral_trap_matrix,
    make_triangular_halves,
    pr1_membership,
)
from permrank.estimate import (
    GreedyResult,
    RegularizerSpec,
    SvtConfig,
    all_permutation_pairs,
    brute_force_regularized_ls,
    default_svt_threshold,
    greedy_decompose,
    regularizer_value,
    svt_estimate,
    two_step_estimate,
)
from permrank.harness import normalized_error
from permrank.matrices import (
    Permutation,
    PermutationPair,
    UnitIntervalMatrix,
    apply_permutation_pair,
)
from permrank.observe import ObservationMatrix, recenter, sample_observations
from permrank.project import ProjectionConfig, project_bimonotone
from permrank.rng import child_seed, make_rng


class TestSvt:
    def test_zero_threshold_full_observation_identity(self):
        rng = make_rng(60)
        y = sample_observations(UnitIntervalMatrix(rng.random((6, 6))), 1.0, 1)
        out = svt_estimate(y, SvtConfig(threshold=0.0, clip_output=False))
        assert np.abs(out - y.values).max() <= 1e-10

    def test_soft_threshold_arithmetic(self):
        # diagonal input: singular values shrink by the threshold
        d = np.diag([5.0, 1.5])
        out = svt_estimate(d, SvtConfig(threshold=2.0, clip_output=False))
        s = np.linalg.svd(out, compute_uv=False)
        assert s[0] == pytest.approx(3.0, abs=1e-10)
        assert s[1] == pytest.approx(0.0, abs=1e-10)

    def test_clip_into_unit_interval(self):
        rng = make_rng(61)
        m = UnitIntervalMatrix(rng.random((12, 12)))
        y = sample_observations(m, 0.5, 2)
        out = svt_estimate(y, SvtConfig(threshold=1.0))
        assert out.values.min() >= 0.0 and out.values.max() <= 1.0

    def test_error_invariant_under_joint_permutation(self):
        rng = make_rng(62)
        m = UnitIntervalMatrix(rng.random((10, 10)))
        y = sample_observations(m, 1.0, 3)
        cfg = SvtConfig(threshold=default_svt_threshold(10, 10, 1.0))
        base_err = np.linalg.norm(svt_estimate(y, cfg).values - m.values)

        pair = PermutationPair(
            Permutation(rng.permutation(10)), Permutation(rng.permutation(10))
        )
        y_p = ObservationMatrix(apply_permutation_pair(y.values, pair), 1.0)
        m_p = apply_permutation_pair(m.values, pair)
        perm_err = np.linalg.norm(svt_estimate(y_p, cfg).values - m_p)
        assert perm_err == pytest.approx(base_err, abs=1e-8)

    def test_triangular_error_within_calibrated_rate(self):
        # rate log^2.01(n)/sqrt(n) with the constant frozen from a pilot run
        n = 512
        m = make_triangular_halves(n)
        y = sample_observations(m, 1.0, 4)
        out = svt_estimate(y, SvtConfig(default_svt_threshold(n, n, 1.0)))
        err = normalized_error(out.values, m.values)
        assert err <= 0.1 * np.log(n) ** 2.01 / np.sqrt(n)

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            SvtConfig(threshold=-1.0)

    def test_error_grows_like_root_two_when_p_halves(self):
        n = 256
        m = make_triangular_halves(n)
        errors = {1.0: [], 0.5: []}
        for t in range(50):
            for p in (1.0, 0.5):
                y = sample_observations(m, p, child_seed(68, t))
                out = svt_estimate(y, SvtConfig(default_svt_threshold(n, n, p)))
                errors[p].append(normalized_error(out.values, m.values))
        ratio = np.median(errors[0.5]) / np.median(errors[1.0])
        assert 1.2 <= ratio <= 1.7


class TestDefaultThreshold:
    def test_formula_small(self):
        assert default_svt_threshold(2, 2, 1.0) == pytest.approx(4.2)

    def test_formula_partial(self):
        assert default_svt_threshold(50, 50, 0.25) == pytest.approx(42.0)

    def test_formula_rectangular(self):
        assert default_svt_threshold(100, 300, 1.0) == pytest.approx(42.0)

    def test_rejects_zero_p(self):
        with pytest.raises(ValueError):
            default_svt_threshold(4, 4, 0.0)


class TestRegularizer:
    def test_zero_at_k0(self):
        assert regularizer_value(RegularizerSpec(), 0, 10, 10, 1.0) == 0.0

    def test_linear_in_k(self):
        spec = RegularizerSpec(scale=2.5)
        v1 = regularizer_value(spec, 1, 8, 6, 0.5)
        v2 = regularizer_value(spec, 2, 8, 6, 0.5)
        assert v2 == pytest.approx(2 * v1)

    def test_formula_against_independent_expression(self):
        spec = RegularizerSpec(scale=1.0, exponent=2.01)
        got = regularizer_value(spec, 3, 7, 11, 0.25)
        expected = 3 * 11 * np.log(77.0) ** 2.01 / 0.25
        assert got == pytest.approx(expected, rel=1e-12)

    def test_scale_validation(self):
        with pytest.raises(ValueError):
            RegularizerSpec(scale=0.0)


class TestBruteForce:
    def test_recovers_bimonotone_noiseless(self):
        rng = make_rng(63)
        truth = project_bimonotone(rng.random((4, 4)), PermutationPair.identity(4, 4))
        est, k, pairs, obj = brute_force_regularized_ls(
            truth, max_k=1, spec=RegularizerSpec(scale=1e-3)
        )
        assert k == 1
        assert normalized_error(est.values, truth.values) < 1e-10

    def test_zero_matrix_under_heavy_penalty(self):
        y = ObservationMatrix(np.zeros((3, 3)), 1.0)
        est, k, pairs, obj = brute_force_regularized_ls(
            y, max_k=1, spec=RegularizerSpec(scale=100.0)
        )
        assert k == 0
        assert np.all(est.values == 0.0)

    def test_size_guard(self):
        y = ObservationMatrix(np.zeros((6, 6)), 1.0)
        with pytest.raises(ValueError):
            brute_force_regularized_ls(y, max_k=1)
        y3 = ObservationMatrix(np.zeros((4, 4)), 1.0)
        with pytest.raises(ValueError):
            brute_force_regularized_ls(y3, max_k=2)

    def test_beats_svt_on_small_noisy_problem(self):
        truth = make_triangular_halves(4)
        bf_errors, svt_errors = [], []
        for t in range(30):
            y = sample_observations(truth, 1.0, child_seed(65, t))
            bf, _, _, _ = brute_force_regularized_ls(
                y, max_k=1, spec=RegularizerSpec(scale=0.02)
            )
            sv = svt_estimate(y, SvtConfig(default_svt_threshold(4, 4, 1.0)))
            bf_errors.append(normalized_error(bf.values, truth.values))
            svt_errors.append(normalized_error(sv.values, truth.values))
        assert np.mean(bf_errors) < np.mean(svt_errors)


class TestTwoStep:
    def test_rank_one_noiseless_recovery(self):
        # strictly ordered bimonotone truth: exact recovery from the spectrum
        n = 6
        base = np.add.outer(np.linspace(0.05, 0.6, n), np.linspace(0.05, 0.35, n))
        truth = UnitIntervalMatrix(base)
        assert pr1_membership(base)[0]
        est, perms, _ = two_step_estimate(truth, rho_star=1)
        assert normalized_error(est.values, base) < 1e-12
        # recovered permutations are the true (identity) orderings
        assert perms[0].row_perm.mapping == tuple(range(n))
        assert perms[0].col_perm.mapping == tuple(range(n))

    def test_trap_orderings_rank_indicator_block_last(self):
        # the misleading structure: the top-two factor orderings both push
        # the indicator block's rows and columns to the bottom, although
        # the truth is 1 there -- the root of the fitting failure
        m, a, b = make_spectral_trap_matrix(251, 251)
        _, _, _ = a, b, m
        u, s, vt = np.linalg.svd(m.values, full_matrices=False)
        block_c = slice(248, 251)
        for ell in range(2):
            vec = u[:, ell] if np.linalg.norm(
                np.maximum(u[:, ell], 0)
            ) >= np.linalg.norm(np.maximum(-u[:, ell], 0)) else -u[:, ell]
            ranks = np.argsort(np.argsort(vec, kind="stable"))
            # indicator rows are ranked below the large first block
            assert ranks[block_c].max() < ranks[1 : 1 + 76].min()

    def test_distinct_perm_variant_skips_duplicates(self):
        # rank-one truth: every factor pair beyond the first repeats the
        # flat ordering only if entries tie; use a duplicated-spectrum case
        base = np.add.outer(np.linspace(0.05, 0.6, 4), np.linspace(0.05, 0.35, 4))
        truth = UnitIntervalMatrix(base)
        est, perms, _ = two_step_estimate(truth, rho_star=2, distinct_perms=True)
        assert len(perms) == 2
        assert perms[0] != perms[1]

    def test_rank_deficiency_warns(self):
        flat = UnitIntervalMatrix(np.full((4, 4), 0.25))
        with pytest.warns(UserWarning, match="rank"):
            two_step_estimate(flat, rho_star=3)

    def test_distinct_perm_exhaustion_uses_available(self):
        # a constant matrix yields one ordering no matter the factor; the
        # scan runs out and the fit proceeds with what it found
        flat = UnitIntervalMatrix(np.full((3, 3), 0.25))
        with pytest.warns(UserWarning, match="rank"):
            est, perms, _ = two_step_estimate(flat, rho_star=2, distinct_perms=True)
        assert 1 <= len(perms) <= 2
        assert normalized_error(est.values, flat.values) <= 1e-10

    def test_rho_validation(self):
        with pytest.raises(ValueError):
            two_step_estimate(UnitIntervalMatrix(np.zeros((3, 3))), rho_star=4)


class TestGreedy:
    def test_known_trap_capped(self):
        m = UnitIntervalMatrix([[0.0, 0.6], [0.6, 0.4]])
        res = greedy_decompose(m, capped=True)
        assert isinstance(res, GreedyResult)
        expected = np.array([[0.0, 0.4], [0.4, 0.4]])
        assert np.abs(res.components[0].matrix.values - expected).max() <= 1e-8
        assert len(res.components) >= 3
        assert res.terminated

    def test_pr1_input_single_step(self):
        rng = make_rng(66)
        m = project_bimonotone(rng.random((3, 3)), PermutationPair.identity(3, 3))
        res = greedy_decompose(m, capped=True)
        assert len(res.components) == 1
        assert res.terminated
        assert res.residual_norm <= 1e-9

    def test_capped_residual_nonnegative_and_shrinking(self):
        rng = make_rng(67)
        m = UnitIntervalMatrix(rng.random((3, 3)))
        residual = m.values.copy()
        res = greedy_decompose(m, capped=True, max_steps=4)
        norms = [np.linalg.norm(residual)]
        for comp in res.components:
            residual = residual - comp.matrix.values
            assert residual.min() >= -1e-9
            norms.append(np.linalg.norm(residual))
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))

    def test_uncapped_hits_case_one(self):
        m = UnitIntervalMatrix([[0.0, 0.6], [0.6, 0.4]])
        with pytest.warns(UserWarning, match="did not terminate"):
            res = greedy_decompose(m, capped=False, max_steps=5)
        assert not res.terminated
        assert res.residual.min() < 0.0
        first = res.components[0].matrix.values
        expected = np.array([[0.0, 8 / 15], [8 / 15, 8 / 15]])
        assert np.abs(first - expected).max() <= 1e-8

    def test_norm_guard(self):
        m = UnitIntervalMatrix(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            greedy_decompose(m, norm_q=1.0)

    def test_size_guard(self):
        m = UnitIntervalMatrix(np.zeros((6, 6)))
        with pytest.raises(ValueError):
            greedy_decompose(m)

    def test_decomposition_export(self):
        m = UnitIntervalMatrix([[0.0, 0.6], [0.6, 0.4]])
        res = greedy_decompose(m, capped=True)
        dec = res.decomposition()
        assert np.abs(dec.total() - m.values).max() <= 1e-8


class TestPermutationPairs:
    def test_count(self):
        assert len(all_permutation_pairs(2, 3)) == 2 * 6

    def test_lexicographic_first_is_identity(self):
        pairs = all_permutation_pairs(2, 2)
        assert pairs[0].row_perm.mapping == (0, 1)
        assert pairs[0].col_perm.mapping == (0, 1)
