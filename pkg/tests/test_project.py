import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permrank._isotonic import pava
from permrank.matrices import (
    Permutation,
    PermutationPair,
    apply_permutation_pair,
    bimonotone_violation,
    is_bimonotone,
)
from permrank.oracles import bimonotone_qp_oracle
from permrank.project import (
    ProjectionConfig,
    fit_sum_of_bimonotone,
    project_bimonotone,
    project_bimonotone_below,
)
from permrank.rng import make_rng

ID2 = PermutationPair.identity(2, 2)
REV2 = PermutationPair(Permutation([1, 0]), Permutation([1, 0]))


class TestPava:
    def test_already_monotone(self):
        y = [0.0, 1.0, 2.0]
        assert pava(y).tolist() == y

    def test_single_pool(self):
        assert pava([2.0, 1.0]).tolist() == [1.5, 1.5]

    def test_known_solution(self):
        out = pava([1.0, 3.0, 2.0, 4.0])
        assert out.tolist() == [1.0, 2.5, 2.5, 4.0]

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_output_monotone_and_mean_preserving(self, values):
        y = np.asarray(values)
        out = pava(y)
        assert np.all(np.diff(out) >= -1e-12)
        assert np.sum(out) == pytest.approx(np.sum(y), abs=1e-9)

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=20))
    @settings(max_examples=60, deadline=None)
    def test_projection_dominates_candidates(self, values):
        # the projection is at least as close as the sorted candidate
        y = np.asarray(values)
        out = pava(y)
        assert np.sum((out - y) ** 2) <= np.sum((np.sort(y) - y) ** 2) + 1e-9


class TestProjectBimonotone:
    def test_fixed_point_on_feasible_input(self):
        m = np.array([[0.1, 0.2], [0.3, 0.9]])
        out = project_bimonotone(m, ID2).values
        assert np.abs(out - m).max() <= 1e-12

    def test_active_set_example(self):
        out = project_bimonotone([[0.0, 0.6], [0.6, 0.4]], ID2).values
        expected = np.array([[0.0, 8.0 / 15.0], [8.0 / 15.0, 8.0 / 15.0]])
        assert np.abs(out - expected).max() <= 1e-9

    def test_exact_feasibility_on_exit(self):
        rng = make_rng(41)
        for _ in range(50):
            t = rng.uniform(-0.5, 1.5, size=(4, 5))
            out = project_bimonotone(t, PermutationPair.identity(4, 5)).values
            assert bimonotone_violation(out) <= 1e-12
            assert out.min() >= 0.0 and out.max() <= 1.0

    def test_respects_permutations(self):
        rng = make_rng(42)
        t = rng.random((3, 3))
        pair = PermutationPair(Permutation([2, 0, 1]), Permutation([1, 2, 0]))
        out = project_bimonotone(t, pair).values
        assert is_bimonotone(apply_permutation_pair(out, pair))

    def test_matches_qp_oracle(self):
        rng = make_rng(43)
        worst = 0.0
        for _ in range(100):
            t = rng.uniform(-0.3, 1.3, size=(3, 3))
            ours = project_bimonotone(t, PermutationPair.identity(3, 3)).values
            ref = bimonotone_qp_oracle(t, PermutationPair.identity(3, 3))
            worst = max(worst, np.abs(ours - ref).max())
        assert worst <= 1e-6

    def test_matches_qp_oracle_with_permutations(self):
        rng = make_rng(44)
        pair = PermutationPair(Permutation([1, 2, 0]), Permutation([2, 0, 1]))
        for _ in range(20):
            t = rng.uniform(0, 1, size=(3, 3))
            ours = project_bimonotone(t, pair).values
            ref = bimonotone_qp_oracle(t, pair)
            assert np.abs(ours - ref).max() <= 1e-6

    def test_non_expansive(self):
        rng = make_rng(45)
        pair = PermutationPair.identity(5, 5)
        for _ in range(200):
            x = rng.uniform(-0.2, 1.2, size=(5, 5))
            y = rng.uniform(-0.2, 1.2, size=(5, 5))
            px = project_bimonotone(x, pair).values
            py = project_bimonotone(y, pair).values
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-9

    def test_idempotent(self):
        rng = make_rng(46)
        pair = PermutationPair.identity(5, 5)
        for _ in range(50):
            x = rng.uniform(-0.2, 1.2, size=(5, 5))
            p1 = project_bimonotone(x, pair).values
            p2 = project_bimonotone(p1, pair).values
            assert np.abs(p2 - p1).max() <= 2e-10

    def test_tight_box(self):
        cfg = ProjectionConfig(lower_bound=0.25, upper_bound=0.75)
        out = project_bimonotone([[0.0, 1.0], [1.0, 0.2]], ID2, cfg).values
        assert out.min() >= 0.25 and out.max() <= 0.75
        assert is_bimonotone(out)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ProjectionConfig(tolerance=0.0)
        with pytest.raises(ValueError):
            ProjectionConfig(lower_bound=0.9, upper_bound=0.1)
        with pytest.raises(ValueError):
            ProjectionConfig(max_iterations=0)

    def test_nonconvergence_is_reported(self):
        cfg = ProjectionConfig(tolerance=1e-14, max_iterations=3)
        rng = make_rng(47)
        with pytest.warns(UserWarning, match="convergence"):
            project_bimonotone(rng.random((6, 6)), PermutationPair.identity(6, 6), cfg)


def grid_oracle_capped_2x2(target, cap, step=0.005):
    """Exhaustive check for the 2x2 identity-frame capped projection.

    Grids the corner cells (a at (0,0), d at (1,1)); the incomparable
    middle cells have closed-form optima given (a, d).
    """
    t = np.asarray(target)
    grid = np.arange(0.0, 1.0 + step / 2, step)
    a, dv = np.meshgrid(grid, grid, indexing="ij")
    feasible = (a <= cap[0, 0]) & (dv <= cap[1, 1]) & (a <= dv)
    b = np.clip(t[0, 1], a, np.minimum(dv, cap[0, 1]))
    c = np.clip(t[1, 0], a, np.minimum(dv, cap[1, 0]))
    feasible &= (b >= a) & (c >= a) & (b <= dv) & (c <= dv)
    err = (a - t[0, 0]) ** 2 + (b - t[0, 1]) ** 2 + (c - t[1, 0]) ** 2 + (dv - t[1, 1]) ** 2
    err = np.where(feasible, err, np.inf)
    flat = np.argmin(err)
    i, j = np.unravel_index(flat, err.shape)
    best_x = np.array([[a[i, j], b[i, j]], [c[i, j], dv[i, j]]])
    return best_x, float(err[i, j])


class TestProjectBimonotoneBelow:
    def test_capped_first_component_value(self):
        t = np.array([[0.0, 0.6], [0.6, 0.4]])
        out = project_bimonotone_below(t, ID2, t).values
        expected = np.array([[0.0, 0.4], [0.4, 0.4]])
        assert np.abs(out - expected).max() <= 1e-8

    def test_zero_cap_returns_zero(self):
        t = np.array([[0.3, 0.6], [0.6, 0.4]])
        out = project_bimonotone_below(t, ID2, np.zeros((2, 2))).values
        assert np.all(out == 0.0)

    def test_cap_is_exact(self):
        rng = make_rng(48)
        for _ in range(50):
            t = rng.random((3, 3))
            cap = rng.random((3, 3))
            out = project_bimonotone_below(
                t, PermutationPair.identity(3, 3), cap
            ).values
            assert np.all(out <= cap)
            assert np.all(out >= 0.0)

    def test_rejects_negative_cap(self):
        with pytest.raises(ValueError):
            project_bimonotone_below(np.ones((2, 2)), ID2, -np.ones((2, 2)))

    def test_against_grid_oracle(self):
        rng = make_rng(49)
        for _ in range(25):
            t = rng.random((2, 2))
            cap = rng.random((2, 2))
            ours = project_bimonotone_below(t, ID2, cap).values
            ref, _ = grid_oracle_capped_2x2(t, cap)
            assert np.abs(ours - ref).max() <= 0.02


class TestFitSumOfBimonotone:
    def test_single_pair_reduces_to_projection(self):
        rng = make_rng(50)
        t = rng.random((3, 4))
        pair = PermutationPair.identity(3, 4)
        _, fitted, _ = fit_sum_of_bimonotone(t, [pair])
        direct = project_bimonotone(t, pair).values
        assert np.abs(fitted - direct).max() <= 1e-8

    def test_noiseless_two_component_self_consistency(self):
        # the worked 2x2 decomposition target, with its true permutations
        y = np.array([[1.0, 0.6], [0.6, 1.0]])
        cfg = ProjectionConfig(tolerance=1e-14, max_iterations=50000)
        dec, fitted, obj = fit_sum_of_bimonotone(y, [ID2, REV2], cfg)
        assert np.abs(fitted - y).max() <= 1e-6
        total = dec.total()
        assert np.abs(total - y).max() <= 1e-6

    def test_noiseless_random_instances(self):
        rng = make_rng(51)
        cfg = ProjectionConfig(tolerance=1e-14, max_iterations=50000)
        for trial in range(3):
            base1 = np.sort(np.sort(rng.random((3, 3)), axis=0), axis=1) / 2
            base2 = np.sort(np.sort(rng.random((3, 3)), axis=0), axis=1)[::-1, ::-1] / 2
            y = base1 + base2
            dec, fitted, obj = fit_sum_of_bimonotone(
                y, [PermutationPair.identity(3, 3),
                    PermutationPair(Permutation([2, 1, 0]), Permutation([2, 1, 0]))],
                cfg,
            )
            assert np.abs(fitted - y).max() <= 1e-5

    def test_sum_stays_in_unit_box(self):
        rng = make_rng(52)
        y = rng.uniform(0, 2.0, size=(3, 3))  # recentered values can exceed 1
        _, fitted, _ = fit_sum_of_bimonotone(
            y, [PermutationPair.identity(3, 3), PermutationPair.identity(3, 3)]
        )
        assert fitted.max() <= 1.0 + 1e-9 and fitted.min() >= -1e-12

    def test_empty_perm_list_rejected(self):
        with pytest.raises(ValueError):
            fit_sum_of_bimonotone(np.ones((2, 2)), [])

    def test_objective_against_grid_oracle(self):
        # two components, opposite orientations, exhaustive corner grid
        rng = make_rng(53)
        for _ in range(5):
            y = rng.random((2, 2)) * 1.4
            _, fitted, obj = fit_sum_of_bimonotone(y, [ID2, REV2])
            ref = grid_oracle_two_components(y)
            assert obj <= ref + 0.01 * max(ref, 1e-8) + 1e-4


def grid_oracle_two_components(y, step=0.01):
    """Exhaustive objective for two opposite-oriented 2x2 components.

    Component 1 is identity-frame (min at (0,0), max at (1,1)); component
    2 is reversed (min at (1,1), max at (0,0)).  Grid the two extreme
    cells of each component; the four middle values decouple per cell
    with closed-form clips.  The sum box keeps every cell within [0, 1].
    """
    t = np.asarray(y)
    g = np.arange(0.0, 1.0 + step / 2, step)
    best = np.inf
    d1, a2, d2 = np.meshgrid(g, g, g, indexing="ij")
    for a1 in g:  # comp1 at (0,0); comp2's extremes sit at (1,1) and (0,0)
        feasible = (d1 >= a1) & (d2 >= a2) & (a1 + d2 <= 1.0) & (d1 + a2 <= 1.0)
        if not feasible.any():
            continue
        lo = a1 + a2
        hi = np.minimum(d1 + d2, 1.0)
        b = np.clip(t[0, 1], lo, hi)
        c = np.clip(t[1, 0], lo, hi)
        err = (
            (a1 + d2 - t[0, 0]) ** 2
            + (d1 + a2 - t[1, 1]) ** 2
            + (b - t[0, 1]) ** 2
            + (c - t[1, 0]) ** 2
        )
        err = np.where(feasible, err, np.inf)
        best = min(best, float(err.min()))
    return best
