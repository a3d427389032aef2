"""Permutation-rank matrix models: generators, observation sampling,
bimonotone projections, estimators, spectral diagnostics, and an
experiment harness.
"""

__version__ = "0.1.0"

from .matrices import (
    BimonotoneComponent,
    PermRankDecomposition,
    Permutation,
    PermutationPair,
    UnitIntervalMatrix,
    apply_permutation_pair,
    is_bimonotone,
)
from .core import (
    as_bimonotone_component,
    check_uniqueness_necessary,
    generate_convex_combination_model,
    make_convexity_witness_pair,
    make_hausdorff_block,
    make_rank_pair_matrix,
    make_spectral_trap_matrix,
    make_triangular_halves,
    make_upper_triangular_ones,
    pr1_membership,
)
from .observe import (
    NoiseMatrix,
    ObservationMatrix,
    empirical_opnorm_check,
    estimate_p_obs,
    recenter,
    sample_noise_matrix,
    sample_observations,
)
from .project import (
    ProjectionConfig,
    fit_sum_of_bimonotone,
    project_bimonotone,
    project_bimonotone_below,
)
from .estimate import (
    GreedyResult,
    RegularizerSpec,
    SvtConfig,
    brute_force_regularized_ls,
    default_svt_threshold,
    greedy_decompose,
    regularizer_value,
    svt_estimate,
    two_step_estimate,
)
from .analyze import (
    HausdorffGapReport,
    SpectralReport,
    TailBoundReport,
    best_rank_one_gap,
    chatterjee_approximation,
    convexity_gap_estimate,
    hausdorff_gap_report,
    numerical_rank,
    random_bimonotone,
    random_permrank,
    singular_tail,
    spectral_report,
    verify_tail_bound_nn,
    verify_tail_bound_pr,
)
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    emit_results,
    normalized_error,
    run_failure_suite,
    run_opnorm_suite,
    run_oracle_suite,
    run_svt_scaling,
)

__all__ = [name for name in dir() if not name.startswith("_")]
