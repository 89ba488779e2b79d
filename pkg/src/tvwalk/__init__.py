"""Random transvection walk on invertible binary matrices.

The package simulates the walk whose step adds one uniformly chosen row to
another modulo 2, analyzes its mixing exactly at small dimension, verifies
the functional inequalities behind its logarithmic-Sobolev analysis,
estimates mixing-time bounds, probes the cutoff of its column projections
at large dimension, and simulates a timed challenge-response protocol
whose security premise is the walk's short honest-evaluation cost.
"""

from .chain import (
    ProjectionState,
    Trajectory,
    load_trajectory,
    projection_from_identity,
    replay,
    run,
    save_trajectory,
    step,
    step_projection,
)
from .diagnostics import (
    DEFAULT_CUTOFF_GRID,
    STATISTICS,
    CutoffPoint,
    NoBracketError,
    TvEstimate,
    crossover_locator,
    cutoff_experiment,
    mc_state_frequencies,
    statistic_tv,
)
from .exactgroup import (
    GroupTable,
    NonConvergentError,
    SpectralReport,
    TransitionStructure,
    analyze,
    build_transition,
    distribution_at,
    enumerate_group,
    group_order,
    l2_distance,
    mixing_curve,
    mixing_times,
    order_ratio,
    spectral_report,
    tv_distance,
)
from .funineq import (
    SUITE_NAMES,
    BoundReport,
    LsiEstimate,
    SuiteResult,
    check_extension_inequality,
    check_key_inequality,
    check_row_decomposition,
    counting_lower_bound,
    dirichlet_form,
    entropy_sq,
    estimate_lsi_constant,
    hypercube_lsi_check,
    kassabov_check,
    kassabov_spectral_check,
    mixing_bound,
    run_suite,
    variance,
)
from .gf2core import (
    BitMatrix,
    BitVector,
    OpCount,
    Transvection,
    apply_transvection,
    apply_transvection_vec,
    decode_key,
    derive_rng,
    encode_key,
    invertible_fraction,
    is_invertible,
    load_matrix,
    mat_mul,
    matvec,
    matvec_cost,
    rank,
    sample_uniform_invertible,
    save_matrix,
)
from .protocol import (
    Challenge,
    KeyPair,
    Response,
    VerifyResult,
    keygen,
    respond_dishonest,
    respond_honest,
    separation_report,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # gf2core
    "BitMatrix",
    "BitVector",
    "OpCount",
    "Transvection",
    "apply_transvection",
    "apply_transvection_vec",
    "decode_key",
    "derive_rng",
    "encode_key",
    "invertible_fraction",
    "is_invertible",
    "load_matrix",
    "mat_mul",
    "matvec",
    "matvec_cost",
    "rank",
    "sample_uniform_invertible",
    "save_matrix",
    # chain
    "ProjectionState",
    "Trajectory",
    "load_trajectory",
    "projection_from_identity",
    "replay",
    "run",
    "save_trajectory",
    "step",
    "step_projection",
    # exactgroup
    "GroupTable",
    "NonConvergentError",
    "SpectralReport",
    "TransitionStructure",
    "analyze",
    "build_transition",
    "distribution_at",
    "enumerate_group",
    "group_order",
    "l2_distance",
    "mixing_curve",
    "mixing_times",
    "order_ratio",
    "spectral_report",
    "tv_distance",
    # funineq
    "SUITE_NAMES",
    "BoundReport",
    "LsiEstimate",
    "SuiteResult",
    "check_extension_inequality",
    "check_key_inequality",
    "check_row_decomposition",
    "counting_lower_bound",
    "dirichlet_form",
    "entropy_sq",
    "estimate_lsi_constant",
    "hypercube_lsi_check",
    "kassabov_check",
    "kassabov_spectral_check",
    "mixing_bound",
    "run_suite",
    "variance",
    # diagnostics
    "DEFAULT_CUTOFF_GRID",
    "STATISTICS",
    "CutoffPoint",
    "NoBracketError",
    "TvEstimate",
    "crossover_locator",
    "cutoff_experiment",
    "mc_state_frequencies",
    "statistic_tv",
    # protocol
    "Challenge",
    "KeyPair",
    "Response",
    "VerifyResult",
    "keygen",
    "respond_dishonest",
    "respond_honest",
    "separation_report",
    "verify",
]
