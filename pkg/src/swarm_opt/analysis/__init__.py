"""Linear-algebra view of MCO as a switched linear system."""

from .matrices import (
    SystemMatrices,
    assemble,
    build_A,
    build_Ac,
    build_B,
    build_E,
    build_W,
)
from .spectral import (
    SpectralReport,
    b_cubic_roots,
    eigen_semisimple,
    is_discrete_semistable,
    is_paracontracting,
    kernel_basis,
    multiplicities,
    numeric_rank,
    predicted_spectrum_A,
    predicted_spectrum_B,
    same_subspace,
    semiobservable_family_check,
    spectral_report,
    step_bounds,
    subspace_residual,
    verify_spectrum_containment,
)
from .switched import (
    SwitchedResult,
    consensus_measures,
    random_switching,
    recurring_schedule,
    simulate_switched,
    split_state,
    update_matrix,
)
from .theorem import (
    RankVerdict,
    TheoremVerdict,
    check_rank_lemma,
    check_theorem_hypotheses,
    consensus_kernel,
    h1_supremum,
    rank_case,
)
