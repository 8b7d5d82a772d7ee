"""Partial-transpose witnesses, exact n-copy algebra and a distillation simulator
for the R⊗R/S⊗S family of bipartite states."""

from .pqalgebra import (
    BudgetExceeded,
    StructuredOperator,
    check_coefficient_claims,
    mu_lambda,
    n_copy_pt_coeffs,
    pt_substitute,
    tensor_power,
    to_dense,
)
from .protocol import (
    ProtocolConfig,
    RunStats,
    certify_final,
    expected_copies,
    expected_copies_exact,
    k_threshold,
    simulate_run,
    success_probability,
)
from .states import (
    RhoEpsilonParams,
    WernerParams,
    alpha_state,
    max_entangled,
    projector_set,
    rho_epsilon,
    verify_pt_relations,
    werner,
)
from .tensor import (
    DenseOperator,
    Party,
    PureVector,
    RegisterLayout,
    min_eigenpair,
    partial_trace,
    partial_transpose,
    permute_registers,
    schmidt_rank,
    schmidt_values,
    tensor,
)
from .witness import (
    BoundParams,
    WitnessResult,
    canonical_phi,
    epsilon_threshold,
    evaluate_witness,
    find_witness,
    n_copy_bound,
    q_overlap_min,
    search_rank2_min,
)

__version__ = "0.1.0"
