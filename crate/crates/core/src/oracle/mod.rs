//! Ground truth for the bounds: exact RIP constants from Gram-submatrix
//! spectra, exact incoherence from codeword distances, and sparse recovery by
//! basis pursuit and by exhaustive support search.

mod recovery;
mod rip;

pub use recovery::{
    basis_pursuit, exhaustive_sparse_oracle, exhaustive_sparse_oracle_with_limit,
    random_sparse_signal, relative_error, RecoveryOutcome, RecoveryProblem, SolveStatus,
    SolverSettings, Termination, DEFAULT_SUPPORT_LIMIT,
};
pub use rip::{
    exact_incoherence, exact_incoherence_numerator, exact_rip_constant,
    exact_rip_constant_with_limit, gram_submatrix, GramSubmatrix, RipConstant, SensingRef,
    DEFAULT_SUBSET_LIMIT, MAX_ORDER,
};
