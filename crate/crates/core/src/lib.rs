//! Consistent-histories machinery: dense complex matrix algebra, windows
//! of history propositions, decoherence functions with explicit-operator
//! and chain-recipe backends, dimension-weighted information-entropy, and
//! strategies that minimise the entropy over consistent windows.
//!
//! The crate is organised bottom-up:
//!
//! - [`matrix`] — complex matrices, Kronecker products, Hermitian
//!   eigendecomposition, permutation operators, entropy of a state;
//! - [`histories`] — propositions, homogeneous histories, windows,
//!   refinement and coarse-graining enumeration;
//! - [`decoherence`] — decoherence operators and functions, validation,
//!   convex structure, canonical forms, impurity splitting;
//! - [`entropy`] — consistency checks and the entropy functionals;
//! - [`search`] — spectral, parametrised, greedy and exhaustive
//!   minimisation;
//! - [`sample`] — seeded random matrices backing validation and search.
//!
//! All values are pure and immutable after construction; everything may be
//! shared across threads freely.

pub mod decoherence;
pub mod entropy;
pub mod histories;
pub mod matrix;
pub mod sample;
pub mod search;

pub use decoherence::{
    Backend, ChainRecipe, DecoherenceError, DecoherenceFunction, DecoherenceOperator,
    ValidationReport, WEquivalenceClass, canonical_operator, convex_combine, impurity_split,
    is_w_pure, validate, validate_with_windows, w_equivalent,
};
pub use entropy::{
    ConsistencyCheck, EntropyError, EntropyReport, consistency_residual, i_hat, i_norm, i_x,
    is_consistent, localized_i, monotonicity_gap, report,
};
pub use histories::{
    HistoryError, HistoryProposition, HomogeneousHistory, HomogeneousSum, Window,
    basis_proposition, bell_number, coarser_eq, insert_trivial_time, is_refinement, make_window,
    negation, oplus,
};
pub use matrix::{
    C64, ComplexMatrix, DEFAULT_TOL, EigMode, HermitianEigensystem, MatrixError, check_density,
    cyclic_shift_4, herm_eig, herm_eig_with, is_projector, kron, kron_trace, proj_dim,
    proj_dim_with_tol, projector_basis, swap_operator, vn_entropy, vn_entropy_with_tol,
};
pub use search::{
    GridSpec, SearchError, SearchResult, Strategy, max_rank1_probability, minimize_exhaustive,
    minimize_greedy_refinement, minimize_parametrized_1d, minimize_spectral, windows_from_basis,
};
