//! Numerical toolkit for generalized quantum state discrimination.
//!
//! The central object is a linear POVM optimization: choose detection
//! operators `{Π̂_m}` forming a POVM to maximize `Σ_m Tr(ĉ_m Π̂_m)` subject to
//! affine trace constraints `Σ_m Tr(â_{j,m} Π̂_m) ≤ b_j`. Every classic
//! discrimination criterion (minimum-error/Bayes, error margin, inconclusive
//! rate with success floors) is an instance of this problem, and the crate
//! ships builders for all of them.
//!
//! What is provided:
//!
//! - [`operator`]: dense complex Hermitian linear algebra at small
//!   dimensions — validation, spectral decomposition, trace pairings, and
//!   seeded random ensembles.
//! - [`problem`]: the generalized primal problem, criterion templates, and
//!   feasibility checking.
//! - [`sdp`]: compilation onto a real-symmetric block SDP and a primal-dual
//!   interior-point solver (Mehrotra predictor-corrector, HKM direction)
//!   that returns both the optimal POVM and the dual variables `(X̂, λ)`.
//! - [`certificate`]: independent optimality verification through dual
//!   feasibility and complementary slackness, decoupled from the solver.
//! - [`minimax`]: worst-case criterion weighting — saddle-point solutions
//!   via an epigraph reformulation, plus saddle verification.
//! - [`symmetry`]: finite unitary/anti-unitary group actions, the POVM
//!   averaging map, and covariant solving.

pub mod certificate;
pub mod minimax;
pub mod operator;
pub mod problem;
pub mod sdp;
pub mod symmetry;

pub use certificate::{
    certificate_from_multipliers, dual_bound_operators, dual_objective, verify_certificate,
    CertificateError, CertificateReport, CertificateTolerances, DualCertificate,
};
pub use minimax::{
    criterion_values, solve_minimax, verify_minimax, weighted_optimum, MinimaxError,
    MinimaxProblem, MinimaxReport, MinimaxSolution,
};
pub use operator::{
    tolerances, trace_pair, DensityOperator, EnsembleKind, HermitianOperator, OperatorError, Povm,
    StateEnsemble,
};
pub use problem::{
    BayesCost, ConstraintRelation, DiscriminationProblem, FeasibilityReport, ProblemError,
    RawConstraint,
};
pub use sdp::{
    compile, extract_dual, solve, IterateRecord, ResidualReport, SdpStandardForm, SolveStatus,
    SolverConfig, SolverResult,
};
pub use symmetry::{
    act, average_povm, check_minimax_covariance, check_problem_covariance, covariant_solve,
    symmetrize_minimax, CovariantSolution, CovarianceReport, FiniteGroup, GroupElement,
    SymmetrizedMinimax, SymmetryError,
};
