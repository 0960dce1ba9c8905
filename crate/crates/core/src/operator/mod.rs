//! Dense complex Hermitian linear algebra at small dimensions.
//!
//! All domain objects (states, cost operators, detection operators) are
//! dense complex Hermitian matrices. Storage is kept *exactly* Hermitian:
//! constructors symmetrize entries so that `A[j][i] == conj(A[i][j])`
//! bitwise, which keeps traces and pairings real to machine precision.

pub mod random;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use thiserror::Error;

/// Double-precision complex scalar used throughout.
pub type C64 = Complex<f64>;

/// Centralized validation tolerances.
///
/// Interior-point output carries roughly sqrt(machine-eps) noise, so the
/// PSD and completeness thresholds are looser than the exact-arithmetic
/// ones; certificates must not reject solver output spuriously.
pub mod tolerances {
    /// Largest acceptable `‖A − A†‖_F` when validating a Hermitian input.
    pub const HERMITICITY: f64 = 1e-10;
    /// Smallest acceptable minimum eigenvalue for positive semidefiniteness.
    pub const PSD: f64 = 1e-8;
    /// Largest acceptable `|Tr ρ − 1|` for a density operator.
    pub const TRACE: f64 = 1e-10;
    /// Largest acceptable `‖Σ_m Π̂_m − 1̂‖_F` for POVM completeness.
    pub const COMPLETENESS: f64 = 1e-8;
    /// Largest acceptable `|Σ_r ξ_r − 1|` for prior probabilities.
    pub const PROBABILITY: f64 = 1e-10;
}

/// Errors from operator construction and pairing.
#[derive(Debug, Clone, Error)]
pub enum OperatorError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has zero dimension")]
    EmptyMatrix,
    #[error("asymmetry too large: ‖A − A†‖_F = {norm:.3e} exceeds tolerance {tolerance:.3e}")]
    AsymmetryTooLarge { norm: f64, tolerance: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("eigendecomposition failed to converge")]
    EigDecompositionFailed,
    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("trace is {trace} but must be 1 within {tolerance:.3e}")]
    TraceNotOne { trace: f64, tolerance: f64 },
    #[error("POVM completeness violated: ‖Σ Π̂_m − 1̂‖_F = {residual:.3e}")]
    CompletenessViolation { residual: f64 },
    #[error("state vector has vanishing norm")]
    ZeroStateVector,
    #[error("invalid priors: {reason}")]
    InvalidPriors { reason: String },
    #[error("expected {expected} items, got {got}")]
    CountMismatch { expected: usize, got: usize },
}

fn hermitize_in_place(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
}

fn asymmetry_norm(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = m[(i, j)] - m[(j, i)].conj();
            acc += d.norm_sqr();
        }
    }
    acc.sqrt()
}

/// A dense complex Hermitian matrix.
///
/// The stored matrix is exactly Hermitian: after construction,
/// `‖A − A†‖_F == 0.0` holds bitwise. The asymmetry of the original input
/// is retained as metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: DMatrix<C64>,
    input_asymmetry: f64,
}

impl HermitianOperator {
    /// Validates a square complex matrix as Hermitian and returns its
    /// symmetrization `(A + A†)/2`.
    ///
    /// Fails with [`OperatorError::AsymmetryTooLarge`] when
    /// `‖A − A†‖_F > tolerance`.
    pub fn new(mat: DMatrix<C64>, tolerance: f64) -> Result<Self, OperatorError> {
        if mat.nrows() != mat.ncols() {
            return Err(OperatorError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(OperatorError::EmptyMatrix);
        }
        let norm = asymmetry_norm(&mat);
        if norm > tolerance {
            return Err(OperatorError::AsymmetryTooLarge { norm, tolerance });
        }
        let mut mat = mat;
        hermitize_in_place(&mut mat);
        Ok(Self {
            mat,
            input_asymmetry: norm,
        })
    }

    /// Validates with the default hermiticity tolerance
    /// [`tolerances::HERMITICITY`].
    pub fn validate(mat: DMatrix<C64>) -> Result<Self, OperatorError> {
        Self::new(mat, tolerances::HERMITICITY)
    }

    /// Takes the Hermitian part `(A + A†)/2` of an arbitrary square matrix,
    /// never failing on asymmetry. Used for results of operator products
    /// that are Hermitian only up to arithmetic noise.
    pub fn hermitian_part(mat: DMatrix<C64>) -> Result<Self, OperatorError> {
        if mat.nrows() != mat.ncols() {
            return Err(OperatorError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(OperatorError::EmptyMatrix);
        }
        let norm = asymmetry_norm(&mat);
        let mut mat = mat;
        hermitize_in_place(&mut mat);
        Ok(Self {
            mat,
            input_asymmetry: norm,
        })
    }

    /// The identity operator on a `dim`-dimensional space.
    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
            input_asymmetry: 0.0,
        }
    }

    /// The zero operator on a `dim`-dimensional space.
    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
            input_asymmetry: 0.0,
        }
    }

    /// Builds from a real symmetric matrix given row-major.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self, OperatorError> {
        let mat = DMatrix::from_fn(dim, dim, |i, j| C64::new(rows[i * dim + j], 0.0));
        Self::validate(mat)
    }

    /// Rank-one projector `v v† / ⟨v|v⟩` onto the span of `v`.
    pub fn projector(v: &[C64]) -> Result<Self, OperatorError> {
        let norm_sqr: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if norm_sqr <= f64::MIN_POSITIVE {
            return Err(OperatorError::ZeroStateVector);
        }
        let d = v.len();
        let mat = DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj() / norm_sqr);
        Self::hermitian_part(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    /// `‖A − A†‖_F` of the matrix this operator was constructed from.
    pub fn input_asymmetry(&self) -> f64 {
        self.input_asymmetry
    }

    /// Real trace (the diagonal is exactly real by construction).
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Scales by a real factor; Hermitian structure is preserved exactly.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mat: self.mat.map(|c| c * factor),
            input_asymmetry: 0.0,
        }
    }

    /// Full spectral decomposition. Eigenvalues ascending; columns of the
    /// returned matrix are the corresponding orthonormal eigenvectors.
    pub fn eigen(&self) -> Result<(DVector<f64>, DMatrix<C64>), OperatorError> {
        let eig = nalgebra::SymmetricEigen::try_new(self.mat.clone(), f64::EPSILON, 10_000)
            .ok_or(OperatorError::EigDecompositionFailed)?;
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_fn(self.dim(), |i, _| eig.eigenvalues[order[i]]);
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            eig.eigenvectors[(i, order[j])]
        });
        Ok((values, vectors))
    }

    /// Minimum eigenvalue from a full symmetric eigendecomposition.
    pub fn min_eigenvalue(&self) -> Result<f64, OperatorError> {
        let eig = nalgebra::SymmetricEigen::try_new(self.mat.clone(), f64::EPSILON, 10_000)
            .ok_or(OperatorError::EigDecompositionFailed)?;
        Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Whether the operator is positive semidefinite within `tolerance`
    /// (minimum eigenvalue at least `−tolerance`).
    pub fn is_psd(&self, tolerance: f64) -> Result<bool, OperatorError> {
        Ok(self.min_eigenvalue()? >= -tolerance)
    }

    /// Plain matrix product `A·B`; generally not Hermitian.
    pub fn product(&self, other: &Self) -> Result<DMatrix<C64>, OperatorError> {
        if self.dim() != other.dim() {
            return Err(OperatorError::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(&self.mat * &other.mat)
    }
}

impl std::ops::Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        HermitianOperator {
            mat: &self.mat + &rhs.mat,
            input_asymmetry: 0.0,
        }
    }
}

impl std::ops::Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        HermitianOperator {
            mat: &self.mat - &rhs.mat,
            input_asymmetry: 0.0,
        }
    }
}

impl std::ops::Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scaled(-1.0)
    }
}

/// Real trace pairing `Tr(AB)` of two Hermitian operators.
///
/// For Hermitian `A`, `B` the trace is real; any imaginary residue beyond
/// 1e-10 indicates corrupted inputs and is rejected by an assertion.
pub fn trace_pair(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64, OperatorError> {
    if a.dim() != b.dim() {
        return Err(OperatorError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let (am, bm) = (a.matrix(), b.matrix());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            acc += am[(i, j)] * bm[(j, i)];
        }
    }
    assert!(
        acc.im.abs() <= 1e-10,
        "trace pairing has imaginary residue {:.3e}",
        acc.im
    );
    Ok(acc.re)
}

/// A quantum state: positive semidefinite Hermitian operator of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    /// Validates positivity (within [`tolerances::PSD`]) and unit trace
    /// (within [`tolerances::TRACE`]).
    pub fn new(op: HermitianOperator) -> Result<Self, OperatorError> {
        let min_eigenvalue = op.min_eigenvalue()?;
        if min_eigenvalue < -tolerances::PSD {
            return Err(OperatorError::NotPositiveSemidefinite { min_eigenvalue });
        }
        let trace = op.trace();
        if (trace - 1.0).abs() > tolerances::TRACE {
            return Err(OperatorError::TraceNotOne {
                trace,
                tolerance: tolerances::TRACE,
            });
        }
        Ok(Self { op })
    }

    /// Pure state `|ψ⟩⟨ψ|` from (not necessarily normalized) amplitudes.
    pub fn pure(amplitudes: &[C64]) -> Result<Self, OperatorError> {
        Self::new(HermitianOperator::projector(amplitudes)?)
    }

    /// Pure state from real amplitudes.
    pub fn pure_real(amplitudes: &[f64]) -> Result<Self, OperatorError> {
        let v: Vec<C64> = amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::pure(&v)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// A positive operator-valued measure: detection operators `Π̂_m ≥ 0` with
/// `Σ_m Π̂_m = 1̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    outcomes: Vec<HermitianOperator>,
}

impl Povm {
    /// Validates positivity of every outcome (within [`tolerances::PSD`])
    /// and completeness (within [`tolerances::COMPLETENESS`]).
    pub fn new(outcomes: Vec<HermitianOperator>) -> Result<Self, OperatorError> {
        let povm = Self::from_raw(outcomes)?;
        let mut worst = f64::INFINITY;
        for outcome in &povm.outcomes {
            worst = worst.min(outcome.min_eigenvalue()?);
        }
        if worst < -tolerances::PSD {
            return Err(OperatorError::NotPositiveSemidefinite {
                min_eigenvalue: worst,
            });
        }
        let residual = povm.completeness_residual();
        if residual > tolerances::COMPLETENESS {
            return Err(OperatorError::CompletenessViolation { residual });
        }
        Ok(povm)
    }

    /// Builds without positivity/completeness validation. Shape checks
    /// (nonempty, equal dims) still apply. Intended for candidate
    /// measurements that will be *checked* rather than trusted, e.g. inputs
    /// to feasibility reports and certificates.
    pub fn from_raw(outcomes: Vec<HermitianOperator>) -> Result<Self, OperatorError> {
        let dim = outcomes
            .first()
            .ok_or(OperatorError::CountMismatch {
                expected: 1,
                got: 0,
            })?
            .dim();
        for outcome in &outcomes {
            if outcome.dim() != dim {
                return Err(OperatorError::DimMismatch {
                    left: dim,
                    right: outcome.dim(),
                });
            }
        }
        Ok(Self { outcomes })
    }

    /// The uniform POVM `Π̂_m = 1̂/M`, the natural interior point of the
    /// POVM set.
    pub fn uniform(dim: usize, outcomes: usize) -> Self {
        let op = HermitianOperator::identity(dim).scaled(1.0 / outcomes as f64);
        Self {
            outcomes: vec![op; outcomes],
        }
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].dim()
    }

    pub fn outcomes(&self) -> &[HermitianOperator] {
        &self.outcomes
    }

    pub fn outcome(&self, m: usize) -> &HermitianOperator {
        &self.outcomes[m]
    }

    /// `‖Σ_m Π̂_m − 1̂‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = self.outcomes[0].matrix().clone();
        for outcome in &self.outcomes[1..] {
            sum += outcome.matrix();
        }
        for i in 0..self.dim() {
            sum[(i, i)] -= C64::new(1.0, 0.0);
        }
        sum.norm()
    }

    /// Minimum eigenvalue over all outcomes.
    pub fn min_outcome_eigenvalue(&self) -> Result<f64, OperatorError> {
        let mut worst = f64::INFINITY;
        for outcome in &self.outcomes {
            worst = worst.min(outcome.min_eigenvalue()?);
        }
        Ok(worst)
    }

    /// Outcome probabilities `Tr(ρ̂ Π̂_m)` on a given state.
    pub fn probabilities(&self, state: &DensityOperator) -> Result<Vec<f64>, OperatorError> {
        self.outcomes
            .iter()
            .map(|outcome| trace_pair(state.op(), outcome))
            .collect()
    }
}

/// Quantum states with prior probabilities.
///
/// Caches the prior-weighted average state `Ĝ = Σ_r ξ_r ρ̂_r`, which several
/// criterion templates share.
#[derive(Debug, Clone)]
pub struct StateEnsemble {
    states: Vec<DensityOperator>,
    priors: Vec<f64>,
    average: HermitianOperator,
}

impl StateEnsemble {
    pub fn new(states: Vec<DensityOperator>, priors: Vec<f64>) -> Result<Self, OperatorError> {
        if states.is_empty() {
            return Err(OperatorError::CountMismatch {
                expected: 1,
                got: 0,
            });
        }
        if states.len() != priors.len() {
            return Err(OperatorError::CountMismatch {
                expected: states.len(),
                got: priors.len(),
            });
        }
        let dim = states[0].dim();
        for s in &states {
            if s.dim() != dim {
                return Err(OperatorError::DimMismatch {
                    left: dim,
                    right: s.dim(),
                });
            }
        }
        if let Some(&bad) = priors.iter().find(|&&p| p < 0.0) {
            return Err(OperatorError::InvalidPriors {
                reason: format!("negative prior {bad}"),
            });
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > tolerances::PROBABILITY {
            return Err(OperatorError::InvalidPriors {
                reason: format!("priors sum to {total}"),
            });
        }
        let mut average = HermitianOperator::zeros(dim);
        for (state, &prior) in states.iter().zip(&priors) {
            average = &average + &state.op().scaled(prior);
        }
        Ok(Self {
            states,
            priors,
            average,
        })
    }

    /// Equal priors `1/R` over the given states.
    pub fn with_uniform_priors(states: Vec<DensityOperator>) -> Result<Self, OperatorError> {
        let r = states.len().max(1);
        let priors = vec![1.0 / r as f64; states.len()];
        Self::new(states, priors)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn state(&self, r: usize) -> &DensityOperator {
        &self.states[r]
    }

    pub fn prior(&self, r: usize) -> f64 {
        self.priors[r]
    }

    /// The prior-weighted state `ξ_r ρ̂_r`.
    pub fn weighted_state(&self, r: usize) -> HermitianOperator {
        self.states[r].op().scaled(self.priors[r])
    }

    /// The cached average state `Ĝ = Σ_r ξ_r ρ̂_r`.
    pub fn average_state(&self) -> &HermitianOperator {
        &self.average
    }
}

/// Selects pure or mixed random state generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    Pure,
    Mixed,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn validate_accepts_identity_unchanged() {
        let op = HermitianOperator::new(DMatrix::identity(2, 2), 1e-12).unwrap();
        assert_eq!(op.input_asymmetry(), 0.0);
        assert_eq!(op.matrix(), &DMatrix::<C64>::identity(2, 2));
    }

    #[test]
    fn validate_accepts_pauli_y_exactly() {
        let mat = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]);
        let op = HermitianOperator::new(mat.clone(), 1e-12).unwrap();
        assert_eq!(op.input_asymmetry(), 0.0);
        assert_eq!(op.matrix(), &mat);
    }

    #[test]
    fn validate_rejects_maximally_non_hermitian() {
        let mat = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let err = HermitianOperator::new(mat, 1e-12).unwrap_err();
        assert!(matches!(err, OperatorError::AsymmetryTooLarge { .. }));
    }

    #[test]
    fn symmetrization_leaves_zero_residual_exactly() {
        // Perturb within tolerance, then demand bitwise hermiticity.
        let mat = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 1e-12), c(0.5, 0.25), c(0.5, -0.25 + 1e-12), c(-2.0, 0.0)],
        );
        let op = HermitianOperator::new(mat, 1e-10).unwrap();
        assert!(op.input_asymmetry() > 0.0);
        assert_eq!(asymmetry_norm(op.matrix()), 0.0);
    }

    #[test]
    fn min_eigenvalue_identity_and_diagonal() {
        assert_abs_diff_eq!(
            HermitianOperator::identity(3).min_eigenvalue().unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let diag = HermitianOperator::from_real_rows(2, &[2.0, 0.0, 0.0, -0.5]).unwrap();
        assert_abs_diff_eq!(diag.min_eigenvalue().unwrap(), -0.5, epsilon = 1e-14);
    }

    #[test]
    fn min_eigenvalue_of_plus_projector_is_zero() {
        // Rank-1 projector has analytic spectrum {0, 1}.
        let plus = HermitianOperator::projector(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(plus.min_eigenvalue().unwrap().abs() <= 1e-12);
    }

    #[test]
    fn trace_pair_examples() {
        let id = HermitianOperator::identity(2);
        assert_abs_diff_eq!(trace_pair(&id, &id).unwrap(), 2.0, epsilon = 1e-14);

        let p0 = HermitianOperator::projector(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p1 = HermitianOperator::projector(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(trace_pair(&p0, &p1).unwrap(), 0.0, epsilon = 1e-14);

        // |⟨0|+⟩|² = 1/2 by hand.
        let plus = HermitianOperator::projector(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(trace_pair(&p0, &plus).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn trace_pair_rejects_dim_mismatch() {
        let a = HermitianOperator::identity(2);
        let b = HermitianOperator::identity(3);
        assert!(matches!(
            trace_pair(&a, &b),
            Err(OperatorError::DimMismatch { .. })
        ));
    }

    #[test]
    fn density_operator_rejects_bad_inputs() {
        let neg = HermitianOperator::from_real_rows(2, &[1.5, 0.0, 0.0, -0.5]).unwrap();
        assert!(matches!(
            DensityOperator::new(neg),
            Err(OperatorError::NotPositiveSemidefinite { .. })
        ));
        let off_trace = HermitianOperator::from_real_rows(2, &[0.7, 0.0, 0.0, 0.7]).unwrap();
        assert!(matches!(
            DensityOperator::new(off_trace),
            Err(OperatorError::TraceNotOne { .. })
        ));
    }

    #[test]
    fn povm_validation_and_uniform() {
        let p0 = HermitianOperator::projector(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p1 = HermitianOperator::projector(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let povm = Povm::new(vec![p0.clone(), p1]).unwrap();
        assert!(povm.completeness_residual() <= 1e-15);

        // Incomplete set rejected.
        assert!(matches!(
            Povm::new(vec![p0.clone(), p0]),
            Err(OperatorError::CompletenessViolation { .. })
        ));

        let uniform = Povm::uniform(3, 4);
        assert_eq!(uniform.num_outcomes(), 4);
        assert!(uniform.completeness_residual() <= 1e-15);
    }

    #[test]
    fn ensemble_checks_priors_and_caches_average() {
        let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
        let rho1 = DensityOperator::pure_real(&[0.0, 1.0]).unwrap();
        let ens = StateEnsemble::new(vec![rho0.clone(), rho1.clone()], vec![0.25, 0.75]).unwrap();
        let g = ens.average_state();
        assert_abs_diff_eq!(g.trace(), 1.0, epsilon = 1e-14);
        assert!(g.min_eigenvalue().unwrap() >= -1e-14);

        assert!(StateEnsemble::new(vec![rho0.clone(), rho1.clone()], vec![0.5, 0.6]).is_err());
        assert!(StateEnsemble::new(vec![rho0, rho1], vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn completeness_transfers_to_probabilities() {
        let state = DensityOperator::pure_real(&[0.6, 0.8]).unwrap();
        let povm = Povm::uniform(2, 3);
        let total: f64 = povm.probabilities(&state).unwrap().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = tolerances::COMPLETENESS);
    }
}
