//! The generalized primal problem and its criterion templates.
//!
//! A [`DiscriminationProblem`] is the data of
//!
//! ```text
//! maximize   Σ_m Tr(ĉ_m Π̂_m)
//! subject to Π a POVM,  Σ_m Tr(â_{j,m} Π̂_m) ≤ b_j   for j < J
//! ```
//!
//! Every supported discrimination criterion reduces to this form through a
//! template builder. Equality constraints are canonicalized into paired
//! inequalities at build time so that downstream dual certificates refer to
//! the expanded rows unambiguously.

use thiserror::Error;

use crate::operator::{
    tolerances, trace_pair, HermitianOperator, OperatorError, Povm, StateEnsemble,
};

/// Errors from problem construction and evaluation.
#[derive(Debug, Clone, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("objective has {objective} operators but constraint row {row} has {found}")]
    RaggedConstraintRow {
        objective: usize,
        row: usize,
        found: usize,
    },
    #[error("{rows} constraint rows but {bounds} bounds")]
    BoundCountMismatch { rows: usize, bounds: usize },
    #[error("POVM has {got} outcomes, problem expects {expected}")]
    OutcomeCountMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: problem dim {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("cost matrix must be {expected}x{expected}")]
    CostShape { expected: usize },
    #[error("cost matrix entry ({row},{col}) = {value} is negative")]
    NegativeCost { row: usize, col: usize, value: f64 },
    #[error("parameter {name} = {value} outside [0, 1]")]
    ParameterRange { name: &'static str, value: f64 },
    #[error("empty problem: at least one outcome required")]
    Empty,
}

/// Relation carried by a raw constraint before canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRelation {
    LessEqual,
    Equal,
}

/// A constraint row as supplied by a caller, prior to canonicalization.
#[derive(Debug, Clone)]
pub struct RawConstraint {
    pub ops: Vec<HermitianOperator>,
    pub bound: f64,
    pub relation: ConstraintRelation,
    pub label: Option<String>,
}

/// Per-row cost coefficients for the Bayes criterion.
#[derive(Debug, Clone)]
pub struct BayesCost {
    matrix: Vec<Vec<f64>>,
}

impl BayesCost {
    /// Validates a square matrix of nonnegative cost coefficients
    /// `B[m][r]`: the cost of guessing `m` when the state was `r`.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self, ProblemError> {
        let r = matrix.len();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != r {
                return Err(ProblemError::CostShape { expected: r });
            }
            for (j, &value) in row.iter().enumerate() {
                if value < 0.0 {
                    return Err(ProblemError::NegativeCost {
                        row: i,
                        col: j,
                        value,
                    });
                }
            }
        }
        Ok(Self { matrix })
    }

    /// The minimum-error cost matrix `B[m][r] = 1 − δ_{m,r}`.
    pub fn min_error(count: usize) -> Self {
        let matrix = (0..count)
            .map(|m| (0..count).map(|r| if m == r { 0.0 } else { 1.0 }).collect())
            .collect();
        Self { matrix }
    }

    pub fn num_states(&self) -> usize {
        self.matrix.len()
    }

    pub fn entry(&self, m: usize, r: usize) -> f64 {
        self.matrix[m][r]
    }
}

/// Feasibility diagnostics for a candidate POVM against a problem.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    /// `max(0, −min_m λ_min(Π̂_m))`.
    pub outcome_psd_violation: f64,
    /// `‖Σ_m Π̂_m − 1̂‖_F`.
    pub completeness_residual: f64,
    /// Per-constraint slack `b_j − Σ_m Tr(â_{j,m} Π̂_m)`.
    pub constraint_slacks: Vec<f64>,
    /// Indices of rows with slack below `−τ_feas`.
    pub violated_constraints: Vec<usize>,
    /// All POVM residuals within tolerance and all slacks ≥ `−τ_feas`.
    pub feasible: bool,
}

/// The generalized primal problem: objective operators `ĉ_m`, constraint
/// grid `â_{j,m}`, and bounds `b_j`.
#[derive(Debug, Clone)]
pub struct DiscriminationProblem {
    dim: usize,
    objective_ops: Vec<HermitianOperator>,
    constraint_ops: Vec<Vec<HermitianOperator>>,
    constraint_bounds: Vec<f64>,
    outcome_labels: Vec<String>,
    constraint_labels: Vec<String>,
}

impl DiscriminationProblem {
    pub fn new(
        objective_ops: Vec<HermitianOperator>,
        constraint_ops: Vec<Vec<HermitianOperator>>,
        constraint_bounds: Vec<f64>,
    ) -> Result<Self, ProblemError> {
        if objective_ops.is_empty() {
            return Err(ProblemError::Empty);
        }
        let dim = objective_ops[0].dim();
        let m = objective_ops.len();
        for op in &objective_ops {
            if op.dim() != dim {
                return Err(ProblemError::DimMismatch {
                    expected: dim,
                    got: op.dim(),
                });
            }
        }
        if constraint_ops.len() != constraint_bounds.len() {
            return Err(ProblemError::BoundCountMismatch {
                rows: constraint_ops.len(),
                bounds: constraint_bounds.len(),
            });
        }
        for (j, row) in constraint_ops.iter().enumerate() {
            if row.len() != m {
                return Err(ProblemError::RaggedConstraintRow {
                    objective: m,
                    row: j,
                    found: row.len(),
                });
            }
            for op in row {
                if op.dim() != dim {
                    return Err(ProblemError::DimMismatch {
                        expected: dim,
                        got: op.dim(),
                    });
                }
            }
        }
        let outcome_labels = (0..m).map(|i| format!("outcome:{i}")).collect();
        let constraint_labels = (0..constraint_ops.len())
            .map(|j| format!("constraint:{j}"))
            .collect();
        Ok(Self {
            dim,
            objective_ops,
            constraint_ops,
            constraint_bounds,
            outcome_labels,
            constraint_labels,
        })
    }

    /// Builds from raw constraints, canonicalizing each `Equal` row `(a, b)`
    /// into the inequality pair `(a, b)` and `(−a, −b)`.
    pub fn from_raw_constraints(
        objective_ops: Vec<HermitianOperator>,
        raw: Vec<RawConstraint>,
    ) -> Result<Self, ProblemError> {
        let mut ops = Vec::new();
        let mut bounds = Vec::new();
        let mut labels = Vec::new();
        for (j, row) in raw.into_iter().enumerate() {
            let base = row.label.unwrap_or_else(|| format!("constraint:{j}"));
            match row.relation {
                ConstraintRelation::LessEqual => {
                    ops.push(row.ops);
                    bounds.push(row.bound);
                    labels.push(base);
                }
                ConstraintRelation::Equal => {
                    let negated: Vec<HermitianOperator> = row.ops.iter().map(|a| -a).collect();
                    ops.push(row.ops);
                    bounds.push(row.bound);
                    labels.push(format!("{base}:le"));
                    ops.push(negated);
                    bounds.push(-row.bound);
                    labels.push(format!("{base}:ge"));
                }
            }
        }
        let mut problem = Self::new(objective_ops, ops, bounds)?;
        problem.constraint_labels = labels;
        Ok(problem)
    }

    pub fn with_labels(
        mut self,
        outcome_labels: Vec<String>,
        constraint_labels: Vec<String>,
    ) -> Self {
        if outcome_labels.len() == self.num_outcomes() {
            self.outcome_labels = outcome_labels;
        }
        if constraint_labels.len() == self.num_constraints() {
            self.constraint_labels = constraint_labels;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of detection operators `M`.
    pub fn num_outcomes(&self) -> usize {
        self.objective_ops.len()
    }

    /// Number of constraint rows `J`.
    pub fn num_constraints(&self) -> usize {
        self.constraint_ops.len()
    }

    pub fn objective_ops(&self) -> &[HermitianOperator] {
        &self.objective_ops
    }

    pub fn objective_op(&self, m: usize) -> &HermitianOperator {
        &self.objective_ops[m]
    }

    pub fn constraint_ops(&self) -> &[Vec<HermitianOperator>] {
        &self.constraint_ops
    }

    pub fn constraint_op(&self, j: usize, m: usize) -> &HermitianOperator {
        &self.constraint_ops[j][m]
    }

    pub fn constraint_bounds(&self) -> &[f64] {
        &self.constraint_bounds
    }

    pub fn outcome_labels(&self) -> &[String] {
        &self.outcome_labels
    }

    pub fn constraint_labels(&self) -> &[String] {
        &self.constraint_labels
    }

    fn check_povm_shape(&self, povm: &Povm) -> Result<(), ProblemError> {
        if povm.num_outcomes() != self.num_outcomes() {
            return Err(ProblemError::OutcomeCountMismatch {
                expected: self.num_outcomes(),
                got: povm.num_outcomes(),
            });
        }
        if povm.dim() != self.dim {
            return Err(ProblemError::DimMismatch {
                expected: self.dim,
                got: povm.dim(),
            });
        }
        Ok(())
    }

    /// Objective value `Σ_m Tr(ĉ_m Π̂_m)`.
    pub fn objective_value(&self, povm: &Povm) -> Result<f64, ProblemError> {
        self.check_povm_shape(povm)?;
        let mut total = 0.0;
        for (c, outcome) in self.objective_ops.iter().zip(povm.outcomes()) {
            total += trace_pair(c, outcome)?;
        }
        Ok(total)
    }

    /// Constraint values `Σ_m Tr(â_{j,m} Π̂_m)` for every row.
    pub fn constraint_values(&self, povm: &Povm) -> Result<Vec<f64>, ProblemError> {
        self.check_povm_shape(povm)?;
        let mut values = Vec::with_capacity(self.num_constraints());
        for row in &self.constraint_ops {
            let mut value = 0.0;
            for (a, outcome) in row.iter().zip(povm.outcomes()) {
                value += trace_pair(a, outcome)?;
            }
            values.push(value);
        }
        Ok(values)
    }

    /// Feasibility diagnostics: POVM validity residuals and per-row slacks.
    pub fn is_feasible(&self, povm: &Povm, tau_feas: f64) -> Result<FeasibilityReport, ProblemError> {
        self.check_povm_shape(povm)?;
        let min_eig = povm.min_outcome_eigenvalue().map_err(ProblemError::from)?;
        let outcome_psd_violation = (-min_eig).max(0.0);
        let completeness_residual = povm.completeness_residual();
        let values = self.constraint_values(povm)?;
        let constraint_slacks: Vec<f64> = values
            .iter()
            .zip(&self.constraint_bounds)
            .map(|(v, b)| b - v)
            .collect();
        let violated_constraints: Vec<usize> = constraint_slacks
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < -tau_feas)
            .map(|(j, _)| j)
            .collect();
        let feasible = outcome_psd_violation <= tolerances::PSD
            && completeness_residual <= tolerances::COMPLETENESS
            && violated_constraints.is_empty();
        Ok(FeasibilityReport {
            outcome_psd_violation,
            completeness_residual,
            constraint_slacks,
            violated_constraints,
            feasible,
        })
    }

    /// Bayes criterion: minimize the average cost `Σ_m Tr(Ŵ_m Π̂_m)` with
    /// `Ŵ_m = Σ_r ξ_r B[m][r] ρ̂_r`, encoded as maximization of
    /// `ĉ_m = −Ŵ_m`. `M = R`, `J = 0`.
    pub fn bayes(ensemble: &StateEnsemble, costs: &BayesCost) -> Result<Self, ProblemError> {
        let r = ensemble.num_states();
        if costs.num_states() != r {
            return Err(ProblemError::from(OperatorError::CountMismatch {
                expected: r,
                got: costs.num_states(),
            }));
        }
        let dim = ensemble.dim();
        let objective_ops: Vec<HermitianOperator> = (0..r)
            .map(|m| {
                let mut w = HermitianOperator::zeros(dim);
                for s in 0..r {
                    let coeff = ensemble.prior(s) * costs.entry(m, s);
                    if coeff != 0.0 {
                        w = &w + &ensemble.state(s).op().scaled(coeff);
                    }
                }
                -&w
            })
            .collect();
        let problem = Self::new(objective_ops, Vec::new(), Vec::new())?;
        let labels = (0..r).map(|m| format!("guess:{m}")).collect();
        Ok(problem.with_labels(labels, Vec::new()))
    }

    /// Minimum-error discrimination: the Bayes criterion with costs
    /// `B[m][r] = 1 − δ_{m,r}`. The optimal objective equals
    /// `P_success − 1`.
    pub fn min_error(ensemble: &StateEnsemble) -> Result<Self, ProblemError> {
        Self::bayes(ensemble, &BayesCost::min_error(ensemble.num_states()))
    }

    /// Error-margin criterion: maximize the average success probability
    /// subject to the average error probability not exceeding `epsilon`.
    /// `M = R + 1` (the last outcome abstains), `J = 1` with
    /// `b_0 = ε − 1`. At `ε = 0` this is optimal unambiguous discrimination.
    pub fn error_margin(ensemble: &StateEnsemble, epsilon: f64) -> Result<Self, ProblemError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(ProblemError::ParameterRange {
                name: "epsilon",
                value: epsilon,
            });
        }
        let r = ensemble.num_states();
        let dim = ensemble.dim();
        let mut objective_ops: Vec<HermitianOperator> =
            (0..r).map(|m| ensemble.weighted_state(m)).collect();
        objective_ops.push(HermitianOperator::zeros(dim));
        let mut row: Vec<HermitianOperator> = (0..r).map(|m| -&ensemble.weighted_state(m)).collect();
        row.push(-ensemble.average_state());
        let problem = Self::new(objective_ops, vec![row], vec![epsilon - 1.0])?;
        let mut outcome_labels: Vec<String> = (0..r).map(|m| format!("identify:{m}")).collect();
        outcome_labels.push("inconclusive".to_string());
        Ok(problem.with_labels(outcome_labels, vec!["error-margin".to_string()]))
    }

    /// Inconclusive criterion with success floors: maximize the average
    /// success probability with failure probability at least `p` and each
    /// per-state success probability at least `q`. `M = J = R + 1`.
    ///
    /// The failure-probability equality is relaxed to `≥ p`; the optimal
    /// value is monotone non-increasing in `p`, so the relaxation attains
    /// the same solution. At `q = 0` this is the optimal inconclusive
    /// measurement with failure rate `p`.
    pub fn bounded_inconclusive(
        ensemble: &StateEnsemble,
        p: f64,
        q: f64,
    ) -> Result<Self, ProblemError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ProblemError::ParameterRange { name: "p", value: p });
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(ProblemError::ParameterRange { name: "q", value: q });
        }
        let r = ensemble.num_states();
        let dim = ensemble.dim();
        let mut objective_ops: Vec<HermitianOperator> =
            (0..r).map(|m| ensemble.weighted_state(m)).collect();
        objective_ops.push(HermitianOperator::zeros(dim));

        let mut constraint_ops = Vec::with_capacity(r + 1);
        let mut bounds = Vec::with_capacity(r + 1);
        for j in 0..r {
            let mut row = vec![HermitianOperator::zeros(dim); r + 1];
            row[j] = -ensemble.state(j).op();
            constraint_ops.push(row);
            bounds.push(-q);
        }
        let mut failure_row = vec![HermitianOperator::zeros(dim); r + 1];
        failure_row[r] = -ensemble.average_state();
        constraint_ops.push(failure_row);
        bounds.push(-p);

        let problem = Self::new(objective_ops, constraint_ops, bounds)?;
        let mut outcome_labels: Vec<String> = (0..r).map(|m| format!("identify:{m}")).collect();
        outcome_labels.push("inconclusive".to_string());
        let mut constraint_labels: Vec<String> =
            (0..r).map(|j| format!("success-floor:{j}")).collect();
        constraint_labels.push("failure-rate".to_string());
        Ok(problem.with_labels(outcome_labels, constraint_labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::random;
    use crate::operator::{DensityOperator, EnsembleKind};
    use approx::assert_abs_diff_eq;

    fn two_orthogonal() -> StateEnsemble {
        let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
        let rho1 = DensityOperator::pure_real(&[0.0, 1.0]).unwrap();
        StateEnsemble::new(vec![rho0, rho1], vec![0.5, 0.5]).unwrap()
    }

    fn zero_one_plus() -> StateEnsemble {
        let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
        let plus = DensityOperator::pure_real(&[1.0, 1.0]).unwrap();
        StateEnsemble::new(vec![rho0, plus], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn zero_objective_gives_zero_value() {
        let ops = vec![HermitianOperator::zeros(2), HermitianOperator::zeros(2)];
        let problem = DiscriminationProblem::new(ops, Vec::new(), Vec::new()).unwrap();
        let povm = random::povm(2, 2, 3);
        assert_abs_diff_eq!(problem.objective_value(&povm).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn min_error_objective_tracks_success_probability() {
        // Orthogonal states with the matching projective POVM: the Bayes
        // objective is P_success − 1 = 0 for perfect discrimination.
        let ens = two_orthogonal();
        let problem = DiscriminationProblem::min_error(&ens).unwrap();
        let p0 = HermitianOperator::projector(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let p1 = HermitianOperator::projector(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let povm = Povm::new(vec![p0, p1]).unwrap();
        let value = problem.objective_value(&povm).unwrap();
        assert_abs_diff_eq!(value + 1.0, 1.0, epsilon = 1e-12);
    }

    use crate::operator::C64;

    #[test]
    fn min_error_objective_matches_direct_success_on_random_povms() {
        for seed in 0..10 {
            let ens = random::ensemble(3, 3, EnsembleKind::Mixed, seed);
            let problem = DiscriminationProblem::min_error(&ens).unwrap();
            let povm = random::povm(3, 3, seed + 50);
            let value = problem.objective_value(&povm).unwrap();
            let mut success = 0.0;
            for m in 0..3 {
                success += ens.prior(m)
                    * trace_pair(ens.state(m).op(), povm.outcome(m)).unwrap();
            }
            assert_abs_diff_eq!(value, success - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bayes_min_error_costs_shape() {
        let ens = two_orthogonal();
        let problem = DiscriminationProblem::min_error(&ens).unwrap();
        assert_eq!(problem.num_outcomes(), 2);
        assert_eq!(problem.num_constraints(), 0);
        // ĉ_0 = −ξ_1 ρ̂_1 and ĉ_1 = −ξ_0 ρ̂_0 for two states.
        let expected0 = -&ens.weighted_state(1);
        assert!((problem.objective_op(0).matrix() - expected0.matrix()).norm() <= 1e-15);
        let expected1 = -&ens.weighted_state(0);
        assert!((problem.objective_op(1).matrix() - expected1.matrix()).norm() <= 1e-15);
    }

    #[test]
    fn bayes_zero_costs_make_every_povm_optimal_at_zero() {
        let ens = zero_one_plus();
        let costs = BayesCost::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let problem = DiscriminationProblem::bayes(&ens, &costs).unwrap();
        for seed in 0..4 {
            let povm = random::povm(2, 2, seed);
            assert_abs_diff_eq!(problem.objective_value(&povm).unwrap(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn error_margin_layout_and_bound() {
        let ens = zero_one_plus();
        let problem = DiscriminationProblem::error_margin(&ens, 0.1).unwrap();
        assert_eq!(problem.num_outcomes(), 3);
        assert_eq!(problem.num_constraints(), 1);
        assert_abs_diff_eq!(problem.constraint_bounds()[0], -0.9, epsilon = 1e-15);
    }

    #[test]
    fn error_margin_constraint_value_with_always_abstain() {
        // Π_R = 1̂ never identifies anything: constraint value is −1,
        // which satisfies b₀ = ε − 1 for any ε ≥ 0.
        let ens = zero_one_plus();
        let problem = DiscriminationProblem::error_margin(&ens, 0.0).unwrap();
        let povm = Povm::from_raw(vec![
            HermitianOperator::zeros(2),
            HermitianOperator::zeros(2),
            HermitianOperator::identity(2),
        ])
        .unwrap();
        let values = problem.constraint_values(&povm).unwrap();
        assert_abs_diff_eq!(values[0], -1.0, epsilon = 1e-12);
        assert!(values[0] <= problem.constraint_bounds()[0] + 1e-12);
    }

    #[test]
    fn error_margin_probability_split_sums_to_one() {
        // success + failure + error = 1 for any POVM, so the constraint
        // value equals −(1 − error probability).
        for seed in 0..6 {
            let ens = random::ensemble(2, 2, EnsembleKind::Pure, seed);
            let problem = DiscriminationProblem::error_margin(&ens, 0.3).unwrap();
            let povm = random::povm(2, 3, seed + 9);
            let success = problem.objective_value(&povm).unwrap();
            let constraint = problem.constraint_values(&povm).unwrap()[0];
            // constraint = −(success + failure)
            let failure = -constraint - success;
            let mut error = 0.0;
            for r in 0..2 {
                for m in 0..2 {
                    if m != r {
                        error += ens.prior(r)
                            * trace_pair(ens.state(r).op(), povm.outcome(m)).unwrap();
                    }
                }
            }
            assert_abs_diff_eq!(success + failure + error, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn bounded_inconclusive_layout_and_bounds() {
        let ens = zero_one_plus();
        let problem = DiscriminationProblem::bounded_inconclusive(&ens, 0.2, 0.1).unwrap();
        assert_eq!(problem.num_outcomes(), 3);
        assert_eq!(problem.num_constraints(), 3);
        assert_eq!(problem.constraint_bounds(), &[-0.1, -0.1, -0.2]);
    }

    #[test]
    fn bounded_inconclusive_failure_row_with_trivial_inconclusive_povm() {
        let ens = zero_one_plus();
        let problem = DiscriminationProblem::bounded_inconclusive(&ens, 0.2, 0.1).unwrap();
        let povm = Povm::from_raw(vec![
            HermitianOperator::zeros(2),
            HermitianOperator::zeros(2),
            HermitianOperator::identity(2),
        ])
        .unwrap();
        let values = problem.constraint_values(&povm).unwrap();
        // Failure row evaluates to −Tr(Ĝ) = −1.
        assert_abs_diff_eq!(values[2], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn bounded_inconclusive_q_above_one_is_always_infeasible() {
        let ens = zero_one_plus();
        // q > 1 cannot be met since Tr(ρ̂_r Π̂_r) ≤ 1.
        let err = DiscriminationProblem::bounded_inconclusive(&ens, 0.0, 1.5).unwrap_err();
        assert!(matches!(err, ProblemError::ParameterRange { .. }));
        // Within range but infeasible for every POVM: q close to 1 with a
        // forced failure rate. Checked at the report level.
        let problem = DiscriminationProblem::bounded_inconclusive(&ens, 0.5, 0.9).unwrap();
        for seed in 0..4 {
            let povm = random::povm(2, 3, seed);
            let report = problem.is_feasible(&povm, 1e-9).unwrap();
            assert!(!report.feasible);
            assert!(!report.violated_constraints.is_empty());
        }
    }

    #[test]
    fn uniform_povm_feasible_without_constraints() {
        let ens = zero_one_plus();
        let problem = DiscriminationProblem::min_error(&ens).unwrap();
        let report = problem.is_feasible(&Povm::uniform(2, 2), 1e-9).unwrap();
        assert!(report.feasible);
        assert!(report.constraint_slacks.is_empty());
    }

    #[test]
    fn equality_rows_expand_to_paired_inequalities() {
        let ens = zero_one_plus();
        let g = ens.average_state().clone();
        let objective: Vec<HermitianOperator> = vec![
            ens.weighted_state(0),
            ens.weighted_state(1),
            HermitianOperator::zeros(2),
        ];
        let zero = HermitianOperator::zeros(2);
        let raw = vec![RawConstraint {
            ops: vec![zero.clone(), zero.clone(), g.clone()],
            bound: 0.25,
            relation: ConstraintRelation::Equal,
            label: Some("failure".to_string()),
        }];
        let problem =
            DiscriminationProblem::from_raw_constraints(objective.clone(), raw).unwrap();
        assert_eq!(problem.num_constraints(), 2);
        assert_eq!(problem.constraint_bounds(), &[0.25, -0.25]);
        let expected_neg = -&g;
        assert!(
            (problem.constraint_op(1, 2).matrix() - expected_neg.matrix()).norm() <= 1e-15
        );

        // Feasible set unchanged: a POVM satisfies the pair exactly when it
        // meets the equality.
        for seed in 0..6 {
            let povm = random::povm(2, 3, seed + 21);
            let failure = trace_pair(&g, povm.outcome(2)).unwrap();
            let report = problem.is_feasible(&povm, 1e-9).unwrap();
            let meets_equality = (failure - 0.25).abs() <= 1e-9;
            assert_eq!(report.violated_constraints.is_empty(), meets_equality);
        }

        // No equality rows: identity transform.
        let raw = vec![RawConstraint {
            ops: vec![zero.clone(), zero.clone(), g.clone()],
            bound: 0.25,
            relation: ConstraintRelation::LessEqual,
            label: None,
        }];
        let problem = DiscriminationProblem::from_raw_constraints(objective, raw).unwrap();
        assert_eq!(problem.num_constraints(), 1);
    }

    #[test]
    fn template_outputs_pass_problem_invariants() {
        for seed in 0..5 {
            let ens = random::ensemble(3, 3, EnsembleKind::Mixed, seed);
            for problem in [
                DiscriminationProblem::min_error(&ens).unwrap(),
                DiscriminationProblem::error_margin(&ens, 0.2).unwrap(),
                DiscriminationProblem::bounded_inconclusive(&ens, 0.1, 0.05).unwrap(),
            ] {
                for row in problem.constraint_ops() {
                    assert_eq!(row.len(), problem.num_outcomes());
                    for op in row {
                        assert_eq!(op.dim(), problem.dim());
                    }
                }
                assert_eq!(
                    problem.constraint_bounds().len(),
                    problem.num_constraints()
                );
            }
        }
    }
}
