//! Worst-case criterion weighting and saddle-point solutions.
//!
//! Given criterion functions `f_k(Π) = Σ_m Tr(ĉ_{k,m} Π̂_m) + d_k` over a
//! constrained POVM set, a minimax solution is a pair `(μ*, Π*)` forming a
//! saddle point of `F(μ, Π) = Σ_k μ_k f_k(Π)`: the measurement maximizes
//! the worst case `min_k f_k`, and the weights `μ*` witness that no
//! measurement does better. Solving goes through the epigraph program
//!
//! ```text
//! maximize t   subject to   f_k(Π) ≥ t ∀k,  Π feasible
//! ```
//!
//! which is one SDP: one extra scalar and `K` extra inequality rows. The
//! weights are recovered from the dual multipliers of those rows, which sum
//! to one at the optimum through the stationarity of `t`.

use thiserror::Error;

use crate::operator::{trace_pair, DensityOperator, HermitianOperator, OperatorError, Povm, StateEnsemble};
use crate::problem::{BayesCost, DiscriminationProblem, ProblemError};
use crate::sdp::form::{ConstraintRow, RowCoeff, ScalarRole, SdpStandardForm};
use crate::sdp::{self, SolveStatus, SolverConfig, SolverResult};

/// Weight above which a criterion counts as part of the support of `μ*`.
pub const SUPPORT_TOL: f64 = 1e-6;

/// Errors from minimax construction, solving, and verification.
#[derive(Debug, Clone, Error)]
pub enum MinimaxError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("criterion grid is empty")]
    Empty,
    #[error("criterion row {row} has {found} operators, expected {expected}")]
    RaggedCriterionRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{criteria} criteria but {offsets} offsets")]
    OffsetCountMismatch { criteria: usize, offsets: usize },
    #[error("weights have {got} entries, expected {expected}")]
    WeightCountMismatch { expected: usize, got: usize },
    #[error("weights are not a probability distribution: {reason}")]
    InvalidWeights { reason: String },
    #[error("constraint set admits no POVM")]
    Infeasible,
    #[error("inner solve failed with status {0:?}")]
    Solver(SolveStatus),
}

/// The minimax problem data: criterion operator grid `ĉ_{k,m}`, offsets
/// `d_k`, and the shared constraint rows.
#[derive(Debug, Clone)]
pub struct MinimaxProblem {
    dim: usize,
    criterion_ops: Vec<Vec<HermitianOperator>>,
    offsets: Vec<f64>,
    constraint_ops: Vec<Vec<HermitianOperator>>,
    constraint_bounds: Vec<f64>,
}

impl MinimaxProblem {
    pub fn new(
        criterion_ops: Vec<Vec<HermitianOperator>>,
        offsets: Vec<f64>,
        constraint_ops: Vec<Vec<HermitianOperator>>,
        constraint_bounds: Vec<f64>,
    ) -> Result<Self, MinimaxError> {
        let first = criterion_ops.first().ok_or(MinimaxError::Empty)?;
        let m = first.len();
        if m == 0 {
            return Err(MinimaxError::Empty);
        }
        let dim = first[0].dim();
        for (k, row) in criterion_ops.iter().enumerate() {
            if row.len() != m {
                return Err(MinimaxError::RaggedCriterionRow {
                    row: k,
                    expected: m,
                    found: row.len(),
                });
            }
            for op in row {
                if op.dim() != dim {
                    return Err(MinimaxError::Operator(OperatorError::DimMismatch {
                        left: dim,
                        right: op.dim(),
                    }));
                }
            }
        }
        if offsets.len() != criterion_ops.len() {
            return Err(MinimaxError::OffsetCountMismatch {
                criteria: criterion_ops.len(),
                offsets: offsets.len(),
            });
        }
        // Constraint shape checks ride on the primal problem validator.
        DiscriminationProblem::new(
            vec![HermitianOperator::zeros(dim); m],
            constraint_ops.clone(),
            constraint_bounds.clone(),
        )?;
        Ok(Self {
            dim,
            criterion_ops,
            offsets,
            constraint_ops,
            constraint_bounds,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of detection operators `M`.
    pub fn num_outcomes(&self) -> usize {
        self.criterion_ops[0].len()
    }

    /// Number of criteria `K`.
    pub fn num_criteria(&self) -> usize {
        self.criterion_ops.len()
    }

    /// Number of constraint rows `J`.
    pub fn num_constraints(&self) -> usize {
        self.constraint_ops.len()
    }

    pub fn criterion_ops(&self) -> &[Vec<HermitianOperator>] {
        &self.criterion_ops
    }

    pub fn criterion_op(&self, k: usize, m: usize) -> &HermitianOperator {
        &self.criterion_ops[k][m]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn constraint_ops(&self) -> &[Vec<HermitianOperator>] {
        &self.constraint_ops
    }

    pub fn constraint_bounds(&self) -> &[f64] {
        &self.constraint_bounds
    }

    /// The weighted primal problem with `ĉ_m = Σ_k μ_k ĉ_{k,m}` over the
    /// same constraint set. Offsets are not folded in; they are constants
    /// in `Π` and belong to the caller.
    pub fn weighted_problem(&self, mu: &[f64]) -> Result<DiscriminationProblem, MinimaxError> {
        self.check_weights(mu)?;
        let objective: Vec<HermitianOperator> = (0..self.num_outcomes())
            .map(|m| {
                let mut acc = HermitianOperator::zeros(self.dim);
                for (k, &w) in mu.iter().enumerate() {
                    if w != 0.0 {
                        acc = &acc + &self.criterion_ops[k][m].scaled(w);
                    }
                }
                acc
            })
            .collect();
        Ok(DiscriminationProblem::new(
            objective,
            self.constraint_ops.clone(),
            self.constraint_bounds.clone(),
        )?)
    }

    fn check_weights(&self, mu: &[f64]) -> Result<(), MinimaxError> {
        if mu.len() != self.num_criteria() {
            return Err(MinimaxError::WeightCountMismatch {
                expected: self.num_criteria(),
                got: mu.len(),
            });
        }
        if let Some(&bad) = mu.iter().find(|&&w| w < -1e-10) {
            return Err(MinimaxError::InvalidWeights {
                reason: format!("negative weight {bad}"),
            });
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(MinimaxError::InvalidWeights {
                reason: format!("weights sum to {total}"),
            });
        }
        Ok(())
    }

    /// Minimax over Bayes costs: `K = M = R`, `J = 0`, with
    /// `ĉ_{k,m} = −B[m][k] ρ̂_k`. The cost is negated so maximizing the
    /// worst case over weights matches the other templates.
    pub fn minimax_bayes(
        states: &[DensityOperator],
        costs: &BayesCost,
    ) -> Result<Self, MinimaxError> {
        let r = states.len();
        if costs.num_states() != r {
            return Err(MinimaxError::Operator(OperatorError::CountMismatch {
                expected: r,
                got: costs.num_states(),
            }));
        }
        if r == 0 {
            return Err(MinimaxError::Empty);
        }
        let criterion_ops = (0..r)
            .map(|k| {
                (0..r)
                    .map(|m| states[k].op().scaled(-costs.entry(m, k)))
                    .collect()
            })
            .collect();
        Self::new(criterion_ops, vec![0.0; r], Vec::new(), Vec::new())
    }

    /// Worst-case sum of success and failure probabilities, with each
    /// per-state failure probability capped at `p`: `M = R + 1`,
    /// `K = J = R`, `ĉ_{k,m} = ρ̂_k` for `m ∈ {k, R}`,
    /// `â_{j,m} = δ_{m,R} ρ̂_j`, `b_j = p`.
    pub fn inconclusive_minimax(states: &[DensityOperator], p: f64) -> Result<Self, MinimaxError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(MinimaxError::Problem(ProblemError::ParameterRange {
                name: "p",
                value: p,
            }));
        }
        let r = states.len();
        if r == 0 {
            return Err(MinimaxError::Empty);
        }
        let dim = states[0].dim();
        let criterion_ops = (0..r)
            .map(|k| {
                (0..=r)
                    .map(|m| {
                        if m == k || m == r {
                            states[k].op().clone()
                        } else {
                            HermitianOperator::zeros(dim)
                        }
                    })
                    .collect()
            })
            .collect();
        let constraint_ops = (0..r)
            .map(|j| {
                (0..=r)
                    .map(|m| {
                        if m == r {
                            states[j].op().clone()
                        } else {
                            HermitianOperator::zeros(dim)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(
            criterion_ops,
            vec![0.0; r],
            constraint_ops,
            vec![p; r],
        )
    }

    /// Worst-case average success probability over plural state sets:
    /// `M = R`, `J = 0`, `ĉ_{k,m} = ξ_{k,m} ρ̂_{k,m}`.
    pub fn plural_state_sets(ensembles: &[StateEnsemble]) -> Result<Self, MinimaxError> {
        let first = ensembles.first().ok_or(MinimaxError::Empty)?;
        let r = first.num_states();
        for ens in ensembles {
            if ens.num_states() != r {
                return Err(MinimaxError::Operator(OperatorError::CountMismatch {
                    expected: r,
                    got: ens.num_states(),
                }));
            }
            if ens.dim() != first.dim() {
                return Err(MinimaxError::Operator(OperatorError::DimMismatch {
                    left: first.dim(),
                    right: ens.dim(),
                }));
            }
        }
        let criterion_ops = ensembles
            .iter()
            .map(|ens| (0..r).map(|m| ens.weighted_state(m)).collect())
            .collect();
        Self::new(
            criterion_ops,
            vec![0.0; ensembles.len()],
            Vec::new(),
            Vec::new(),
        )
    }
}

/// A minimax solution: weights on the simplex, the measurement, the saddle
/// value, and per-criterion values.
#[derive(Debug, Clone)]
pub struct MinimaxSolution {
    pub mu: Vec<f64>,
    pub povm: Povm,
    pub value: f64,
    pub per_criterion: Vec<f64>,
    /// Criteria with `μ_k` above [`SUPPORT_TOL`].
    pub support: Vec<usize>,
    /// The underlying epigraph solve.
    pub solver: SolverResult,
}

/// Verification residuals for a candidate `(μ, Π)`.
#[derive(Debug, Clone)]
pub struct MinimaxReport {
    /// `F*(μ)`: value of the weighted problem at its own optimum.
    pub f_star: f64,
    /// `F(μ, Π)` at the candidate pair.
    pub f_mu_pi: f64,
    pub per_criterion: Vec<f64>,
    /// `max(0, max_k (F*(μ) − f_k(Π)))`: violation of criterion dominance.
    pub dominance_residual: f64,
    /// `|F*(μ) − F(μ, Π)|`.
    pub value_match_residual: f64,
    /// `max_{k ∈ support} |f_k(Π) − F*(μ)|`.
    pub support_equalization_residual: f64,
    /// Criterion with the largest dominance violation, when failing.
    pub violating_criterion: Option<usize>,
    pub pass: bool,
}

/// The criterion values `f_k(Π) = Σ_m Tr(ĉ_{k,m} Π̂_m) + d_k`.
pub fn criterion_values(problem: &MinimaxProblem, povm: &Povm) -> Result<Vec<f64>, MinimaxError> {
    if povm.num_outcomes() != problem.num_outcomes() {
        return Err(MinimaxError::Problem(ProblemError::OutcomeCountMismatch {
            expected: problem.num_outcomes(),
            got: povm.num_outcomes(),
        }));
    }
    if povm.dim() != problem.dim() {
        return Err(MinimaxError::Problem(ProblemError::DimMismatch {
            expected: problem.dim(),
            got: povm.dim(),
        }));
    }
    let mut values = Vec::with_capacity(problem.num_criteria());
    for (row, offset) in problem.criterion_ops().iter().zip(problem.offsets()) {
        let mut acc = *offset;
        for (c, outcome) in row.iter().zip(povm.outcomes()) {
            acc += trace_pair(c, outcome)?;
        }
        values.push(acc);
    }
    Ok(values)
}

/// Builds the epigraph standard form; returns the compiled form and the
/// indices of the `K` epigraph rows.
fn compile_epigraph(problem: &MinimaxProblem) -> Result<(SdpStandardForm, Vec<usize>), MinimaxError> {
    let m = problem.num_outcomes();
    let k = problem.num_criteria();
    let base = DiscriminationProblem::new(
        vec![HermitianOperator::zeros(problem.dim()); m],
        problem.constraint_ops.clone(),
        problem.constraint_bounds.clone(),
    )?;
    let mut form = sdp::compile(&base);

    // Shift so the epigraph scalar can live in the nonnegative cone
    // without cutting off the optimum.
    let mut shift: f64 = 1.0;
    for (row, offset) in problem.criterion_ops().iter().zip(problem.offsets()) {
        let worst = row
            .iter()
            .map(|c| c.frobenius_norm())
            .fold(0.0_f64, f64::max);
        shift = shift.max(1.0 + offset.abs() + problem.dim() as f64 * worst);
    }

    let slack_base = form.num_scalars;
    let t_index = slack_base + k;
    let mut epigraph_rows = Vec::with_capacity(k);
    for (ki, (row, offset)) in problem
        .criterion_ops()
        .iter()
        .zip(problem.offsets())
        .enumerate()
    {
        let row_index = form.rows.len();
        let blocks: Vec<_> = row
            .iter()
            .enumerate()
            .filter(|(_, c)| c.frobenius_norm() > 0.0)
            .map(|(b, c)| (b, sdp::embed_matrix(c.matrix()).scale(-0.5)))
            .collect();
        form.rows.push(ConstraintRow {
            rhs: offset + shift,
            coeff: RowCoeff::Linear {
                blocks,
                scalars: vec![(slack_base + ki, 1.0), (t_index, 1.0)],
            },
        });
        form.scalar_roles.push(ScalarRole::SlackOfRow(row_index));
        epigraph_rows.push(row_index);
    }
    form.scalar_roles.push(ScalarRole::Shifted);
    form.num_scalars = slack_base + k + 1;
    let mut cost_scalars = nalgebra::DVector::zeros(form.num_scalars);
    cost_scalars[t_index] = 1.0;
    form.cost_scalars = cost_scalars;
    form.objective_offset = -shift;
    Ok((form, epigraph_rows))
}

/// Solves the minimax problem through the epigraph reformulation.
///
/// The weights are the dual multipliers of the epigraph rows, normalized to
/// the simplex; when they are numerically all zero — the minimum slack off
/// everywhere, impossible at a true optimum — the fallback is the uniform
/// distribution over the criteria attaining `min_k f_k(Π*)`.
pub fn solve_minimax(
    problem: &MinimaxProblem,
    cfg: &SolverConfig,
) -> Result<MinimaxSolution, MinimaxError> {
    let (form, epigraph_rows) = compile_epigraph(problem)?;
    let result = sdp::solve(&form, cfg);
    match result.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(MinimaxError::Infeasible),
        other => return Err(MinimaxError::Solver(other)),
    }

    let povm = result.povm.clone();
    let per_criterion = criterion_values(problem, &povm)?;

    let mut mu: Vec<f64> = epigraph_rows
        .iter()
        .map(|&r| result.row_multipliers[r].max(0.0))
        .collect();
    let total: f64 = mu.iter().sum();
    if total > 1e-8 {
        for w in &mut mu {
            *w /= total;
        }
    } else {
        let min_value = per_criterion.iter().copied().fold(f64::INFINITY, f64::min);
        let hits: Vec<usize> = per_criterion
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= min_value + SUPPORT_TOL)
            .map(|(i, _)| i)
            .collect();
        mu = vec![0.0; problem.num_criteria()];
        for &i in &hits {
            mu[i] = 1.0 / hits.len() as f64;
        }
    }

    let support = mu
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > SUPPORT_TOL)
        .map(|(i, _)| i)
        .collect();

    Ok(MinimaxSolution {
        mu,
        povm,
        value: result.primal_value,
        per_criterion,
        support,
        solver: result,
    })
}

/// `F*(μ) = max_Π F(μ, Π)`: solves the weighted problem for fixed weights
/// and returns the optimum (with offsets added back) and a maximizer.
pub fn weighted_optimum(
    problem: &MinimaxProblem,
    mu: &[f64],
    cfg: &SolverConfig,
) -> Result<(f64, Povm), MinimaxError> {
    let weighted = problem.weighted_problem(mu)?;
    let result = sdp::solve_problem(&weighted, cfg);
    match result.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(MinimaxError::Infeasible),
        other => return Err(MinimaxError::Solver(other)),
    }
    let offset: f64 = mu
        .iter()
        .zip(problem.offsets())
        .map(|(w, d)| w * d)
        .sum();
    Ok((result.primal_value + offset, result.povm))
}

/// Checks the saddle-point conditions for a candidate `(μ, Π)`: every
/// criterion dominates `F*(μ)`, the pair attains `F*(μ)`, and criteria in
/// the support equalize.
pub fn verify_minimax(
    problem: &MinimaxProblem,
    mu: &[f64],
    povm: &Povm,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<MinimaxReport, MinimaxError> {
    problem.check_weights(mu)?;
    let per_criterion = criterion_values(problem, povm)?;
    let (f_star, _) = weighted_optimum(problem, mu, cfg)?;
    let f_mu_pi: f64 = mu
        .iter()
        .zip(&per_criterion)
        .map(|(w, f)| w * f)
        .sum();

    let mut dominance_residual: f64 = 0.0;
    let mut violating_criterion = None;
    for (k, &f) in per_criterion.iter().enumerate() {
        let violation = f_star - f;
        if violation > dominance_residual {
            dominance_residual = violation;
            violating_criterion = Some(k);
        }
    }
    let dominance_residual = dominance_residual.max(0.0);

    let value_match_residual = (f_star - f_mu_pi).abs();
    let mut support_equalization_residual: f64 = 0.0;
    for (k, &w) in mu.iter().enumerate() {
        if w > SUPPORT_TOL {
            support_equalization_residual =
                support_equalization_residual.max((per_criterion[k] - f_star).abs());
        }
    }

    let pass = dominance_residual <= tol
        && value_match_residual <= tol
        && support_equalization_residual <= tol;
    Ok(MinimaxReport {
        f_star,
        f_mu_pi,
        per_criterion,
        dominance_residual,
        value_match_residual,
        support_equalization_residual,
        violating_criterion: if pass { None } else { violating_criterion },
        pass,
    })
}
