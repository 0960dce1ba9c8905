//! Independent optimality certificates.
//!
//! A feasible POVM `Π` is optimal exactly when a Hermitian `X̂` and
//! multipliers `λ ∈ R₊^J` exist with
//!
//! ```text
//! X̂ − ẑ_m(λ) ⪰ 0                                (dual feasibility)
//! (X̂ − ẑ_m(λ)) Π̂_m = 0                          (operator slackness)
//! λ_j · (b_j − Σ_m Tr(â_{j,m} Π̂_m)) = 0          (scalar slackness)
//! ```
//!
//! where `ẑ_m(λ) = ĉ_m − Σ_j λ_j â_{j,m}`. Multipliers alone also certify:
//! the operator `X̂ = Σ_n ẑ_n(λ) Π̂_n` built from `(Π, λ)` satisfies the
//! full conditions whenever `Π` is optimal. Checking is decoupled from how
//! the candidate was produced; everything here recomputes residuals from
//! scratch.
//!
//! The operator-slackness residual uses the Frobenius norm of the actual
//! product, not its trace: the operator equation is strictly stronger than
//! trace orthogonality for indefinite factors.

use thiserror::Error;

use crate::operator::{HermitianOperator, OperatorError, Povm};
use crate::problem::{DiscriminationProblem, FeasibilityReport, ProblemError};

/// Errors from certificate construction and checking.
#[derive(Debug, Clone, Error)]
pub enum CertificateError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("lambda has {got} entries, problem has {expected} constraints")]
    LengthMismatch { expected: usize, got: usize },
}

/// The proof object for optimality: dual operator and multipliers.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub x: HermitianOperator,
    pub lambda: Vec<f64>,
}

/// Tolerances for certificate verification. Residuals of near-optimal
/// iterates amplify through operator products, so the defaults sit looser
/// than the solver's gap tolerance.
#[derive(Debug, Clone)]
pub struct CertificateTolerances {
    /// Allowed negativity of `λ_min(X̂ − ẑ_m(λ))`.
    pub dual_feasibility: f64,
    /// Allowed `‖(X̂ − ẑ_m(λ)) Π̂_m‖_F`.
    pub complementarity_operator: f64,
    /// Allowed `|λ_j · slack_j|`.
    pub complementarity_scalar: f64,
    /// Allowed `|f(Π) − s(X̂, λ)|`, relative to `1 + |f(Π)|`.
    pub gap: f64,
    /// Feasibility tolerance for the primal pre-check.
    pub feasibility: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            dual_feasibility: 1e-6,
            complementarity_operator: 1e-6,
            complementarity_scalar: 1e-6,
            gap: 1e-6,
            feasibility: 1e-6,
        }
    }
}

impl CertificateTolerances {
    pub fn uniform(tol: f64) -> Self {
        Self {
            dual_feasibility: tol,
            complementarity_operator: tol,
            complementarity_scalar: tol,
            gap: tol,
            feasibility: tol,
        }
    }
}

/// Residuals of the optimality conditions for one `(Π, X̂, λ)` triple.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub feasibility: FeasibilityReport,
    /// `max_m max(0, −λ_min(X̂ − ẑ_m(λ)))`.
    pub dual_feasibility_residual: f64,
    /// `max_m ‖(X̂ − ẑ_m(λ)) Π̂_m‖_F`.
    pub complementarity_operator_residual: f64,
    /// `max_j |λ_j · (b_j − Σ_m Tr(â_{j,m} Π̂_m))|`.
    pub complementarity_scalar_residual: f64,
    /// `|f(Π) − s(X̂, λ)|`.
    pub gap: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Magnitude of the most negative multiplier beyond the clamp window.
    pub lambda_negativity: f64,
    pub dual_feasible: bool,
    pub complementarity_operator_ok: bool,
    pub complementarity_scalar_ok: bool,
    pub gap_ok: bool,
    /// All conditions within tolerance and the POVM feasible.
    pub pass: bool,
}

fn check_lambda_length(
    problem: &DiscriminationProblem,
    lambda: &[f64],
) -> Result<(), CertificateError> {
    if lambda.len() != problem.num_constraints() {
        return Err(CertificateError::LengthMismatch {
            expected: problem.num_constraints(),
            got: lambda.len(),
        });
    }
    Ok(())
}

/// The dual bound operators `ẑ_m(λ) = ĉ_m − Σ_j λ_j â_{j,m}`: the operators
/// a dual-feasible `X̂` must dominate.
pub fn dual_bound_operators(
    problem: &DiscriminationProblem,
    lambda: &[f64],
) -> Result<Vec<HermitianOperator>, CertificateError> {
    check_lambda_length(problem, lambda)?;
    let mut out = Vec::with_capacity(problem.num_outcomes());
    for m in 0..problem.num_outcomes() {
        let mut z = problem.objective_op(m).clone();
        for (j, &l) in lambda.iter().enumerate() {
            if l != 0.0 {
                z = &z - &problem.constraint_op(j, m).scaled(l);
            }
        }
        out.push(z);
    }
    Ok(out)
}

/// The dual objective `s(X̂, λ) = Tr X̂ + Σ_j λ_j b_j`.
pub fn dual_objective(problem: &DiscriminationProblem, certificate: &DualCertificate) -> f64 {
    let mut value = certificate.x.trace();
    for (l, b) in certificate.lambda.iter().zip(problem.constraint_bounds()) {
        value += l * b;
    }
    value
}

/// Materializes the dual operator `X̂ = Σ_n ẑ_n(λ) Π̂_n` (symmetrized) that
/// makes a multiplier-only certificate fully checkable.
pub fn certificate_from_multipliers(
    problem: &DiscriminationProblem,
    povm: &Povm,
    lambda: Vec<f64>,
) -> Result<DualCertificate, CertificateError> {
    check_lambda_length(problem, &lambda)?;
    let z_ops = dual_bound_operators(problem, &lambda)?;
    let mut acc = nalgebra::DMatrix::zeros(problem.dim(), problem.dim());
    for (z, outcome) in z_ops.iter().zip(povm.outcomes()) {
        acc += z.product(outcome)?;
    }
    let x = HermitianOperator::hermitian_part(acc)?;
    Ok(DualCertificate { x, lambda })
}

/// Checks the full optimality conditions for `(Π, X̂, λ)` and reports every
/// residual. Multipliers in `[−1e−10, 0)` are clamped to zero before
/// checking; more negative ones fail immediately.
pub fn verify_certificate(
    problem: &DiscriminationProblem,
    povm: &Povm,
    certificate: &DualCertificate,
    tolerances: &CertificateTolerances,
) -> Result<CertificateReport, CertificateError> {
    check_lambda_length(problem, &certificate.lambda)?;
    if certificate.x.dim() != problem.dim() {
        return Err(CertificateError::Operator(OperatorError::DimMismatch {
            left: problem.dim(),
            right: certificate.x.dim(),
        }));
    }

    const CLAMP: f64 = 1e-10;
    let mut lambda_negativity: f64 = 0.0;
    let lambda: Vec<f64> = certificate
        .lambda
        .iter()
        .map(|&l| {
            if l < 0.0 {
                if l >= -CLAMP {
                    0.0
                } else {
                    lambda_negativity = lambda_negativity.max(-l);
                    l
                }
            } else {
                l
            }
        })
        .collect();

    let feasibility = problem.is_feasible(povm, tolerances.feasibility)?;

    let z_ops = dual_bound_operators(problem, &lambda)?;
    let mut dual_feasibility_residual: f64 = 0.0;
    let mut complementarity_operator_residual: f64 = 0.0;
    for (z, outcome) in z_ops.iter().zip(povm.outcomes()) {
        let gap_op = &certificate.x - z;
        let min_eig = gap_op.min_eigenvalue()?;
        dual_feasibility_residual = dual_feasibility_residual.max((-min_eig).max(0.0));
        let product = gap_op.product(outcome)?;
        complementarity_operator_residual = complementarity_operator_residual.max(product.norm());
    }

    let constraint_values = problem.constraint_values(povm)?;
    let mut complementarity_scalar_residual: f64 = 0.0;
    for ((l, value), bound) in lambda
        .iter()
        .zip(&constraint_values)
        .zip(problem.constraint_bounds())
    {
        complementarity_scalar_residual =
            complementarity_scalar_residual.max((l * (bound - value)).abs());
    }

    let primal_objective = problem.objective_value(povm)?;
    let dual_value = dual_objective(
        problem,
        &DualCertificate {
            x: certificate.x.clone(),
            lambda: lambda.clone(),
        },
    );
    let gap = (primal_objective - dual_value).abs();

    let dual_feasible = dual_feasibility_residual <= tolerances.dual_feasibility;
    let complementarity_operator_ok =
        complementarity_operator_residual <= tolerances.complementarity_operator;
    let complementarity_scalar_ok =
        complementarity_scalar_residual <= tolerances.complementarity_scalar;
    let gap_ok = gap <= tolerances.gap * (1.0 + primal_objective.abs());
    let pass = feasibility.feasible
        && lambda_negativity == 0.0
        && dual_feasible
        && complementarity_operator_ok
        && complementarity_scalar_ok
        && gap_ok;

    Ok(CertificateReport {
        feasibility,
        dual_feasibility_residual,
        complementarity_operator_residual,
        complementarity_scalar_residual,
        gap,
        primal_objective,
        dual_objective: dual_value,
        lambda_negativity,
        dual_feasible,
        complementarity_operator_ok,
        complementarity_scalar_ok,
        gap_ok,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{C64, DensityOperator, StateEnsemble};
    use approx::assert_abs_diff_eq;

    fn orthogonal_success_problem() -> (DiscriminationProblem, Povm, StateEnsemble) {
        let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
        let rho1 = DensityOperator::pure_real(&[0.0, 1.0]).unwrap();
        let ens = StateEnsemble::new(vec![rho0, rho1], vec![0.5, 0.5]).unwrap();
        let ops = vec![ens.weighted_state(0), ens.weighted_state(1)];
        let problem = DiscriminationProblem::new(ops, Vec::new(), Vec::new()).unwrap();
        let p0 = HermitianOperator::projector(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let p1 = HermitianOperator::projector(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let povm = Povm::new(vec![p0, p1]).unwrap();
        (problem, povm, ens)
    }

    #[test]
    fn dual_bound_operators_reduce_to_objective_without_constraints() {
        let (problem, _, _) = orthogonal_success_problem();
        let z = dual_bound_operators(&problem, &[]).unwrap();
        for (zm, cm) in z.iter().zip(problem.objective_ops()) {
            assert_eq!(zm.matrix(), cm.matrix());
        }
    }

    #[test]
    fn zero_multipliers_reduce_to_objective() {
        let ens = {
            let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
            let rho1 = DensityOperator::pure_real(&[1.0, 1.0]).unwrap();
            StateEnsemble::new(vec![rho0, rho1], vec![0.5, 0.5]).unwrap()
        };
        let problem = DiscriminationProblem::error_margin(&ens, 0.2).unwrap();
        let z = dual_bound_operators(&problem, &[0.0]).unwrap();
        for (zm, cm) in z.iter().zip(problem.objective_ops()) {
            assert!((zm.matrix() - cm.matrix()).norm() <= 1e-15);
        }
    }

    #[test]
    fn bounded_inconclusive_bound_operators_take_template_shape() {
        // ẑ_m = (ξ_m + λ_m) ρ̂_m for identifications, ẑ_R = λ_R Ĝ.
        let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
        let rho1 = DensityOperator::pure_real(&[1.0, 1.0]).unwrap();
        let ens = StateEnsemble::new(vec![rho0, rho1], vec![0.3, 0.7]).unwrap();
        let problem = DiscriminationProblem::bounded_inconclusive(&ens, 0.1, 0.05).unwrap();
        let lambda = vec![0.2, 0.4, 0.6];
        let z = dual_bound_operators(&problem, &lambda).unwrap();
        for m in 0..2 {
            let expected = ens.state(m).op().scaled(ens.prior(m) + lambda[m]);
            assert!((z[m].matrix() - expected.matrix()).norm() <= 1e-12);
        }
        let expected_r = ens.average_state().scaled(lambda[2]);
        assert!((z[2].matrix() - expected_r.matrix()).norm() <= 1e-12);
    }

    #[test]
    fn analytic_certificate_for_orthogonal_states_passes() {
        let (problem, povm, ens) = orthogonal_success_problem();
        // X̂ = Σ_r ξ_r ρ̂_r Π̂_r = Ĝ for projective discrimination.
        let mut acc = nalgebra::DMatrix::zeros(2, 2);
        for r in 0..2 {
            acc += ens.weighted_state(r).product(povm.outcome(r)).unwrap();
        }
        let x = HermitianOperator::hermitian_part(acc).unwrap();
        let cert = DualCertificate { x, lambda: vec![] };
        let report =
            verify_certificate(&problem, &povm, &cert, &CertificateTolerances::uniform(1e-10))
                .unwrap();
        assert!(report.pass, "report: {report:?}");
        assert!(report.dual_feasibility_residual <= 1e-10);
        assert!(report.complementarity_operator_residual <= 1e-10);
        assert_abs_diff_eq!(report.dual_objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_dual_operator_fails_against_positive_objective() {
        let (problem, povm, _) = orthogonal_success_problem();
        let cert = DualCertificate {
            x: HermitianOperator::zeros(2),
            lambda: vec![],
        };
        let report =
            verify_certificate(&problem, &povm, &cert, &CertificateTolerances::default()).unwrap();
        assert!(!report.pass);
        assert!(report.dual_feasibility_residual > 0.0);
    }

    #[test]
    fn multiplier_certificate_on_degenerate_povm() {
        // A POVM putting everything on outcome 0 yields X̂ = ẑ₀(λ).
        let (problem, _, _) = orthogonal_success_problem();
        let povm = Povm::from_raw(vec![
            HermitianOperator::identity(2),
            HermitianOperator::zeros(2),
        ])
        .unwrap();
        let cert = certificate_from_multipliers(&problem, &povm, vec![]).unwrap();
        let z0 = problem.objective_op(0);
        assert!((cert.x.matrix() - z0.matrix()).norm() <= 1e-14);
    }

    #[test]
    fn dual_objective_examples() {
        let (problem, _, _) = orthogonal_success_problem();
        let cert = DualCertificate {
            x: HermitianOperator::identity(2),
            lambda: vec![],
        };
        assert_abs_diff_eq!(dual_objective(&problem, &cert), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn strongly_negative_lambda_fails() {
        let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
        let rho1 = DensityOperator::pure_real(&[1.0, 1.0]).unwrap();
        let ens = StateEnsemble::new(vec![rho0, rho1], vec![0.5, 0.5]).unwrap();
        let problem = DiscriminationProblem::error_margin(&ens, 0.5).unwrap();
        let povm = Povm::uniform(2, 3);
        let cert = DualCertificate {
            x: HermitianOperator::identity(2),
            lambda: vec![-1e-6],
        };
        let report =
            verify_certificate(&problem, &povm, &cert, &CertificateTolerances::default()).unwrap();
        assert!(!report.pass);
        assert!(report.lambda_negativity > 0.0);
    }
}
