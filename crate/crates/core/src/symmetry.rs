//! Finite group actions and covariant solving.
//!
//! A group element acts on operators by `g·Â = Û_g Â Û_g†` with `Û_g`
//! unitary or anti-unitary (stored as a unitary plus a conjugation flag),
//! and on outcome/constraint/criterion indices by permutations. When the
//! problem data are covariant under such an action, an optimal solution
//! with the same symmetry exists, and the averaging map
//!
//! ```text
//! κ(Φ)_m = |G|⁻¹ Σ_g g⁻¹ · Φ̂_{g·m}
//! ```
//!
//! projects any feasible POVM onto the covariant set without changing
//! feasibility or the objective. Groups are supplied explicitly (elements
//! plus permutations) and verified for closure and faithfulness; a
//! generator helper covers the cyclic case common for symmetric state
//! sets.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::certificate::{
    verify_certificate, CertificateError, CertificateReport, CertificateTolerances,
    DualCertificate,
};
use crate::minimax::{
    criterion_values, verify_minimax, MinimaxError, MinimaxProblem, MinimaxReport,
    MinimaxSolution, SUPPORT_TOL,
};
use crate::operator::{C64, HermitianOperator, OperatorError, Povm};
use crate::problem::{DiscriminationProblem, ProblemError};
use crate::sdp::{self, SolveStatus, SolverConfig, SolverResult};

const UNITARITY_TOL: f64 = 1e-10;
const CLOSURE_TOL: f64 = 1e-8;
const FAITHFULNESS_TOL: f64 = 1e-8;
/// Covariance tolerance for user-supplied problem data.
pub const INPUT_COVARIANCE_TOL: f64 = 1e-9;
/// Covariance tolerance for solver-derived objects.
pub const SOLVER_COVARIANCE_TOL: f64 = 1e-8;

/// Errors from group validation and covariant solving.
#[derive(Debug, Clone, Error)]
pub enum SymmetryError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Minimax(#[from] MinimaxError),
    #[error("element {id}: operator is not unitary (residual {residual:.3e})")]
    NotUnitary { id: String, residual: f64 },
    #[error("element {id}: {which} permutation is not a bijection")]
    InvalidPermutation { id: String, which: &'static str },
    #[error("element {id}: {which} permutation has length {got}, expected {expected}")]
    PermutationShape {
        id: String,
        which: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("group has no identity element")]
    MissingIdentity,
    #[error("group is not closed: {left} ∘ {right} matches no element")]
    NotClosed { left: String, right: String },
    #[error("group action is not faithful: {left} and {right} act identically")]
    NotFaithful { left: String, right: String },
    #[error("element {id} lacks the criterion permutation required for minimax problems")]
    MissingCriterionPermutation { id: String },
    #[error("generator does not produce a finite cyclic group within {limit} powers")]
    GeneratorOrderTooLarge { limit: usize },
    #[error(
        "covariance violated by element {element} at constraint {row:?}, outcome {outcome:?}: \
         residual {residual:.3e}"
    )]
    CovarianceViolation {
        element: String,
        row: Option<usize>,
        outcome: Option<usize>,
        residual: f64,
    },
    #[error("averaging changed the objective from {before} to {after}")]
    ObjectiveDrift { before: f64, after: f64 },
    #[error("solver finished with status {0:?}")]
    Solver(SolveStatus),
}

/// One group element: a unitary (with optional entrywise conjugation for
/// anti-unitary actions) and index permutations.
#[derive(Debug, Clone)]
pub struct GroupElement {
    id: String,
    op: DMatrix<C64>,
    antiunitary: bool,
    perm_m: Vec<usize>,
    perm_j: Vec<usize>,
    perm_k: Option<Vec<usize>>,
}

fn is_bijection(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

impl GroupElement {
    pub fn new(
        id: impl Into<String>,
        op: DMatrix<C64>,
        antiunitary: bool,
        perm_m: Vec<usize>,
        perm_j: Vec<usize>,
        perm_k: Option<Vec<usize>>,
    ) -> Result<Self, SymmetryError> {
        let id = id.into();
        let d = op.nrows();
        let residual = (&op * op.adjoint() - DMatrix::<C64>::identity(d, d)).norm();
        if op.ncols() != d || residual > UNITARITY_TOL {
            return Err(SymmetryError::NotUnitary { id, residual });
        }
        if !is_bijection(&perm_m) {
            return Err(SymmetryError::InvalidPermutation {
                id,
                which: "outcome",
            });
        }
        if !is_bijection(&perm_j) {
            return Err(SymmetryError::InvalidPermutation {
                id,
                which: "constraint",
            });
        }
        if let Some(pk) = &perm_k {
            if !is_bijection(pk) {
                return Err(SymmetryError::InvalidPermutation {
                    id,
                    which: "criterion",
                });
            }
        }
        Ok(Self {
            id,
            op,
            antiunitary,
            perm_m,
            perm_j,
            perm_k,
        })
    }

    /// The identity element for the given index-set sizes.
    pub fn identity(dim: usize, m: usize, j: usize, k: Option<usize>) -> Self {
        Self {
            id: "e".to_string(),
            op: DMatrix::identity(dim, dim),
            antiunitary: false,
            perm_m: (0..m).collect(),
            perm_j: (0..j).collect(),
            perm_k: k.map(|k| (0..k).collect()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn op(&self) -> &DMatrix<C64> {
        &self.op
    }

    pub fn antiunitary(&self) -> bool {
        self.antiunitary
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    pub fn perm_m(&self) -> &[usize] {
        &self.perm_m
    }

    pub fn perm_j(&self) -> &[usize] {
        &self.perm_j
    }

    pub fn perm_k(&self) -> Option<&[usize]> {
        self.perm_k.as_deref()
    }

    fn is_identity(&self) -> bool {
        if self.antiunitary {
            return false;
        }
        let d = self.dim();
        let residual = (&self.op - DMatrix::<C64>::identity(d, d)).norm();
        residual <= UNITARITY_TOL
            && self.perm_m.iter().enumerate().all(|(i, &p)| i == p)
            && self.perm_j.iter().enumerate().all(|(i, &p)| i == p)
            && self
                .perm_k
                .as_ref()
                .map_or(true, |pk| pk.iter().enumerate().all(|(i, &p)| i == p))
    }

    /// Composition `self ∘ other`: apply `other` first. Wigner convention
    /// for the anti-unitary flag: `(U, a)(V, b) = (U · conj_a(V), a ⊕ b)`.
    fn compose(&self, other: &Self) -> Self {
        let v = if self.antiunitary {
            other.op.map(|c| c.conj())
        } else {
            other.op.clone()
        };
        let op = &self.op * v;
        let perm_m = other.perm_m.iter().map(|&x| self.perm_m[x]).collect();
        let perm_j = other.perm_j.iter().map(|&x| self.perm_j[x]).collect();
        let perm_k = match (&self.perm_k, &other.perm_k) {
            (Some(a), Some(b)) => Some(b.iter().map(|&x| a[x]).collect()),
            _ => None,
        };
        Self {
            id: format!("{}∘{}", self.id, other.id),
            op,
            antiunitary: self.antiunitary ^ other.antiunitary,
            perm_m,
            perm_j,
            perm_k,
        }
    }

    fn matches(&self, other: &Self) -> bool {
        self.antiunitary == other.antiunitary
            && self.perm_m == other.perm_m
            && self.perm_j == other.perm_j
            && self.perm_k == other.perm_k
            && (&self.op - &other.op).norm() <= CLOSURE_TOL
    }
}

/// Applies `g·Â = Û_g Â Û_g†`, conjugating entrywise first when the
/// element is anti-unitary.
pub fn act(g: &GroupElement, a: &HermitianOperator) -> Result<HermitianOperator, SymmetryError> {
    if g.dim() != a.dim() {
        return Err(SymmetryError::Operator(OperatorError::DimMismatch {
            left: g.dim(),
            right: a.dim(),
        }));
    }
    let inner = if g.antiunitary {
        a.matrix().map(|c| c.conj())
    } else {
        a.matrix().clone()
    };
    let result = &g.op * inner * g.op.adjoint();
    Ok(HermitianOperator::hermitian_part(result)?)
}

/// A finite group given by explicit elements, with a verified composition
/// table.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    elements: Vec<GroupElement>,
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
}

impl FiniteGroup {
    /// Validates closure against the supplied elements, the presence of the
    /// identity, and faithfulness of the action on Hermitian operators.
    pub fn new(elements: Vec<GroupElement>) -> Result<Self, SymmetryError> {
        if elements.is_empty() {
            return Err(SymmetryError::MissingIdentity);
        }
        let identity = elements
            .iter()
            .position(|g| g.is_identity())
            .ok_or(SymmetryError::MissingIdentity)?;

        let n = elements.len();
        let mut table = vec![vec![0; n]; n];
        for (gi, g) in elements.iter().enumerate() {
            for (hi, h) in elements.iter().enumerate() {
                let composed = g.compose(h);
                let hit = elements.iter().position(|e| e.matches(&composed));
                match hit {
                    Some(e) => table[gi][hi] = e,
                    None => {
                        return Err(SymmetryError::NotClosed {
                            left: g.id.clone(),
                            right: h.id.clone(),
                        })
                    }
                }
            }
        }

        let mut inverse = vec![usize::MAX; n];
        for gi in 0..n {
            for hi in 0..n {
                if table[gi][hi] == identity {
                    inverse[gi] = hi;
                }
            }
            if inverse[gi] == usize::MAX {
                return Err(SymmetryError::NotClosed {
                    left: elements[gi].id.clone(),
                    right: "⁻¹".to_string(),
                });
            }
        }

        // Faithfulness on the Hermitian probe basis.
        let d = elements[0].dim();
        let probes = hermitian_basis(d);
        for gi in 0..n {
            for hi in (gi + 1)..n {
                let distinct = probes.iter().any(|probe| {
                    let ga = act(&elements[gi], probe).expect("probe dims match");
                    let ha = act(&elements[hi], probe).expect("probe dims match");
                    (ga.matrix() - ha.matrix()).norm() > FAITHFULNESS_TOL
                });
                if !distinct {
                    return Err(SymmetryError::NotFaithful {
                        left: elements[gi].id.clone(),
                        right: elements[hi].id.clone(),
                    });
                }
            }
        }

        Ok(Self {
            elements,
            table,
            inverse,
            identity,
        })
    }

    /// Generates the cyclic group of a single element by taking powers
    /// until the identity recurs.
    pub fn cyclic(generator: GroupElement) -> Result<Self, SymmetryError> {
        const LIMIT: usize = 64;
        let dim = generator.dim();
        let m = generator.perm_m.len();
        let j = generator.perm_j.len();
        let k = generator.perm_k.as_ref().map(|p| p.len());
        let mut elements = vec![GroupElement::identity(dim, m, j, k)];
        let mut current = generator.clone();
        for power in 1..=LIMIT {
            if current.is_identity() {
                return Self::new(elements);
            }
            elements.push(GroupElement {
                id: format!("g^{power}"),
                ..current.clone()
            });
            current = generator.compose(&current);
        }
        Err(SymmetryError::GeneratorOrderTooLarge { limit: LIMIT })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    pub fn inverse_of(&self, i: usize) -> &GroupElement {
        &self.elements[self.inverse[i]]
    }

    pub fn compose_indices(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    fn check_perm_lengths(
        &self,
        m: usize,
        j: usize,
        k: Option<usize>,
    ) -> Result<(), SymmetryError> {
        for g in &self.elements {
            if g.perm_m.len() != m {
                return Err(SymmetryError::PermutationShape {
                    id: g.id.clone(),
                    which: "outcome",
                    expected: m,
                    got: g.perm_m.len(),
                });
            }
            if g.perm_j.len() != j {
                return Err(SymmetryError::PermutationShape {
                    id: g.id.clone(),
                    which: "constraint",
                    expected: j,
                    got: g.perm_j.len(),
                });
            }
            if let Some(k) = k {
                match &g.perm_k {
                    None => {
                        return Err(SymmetryError::MissingCriterionPermutation {
                            id: g.id.clone(),
                        })
                    }
                    Some(pk) if pk.len() != k => {
                        return Err(SymmetryError::PermutationShape {
                            id: g.id.clone(),
                            which: "criterion",
                            expected: k,
                            got: pk.len(),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn hermitian_basis(d: usize) -> Vec<HermitianOperator> {
    let mut basis = Vec::with_capacity(d * d);
    for p in 0..d {
        let mut m = DMatrix::<C64>::zeros(d, d);
        m[(p, p)] = C64::new(1.0, 0.0);
        basis.push(HermitianOperator::hermitian_part(m).expect("square"));
        for q in (p + 1)..d {
            let mut re = DMatrix::<C64>::zeros(d, d);
            re[(p, q)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            re[(q, p)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            basis.push(HermitianOperator::hermitian_part(re).expect("square"));
            let mut im = DMatrix::<C64>::zeros(d, d);
            im[(p, q)] = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
            im[(q, p)] = C64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2);
            basis.push(HermitianOperator::hermitian_part(im).expect("square"));
        }
    }
    basis
}

/// Site and size of the worst covariance violation.
#[derive(Debug, Clone)]
pub struct CovarianceViolationSite {
    pub element: String,
    pub row: Option<usize>,
    pub outcome: Option<usize>,
    pub residual: f64,
}

/// Covariance residuals of problem data under a group action.
#[derive(Debug, Clone)]
pub struct CovarianceReport {
    /// `max ‖g·ĉ_m − ĉ_{g·m}‖_F` (or the criterion grid for minimax).
    pub objective_residual: f64,
    /// `max ‖g·â_{j,m} − â_{g·j,g·m}‖_F`.
    pub constraint_residual: f64,
    /// `max |b_j − b_{g·j}|`.
    pub bound_residual: f64,
    /// `max |d_k − d_{g·k}|` for minimax problems, zero otherwise.
    pub offset_residual: f64,
    pub worst: Option<CovarianceViolationSite>,
    pub pass: bool,
}

struct CovarianceAccumulator {
    report: CovarianceReport,
    tol: f64,
}

impl CovarianceAccumulator {
    fn new(tol: f64) -> Self {
        Self {
            report: CovarianceReport {
                objective_residual: 0.0,
                constraint_residual: 0.0,
                bound_residual: 0.0,
                offset_residual: 0.0,
                worst: None,
                pass: true,
            },
            tol,
        }
    }

    fn push(
        &mut self,
        slot: impl Fn(&mut CovarianceReport) -> &mut f64,
        residual: f64,
        element: &str,
        row: Option<usize>,
        outcome: Option<usize>,
    ) {
        let field = slot(&mut self.report);
        *field = field.max(residual);
        let beats = self
            .report
            .worst
            .as_ref()
            .map_or(true, |w| residual > w.residual);
        if residual > self.tol && beats {
            self.report.worst = Some(CovarianceViolationSite {
                element: element.to_string(),
                row,
                outcome,
                residual,
            });
        }
    }

    fn finish(mut self) -> CovarianceReport {
        self.report.pass = self.report.worst.is_none();
        self.report
    }
}

/// Verifies that problem data are covariant: `g·ĉ_m = ĉ_{g·m}`,
/// `g·â_{j,m} = â_{g·j,g·m}`, and `b_j = b_{g·j}` for every element.
pub fn check_problem_covariance(
    problem: &DiscriminationProblem,
    group: &FiniteGroup,
    tol: f64,
) -> Result<CovarianceReport, SymmetryError> {
    group.check_perm_lengths(problem.num_outcomes(), problem.num_constraints(), None)?;
    let mut acc = CovarianceAccumulator::new(tol);
    for g in group.elements() {
        for m in 0..problem.num_outcomes() {
            let moved = act(g, problem.objective_op(m))?;
            let target = problem.objective_op(g.perm_m[m]);
            let residual = (moved.matrix() - target.matrix()).norm();
            acc.push(|r| &mut r.objective_residual, residual, &g.id, None, Some(m));
        }
        for j in 0..problem.num_constraints() {
            let bound_residual =
                (problem.constraint_bounds()[j] - problem.constraint_bounds()[g.perm_j[j]]).abs();
            acc.push(|r| &mut r.bound_residual, bound_residual, &g.id, Some(j), None);
            for m in 0..problem.num_outcomes() {
                let moved = act(g, problem.constraint_op(j, m))?;
                let target = problem.constraint_op(g.perm_j[j], g.perm_m[m]);
                let residual = (moved.matrix() - target.matrix()).norm();
                acc.push(
                    |r| &mut r.constraint_residual,
                    residual,
                    &g.id,
                    Some(j),
                    Some(m),
                );
            }
        }
    }
    Ok(acc.finish())
}

/// Verifies covariance of a minimax problem: the criterion grid obeys
/// `g·ĉ_{k,m} = ĉ_{g·k,g·m}`, offsets `d_k = d_{g·k}`, and the constraints
/// as in the primal case.
pub fn check_minimax_covariance(
    problem: &MinimaxProblem,
    group: &FiniteGroup,
    tol: f64,
) -> Result<CovarianceReport, SymmetryError> {
    group.check_perm_lengths(
        problem.num_outcomes(),
        problem.num_constraints(),
        Some(problem.num_criteria()),
    )?;
    let mut acc = CovarianceAccumulator::new(tol);
    for g in group.elements() {
        let pk = g.perm_k.as_ref().expect("checked above");
        for k in 0..problem.num_criteria() {
            let offset_residual = (problem.offsets()[k] - problem.offsets()[pk[k]]).abs();
            acc.push(|r| &mut r.offset_residual, offset_residual, &g.id, None, None);
            for m in 0..problem.num_outcomes() {
                let moved = act(g, problem.criterion_op(k, m))?;
                let target = problem.criterion_op(pk[k], g.perm_m[m]);
                let residual = (moved.matrix() - target.matrix()).norm();
                acc.push(
                    |r| &mut r.objective_residual,
                    residual,
                    &g.id,
                    Some(k),
                    Some(m),
                );
            }
        }
        for j in 0..problem.num_constraints() {
            let bound_residual =
                (problem.constraint_bounds()[j] - problem.constraint_bounds()[g.perm_j[j]]).abs();
            acc.push(|r| &mut r.bound_residual, bound_residual, &g.id, Some(j), None);
            for m in 0..problem.num_outcomes() {
                let moved = act(g, &problem.constraint_ops()[j][m])?;
                let target = &problem.constraint_ops()[g.perm_j[j]][g.perm_m[m]];
                let residual = (moved.matrix() - target.matrix()).norm();
                acc.push(
                    |r| &mut r.constraint_residual,
                    residual,
                    &g.id,
                    Some(j),
                    Some(m),
                );
            }
        }
    }
    Ok(acc.finish())
}

/// The averaging map `κ(Φ)_m = |G|⁻¹ Σ_g g⁻¹·Φ̂_{g·m}`. Terms are summed in
/// element order for bitwise reproducibility.
pub fn average_povm(group: &FiniteGroup, povm: &Povm) -> Result<Povm, SymmetryError> {
    group.check_perm_lengths(povm.num_outcomes(), 0, None).or_else(|e| match e {
        SymmetryError::PermutationShape { which: "outcome", .. } => Err(e),
        _ => Ok(()),
    })?;
    let weight = 1.0 / group.order() as f64;
    let mut outcomes = Vec::with_capacity(povm.num_outcomes());
    for m in 0..povm.num_outcomes() {
        let mut acc = HermitianOperator::zeros(povm.dim());
        for (gi, g) in group.elements().iter().enumerate() {
            let moved = act(group.inverse_of(gi), povm.outcome(g.perm_m[m]))?;
            acc = &acc + &moved;
        }
        outcomes.push(acc.scaled(weight));
    }
    Ok(Povm::new(outcomes)?)
}

/// Residual of the POVM covariance identity `g·Π̂_m = Π̂_{g·m}`.
pub fn povm_covariance_residual(group: &FiniteGroup, povm: &Povm) -> Result<f64, SymmetryError> {
    let mut worst: f64 = 0.0;
    for g in group.elements() {
        for m in 0..povm.num_outcomes() {
            let moved = act(g, povm.outcome(m))?;
            worst = worst.max((moved.matrix() - povm.outcome(g.perm_m[m]).matrix()).norm());
        }
    }
    Ok(worst)
}

/// Output of [`covariant_solve`]: the symmetrized solution with its
/// re-certification and covariance diagnostics.
#[derive(Debug, Clone)]
pub struct CovariantSolution {
    /// Solver output with the averaged POVM and symmetrized dual swapped in.
    pub result: SolverResult,
    pub pre_average_value: f64,
    pub post_average_value: f64,
    pub problem_covariance: CovarianceReport,
    pub certificate: CertificateReport,
    pub povm_covariance_residual: f64,
    pub dual_covariance_residual: f64,
}

fn symmetrize_dual(
    group: &FiniteGroup,
    dual: &DualCertificate,
) -> Result<DualCertificate, SymmetryError> {
    let weight = 1.0 / group.order() as f64;
    let mut x_acc = HermitianOperator::zeros(dual.x.dim());
    for g in group.elements() {
        x_acc = &x_acc + &act(g, &dual.x)?;
    }
    let x = x_acc.scaled(weight);
    let j = dual.lambda.len();
    let mut lambda = vec![0.0; j];
    for (slot, lam) in lambda.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (gi, _) in group.elements().iter().enumerate() {
            let inv = group.inverse_of(gi);
            acc += dual.lambda[inv.perm_j[slot]];
        }
        *lam = acc * weight;
    }
    Ok(DualCertificate { x, lambda })
}

/// Solves a covariant problem and symmetrizes the result: the optimal POVM
/// is averaged by `κ`, the dual pair by group averaging, and the
/// symmetrized solution is re-certified. Fails if the problem is not
/// covariant or if averaging moves the objective by more than 1e−8.
pub fn covariant_solve(
    problem: &DiscriminationProblem,
    group: &FiniteGroup,
    cfg: &SolverConfig,
) -> Result<CovariantSolution, SymmetryError> {
    let problem_covariance = check_problem_covariance(problem, group, INPUT_COVARIANCE_TOL)?;
    if !problem_covariance.pass {
        let worst = problem_covariance.worst.expect("failing report has a site");
        return Err(SymmetryError::CovarianceViolation {
            element: worst.element,
            row: worst.row,
            outcome: worst.outcome,
            residual: worst.residual,
        });
    }

    let mut result = sdp::solve_problem(problem, cfg);
    if result.status != SolveStatus::Optimal {
        return Err(SymmetryError::Solver(result.status));
    }

    let pre_average_value = problem.objective_value(&result.povm)?;
    let averaged = average_povm(group, &result.povm)?;
    let post_average_value = problem.objective_value(&averaged)?;
    if (post_average_value - pre_average_value).abs() > 1e-8 {
        return Err(SymmetryError::ObjectiveDrift {
            before: pre_average_value,
            after: post_average_value,
        });
    }

    let dual = symmetrize_dual(group, &result.dual)?;
    let certificate = verify_certificate(
        problem,
        &averaged,
        &dual,
        &CertificateTolerances::default(),
    )?;

    let povm_cov = povm_covariance_residual(group, &averaged)?;
    let mut dual_cov: f64 = 0.0;
    for g in group.elements() {
        let moved = act(g, &dual.x)?;
        dual_cov = dual_cov.max((moved.matrix() - dual.x.matrix()).norm());
        for j in 0..dual.lambda.len() {
            dual_cov = dual_cov.max((dual.lambda[j] - dual.lambda[g.perm_j[j]]).abs());
        }
    }

    result.povm = averaged;
    result.dual = dual;
    Ok(CovariantSolution {
        result,
        pre_average_value,
        post_average_value,
        problem_covariance,
        certificate,
        povm_covariance_residual: povm_cov,
        dual_covariance_residual: dual_cov,
    })
}

/// Output of [`symmetrize_minimax`].
#[derive(Debug, Clone)]
pub struct SymmetrizedMinimax {
    pub solution: MinimaxSolution,
    pub problem_covariance: CovarianceReport,
    pub weight_covariance_residual: f64,
    pub povm_covariance_residual: f64,
    pub report: MinimaxReport,
}

/// Symmetrizes a minimax solution: weights averaged over criterion orbits,
/// POVM averaged by `κ`; verifies both covariance identities and
/// re-checks the saddle conditions.
pub fn symmetrize_minimax(
    problem: &MinimaxProblem,
    group: &FiniteGroup,
    solution: &MinimaxSolution,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<SymmetrizedMinimax, SymmetryError> {
    let problem_covariance = check_minimax_covariance(problem, group, INPUT_COVARIANCE_TOL)?;
    if !problem_covariance.pass {
        let worst = problem_covariance.worst.expect("failing report has a site");
        return Err(SymmetryError::CovarianceViolation {
            element: worst.element,
            row: worst.row,
            outcome: worst.outcome,
            residual: worst.residual,
        });
    }

    let k = problem.num_criteria();
    let weight = 1.0 / group.order() as f64;
    let mut mu = vec![0.0; k];
    for (slot, entry) in mu.iter_mut().enumerate() {
        let mut acc = 0.0;
        for g in group.elements() {
            let pk = g.perm_k.as_ref().expect("validated by covariance check");
            acc += solution.mu[pk[slot]];
        }
        *entry = acc * weight;
    }

    let povm = average_povm(group, &solution.povm)?;

    let mut weight_cov: f64 = 0.0;
    for g in group.elements() {
        let pk = g.perm_k.as_ref().expect("validated");
        for slot in 0..k {
            weight_cov = weight_cov.max((mu[slot] - mu[pk[slot]]).abs());
        }
    }
    let povm_cov = povm_covariance_residual(group, &povm)?;

    let per_criterion = criterion_values(problem, &povm)?;
    let value = per_criterion.iter().copied().fold(f64::INFINITY, f64::min);
    let support = mu
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > SUPPORT_TOL)
        .map(|(i, _)| i)
        .collect();

    let report = verify_minimax(problem, &mu, &povm, cfg, tol)?;

    Ok(SymmetrizedMinimax {
        solution: MinimaxSolution {
            mu,
            povm,
            value,
            per_criterion,
            support,
            solver: solution.solver.clone(),
        },
        problem_covariance,
        weight_covariance_residual: weight_cov,
        povm_covariance_residual: povm_cov,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{random, DensityOperator, StateEnsemble};
    use approx::assert_abs_diff_eq;

    /// Three symmetric pure qubit states at 120° steps in the real plane.
    pub(crate) fn trine_states() -> Vec<DensityOperator> {
        (0..3)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                DensityOperator::pure_real(&[theta.cos(), theta.sin()]).unwrap()
            })
            .collect()
    }

    /// The rotation by 120° cycling the trine states, as a cyclic group.
    pub(crate) fn trine_group(perm_j: Vec<usize>) -> FiniteGroup {
        let theta = 2.0 * std::f64::consts::PI / 3.0;
        let op = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(theta.cos(), 0.0),
                C64::new(-theta.sin(), 0.0),
                C64::new(theta.sin(), 0.0),
                C64::new(theta.cos(), 0.0),
            ],
        );
        let generator = GroupElement::new("r", op, false, vec![1, 2, 0], perm_j, None).unwrap();
        FiniteGroup::cyclic(generator).unwrap()
    }

    fn trine_min_error() -> DiscriminationProblem {
        let ens = StateEnsemble::with_uniform_priors(trine_states()).unwrap();
        DiscriminationProblem::min_error(&ens).unwrap()
    }

    #[test]
    fn identity_element_acts_trivially() {
        let group = trine_group(Vec::new());
        let e = group.element(group.identity_index());
        let a = random::hermitian(2, 1.0, 3);
        let moved = act(e, &a).unwrap();
        assert!((moved.matrix() - a.matrix()).norm() <= 1e-12);
    }

    #[test]
    fn action_preserves_traces_and_pairings() {
        let group = trine_group(Vec::new());
        for seed in 0..4 {
            let a = random::hermitian(2, 1.0, seed);
            let b = random::hermitian(2, 1.0, seed + 40);
            for g in group.elements() {
                let ga = act(g, &a).unwrap();
                let gb = act(g, &b).unwrap();
                assert_abs_diff_eq!(ga.trace(), a.trace(), epsilon = 1e-10);
                let lhs = crate::operator::trace_pair(&ga, &gb).unwrap();
                let rhs = crate::operator::trace_pair(&a, &b).unwrap();
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn trine_problem_is_covariant_and_broken_permutation_is_named() {
        let problem = trine_min_error();
        let group = trine_group(Vec::new());
        let report = check_problem_covariance(&problem, &group, 1e-10).unwrap();
        assert!(report.pass, "{report:?}");

        // Break the permutation: swap two targets.
        let theta = 2.0 * std::f64::consts::PI / 3.0;
        let op = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(theta.cos(), 0.0),
                C64::new(-theta.sin(), 0.0),
                C64::new(theta.sin(), 0.0),
                C64::new(theta.cos(), 0.0),
            ],
        );
        let bad = GroupElement::new("r", op, false, vec![2, 1, 0], vec![], None).unwrap();
        let group = FiniteGroup::cyclic(bad);
        // The broken generator either fails closure or fails covariance.
        if let Ok(group) = group {
            let report = check_problem_covariance(&problem, &group, 1e-10).unwrap();
            assert!(!report.pass);
            assert!(report.worst.is_some());
        }
    }

    #[test]
    fn averaging_is_idempotent_and_fixes_covariant_povms() {
        let group = trine_group(Vec::new());
        let povm = random::povm(2, 3, 8);
        let averaged = average_povm(&group, &povm).unwrap();
        let twice = average_povm(&group, &averaged).unwrap();
        for (a, b) in averaged.outcomes().iter().zip(twice.outcomes()) {
            assert!((a.matrix() - b.matrix()).norm() <= 1e-10);
        }
        assert!(povm_covariance_residual(&group, &averaged).unwrap() <= 1e-9);
    }

    #[test]
    fn single_element_map_round_trips() {
        let group = trine_group(Vec::new());
        let povm = random::povm(2, 3, 9);
        // Apply κ_g then κ_{g⁻¹}: must return the original exactly up to
        // arithmetic noise.
        let gi = 1;
        let g = group.element(gi);
        let ginv = group.inverse_of(gi);
        let forward: Vec<HermitianOperator> = (0..3)
            .map(|m| act(ginv, povm.outcome(g.perm_m[m])).unwrap())
            .collect();
        let forward = Povm::from_raw(forward).unwrap();
        let back: Vec<HermitianOperator> = (0..3)
            .map(|m| act(g, forward.outcome(ginv.perm_m[m])).unwrap())
            .collect();
        for (a, b) in back.iter().zip(povm.outcomes()) {
            assert!((a.matrix() - b.matrix()).norm() <= 1e-12);
        }
    }

    #[test]
    fn averaging_preserves_objective_on_covariant_problems() {
        let problem = trine_min_error();
        let group = trine_group(Vec::new());
        for seed in 0..5 {
            let povm = random::povm(2, 3, seed);
            let averaged = average_povm(&group, &povm).unwrap();
            let before = problem.objective_value(&povm).unwrap();
            let after = problem.objective_value(&averaged).unwrap();
            assert_abs_diff_eq!(before, after, epsilon = 1e-9);
        }
    }

    #[test]
    fn trine_covariant_solve_reaches_two_thirds() {
        let problem = trine_min_error();
        let group = trine_group(Vec::new());
        let solution = covariant_solve(&problem, &group, &SolverConfig::default()).unwrap();
        // Bayes objective = success − 1.
        assert_abs_diff_eq!(
            solution.result.primal_value + 1.0,
            2.0 / 3.0,
            epsilon = 1e-6
        );
        assert!(solution.certificate.pass, "{:?}", solution.certificate);
        assert!(solution.povm_covariance_residual <= SOLVER_COVARIANCE_TOL);
        assert!((solution.pre_average_value - solution.post_average_value).abs() <= 1e-8);
    }

    #[test]
    fn trivial_group_is_identity_transform() {
        let problem = trine_min_error();
        let group = FiniteGroup::new(vec![GroupElement::identity(2, 3, 0, None)]).unwrap();
        let solution = covariant_solve(&problem, &group, &SolverConfig::default()).unwrap();
        let plain = sdp::solve_problem(&problem, &SolverConfig::default());
        assert_abs_diff_eq!(
            solution.result.primal_value,
            plain.primal_value,
            epsilon = 1e-9
        );
    }

    #[test]
    fn antiunitary_composition_is_consistent() {
        // Conjugation composed with a 120° rotation generates an order-6
        // group whose even powers are plain rotations.
        let theta = 2.0 * std::f64::consts::PI / 3.0;
        let op = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(theta.cos(), 0.0),
                C64::new(-theta.sin(), 0.0),
                C64::new(theta.sin(), 0.0),
                C64::new(theta.cos(), 0.0),
            ],
        );
        let generator = GroupElement::new("a", op, true, vec![0, 1], vec![], None).unwrap();
        let group = FiniteGroup::cyclic(generator.clone()).unwrap();
        assert_eq!(group.order(), 6);
        let a = random::hermitian(2, 1.0, 77);
        let twice = act(&generator, &act(&generator, &a).unwrap()).unwrap();
        let squared_index = group.compose_indices(1, 1);
        let direct = act(group.element(squared_index), &a).unwrap();
        assert!((twice.matrix() - direct.matrix()).norm() <= 1e-9);
    }

    #[test]
    fn swap_symmetric_minimax_weights_average_to_half() {
        // Two state sets over the computational basis whose priors swap
        // under the bit flip: the flip exchanges the criteria.
        let states = vec![
            DensityOperator::pure_real(&[1.0, 0.0]).unwrap(),
            DensityOperator::pure_real(&[0.0, 1.0]).unwrap(),
        ];
        let mp = MinimaxProblem::plural_state_sets(&[
            StateEnsemble::new(states.clone(), vec![0.7, 0.3]).unwrap(),
            StateEnsemble::new(states.clone(), vec![0.3, 0.7]).unwrap(),
        ])
        .unwrap();
        // Swap: X gate exchanges the states, the outcomes, and the criteria.
        let swap_op = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let swap =
            GroupElement::new("x", swap_op, false, vec![1, 0], vec![], Some(vec![1, 0]))
                .unwrap();
        let group = FiniteGroup::cyclic(swap).unwrap();
        let cfg = SolverConfig::default();
        let solution = crate::minimax::solve_minimax(&mp, &cfg).unwrap();
        let symmetrized = symmetrize_minimax(&mp, &group, &solution, &cfg, 1e-5).unwrap();
        assert_abs_diff_eq!(symmetrized.solution.mu[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(symmetrized.solution.mu[1], 0.5, epsilon = 1e-12);
        assert!(symmetrized.weight_covariance_residual <= 1e-12);
        assert!(symmetrized.report.pass, "{:?}", symmetrized.report);
    }
}
