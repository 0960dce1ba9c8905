//! Compilation of discrimination problems onto a real block SDP and the
//! interior-point driver.
//!
//! [`compile`] embeds every Hermitian datum as `ι(·)/2` (see [`embed`]) so
//! that the compiled pairings equal their complex counterparts; the
//! completeness equalities pin `Σ_m Π̂_m = 1̂` entrywise and each inequality
//! row gains a nonnegative slack. [`solve`] runs a Mehrotra
//! predictor-corrector method on the compiled form, preceded by a
//! feasibility phase (maximize the minimum constraint slack) whenever the
//! uniform POVM is not safely interior, and maps the SDP dual variables
//! back to the certificate pair `(X̂, λ)`.
//!
//! When the feasibility phase proves the optimum of the minimum slack is
//! zero, the feasible set has empty interior and no central path exists.
//! The solver then performs one facial-reduction step: the feasibility
//! phase converges to a maximum-rank point of the feasible set, so the
//! supports of its blocks carry the face. Blocks are compressed onto those
//! supports, rows whose slack is pinned at zero become equalities, the
//! completeness rows are re-expressed on a complex Hermitian basis and
//! rank-reduced, and the solve proceeds on the reduced problem, which has
//! an interior again. Deeper degeneracy (a reduced problem that is still
//! interior-free) is reported as a numerical failure rather than hidden.

pub(crate) mod embed;
pub(crate) mod form;
mod ipm;

use nalgebra::{DMatrix, DVector};

pub use form::SdpStandardForm;

pub(crate) use embed::embed as embed_matrix;
use embed::{deembed, project_structure};
use form::{CompletenessKind, ConstraintRow, RowCoeff, ScalarRole};
use ipm::{BlockVec, RawSolution, RawStatus};

use crate::certificate::DualCertificate;
use crate::operator::{C64, HermitianOperator, Povm};
use crate::problem::DiscriminationProblem;

/// Interior-point configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative duality-gap tolerance for declaring optimality.
    pub gap_tol: f64,
    /// Relative primal/dual feasibility tolerance.
    pub feas_tol: f64,
    /// Iteration budget.
    pub max_iters: usize,
    /// Fraction of the step to the cone boundary taken each iteration.
    pub step_fraction: f64,
    /// Dual objective below `−threshold` is treated as divergence.
    pub infeasibility_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iters: 200,
            step_fraction: 0.98,
            infeasibility_threshold: 1e8,
        }
    }
}

impl SolverConfig {
    fn assert_valid(&self) {
        assert!(self.gap_tol > 0.0, "gap_tol must be positive");
        assert!(self.feas_tol > 0.0, "feas_tol must be positive");
        assert!(self.max_iters > 0, "max_iters must be positive");
        assert!(
            self.step_fraction > 0.0 && self.step_fraction < 1.0,
            "step_fraction must lie in (0, 1)"
        );
        assert!(
            self.infeasibility_threshold > 0.0,
            "infeasibility_threshold must be positive"
        );
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

/// One logged iterate: objective pair, scaled residuals, and `⟨X, S⟩`.
#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
}

/// Residual summary of a finished solve.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub primal_feasibility: f64,
    pub dual_feasibility: f64,
    pub relative_gap: f64,
    /// Largest commutator norm `‖[block, J]‖_F` observed before the
    /// per-iteration projection back onto the embedded subspace.
    pub max_structure_drift: f64,
    pub iterates: Vec<IterateRecord>,
}

/// Evidence that the constraint set admits no POVM.
#[derive(Debug, Clone)]
pub struct InfeasibilityInfo {
    /// Optimal value of the feasibility phase: the largest achievable
    /// minimum constraint slack. Negative means the feasible set is empty.
    pub max_min_slack: f64,
    /// Dual bound from the feasibility phase; a negative value certifies
    /// that every POVM violates some constraint by at least its magnitude.
    pub certified_bound: f64,
    /// Relative duality gap of the feasibility phase.
    pub phase_gap: f64,
}

/// Output of [`solve`]: the measurement, the dual certificate, objective
/// values, and diagnostics.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub povm: Povm,
    pub dual: DualCertificate,
    pub primal_value: f64,
    pub dual_value: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: ResidualReport,
    pub infeasibility: Option<InfeasibilityInfo>,
    /// Multipliers of the compiled rows in the original row indexing;
    /// derived layers read auxiliary multipliers (e.g. epigraph rows) here.
    pub(crate) row_multipliers: DVector<f64>,
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Compiles a discrimination problem into block standard form.
pub fn compile(problem: &DiscriminationProblem) -> SdpStandardForm {
    let d = problem.dim();
    let n = 2 * d;
    let m = problem.num_outcomes();

    let mut rows = Vec::new();
    let mut identity_rows = Vec::new();
    for p in 0..n {
        for q in p..n {
            if p == q {
                identity_rows.push((rows.len(), 1.0));
            }
            rows.push(ConstraintRow {
                rhs: if p == q { 1.0 } else { 0.0 },
                coeff: RowCoeff::Basis { p, q },
            });
        }
    }
    let num_completeness = rows.len();

    let mut lambda_rows = Vec::new();
    let mut scalar_roles = Vec::new();
    for (row_ops, &bound) in problem
        .constraint_ops()
        .iter()
        .zip(problem.constraint_bounds())
    {
        let row_index = rows.len();
        let blocks: Vec<(usize, DMatrix<f64>)> = row_ops
            .iter()
            .enumerate()
            .filter(|(_, op)| op.frobenius_norm() > 0.0)
            .map(|(b, op)| (b, embed_matrix(op.matrix()).scale(0.5)))
            .collect();
        let slack = scalar_roles.len();
        rows.push(ConstraintRow {
            rhs: bound,
            coeff: RowCoeff::Linear {
                blocks,
                scalars: vec![(slack, 1.0)],
            },
        });
        lambda_rows.push(row_index);
        scalar_roles.push(ScalarRole::SlackOfRow(row_index));
    }

    let cost_blocks = problem
        .objective_ops()
        .iter()
        .map(|c| embed_matrix(c.matrix()).scale(0.5))
        .collect();

    let num_scalars = scalar_roles.len();
    SdpStandardForm {
        complex_dim: d,
        block_sizes: vec![n; m],
        num_scalars,
        cost_blocks,
        cost_scalars: DVector::zeros(num_scalars),
        objective_offset: 0.0,
        rows,
        num_completeness,
        completeness: CompletenessKind::Standard,
        lambda_rows,
        scalar_roles,
        identity_rows,
    }
}

/// Derives the feasibility-phase program: maximize the minimum slack over
/// all inequality rows. The slack variable is shifted by a data-dependent
/// constant so it can live in the nonnegative cone without cutting off the
/// optimum.
pub(crate) fn compile_phase1(base: &SdpStandardForm) -> SdpStandardForm {
    let mut shift: f64 = 1.0;
    for &r in &base.lambda_rows {
        let row = &base.rows[r];
        let mut reach = row.rhs.abs();
        if let RowCoeff::Linear { blocks, .. } = &row.coeff {
            let worst = blocks
                .iter()
                .map(|(_, a)| std::f64::consts::SQRT_2 * a.norm())
                .fold(0.0, f64::max);
            reach += base.complex_dim as f64 * worst;
        }
        shift = shift.max(1.0 + reach);
    }

    let t_index = base.num_scalars;
    let mut rows = base.rows.clone();
    for &r in &base.lambda_rows {
        rows[r].rhs += shift;
        if let RowCoeff::Linear { scalars, .. } = &mut rows[r].coeff {
            scalars.push((t_index, 1.0));
        }
    }

    let mut cost_scalars = DVector::zeros(base.num_scalars + 1);
    cost_scalars[t_index] = 1.0;
    let mut scalar_roles: Vec<ScalarRole> = base
        .scalar_roles
        .iter()
        .map(|role| match role {
            ScalarRole::Shifted => ScalarRole::Auxiliary,
            other => *other,
        })
        .collect();
    scalar_roles.push(ScalarRole::Shifted);

    SdpStandardForm {
        complex_dim: base.complex_dim,
        block_sizes: base.block_sizes.clone(),
        num_scalars: base.num_scalars + 1,
        cost_blocks: base
            .block_sizes
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect(),
        cost_scalars,
        objective_offset: -shift,
        rows,
        num_completeness: base.num_completeness,
        completeness: base.completeness.clone(),
        lambda_rows: base.lambda_rows.clone(),
        scalar_roles,
        identity_rows: base.identity_rows.clone(),
    }
}

/// Maps raw SDP dual variables of a full-space form back to the
/// certificate pair `(X̂, λ)`.
///
/// The completeness multiplier de-embeds to `X̂`; the multiplier of
/// inequality row `j` is `λ_j`, with values in `[−clip_tol, 0)` clipped to
/// zero.
pub fn extract_dual(form: &SdpStandardForm, y: &DVector<f64>, clip_tol: f64) -> DualCertificate {
    let x = match &form.completeness {
        CompletenessKind::Standard => {
            let n = 2 * form.complex_dim;
            let mut z = DMatrix::zeros(n, n);
            for (i, row) in form.rows.iter().enumerate().take(form.num_completeness) {
                if let RowCoeff::Basis { p, q } = &row.coeff {
                    if p == q {
                        z[(*p, *p)] += y[i];
                    } else {
                        z[(*p, *q)] += y[i] * SQRT_HALF;
                        z[(*q, *p)] += y[i] * SQRT_HALF;
                    }
                }
            }
            HermitianOperator::hermitian_part(deembed(&z).map(|c| c * 2.0))
                .expect("de-embedded dual is square")
        }
        CompletenessKind::Reduced(basis) => {
            let mut acc = DMatrix::<C64>::zeros(form.complex_dim, form.complex_dim);
            for (i, e) in basis.iter().enumerate() {
                acc += e.matrix().map(|c| c * y[i]);
            }
            HermitianOperator::hermitian_part(acc).expect("square")
        }
    };
    let lambda = form
        .lambda_rows
        .iter()
        .map(|&r| clip_negative(y[r], clip_tol))
        .collect();
    DualCertificate { x, lambda }
}

fn clip_negative(v: f64, clip_tol: f64) -> f64 {
    if v < 0.0 && v >= -clip_tol {
        0.0
    } else {
        v
    }
}

fn povm_from_blocks(blocks: &[DMatrix<f64>], validate: bool) -> Result<Povm, crate::operator::OperatorError> {
    let outcomes: Vec<HermitianOperator> = blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            project_structure(&mut b);
            HermitianOperator::hermitian_part(deembed(&b)).expect("square block")
        })
        .collect();
    if validate {
        Povm::new(outcomes)
    } else {
        Povm::from_raw(outcomes)
    }
}

fn residual_report(raw: &RawSolution) -> ResidualReport {
    ResidualReport {
        primal_feasibility: raw.primal_residual,
        dual_feasibility: raw.dual_residual,
        relative_gap: raw.relative_gap,
        max_structure_drift: raw.max_structure_drift,
        iterates: raw.records.clone(),
    }
}

/// Facial-reduction data tying a reduced form back to its parent.
struct Reduction {
    /// Per original block: the complex isometry onto its support
    /// (`d × r_m`, possibly zero columns).
    supports: Vec<DMatrix<C64>>,
    /// Original block index → reduced block index.
    kept_blocks: Vec<Option<usize>>,
    /// Reduced row index → original row index (None for the regenerated
    /// completeness rows).
    original_row: Vec<Option<usize>>,
    /// Original inequality row → whether its slack was pinned at zero.
    forced: Vec<bool>,
}

fn hermitian_unit_basis(d: usize) -> Vec<HermitianOperator> {
    let mut basis = Vec::with_capacity(d * d);
    for p in 0..d {
        let mut m = DMatrix::<C64>::zeros(d, d);
        m[(p, p)] = C64::new(1.0, 0.0);
        basis.push(HermitianOperator::hermitian_part(m).expect("square"));
        for q in (p + 1)..d {
            let mut re = DMatrix::<C64>::zeros(d, d);
            re[(p, q)] = C64::new(SQRT_HALF, 0.0);
            re[(q, p)] = C64::new(SQRT_HALF, 0.0);
            basis.push(HermitianOperator::hermitian_part(re).expect("square"));
            let mut im = DMatrix::<C64>::zeros(d, d);
            im[(p, q)] = C64::new(0.0, SQRT_HALF);
            im[(q, p)] = C64::new(0.0, -SQRT_HALF);
            basis.push(HermitianOperator::hermitian_part(im).expect("square"));
        }
    }
    basis
}

/// Compresses a complex operator onto a support: `V† A V`.
fn compress(v: &DMatrix<C64>, a: &DMatrix<C64>) -> DMatrix<C64> {
    v.adjoint() * a * v
}

fn flatten_row_blocks(
    blocks: &[(usize, DMatrix<f64>)],
    sizes: &[usize],
) -> DVector<f64> {
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0usize, |acc, &n| {
            let start = *acc;
            *acc += n * n;
            Some(start)
        })
        .collect();
    let total: usize = sizes.iter().map(|&n| n * n).sum();
    let mut out = DVector::zeros(total);
    for (b, coeff) in blocks {
        let start = offsets[*b];
        for (k, v) in coeff.iter().enumerate() {
            out[start + k] = *v;
        }
    }
    out
}

/// Builds the facially reduced form from the feasibility-phase solution.
/// Returns `None` when there is nothing to cut (full supports, no pinned
/// rows), in which case the caller proceeds on the original form.
fn reduce_form(
    base: &SdpStandardForm,
    phase1: &RawSolution,
    phase1_form: &SdpStandardForm,
    b_max: f64,
) -> Option<(SdpStandardForm, Reduction)> {
    let d = base.complex_dim;

    // Supports from the maximum-rank feasible point.
    let mut supports = Vec::with_capacity(base.num_blocks());
    let mut kept_blocks = Vec::with_capacity(base.num_blocks());
    let mut reduced_sizes = Vec::new();
    let mut any_cut = false;
    for block in &phase1.x.blocks {
        let h = HermitianOperator::hermitian_part(deembed(block)).expect("square");
        let (values, vectors) = h.eigen().ok()?;
        let vmax = values[values.len() - 1].max(0.0);
        let cut = 1e-5 * vmax.max(1e-10);
        let kept: Vec<usize> = (0..values.len()).filter(|&i| values[i] > cut).collect();
        let r = kept.len();
        let mut v = DMatrix::<C64>::zeros(d, r);
        for (col, &i) in kept.iter().enumerate() {
            v.set_column(col, &vectors.column(i));
        }
        if r < d {
            any_cut = true;
        }
        if r > 0 {
            kept_blocks.push(Some(reduced_sizes.len()));
            reduced_sizes.push(2 * r);
        } else {
            kept_blocks.push(None);
        }
        supports.push(v);
    }

    // Rows whose slack is pinned at zero on the whole feasible set.
    let forced_tol = 1e-5 * (1.0 + b_max);
    let mut forced = vec![false; base.rows.len()];
    for (s, role) in phase1_form.scalar_roles.iter().enumerate() {
        if let ScalarRole::SlackOfRow(row) = role {
            if base.lambda_rows.contains(row) && phase1.x.scalars[s] <= forced_tol {
                forced[*row] = true;
                any_cut = true;
            }
        }
    }

    if !any_cut {
        return None;
    }

    let compress_row_blocks = |coeff: &RowCoeff| -> Vec<(usize, DMatrix<f64>)> {
        match coeff {
            RowCoeff::Basis { .. } => unreachable!("handled via the complex basis"),
            RowCoeff::Linear { blocks, .. } => blocks
                .iter()
                .filter_map(|(b, a)| {
                    let new_b = kept_blocks[*b]?;
                    let complex = deembed(a).map(|c| c * 2.0);
                    let compressed = compress(&supports[*b], &complex);
                    let embedded = embed_matrix(&compressed).scale(0.5);
                    if embedded.norm() == 0.0 {
                        None
                    } else {
                        Some((new_b, embedded))
                    }
                })
                .collect(),
        }
    };

    // Regenerated completeness rows on the complex Hermitian basis,
    // rank-reduced together with the pinned equality rows.
    let mut rows = Vec::new();
    let mut original_row = Vec::new();
    let mut kept_basis = Vec::new();
    let mut gs_basis: Vec<DVector<f64>> = Vec::new();
    let mut push_independent = |row: ConstraintRow,
                                origin: Option<usize>,
                                rows: &mut Vec<ConstraintRow>,
                                original_row: &mut Vec<Option<usize>>,
                                gs_basis: &mut Vec<DVector<f64>>|
     -> bool {
        let blocks = match &row.coeff {
            RowCoeff::Linear { blocks, .. } => blocks,
            _ => unreachable!(),
        };
        let mut vec = flatten_row_blocks(blocks, &reduced_sizes);
        let original_norm = vec.norm();
        if original_norm <= 1e-12 {
            return false;
        }
        for b in gs_basis.iter() {
            let proj = vec.dot(b);
            vec.axpy(-proj, b, 1.0);
        }
        if vec.norm() <= 1e-8 * original_norm {
            return false;
        }
        let unit = vec.normalize();
        gs_basis.push(unit);
        original_row.push(origin);
        rows.push(row);
        true
    };

    for e in hermitian_unit_basis(d) {
        let blocks: Vec<(usize, DMatrix<f64>)> = supports
            .iter()
            .enumerate()
            .filter_map(|(b, v)| {
                let new_b = kept_blocks[b]?;
                let compressed = compress(v, e.matrix());
                let embedded = embed_matrix(&compressed).scale(0.5);
                if embedded.norm() == 0.0 {
                    None
                } else {
                    Some((new_b, embedded))
                }
            })
            .collect();
        let row = ConstraintRow {
            rhs: e.trace(),
            coeff: RowCoeff::Linear {
                blocks,
                scalars: Vec::new(),
            },
        };
        if push_independent(row, None, &mut rows, &mut original_row, &mut gs_basis) {
            kept_basis.push(e);
        }
    }
    let num_completeness = rows.len();

    // Scalar remap: slacks of pinned rows disappear.
    let mut scalar_map = vec![None; base.num_scalars];
    let mut new_roles_src = Vec::new();
    for (s, role) in base.scalar_roles.iter().enumerate() {
        let drop = matches!(role, ScalarRole::SlackOfRow(row) if forced[*row]);
        if !drop {
            scalar_map[s] = Some(new_roles_src.len());
            new_roles_src.push(*role);
        }
    }

    // Original non-completeness rows: pinned rows join the rank check as
    // pure equalities; the rest keep their slacks and are independent.
    let mut old_row_map = vec![None; base.rows.len()];
    for (i, row) in base.rows.iter().enumerate().skip(base.num_completeness) {
        let blocks = compress_row_blocks(&row.coeff);
        let scalars: Vec<(usize, f64)> = match &row.coeff {
            RowCoeff::Linear { scalars, .. } => scalars
                .iter()
                .filter_map(|(s, c)| scalar_map[*s].map(|ns| (ns, *c)))
                .collect(),
            _ => Vec::new(),
        };
        let new_row = ConstraintRow {
            rhs: row.rhs,
            coeff: RowCoeff::Linear { blocks, scalars },
        };
        if forced[i] {
            if push_independent(new_row, Some(i), &mut rows, &mut original_row, &mut gs_basis) {
                old_row_map[i] = Some(rows.len() - 1);
            }
        } else {
            old_row_map[i] = Some(rows.len());
            original_row.push(Some(i));
            rows.push(new_row);
        }
    }

    // Re-point slack roles at the new row indices.
    let scalar_roles: Vec<ScalarRole> = new_roles_src
        .into_iter()
        .map(|role| match role {
            ScalarRole::SlackOfRow(old) => {
                ScalarRole::SlackOfRow(old_row_map[old].expect("unforced rows are kept"))
            }
            other => other,
        })
        .collect();

    let lambda_rows: Vec<usize> = base
        .lambda_rows
        .iter()
        .filter_map(|&old| old_row_map[old])
        .collect();

    // Compressed objective.
    let cost_blocks: Vec<DMatrix<f64>> = {
        let mut out = vec![DMatrix::zeros(0, 0); reduced_sizes.len()];
        for (b, c) in base.cost_blocks.iter().enumerate() {
            if let Some(new_b) = kept_blocks[b] {
                let complex = deembed(c).map(|v| v * 2.0);
                out[new_b] = embed_matrix(&compress(&supports[b], &complex)).scale(0.5);
            }
        }
        out
    };
    let mut cost_scalars = DVector::zeros(scalar_roles.len());
    for (s, c) in base.cost_scalars.iter().enumerate() {
        if let Some(ns) = scalar_map[s] {
            cost_scalars[ns] = *c;
        }
    }

    // Identity direction over the kept completeness rows (Gram solve):
    // the dual starting shift needs Aᵀ(v) = 1̂ on every block.
    let identity_rows = {
        let gram_rows: Vec<DVector<f64>> = rows[..num_completeness]
            .iter()
            .map(|row| match &row.coeff {
                RowCoeff::Linear { blocks, .. } => flatten_row_blocks(blocks, &reduced_sizes),
                _ => unreachable!(),
            })
            .collect();
        let target = {
            let ident_blocks: Vec<(usize, DMatrix<f64>)> = reduced_sizes
                .iter()
                .enumerate()
                .map(|(b, &n)| (b, DMatrix::identity(n, n)))
                .collect();
            flatten_row_blocks(&ident_blocks, &reduced_sizes)
        };
        let k = gram_rows.len();
        let mut gram = DMatrix::zeros(k, k);
        let mut t = DVector::zeros(k);
        for i in 0..k {
            t[i] = gram_rows[i].dot(&target);
            for j in 0..=i {
                let v = gram_rows[i].dot(&gram_rows[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        match nalgebra::Cholesky::new(gram) {
            Some(chol) => {
                let c = chol.solve(&t);
                (0..k).map(|i| (i, c[i])).filter(|(_, w)| *w != 0.0).collect()
            }
            None => Vec::new(),
        }
    };

    let reduced = SdpStandardForm {
        complex_dim: d,
        block_sizes: reduced_sizes,
        num_scalars: scalar_roles.len(),
        cost_blocks,
        cost_scalars,
        objective_offset: base.objective_offset,
        rows,
        num_completeness,
        completeness: CompletenessKind::Reduced(kept_basis),
        lambda_rows,
        scalar_roles,
        identity_rows,
    };
    let reduction = Reduction {
        supports,
        kept_blocks,
        original_row,
        forced: base
            .lambda_rows
            .iter()
            .map(|&r| forced[r])
            .collect(),
    };
    Some((reduced, reduction))
}

fn assemble_result(
    form: &SdpStandardForm,
    raw: RawSolution,
    cfg: &SolverConfig,
) -> SolverResult {
    let mut status = match raw.status {
        RawStatus::Converged => SolveStatus::Optimal,
        RawStatus::IterationLimit => SolveStatus::IterationLimit,
        RawStatus::NumericalFailure | RawStatus::DualDiverged => SolveStatus::NumericalFailure,
    };

    let povm = if status == SolveStatus::Optimal {
        match povm_from_blocks(&raw.x.blocks, true) {
            Ok(p) => p,
            Err(_) => {
                status = SolveStatus::NumericalFailure;
                povm_from_blocks(&raw.x.blocks, false).expect("block shapes are fixed")
            }
        }
    } else {
        povm_from_blocks(&raw.x.blocks, false).expect("block shapes are fixed")
    };

    SolverResult {
        povm,
        dual: extract_dual(form, &raw.y, cfg.feas_tol),
        primal_value: raw.primal_objective,
        dual_value: raw.dual_objective,
        status,
        iterations: raw.iterations,
        residuals: residual_report(&raw),
        infeasibility: None,
        row_multipliers: raw.y,
    }
}

fn assemble_reduced_result(
    base: &SdpStandardForm,
    reduced: &SdpStandardForm,
    reduction: &Reduction,
    raw: RawSolution,
    cfg: &SolverConfig,
) -> SolverResult {
    let mut status = match raw.status {
        RawStatus::Converged => SolveStatus::Optimal,
        RawStatus::IterationLimit => SolveStatus::IterationLimit,
        RawStatus::NumericalFailure | RawStatus::DualDiverged => SolveStatus::NumericalFailure,
    };

    // Lift the blocks back to the full space: Π_m = V_m Ỹ_m V_m†.
    let d = base.complex_dim;
    let outcomes: Vec<HermitianOperator> = reduction
        .supports
        .iter()
        .zip(&reduction.kept_blocks)
        .map(|(v, kept)| match kept {
            Some(new_b) => {
                let mut block = raw.x.blocks[*new_b].clone();
                project_structure(&mut block);
                let compressed = HermitianOperator::hermitian_part(deembed(&block))
                    .expect("square block");
                HermitianOperator::hermitian_part(v * compressed.matrix() * v.adjoint())
                    .expect("square")
            }
            None => HermitianOperator::zeros(d),
        })
        .collect();
    let povm = if status == SolveStatus::Optimal {
        match Povm::new(outcomes.clone()) {
            Ok(p) => p,
            Err(_) => {
                status = SolveStatus::NumericalFailure;
                Povm::from_raw(outcomes).expect("shapes are fixed")
            }
        }
    } else {
        Povm::from_raw(outcomes).expect("shapes are fixed")
    };

    // Dual recovery: X̂ from the kept basis rows; λ_j from kept rows, zero
    // for rows eliminated as dependent equalities. Multipliers of pinned
    // rows are sign-free in the reduced problem, so the certificate of the
    // original inequality form may legitimately fail on them.
    let mut old_to_new = vec![None; base.rows.len()];
    for (new_r, origin) in reduction.original_row.iter().enumerate() {
        if let Some(old) = origin {
            old_to_new[*old] = Some(new_r);
        }
    }
    let dual = {
        let mut cert = extract_dual(reduced, &raw.y, cfg.feas_tol);
        cert.lambda = base
            .lambda_rows
            .iter()
            .map(|&old| {
                old_to_new[old].map_or(0.0, |new_r| clip_negative(raw.y[new_r], cfg.feas_tol))
            })
            .collect();
        cert
    };

    // Row multipliers in original indexing for derived layers.
    let mut row_multipliers = DVector::zeros(base.rows.len());
    for (old, new_r) in old_to_new.iter().enumerate() {
        if let Some(new_r) = new_r {
            row_multipliers[old] = raw.y[*new_r];
        }
    }

    SolverResult {
        povm,
        dual,
        primal_value: raw.primal_objective,
        dual_value: raw.dual_objective,
        status,
        iterations: raw.iterations,
        residuals: residual_report(&raw),
        infeasibility: None,
        row_multipliers,
    }
}

fn failure_result(form: &SdpStandardForm, raw: RawSolution, status: SolveStatus) -> SolverResult {
    let povm = povm_from_blocks(&raw.x.blocks, false).expect("block shapes are fixed");
    SolverResult {
        povm,
        dual: DualCertificate {
            x: HermitianOperator::zeros(form.complex_dim),
            lambda: vec![0.0; form.lambda_rows.len()],
        },
        primal_value: f64::NAN,
        dual_value: f64::NAN,
        status,
        iterations: raw.iterations,
        residuals: residual_report(&raw),
        infeasibility: None,
        row_multipliers: raw.y,
    }
}

/// Solves a compiled form: optional feasibility phase, facial reduction
/// when the interior is empty, then the main interior-point run.
/// Deterministic for fixed inputs and configuration.
pub fn solve(form: &SdpStandardForm, cfg: &SolverConfig) -> SolverResult {
    cfg.assert_valid();
    let rhs = form.rhs_vector();
    let b_max = rhs.amax();

    let mut warm: Option<BlockVec> = None;
    if !form.lambda_rows.is_empty() {
        let uniform = {
            let mut x = BlockVec::zeros(&form.block_sizes, form.num_scalars);
            for block in &mut x.blocks {
                block.fill_diagonal(1.0 / form.num_blocks() as f64);
            }
            x
        };
        let values = form.apply(&uniform.blocks, &uniform.scalars);
        let min_slack = form
            .lambda_rows
            .iter()
            .map(|&r| form.rows[r].rhs - values[r])
            .fold(f64::INFINITY, f64::min);
        let margin = 1e-6 * (1.0 + b_max);
        if min_slack <= margin {
            let phase1 = compile_phase1(form);
            let raw1 = ipm::solve_ipm(&phase1, cfg, None);
            let usable = raw1.status == RawStatus::Converged
                || (raw1.status == RawStatus::IterationLimit
                    && raw1.relative_gap <= 1e-5
                    && raw1.primal_residual <= 1e-5);
            if !usable {
                return failure_result(form, raw1, SolveStatus::NumericalFailure);
            }
            let max_min_slack = raw1.primal_objective;
            let certified_bound = raw1.dual_objective;
            let phase_gap = raw1.relative_gap;
            let cut = (10.0 * cfg.feas_tol).max(1e-6) * (1.0 + b_max);
            if max_min_slack < -cut {
                let mut result = failure_result(form, raw1, SolveStatus::Infeasible);
                result.infeasibility = Some(InfeasibilityInfo {
                    max_min_slack,
                    certified_bound,
                    phase_gap,
                });
                return result;
            }
            if max_min_slack <= cut {
                // Zero interior margin: one facial-reduction step.
                if let Some((reduced, reduction)) = reduce_form(form, &raw1, &phase1, b_max) {
                    let warm_blocks: Vec<DMatrix<f64>> = reduction
                        .supports
                        .iter()
                        .zip(&reduction.kept_blocks)
                        .zip(&raw1.x.blocks)
                        .filter_map(|((v, kept), block)| {
                            kept.map(|_| {
                                let h = HermitianOperator::hermitian_part(deembed(block))
                                    .expect("square");
                                embed_matrix(&compress(v, h.matrix()))
                            })
                        })
                        .collect();
                    let raw = ipm::solve_ipm(&reduced, cfg, Some(&warm_blocks));
                    return assemble_reduced_result(form, &reduced, &reduction, raw, cfg);
                }
            }
            warm = Some(raw1.x);
        }
    }

    let raw = ipm::solve_ipm(form, cfg, warm.as_ref().map(|w| w.blocks.as_slice()));
    assemble_result(form, raw, cfg)
}

/// Compiles and solves in one call.
pub fn solve_problem(problem: &DiscriminationProblem, cfg: &SolverConfig) -> SolverResult {
    solve(&compile(problem), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{random, DensityOperator, EnsembleKind, StateEnsemble};
    use crate::problem::DiscriminationProblem;
    use approx::assert_abs_diff_eq;

    fn success_problem(ensemble: &StateEnsemble) -> DiscriminationProblem {
        // Direct success-probability objective ĉ_m = ξ_m ρ̂_m with J = 0.
        let ops = (0..ensemble.num_states())
            .map(|m| ensemble.weighted_state(m))
            .collect();
        DiscriminationProblem::new(ops, Vec::new(), Vec::new()).unwrap()
    }

    fn orthogonal_pair() -> StateEnsemble {
        let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
        let rho1 = DensityOperator::pure_real(&[0.0, 1.0]).unwrap();
        StateEnsemble::new(vec![rho0, rho1], vec![0.5, 0.5]).unwrap()
    }

    fn helstrom_pair() -> StateEnsemble {
        let rho0 = DensityOperator::pure_real(&[1.0, 0.0]).unwrap();
        let plus = DensityOperator::pure_real(&[1.0, 1.0]).unwrap();
        StateEnsemble::new(vec![rho0, plus], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn compile_layout_without_constraints() {
        let problem = success_problem(&orthogonal_pair());
        let form = compile(&problem);
        assert_eq!(form.block_dims(), vec![4, 4]);
        assert_eq!(form.num_equalities(), 10); // 4·5/2 completeness rows
        assert_eq!(form.num_inequality_rows(), 0);
    }

    #[test]
    fn compile_layout_error_margin() {
        let problem = DiscriminationProblem::error_margin(&helstrom_pair(), 0.1).unwrap();
        let form = compile(&problem);
        assert_eq!(form.block_dims(), vec![4, 4, 4, 1]);
        assert_eq!(form.num_inequality_rows(), 1);
    }

    #[test]
    fn orthogonal_states_discriminate_perfectly() {
        let problem = success_problem(&orthogonal_pair());
        let result = solve_problem(&problem, &SolverConfig::default());
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(result.primal_value, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(result.dual_value, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn helstrom_value_reached() {
        // ½ + ½‖ξ₀ρ₀ − ξ₁ρ₁‖₁ = (1 + 1/√2)/2 for this pair.
        let expected = 0.5 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);
        let problem = success_problem(&helstrom_pair());
        let result = solve_problem(&problem, &SolverConfig::default());
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(result.primal_value, expected, epsilon = 1e-6);
        // Same optimum through the Bayes template, shifted by −1.
        let bayes = DiscriminationProblem::min_error(&helstrom_pair()).unwrap();
        let result = solve_problem(&bayes, &SolverConfig::default());
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(result.primal_value + 1.0, expected, epsilon = 1e-6);
    }

    #[test]
    fn optimal_povm_passes_invariants_and_gap_contract() {
        let cfg = SolverConfig::default();
        for seed in 0..5 {
            let ens = random::ensemble(3, 3, EnsembleKind::Mixed, seed);
            let problem = DiscriminationProblem::min_error(&ens).unwrap();
            let result = solve_problem(&problem, &cfg);
            assert_eq!(result.status, SolveStatus::Optimal);
            assert!(
                (result.primal_value - result.dual_value).abs()
                    <= cfg.gap_tol * (1.0 + result.primal_value.abs()) * 10.0
            );
            assert!(result.povm.completeness_residual() <= 1e-8);
            assert!(result.povm.min_outcome_eigenvalue().unwrap() >= -1e-8);
        }
    }

    #[test]
    fn scaling_the_objective_leaves_the_measurement_unchanged() {
        let ens = helstrom_pair();
        let base = success_problem(&ens);
        let base_result = solve_problem(&base, &SolverConfig::default());
        for scale in [0.5, 2.0] {
            let ops = (0..2).map(|m| ens.weighted_state(m).scaled(scale)).collect();
            let scaled = DiscriminationProblem::new(ops, Vec::new(), Vec::new()).unwrap();
            let result = solve_problem(&scaled, &SolverConfig::default());
            assert_eq!(result.status, SolveStatus::Optimal);
            assert_abs_diff_eq!(
                result.primal_value,
                scale * base_result.primal_value,
                epsilon = 1e-6
            );
            for (a, b) in result.povm.outcomes().iter().zip(base_result.povm.outcomes()) {
                assert!((a.matrix() - b.matrix()).norm() <= 1e-5);
            }
        }
    }

    #[test]
    fn impossible_success_floor_is_reported_infeasible() {
        let ens = helstrom_pair();
        // q = 0.9 exceeds what any measurement can deliver alongside a
        // forced failure rate: the feasibility phase certifies emptiness.
        let problem = DiscriminationProblem::bounded_inconclusive(&ens, 0.05, 0.9).unwrap();
        let result = solve_problem(&problem, &SolverConfig::default());
        assert_eq!(result.status, SolveStatus::Infeasible);
        let info = result.infeasibility.expect("infeasibility info");
        assert!(info.max_min_slack < 0.0);
    }

    #[test]
    fn zero_margin_unambiguous_solve_uses_facial_reduction() {
        // ε = 0 pins the margin row: the feasible set has no interior and
        // the optimum is the unambiguous-discrimination value 1 − s.
        let s = 0.3;
        let theta: f64 = (s as f64).acos() / 2.0;
        let psi0 = DensityOperator::pure_real(&[theta.cos(), theta.sin()]).unwrap();
        let psi1 = DensityOperator::pure_real(&[theta.cos(), -theta.sin()]).unwrap();
        let ens = StateEnsemble::new(vec![psi0, psi1], vec![0.5, 0.5]).unwrap();
        let problem = DiscriminationProblem::error_margin(&ens, 0.0).unwrap();
        let result = solve_problem(&problem, &SolverConfig::default());
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(result.primal_value, 1.0 - s, epsilon = 1e-6);
    }

    #[test]
    fn dual_extraction_clips_small_negatives() {
        let problem = DiscriminationProblem::error_margin(&helstrom_pair(), 0.2).unwrap();
        let form = compile(&problem);
        let mut y = DVector::zeros(form.num_equalities());
        y[form.lambda_rows[0]] = -1e-9;
        let cert = extract_dual(&form, &y, 1e-8);
        assert_eq!(cert.lambda, vec![0.0]);
        let cert = extract_dual(&form, &y, 1e-10);
        assert!(cert.lambda[0] < 0.0);
    }

    #[test]
    fn dual_round_trip_through_embedding() {
        // Completeness multiplier set to ι(X̂)/2 must de-embed back to X̂.
        let x_target = random::hermitian(2, 1.0, 99);
        let problem = success_problem(&helstrom_pair());
        let form = compile(&problem);
        let z = embed_matrix(x_target.matrix()).scale(0.5);
        let mut y = DVector::zeros(form.num_equalities());
        let mut idx = 0;
        for p in 0..4 {
            for q in p..4 {
                y[idx] = if p == q {
                    z[(p, q)]
                } else {
                    z[(p, q)] * std::f64::consts::SQRT_2
                };
                idx += 1;
            }
        }
        let cert = extract_dual(&form, &y, 1e-8);
        assert!((cert.x.matrix() - x_target.matrix()).norm() <= 1e-12);
    }
}
