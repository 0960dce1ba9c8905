//! Primal-dual path-following interior-point core.
//!
//! Mehrotra predictor-corrector with the HKM linearization, in the
//! maximization convention:
//!
//! ```text
//! primal:  max ⟨C, X⟩   s.t.  A(X) = b,  X ⪰ 0
//! dual:    min bᵀy      s.t.  S = Aᵀ(y) − C ⪰ 0
//! ```
//!
//! Each step linearizes `X S = τ1̂` as `dX S + X dS = τ1̂ − XS − E`, takes
//! `dS = Aᵀ(dy) + R_d`, and eliminates `dX` into the dense Schur system
//! `O dy = A(H) − b` with `O_ik = ⟨A_i, X A_k S⁻¹⟩`, which is symmetric
//! positive definite whenever the rows are independent and the iterate is
//! interior. Rows are independent by construction: every inequality row
//! carries its own slack scalar and the completeness rows form an
//! orthonormal basis (reduced forms re-establish independence through a
//! rank check at compile time). Starting points may violate the equalities
//! (infeasible start); residuals enter the Newton right-hand side.
//!
//! Before declaring optimality the solver takes two plain centering steps
//! (`σ = 1`): they keep the objective pair and feasibility residuals while
//! pulling `X S` back to a multiple of the identity, which is what makes
//! complementary-slackness products of the returned pair small, not just
//! their traces.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::embed::{project_structure, structure_residual};
use super::form::{basis_inner, basis_sandwich, frob_inner, RowCoeff, ScalarRole, SdpStandardForm};
use super::{IterateRecord, SolverConfig};

/// Block-diagonal element: dense symmetric blocks plus nonnegative scalars.
#[derive(Debug, Clone)]
pub(crate) struct BlockVec {
    pub blocks: Vec<DMatrix<f64>>,
    pub scalars: DVector<f64>,
}

impl BlockVec {
    pub fn zeros(block_sizes: &[usize], num_scalars: usize) -> Self {
        Self {
            blocks: block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            scalars: DVector::zeros(num_scalars),
        }
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self {
            blocks: other
                .blocks
                .iter()
                .map(|b| DMatrix::zeros(b.nrows(), b.ncols()))
                .collect(),
            scalars: DVector::zeros(other.scalars.len()),
        }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            acc += frob_inner(a, b);
        }
        acc + self.scalars.dot(&other.scalars)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn add_scaled(&mut self, factor: f64, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.zip_apply(b, |dst, src| *dst += factor * src);
        }
        self.scalars
            .zip_apply(&other.scalars, |dst, src| *dst += factor * src);
    }

    fn symmetrize_blocks(&mut self) {
        for block in &mut self.blocks {
            let n = block.nrows();
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = 0.5 * (block[(i, j)] + block[(j, i)]);
                    block[(i, j)] = v;
                    block[(j, i)] = v;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawStatus {
    Converged,
    IterationLimit,
    NumericalFailure,
    DualDiverged,
}

#[derive(Debug, Clone)]
pub(crate) struct RawSolution {
    pub x: BlockVec,
    pub y: DVector<f64>,
    pub status: RawStatus,
    pub iterations: usize,
    pub records: Vec<IterateRecord>,
    pub max_structure_drift: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
}

fn min_eig_sym(m: &DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(f64::INFINITY);
    }
    nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000)
        .map(|e| e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest `α` with `P + α·D ⪰ 0` for an interior block `P`.
fn max_step_block(pos: &DMatrix<f64>, dir: &DMatrix<f64>) -> Option<f64> {
    let chol = cholesky_with_jitter(pos)?;
    let l = chol.l();
    let t1 = l.solve_lower_triangular(dir)?;
    let t2 = l.solve_lower_triangular(&t1.transpose())?;
    let mut w = t2.transpose();
    let n = w.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (w[(i, j)] + w[(j, i)]);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    let lambda = min_eig_sym(&w)?;
    Some(if lambda >= -1e-13 { f64::INFINITY } else { -1.0 / lambda })
}

fn max_step(pos: &BlockVec, dir: &BlockVec) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (p, d) in pos.blocks.iter().zip(&dir.blocks) {
        alpha = alpha.min(max_step_block(p, d)?);
    }
    for (p, d) in pos.scalars.iter().zip(dir.scalars.iter()) {
        if *d < 0.0 {
            alpha = alpha.min(-p / d);
        }
    }
    Some(alpha)
}

fn cholesky_with_jitter(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().amax().max(1e-300);
    let mut jitter = 1e-14 * scale;
    for _ in 0..4 {
        let mut jm = m.clone();
        for i in 0..m.nrows() {
            jm[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(jm) {
            return Some(c);
        }
        jitter *= 100.0;
    }
    None
}

/// `O_ik = Σ_b ⟨A_i, X_b A_k S_b⁻¹⟩ + Σ_s a_is a_ks x_s/s_s`, exactly
/// symmetrized.
fn assemble_schur(form: &SdpStandardForm, x: &BlockVec, s_inv: &BlockVec) -> DMatrix<f64> {
    let p = form.rows.len();
    let mut o = DMatrix::zeros(p, p);
    let scalar_weights: Vec<f64> = x
        .scalars
        .iter()
        .zip(s_inv.scalars.iter())
        .map(|(a, b)| a * b)
        .collect();
    for k in 0..p {
        let tk: Vec<Option<DMatrix<f64>>> = match &form.rows[k].coeff {
            RowCoeff::Basis { p: bp, q: bq } => (0..form.num_blocks())
                .map(|b| Some(basis_sandwich(*bp, *bq, &x.blocks[b], &s_inv.blocks[b])))
                .collect(),
            RowCoeff::Linear { blocks, .. } => {
                let mut v: Vec<Option<DMatrix<f64>>> = vec![None; form.num_blocks()];
                for (b, a) in blocks {
                    v[*b] = Some(&x.blocks[*b] * a * &s_inv.blocks[*b]);
                }
                v
            }
        };
        let k_scalars: &[(usize, f64)] = match &form.rows[k].coeff {
            RowCoeff::Linear { scalars, .. } => scalars,
            _ => &[],
        };
        for i in 0..=k {
            let mut acc = 0.0;
            match &form.rows[i].coeff {
                RowCoeff::Basis { p: ip, q: iq } => {
                    for t in tk.iter().flatten() {
                        acc += basis_inner(*ip, *iq, t);
                    }
                }
                RowCoeff::Linear { blocks, scalars } => {
                    for (b, a) in blocks {
                        if let Some(t) = &tk[*b] {
                            acc += frob_inner(a, t);
                        }
                    }
                    for (s, c) in scalars {
                        for (s2, c2) in k_scalars {
                            if s2 == s {
                                acc += c * c2 * scalar_weights[*s];
                            }
                        }
                    }
                }
            }
            o[(i, k)] = acc;
            o[(k, i)] = acc;
        }
    }
    o
}

struct Direction {
    dx: BlockVec,
    dy: DVector<f64>,
    ds: BlockVec,
}

/// Solves one Newton system for complementarity target `τ` and optional
/// second-order correction `E = dX_aff dS_aff`.
#[allow(clippy::too_many_arguments)]
fn newton_direction(
    form: &SdpStandardForm,
    x: &BlockVec,
    s_inv: &BlockVec,
    r_d: &BlockVec,
    schur: &Cholesky<f64, Dyn>,
    rhs: &DVector<f64>,
    tau: f64,
    correction: Option<&BlockVec>,
) -> Direction {
    // H = τ S⁻¹ − E S⁻¹ − X R_d S⁻¹
    let mut h = BlockVec::zeros_like(x);
    for b in 0..x.blocks.len() {
        let mut acc = &x.blocks[b] * &r_d.blocks[b];
        if let Some(e) = correction {
            acc += &e.blocks[b];
        }
        let mut hb = -acc * &s_inv.blocks[b];
        if tau != 0.0 {
            hb.zip_apply(&s_inv.blocks[b], |dst, src| *dst += tau * src);
        }
        h.blocks[b] = hb;
    }
    for s in 0..x.scalars.len() {
        let mut acc = x.scalars[s] * r_d.scalars[s];
        if let Some(e) = correction {
            acc += e.scalars[s];
        }
        h.scalars[s] = (tau - acc) * s_inv.scalars[s];
    }

    let mut rhs_vec = form.apply(&h.blocks, &h.scalars);
    rhs_vec -= rhs;
    let dy = schur.solve(&rhs_vec);

    let mut adjoint = BlockVec::zeros_like(x);
    form.apply_adjoint(&dy, &mut adjoint.blocks, &mut adjoint.scalars);

    let mut ds = adjoint.clone();
    ds.add_scaled(1.0, r_d);

    // dX = H − X − X Aᵀ(dy) S⁻¹, symmetrized.
    let mut dx = h;
    dx.add_scaled(-1.0, x);
    for b in 0..x.blocks.len() {
        let t = &x.blocks[b] * &adjoint.blocks[b] * &s_inv.blocks[b];
        dx.blocks[b] -= t;
    }
    for s in 0..x.scalars.len() {
        dx.scalars[s] -= x.scalars[s] * adjoint.scalars[s] * s_inv.scalars[s];
    }
    dx.symmetrize_blocks();

    Direction { dx, dy, ds }
}

fn initialize(
    form: &SdpStandardForm,
    warm_blocks: Option<&[DMatrix<f64>]>,
) -> (BlockVec, DVector<f64>, BlockVec) {
    let m = form.num_blocks();

    // Primal: the uniform POVM embeds to 1̂/M per block, optionally blended
    // with a feasibility-phase iterate; slacks follow max(b − value, 1).
    let mut x = BlockVec::zeros(&form.block_sizes, form.num_scalars);
    for block in &mut x.blocks {
        block.fill_diagonal(1.0 / m as f64);
    }
    if let Some(warm) = warm_blocks {
        for (b, w) in x.blocks.iter_mut().zip(warm) {
            *b = 0.75 * w + 0.25 * &*b;
        }
    }
    let values = form.apply(&x.blocks, &DVector::zeros(form.num_scalars));
    for (s, role) in form.scalar_roles.iter().enumerate() {
        x.scalars[s] = match role {
            ScalarRole::SlackOfRow(row) => (form.rows[*row].rhs - values[*row]).max(1.0),
            ScalarRole::Shifted | ScalarRole::Auxiliary => 1.0,
        };
    }

    // Dual: X̂ at (1 + max_m ‖ĉ_m‖)·1̂ and inequality multipliers at 1, then
    // a diagonal shift as needed to make every dual slack block interior.
    let mut cnorm: f64 = 0.0;
    for block in &form.cost_blocks {
        cnorm = cnorm.max(std::f64::consts::SQRT_2 * block.norm());
    }
    if form.num_scalars > 0 {
        cnorm = cnorm.max(form.cost_scalars.amax());
    }
    let eta = 1.0 + cnorm;

    let mut y = DVector::zeros(form.rows.len());
    for (i, row) in form.rows.iter().enumerate() {
        if let RowCoeff::Linear { scalars, .. } = &row.coeff {
            if !scalars.is_empty() {
                y[i] = 1.0;
            }
        }
    }
    // Dual operator starts at a multiple of the identity through the
    // recorded identity combination of completeness rows.
    for &(row, weight) in &form.identity_rows {
        y[row] += 0.5 * eta * weight;
    }
    // Rows sharing the shifted objective scalar must leave its dual slack
    // strictly positive: scale their multipliers so the slack lands at 1.
    if let Some(t) = form
        .scalar_roles
        .iter()
        .position(|r| matches!(r, ScalarRole::Shifted))
    {
        let mut rows_with_t = Vec::new();
        let mut total = 0.0;
        for (i, row) in form.rows.iter().enumerate() {
            if let RowCoeff::Linear { scalars, .. } = &row.coeff {
                if let Some((_, coeff)) = scalars.iter().find(|(s, _)| *s == t) {
                    rows_with_t.push(i);
                    total += y[i] * coeff;
                }
            }
        }
        if total > 0.0 {
            let factor = (1.0 + form.cost_scalars[t]) / total;
            for &i in &rows_with_t {
                y[i] *= factor;
            }
        }
    }

    let assemble_s = |y: &DVector<f64>| {
        let mut s = BlockVec::zeros(&form.block_sizes, form.num_scalars);
        form.apply_adjoint(y, &mut s.blocks, &mut s.scalars);
        for (b, c) in s.blocks.iter_mut().zip(&form.cost_blocks) {
            *b -= c;
        }
        s.scalars -= &form.cost_scalars;
        s
    };
    let mut s = assemble_s(&y);

    let mut worst = f64::INFINITY;
    for block in &s.blocks {
        worst = worst.min(min_eig_sym(block).unwrap_or(f64::NEG_INFINITY));
    }
    let floor = 1.0_f64.max(0.1 * eta);
    if worst < floor {
        let shift = floor - worst;
        for &(row, weight) in &form.identity_rows {
            y[row] += shift * weight;
        }
        s = assemble_s(&y);
    }

    (x, y, s)
}

struct Snapshot {
    x: BlockVec,
    y: DVector<f64>,
    record: IterateRecord,
    merit: f64,
}

pub(crate) fn solve_ipm(
    form: &SdpStandardForm,
    cfg: &SolverConfig,
    warm_blocks: Option<&[DMatrix<f64>]>,
) -> RawSolution {
    let rhs = form.rhs_vector();
    let b_norm = rhs.norm();
    let c_norm = {
        let mut acc = form.cost_scalars.norm_squared();
        for block in &form.cost_blocks {
            acc += block.norm_squared();
        }
        acc.sqrt()
    };
    let total_dim =
        (form.block_sizes.iter().sum::<usize>() + form.num_scalars).max(1) as f64;

    let (mut x, mut y, mut s) = initialize(form, warm_blocks);

    let mut records: Vec<IterateRecord> = Vec::new();
    let mut max_drift: f64 = 0.0;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut stagnant = 0;
    let mut centering_rounds = 0;
    let mut best: Option<Snapshot> = None;
    let status;

    loop {
        // Iterates must stay within the embedded complex structure; measure
        // the drift, then project it away (exact on structured data).
        for block in x.blocks.iter_mut().chain(s.blocks.iter_mut()) {
            max_drift = max_drift.max(structure_residual(block));
            project_structure(block);
        }

        // Residuals and objective values at the current iterate.
        let ax = form.apply(&x.blocks, &x.scalars);
        let r_p = &rhs - &ax;
        let mut r_d = BlockVec::zeros_like(&x);
        form.apply_adjoint(&y, &mut r_d.blocks, &mut r_d.scalars);
        for (b, c) in r_d.blocks.iter_mut().zip(&form.cost_blocks) {
            *b -= c;
        }
        r_d.scalars -= &form.cost_scalars;
        r_d.add_scaled(-1.0, &s);

        let x_dot_s = x.inner(&s);
        let mu = x_dot_s / total_dim;
        let primal_objective = {
            let mut acc = form.cost_scalars.dot(&x.scalars);
            for (c, b) in form.cost_blocks.iter().zip(&x.blocks) {
                acc += frob_inner(c, b);
            }
            acc + form.objective_offset
        };
        let dual_objective = rhs.dot(&y) + form.objective_offset;
        let primal_residual = r_p.norm() / (1.0 + b_norm);
        let dual_residual = r_d.norm() / (1.0 + c_norm);
        let relative_gap =
            (dual_objective - primal_objective).abs() / (1.0 + primal_objective.abs());

        let record = IterateRecord {
            primal_objective,
            dual_objective,
            primal_residual,
            dual_residual,
            complementarity: x_dot_s,
        };
        records.push(record.clone());

        let merit = primal_residual.max(dual_residual).max(relative_gap);
        let improved = best.as_ref().map_or(true, |b| merit < 0.999 * b.merit);
        if best.as_ref().map_or(true, |b| merit < b.merit) {
            best = Some(Snapshot {
                x: x.clone(),
                y: y.clone(),
                record,
                merit,
            });
        }
        if improved {
            stagnant = 0;
        } else {
            stagnant += 1;
        }

        let converged = primal_residual <= cfg.feas_tol
            && dual_residual <= cfg.feas_tol
            && relative_gap <= cfg.gap_tol;
        if converged && centering_rounds >= 2 {
            status = RawStatus::Converged;
            break;
        }
        if !primal_objective.is_finite() || !dual_objective.is_finite() {
            status = RawStatus::NumericalFailure;
            break;
        }
        if dual_objective < -cfg.infeasibility_threshold {
            status = RawStatus::DualDiverged;
            break;
        }
        if iterations >= cfg.max_iters {
            status = RawStatus::IterationLimit;
            break;
        }
        if stagnant >= 12 {
            // No measurable progress for many rounds: stop at the best
            // iterate instead of grinding into numerical breakdown.
            status = if best.as_ref().is_some_and(|b| b.merit <= 1e-4) {
                RawStatus::IterationLimit
            } else {
                RawStatus::NumericalFailure
            };
            break;
        }

        // Factor the dual slack.
        let mut s_inv = BlockVec::zeros_like(&s);
        let mut factor_failed = false;
        for (b, inv) in s.blocks.iter().zip(s_inv.blocks.iter_mut()) {
            match cholesky_with_jitter(b) {
                Some(chol) => *inv = chol.inverse(),
                None => {
                    factor_failed = true;
                    break;
                }
            }
        }
        if !factor_failed {
            for (v, inv) in s.scalars.iter().zip(s_inv.scalars.iter_mut()) {
                if *v <= 0.0 {
                    factor_failed = true;
                    break;
                }
                *inv = 1.0 / v;
            }
        }
        if factor_failed {
            status = RawStatus::NumericalFailure;
            break;
        }

        let schur = assemble_schur(form, &x, &s_inv);
        let schur_chol = match cholesky_with_jitter(&schur) {
            Some(c) => c,
            None => {
                status = RawStatus::NumericalFailure;
                break;
            }
        };

        let step = if converged {
            // Final centering: plain Newton toward X S = μ1̂ to make the
            // returned pair centrally complementary.
            centering_rounds += 1;
            newton_direction(form, &x, &s_inv, &r_d, &schur_chol, &rhs, mu, None)
        } else {
            // Predictor: pure Newton step toward the boundary.
            let affine =
                newton_direction(form, &x, &s_inv, &r_d, &schur_chol, &rhs, 0.0, None);
            let (alpha_p_aff, alpha_d_aff) =
                match (max_step(&x, &affine.dx), max_step(&s, &affine.ds)) {
                    (Some(a), Some(b)) => (a.min(1.0), b.min(1.0)),
                    _ => {
                        status = RawStatus::NumericalFailure;
                        break;
                    }
                };
            let mu_affine = {
                let xs = x_dot_s
                    + alpha_p_aff * affine.dx.inner(&s)
                    + alpha_d_aff * x.inner(&affine.ds)
                    + alpha_p_aff * alpha_d_aff * affine.dx.inner(&affine.ds);
                (xs / total_dim).max(0.0)
            };
            let sigma = if mu > 0.0 {
                ((mu_affine / mu).powi(3)).clamp(0.0, 1.0)
            } else {
                0.0
            };

            // Corrector with second-order term dX_aff dS_aff.
            let mut correction = BlockVec::zeros_like(&x);
            for b in 0..x.blocks.len() {
                correction.blocks[b] = &affine.dx.blocks[b] * &affine.ds.blocks[b];
            }
            for sidx in 0..x.scalars.len() {
                correction.scalars[sidx] = affine.dx.scalars[sidx] * affine.ds.scalars[sidx];
            }
            newton_direction(
                form,
                &x,
                &s_inv,
                &r_d,
                &schur_chol,
                &rhs,
                sigma * mu,
                Some(&correction),
            )
        };

        let (alpha_p, alpha_d) = match (max_step(&x, &step.dx), max_step(&s, &step.ds)) {
            (Some(a), Some(b)) => (
                (cfg.step_fraction * a).min(1.0),
                (cfg.step_fraction * b).min(1.0),
            ),
            _ => {
                status = RawStatus::NumericalFailure;
                break;
            }
        };

        if alpha_p < 1e-10 && alpha_d < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                status = RawStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }

        x.add_scaled(alpha_p, &step.dx);
        y.axpy(alpha_d, &step.dy, 1.0);
        s.add_scaled(alpha_d, &step.ds);
        iterations += 1;
    }

    // Everything except a clean convergence reports the best iterate seen.
    let (x, y, last) = if status == RawStatus::Converged {
        let last = records.last().cloned().expect("at least one record");
        (x, y, last)
    } else if let Some(snapshot) = best {
        (snapshot.x, snapshot.y, snapshot.record)
    } else {
        let last = records.last().cloned().expect("at least one record");
        (x, y, last)
    };

    RawSolution {
        x,
        y,
        status,
        iterations,
        max_structure_drift: max_drift,
        primal_objective: last.primal_objective,
        dual_objective: last.dual_objective,
        primal_residual: last.primal_residual,
        dual_residual: last.dual_residual,
        relative_gap: (last.dual_objective - last.primal_objective).abs()
            / (1.0 + last.primal_objective.abs()),
        records,
    }
}
