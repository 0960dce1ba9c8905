//! Block standard form consumed by the interior-point core.
//!
//! Variables are embedded PSD blocks plus a vector of nonnegative scalars
//! (inequality slacks and, for derived forms, a shifted objective scalar).
//! Constraints are equalities `⟨A_i, X⟩ = b_i`: completeness rows pin
//! `Σ_m Π̂_m = 1̂`, and each user inequality becomes one row with a slack.
//!
//! All block data are scaled embeddings `ι(·)/2`, which makes every pairing
//! equal its complex counterpart and lets the completeness multiplier
//! de-embed directly to the dual operator `X̂`. The full-space compilation
//! expresses completeness on an orthonormal symmetric basis ([`RowCoeff::Basis`]);
//! facially reduced forms use explicit compressed coefficients paired with
//! a complex Hermitian basis for dual recovery.
//!
//! Equality rows are linearly independent by construction in the full-space
//! compilation (orthonormal completeness basis, one fresh slack per
//! inequality row); reduced forms re-establish independence with a
//! Gram-based rank check at compile time.

use nalgebra::{DMatrix, DVector};

use crate::operator::HermitianOperator;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Initialization role of a scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ScalarRole {
    /// Slack of the given row: starts at `max(b − value, 1)`.
    SlackOfRow(usize),
    /// Shifted objective scalar of a derived form: starts at 1.
    Shifted,
    /// Carried over from a parent form with no objective role: starts at 1.
    Auxiliary,
}

/// Coefficient of one equality row.
#[derive(Debug, Clone)]
pub(crate) enum RowCoeff {
    /// The same orthonormal symmetric basis element `B_pq` in every PSD
    /// block (`p ≤ q`); no scalar entries. Valid only when all blocks share
    /// one size.
    Basis { p: usize, q: usize },
    /// Sparse explicit coefficients.
    Linear {
        blocks: Vec<(usize, DMatrix<f64>)>,
        scalars: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct ConstraintRow {
    pub rhs: f64,
    pub coeff: RowCoeff,
}

/// How the leading completeness rows encode the dual operator.
#[derive(Debug, Clone)]
pub(crate) enum CompletenessKind {
    /// Rows are `Basis{p,q}` over the full embedded space: the multiplier
    /// matrix de-embeds to `X̂` directly.
    Standard,
    /// Rows are compressed `Linear` rows paired one-to-one with these
    /// complex Hermitian basis elements: `X̂ = Σ_i y_i E_i`.
    Reduced(Vec<HermitianOperator>),
}

/// A compiled semidefinite program over embedded Hermitian blocks.
#[derive(Debug, Clone)]
pub struct SdpStandardForm {
    /// Hilbert-space dimension of the original (uncompressed) problem.
    pub(crate) complex_dim: usize,
    pub(crate) block_sizes: Vec<usize>,
    pub(crate) num_scalars: usize,
    pub(crate) cost_blocks: Vec<DMatrix<f64>>,
    pub(crate) cost_scalars: DVector<f64>,
    /// Added to `⟨C, X⟩` when reporting objective values.
    pub(crate) objective_offset: f64,
    pub(crate) rows: Vec<ConstraintRow>,
    /// The first `num_completeness` rows pin POVM completeness.
    pub(crate) num_completeness: usize,
    pub(crate) completeness: CompletenessKind,
    /// Indices of rows whose multipliers are the inequality duals `λ_j`.
    pub(crate) lambda_rows: Vec<usize>,
    pub(crate) scalar_roles: Vec<ScalarRole>,
    /// Multiplier combination whose adjoint adds the identity to every
    /// block: used to shift dual starting points into the interior.
    pub(crate) identity_rows: Vec<(usize, f64)>,
}

impl SdpStandardForm {
    /// Hilbert-space dimension `d` of the original problem.
    pub fn complex_dim(&self) -> usize {
        self.complex_dim
    }

    pub(crate) fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Sizes of all variable blocks: the embedded PSD blocks, then one
    /// entry per nonnegative scalar.
    pub fn block_dims(&self) -> Vec<usize> {
        let mut dims = self.block_sizes.clone();
        dims.extend(std::iter::repeat(1).take(self.num_scalars));
        dims
    }

    pub fn num_equalities(&self) -> usize {
        self.rows.len()
    }

    pub fn num_inequality_rows(&self) -> usize {
        self.lambda_rows.len()
    }

    pub(crate) fn rhs_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.rhs))
    }

    /// `⟨A_i, X⟩` for every row.
    pub(crate) fn apply(&self, blocks: &[DMatrix<f64>], scalars: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = self.row_inner(&row.coeff, blocks, scalars);
        }
        out
    }

    pub(crate) fn row_inner(
        &self,
        coeff: &RowCoeff,
        blocks: &[DMatrix<f64>],
        scalars: &DVector<f64>,
    ) -> f64 {
        match coeff {
            RowCoeff::Basis { p, q } => {
                let mut acc = 0.0;
                for block in blocks {
                    acc += basis_inner(*p, *q, block);
                }
                acc
            }
            RowCoeff::Linear {
                blocks: coeffs,
                scalars: scalar_coeffs,
            } => {
                let mut acc = 0.0;
                for (b, coeff) in coeffs {
                    acc += frob_inner(coeff, &blocks[*b]);
                }
                for (s, c) in scalar_coeffs {
                    acc += c * scalars[*s];
                }
                acc
            }
        }
    }

    /// Accumulates `Σ_i y_i A_i` into the given block/scalar storage.
    pub(crate) fn apply_adjoint(
        &self,
        y: &DVector<f64>,
        blocks: &mut [DMatrix<f64>],
        scalars: &mut DVector<f64>,
    ) {
        for block in blocks.iter_mut() {
            block.fill(0.0);
        }
        scalars.fill(0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let w = y[i];
            if w == 0.0 {
                continue;
            }
            match &row.coeff {
                RowCoeff::Basis { p, q } => {
                    if p == q {
                        for block in blocks.iter_mut() {
                            block[(*p, *p)] += w;
                        }
                    } else {
                        for block in blocks.iter_mut() {
                            block[(*p, *q)] += w * SQRT_HALF;
                            block[(*q, *p)] += w * SQRT_HALF;
                        }
                    }
                }
                RowCoeff::Linear {
                    blocks: coeffs,
                    scalars: scalar_coeffs,
                } => {
                    for (b, coeff) in coeffs {
                        blocks[*b].zip_apply(coeff, |dst, src| *dst += w * src);
                    }
                    for (s, c) in scalar_coeffs {
                        scalars[*s] += w * c;
                    }
                }
            }
        }
    }
}

/// `⟨B_pq, M⟩` for the orthonormal symmetric basis element.
#[inline]
pub(crate) fn basis_inner(p: usize, q: usize, m: &DMatrix<f64>) -> f64 {
    if p == q {
        m[(p, p)]
    } else {
        SQRT_HALF * (m[(p, q)] + m[(q, p)])
    }
}

/// Frobenius inner product `⟨A, B⟩ = Σ A_ij B_ij` of equal-size matrices.
#[inline]
pub(crate) fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `X · B_pq · Z` via rank-two outer products.
pub(crate) fn basis_sandwich(
    p: usize,
    q: usize,
    x: &DMatrix<f64>,
    z: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, n);
    if p == q {
        for i in 0..n {
            let xp = x[(i, p)];
            for j in 0..n {
                out[(i, j)] = xp * z[(p, j)];
            }
        }
    } else {
        for i in 0..n {
            let xp = x[(i, p)];
            let xq = x[(i, q)];
            for j in 0..n {
                out[(i, j)] = SQRT_HALF * (xp * z[(q, j)] + xq * z[(p, j)]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(seed: u64, n: usize) -> DMatrix<f64> {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        0.5 * (&raw + raw.transpose())
    }

    #[test]
    fn basis_sandwich_matches_dense_product() {
        let n = 5;
        let x = sym(1, n);
        let z = sym(2, n);
        for p in 0..n {
            for q in p..n {
                let mut b = DMatrix::zeros(n, n);
                if p == q {
                    b[(p, p)] = 1.0;
                } else {
                    b[(p, q)] = SQRT_HALF;
                    b[(q, p)] = SQRT_HALF;
                }
                let dense = &x * &b * &z;
                let fast = basis_sandwich(p, q, &x, &z);
                assert!((dense - fast).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn basis_inner_matches_dense_inner() {
        let n = 4;
        let m = sym(3, n);
        for p in 0..n {
            for q in p..n {
                let mut b = DMatrix::zeros(n, n);
                if p == q {
                    b[(p, p)] = 1.0;
                } else {
                    b[(p, q)] = SQRT_HALF;
                    b[(q, p)] = SQRT_HALF;
                }
                assert!((frob_inner(&b, &m) - basis_inner(p, q, &m)).abs() <= 1e-13);
            }
        }
    }
}
