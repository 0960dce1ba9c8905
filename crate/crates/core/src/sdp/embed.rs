//! Complex-to-real symmetric embedding.
//!
//! A Hermitian `H = A + iB` maps to the real symmetric
//!
//! ```text
//! ι(H) = [ A  −B ]
//!        [ B   A ]
//! ```
//!
//! which doubles the dimension, doubles traces, duplicates every
//! eigenvalue, and turns operator products into matrix products. The image
//! of the embedding is the set of symmetric matrices commuting with the
//! embedded imaginary unit `J = [[0, −I], [I, 0]]`; interior-point iterates
//! stay in that subspace when all problem data does.

use nalgebra::DMatrix;

use crate::operator::C64;

/// Embeds a complex Hermitian matrix as a `2d × 2d` real symmetric matrix.
pub(crate) fn embed(h: &DMatrix<C64>) -> DMatrix<f64> {
    let d = h.nrows();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let v = h[(i, j)];
            out[(i, j)] = v.re;
            out[(i + d, j + d)] = v.re;
            out[(i, j + d)] = -v.im;
            out[(i + d, j)] = v.im;
        }
    }
    out
}

/// Inverse of [`embed`] on the structured subspace; averages the redundant
/// copies so that arbitrary symmetric input produces its nearest structured
/// complex matrix.
pub(crate) fn deembed(y: &DMatrix<f64>) -> DMatrix<C64> {
    let n = y.nrows();
    debug_assert_eq!(n % 2, 0);
    let d = n / 2;
    DMatrix::from_fn(d, d, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(i + d, j + d)]);
        let im = 0.5 * (y[(i + d, j)] - y[(i, j + d)]);
        C64::new(re, im)
    })
}

/// Frobenius norm of the commutator `[Y, J]`; zero exactly on the embedded
/// subspace.
pub(crate) fn structure_residual(y: &DMatrix<f64>) -> f64 {
    let n = y.nrows();
    let d = n / 2;
    // J has columns: e_{i+d} for i < d, −e_i for i ≥ d.
    // (YJ)_{r,c} = Y_{r,c+d} for c < d, −Y_{r,c−d} for c ≥ d.
    // (JY)_{r,c} = −Y_{r+d,c} for r < d, Y_{r−d,c} for r ≥ d.
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            let yj = if c < d { y[(r, c + d)] } else { -y[(r, c - d)] };
            let jy = if r < d { -y[(r + d, c)] } else { y[(r - d, c)] };
            let diff = yj - jy;
            acc += diff * diff;
        }
    }
    acc.sqrt()
}

/// Orthogonal projection onto symmetric matrices commuting with `J`:
/// symmetrize, then average `Y` with `JᵀYJ`. Preserves positive
/// semidefiniteness and every pairing against structured data.
pub(crate) fn project_structure(y: &mut DMatrix<f64>) {
    let n = y.nrows();
    let d = n / 2;
    // Symmetrize first.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (y[(i, j)] + y[(j, i)]);
            y[(i, j)] = v;
            y[(j, i)] = v;
        }
    }
    // (JᵀYJ)_{r,c}: Jᵀ = −J, so JᵀYJ = (−J)Y(J) and entrywise
    // (JᵀYJ)_{r,c} = (Y)_{σ(r),σ(c)}·s(r)·s(c) with σ swapping the halves
    // and signs s(r) = +1 for r < d, −1 otherwise... computed directly:
    let mut avg = y.clone();
    for r in 0..n {
        for c in 0..n {
            let (rr, sr) = if r < d { (r + d, 1.0) } else { (r - d, -1.0) };
            let (cc, sc) = if c < d { (c + d, 1.0) } else { (c - d, -1.0) };
            avg[(r, c)] = 0.5 * (y[(r, c)] + sr * sc * y[(rr, cc)]);
        }
    }
    *y = avg;
}
