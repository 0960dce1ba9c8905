//! Seeded random generation of states, ensembles, POVMs, and unitaries.
//!
//! All generators take an explicit seed and are reproducible: the same seed
//! yields bitwise-identical output. No hidden entropy.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{C64, DensityOperator, EnsembleKind, HermitianOperator, Povm, StateEnsemble};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    // Column-major fill order, fixed for reproducibility.
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = gaussian_complex(rng);
        }
    }
    m
}

fn haar_pure_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityOperator {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        if let Ok(state) = DensityOperator::pure(&v) {
            return state;
        }
    }
}

fn wishart_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityOperator {
    loop {
        let w = gaussian_matrix(rng, dim, dim);
        let prod = &w * w.adjoint();
        let op = HermitianOperator::hermitian_part(prod).expect("square by construction");
        let trace = op.trace();
        if trace > 1e-12 {
            if let Ok(state) = DensityOperator::new(op.scaled(1.0 / trace)) {
                return state;
            }
        }
    }
}

fn simplex_point(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    // Exponential spacings normalize to a uniform simplex sample.
    let mut weights: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + f64::MIN_POSITIVE)
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    // Force an exact unit sum so ensemble validation never wobbles.
    let correction: f64 = 1.0 - weights.iter().sum::<f64>();
    weights[len - 1] += correction;
    weights
}

/// Random ensemble of `count` states in dimension `dim` with priors drawn
/// uniformly from the probability simplex.
///
/// `Pure` draws Haar-random pure states (normalized complex Gaussian
/// vectors); `Mixed` draws normalized Wishart states `W W† / Tr(W W†)`.
pub fn ensemble(dim: usize, count: usize, kind: EnsembleKind, seed: u64) -> StateEnsemble {
    assert!(dim >= 1, "dimension must be at least 1");
    assert!(count >= 1, "state count must be at least 1");
    let mut rng = rng_for(seed);
    let states: Vec<DensityOperator> = (0..count)
        .map(|_| match kind {
            EnsembleKind::Pure => haar_pure_state(&mut rng, dim),
            EnsembleKind::Mixed => wishart_state(&mut rng, dim),
        })
        .collect();
    let priors = simplex_point(&mut rng, count);
    StateEnsemble::new(states, priors).expect("constructed ensemble must validate")
}

/// Random POVM with `outcomes` elements: Wishart blocks whitened by the
/// inverse square root of their sum, which makes completeness exact up to
/// rounding.
pub fn povm(dim: usize, outcomes: usize, seed: u64) -> Povm {
    assert!(dim >= 1 && outcomes >= 1);
    let mut rng = rng_for(seed);
    let raw: Vec<DMatrix<C64>> = (0..outcomes)
        .map(|_| {
            let w = gaussian_matrix(&mut rng, dim, dim);
            &w * w.adjoint()
        })
        .collect();
    let mut total = DMatrix::<C64>::zeros(dim, dim);
    for block in &raw {
        total += block;
    }
    let total = HermitianOperator::hermitian_part(total).expect("square");
    let (values, vectors) = total.eigen().expect("sum of Wishart blocks");
    let inv_sqrt = {
        let scaled = DMatrix::from_fn(dim, dim, |i, j| {
            vectors[(i, j)] / C64::new(values[j].max(1e-300).sqrt(), 0.0)
        });
        &scaled * vectors.adjoint()
    };
    let outcomes: Vec<HermitianOperator> = raw
        .into_iter()
        .map(|block| {
            HermitianOperator::hermitian_part(&inv_sqrt * block * &inv_sqrt)
                .expect("square by construction")
        })
        .collect();
    Povm::new(outcomes).expect("whitened blocks form a POVM")
}

/// Haar-random unitary via QR of a complex Gaussian matrix with the phase
/// convention that makes the R diagonal positive.
pub fn unitary(dim: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = rng_for(seed);
    let g = gaussian_matrix(&mut rng, dim, dim);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase.conj();
        }
    }
    q
}

/// Random Hermitian operator with Gaussian entries, scaled by `scale`.
pub fn hermitian(dim: usize, scale: f64, seed: u64) -> HermitianOperator {
    let mut rng = rng_for(seed);
    let g = gaussian_matrix(&mut rng, dim, dim);
    HermitianOperator::hermitian_part(g.map(|c| c * scale)).expect("square by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{tolerances, trace_pair};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_single_state_is_rank_one_with_unit_trace() {
        let ens = ensemble(2, 1, EnsembleKind::Pure, 7);
        let op = ens.state(0).op();
        assert_abs_diff_eq!(op.trace(), 1.0, epsilon = 1e-12);
        let (values, _) = op.eigen().unwrap();
        // Rank one: all but the top eigenvalue vanish.
        assert!(values[0].abs() <= 1e-12);
        assert_abs_diff_eq!(values[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ensembles_are_reproducible_for_fixed_seed() {
        for kind in [EnsembleKind::Pure, EnsembleKind::Mixed] {
            let a = ensemble(3, 4, kind, 42);
            let b = ensemble(3, 4, kind, 42);
            assert_eq!(a.priors(), b.priors());
            for (x, y) in a.states().iter().zip(b.states()) {
                assert_eq!(x.op().matrix(), y.op().matrix());
            }
        }
    }

    #[test]
    fn ensemble_invariants_hold_for_generated_output() {
        for seed in 0..8 {
            let ens = ensemble(3, 3, EnsembleKind::Mixed, seed);
            let total: f64 = ens.priors().iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = tolerances::PROBABILITY);
            let g = ens.average_state();
            assert!(g.min_eigenvalue().unwrap() >= -tolerances::PSD);
            assert_abs_diff_eq!(g.trace(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_povm_is_valid_and_reproducible() {
        let a = povm(3, 4, 5);
        let b = povm(3, 4, 5);
        for (x, y) in a.outcomes().iter().zip(b.outcomes()) {
            assert_eq!(x.matrix(), y.matrix());
        }
        assert!(a.completeness_residual() <= 1e-12);
        assert!(a.min_outcome_eigenvalue().unwrap() >= -1e-12);
    }

    #[test]
    fn unitary_is_unitary() {
        let u = unitary(4, 11);
        let gram = &u * u.adjoint();
        let id = nalgebra::DMatrix::<C64>::identity(4, 4);
        assert!((gram - id).norm() <= 1e-12);
    }

    #[test]
    fn spectrum_is_invariant_under_random_unitary_conjugation() {
        for seed in 0..6 {
            let a = hermitian(4, 1.0, seed);
            let u = unitary(4, 1000 + seed);
            let conj = HermitianOperator::hermitian_part(&u * a.matrix() * u.adjoint()).unwrap();
            let lhs = conj.min_eigenvalue().unwrap();
            let rhs = a.min_eigenvalue().unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn psd_pairing_is_nonnegative() {
        for seed in 0..10 {
            let ens = ensemble(3, 2, EnsembleKind::Mixed, seed);
            let p = povm(3, 3, seed + 100);
            for state in ens.states() {
                for outcome in p.outcomes() {
                    assert!(trace_pair(state.op(), outcome).unwrap() >= -1e-10);
                }
            }
        }
    }
}
