use qsd_core::operator::{DensityOperator, StateEnsemble};
use qsd_core::problem::DiscriminationProblem;
use qsd_core::sdp::{self, SolverConfig};

fn main() {
    let s: f64 = 0.3;
    let theta = s.acos() / 2.0;
    let psi0 = DensityOperator::pure_real(&[theta.cos(), theta.sin()]).unwrap();
    let psi1 = DensityOperator::pure_real(&[theta.cos(), -theta.sin()]).unwrap();
    let ens = StateEnsemble::new(vec![psi0, psi1], vec![0.5, 0.5]).unwrap();
    let problem = DiscriminationProblem::error_margin(&ens, 0.0).unwrap();
    let result = sdp::solve_problem(&problem, &SolverConfig::default());
    println!("status {:?} iters {}", result.status, result.iterations);
    println!("primal {} dual {}", result.primal_value, result.dual_value);
    for (i, r) in result.residuals.iterates.iter().enumerate() {
        println!(
            "it {i:3}  P {:+.9e}  D {:+.9e}  rp {:.3e}  rd {:.3e}  xs {:.3e}",
            r.primal_objective, r.dual_objective, r.primal_residual, r.dual_residual, r.complementarity
        );
    }
    println!("expected success = {}", 1.0 - s);
}
