//! Noiseless recovery by rank-r least squares versus nuclear-norm
//! minimization at increasing rank.

use rankcert::harness::{gen_wellposed_instance, InstanceSpec, Sampling};
use rankcert::solvers::{lrma_fixed_rank, nuclear_norm_complete, SolverConfig};
use rankcert::stats::NoiseModel;

fn main() -> rankcert::Result<()> {
    let (n1, n2) = (20, 25);
    let noise = NoiseModel::noiseless();
    for r in [2, 4, 6] {
        let spec = InstanceSpec::new(n1, n2, r, Sampling::Probability(0.6), noise.clone(), 100 + r as u64);
        let inst = gen_wellposed_instance(&spec, r, 100)?;
        let rel = |y: &rankcert::linalg::DenseMatrix| y.sub(&inst.y_star).frobenius_norm() / inst.y_star.frobenius_norm();
        let lrma = lrma_fixed_rank(&inst.observed, r, &SolverConfig::default().with_tol(1e-14))?;
        let nuc = nuclear_norm_complete(&inst.observed, &SolverConfig::default().with_tol(1e-8).with_max_iter(20_000))?;
        println!(
            "r = {r}: m = {}, LRMA rel. error {:.2e} ({} iters), nuclear rel. error {:.2e}",
            inst.observed.pattern.m(),
            rel(&lrma.y_hat),
            lrma.iterations,
            rel(&nuc.y_hat)
        );
    }
    Ok(())
}
