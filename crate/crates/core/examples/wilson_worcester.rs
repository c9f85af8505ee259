//! Two distinct rank-3 completions of a 6 × 6 symmetric matrix with unknown
//! diagonal, and what nuclear-norm minimization returns instead.

use rankcert::formats::format_sig;
use rankcert::harness::wilson_reproduction;

fn main() -> rankcert::Result<()> {
    let rep = wilson_reproduction()?;
    println!("m = {}, R = {}, ceil = {}, df(r=3) = {}", rep.m, format_sig(rep.r_value), rep.r_ceil, rep.df_rank3);
    for (k, c) in rep.completions.iter().enumerate() {
        let diag: Vec<String> = c.diagonal.iter().map(|&v| format!("{v:.4}")).collect();
        println!(
            "completion {}: diag [{}]  s4/s1 = {:.2e} (printed diag: {:.2e})  well-posed = {}",
            k + 1,
            diag.join(", "),
            c.sigma_ratio,
            c.printed_sigma_ratio,
            c.well_posed
        );
    }
    let diag: Vec<String> = rep.nuclear_diagonal.iter().map(|&v| format!("{v:.3}")).collect();
    println!("nuclear-norm diag [{}] converged = {}", diag.join(", "), rep.nuclear_converged);
    let sv: Vec<String> = rep.nuclear_singular_values.iter().map(|&v| format!("{v:.3e}")).collect();
    println!("  singular values [{}]", sv.join(", "));
    println!(
        "  threshold rank (b = {}) = {}, numerical rank (tol {:.0e}) = {}",
        rep.nuclear_threshold, rep.nuclear_threshold_rank, rep.nuclear_rank_tol, rep.nuclear_numerical_rank
    );
    let diag: Vec<String> = rep.lrma_diagonal.iter().map(|&v| format!("{v:.4}")).collect();
    println!("rank-3 least squares from zero: diag [{}] fit = {:.2e}", diag.join(", "), rep.lrma_fit);
    Ok(())
}
