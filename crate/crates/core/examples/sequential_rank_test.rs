//! Sequential chi-square test on one noisy instance with true rank 4.

use rankcert::harness::{gen_wellposed_instance, InstanceSpec, Sampling};
use rankcert::solvers::SolverConfig;
use rankcert::stats::{sequential_rank_test, NoiseModel};

fn main() -> rankcert::Result<()> {
    let noise = NoiseModel::new(100, 5.0)?;
    let spec = InstanceSpec::new(20, 25, 4, Sampling::Cardinality(300), noise.clone(), 3);
    let inst = gen_wellposed_instance(&spec, 4, 100)?;
    let rep = sequential_rank_test(&inst.observed, &noise, 0.05, &SolverConfig::default())?;
    println!("{:>3} {:>12} {:>5} {:>10}", "r", "T_N", "df", "p-value");
    for row in &rep.rows {
        println!("{:>3} {:>12.3} {:>5} {:>10.3e}", row.r, row.t_n, row.df, row.p_value);
    }
    println!("selected rank: {:?}", rep.selected_rank);
    Ok(())
}
