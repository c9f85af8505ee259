//! Quantile pairs of the rank-test statistic against its chi-square law.

use rankcert::harness::{qq_data, InstanceSpec, McConfig, Sampling};
use rankcert::stats::NoiseModel;

fn main() -> rankcert::Result<()> {
    let noise = NoiseModel::new(100, 5.0)?;
    let spec = InstanceSpec::new(20, 25, 3, Sampling::Cardinality(300), noise, 7);
    let res = qq_data(&spec, 3, 60, &McConfig::default())?;
    let sorted = res.series("sorted").unwrap();
    let q = res.series("chi2_quantile").unwrap();
    for k in (0..sorted.len()).step_by(6) {
        println!("{:>8.2}  {:>8.2}", q[k], sorted[k]);
    }
    println!(
        "df = {}, mean = {:.2}, KS p-value = {:.3}",
        res.params["df"], res.params["mean"], res.params["ks_p_value"]
    );
    Ok(())
}
