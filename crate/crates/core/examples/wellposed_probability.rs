//! Fraction of random patterns at which a random rank-r point is
//! well-posed, next to the estimated bound.

use rankcert::harness::wellposed_probability;

fn main() -> rankcert::Result<()> {
    let ranks: Vec<usize> = (1..=10).collect();
    let res = wellposed_probability(20, 25, &ranks, &[0.4, 0.6], 30, 1)?;
    print!("{}", res.to_csv());
    Ok(())
}
