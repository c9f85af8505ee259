//! Fills the missing block of a tight block pattern entry by entry with
//! Schur-complement formulas.

use rankcert::geometry::LowRankFactors;
use rankcert::pattern::example_one_blocks;
use rankcert::random::substream;
use rankcert::solvers::{schur_cascade, ObservedMatrix};

fn main() -> rankcert::Result<()> {
    for r in 1..=3 {
        let (n1, n2) = (7, 8);
        let truth = LowRankFactors::gaussian(n1, n2, r, &mut substream(11, r as u64)).product();
        let p = example_one_blocks(n1, n2, r)?;
        let m = ObservedMatrix::from_dense(p.clone(), &truth)?;
        let res = schur_cascade(&m, r, 10_000)?;
        println!(
            "r = {r}: m = {} = r(n1+n2-r), filled {} entries in {} passes, max error {:.2e}",
            p.m(),
            res.filled.len(),
            res.passes,
            res.y.sub(&truth).max_abs() / truth.max_abs()
        );
    }
    Ok(())
}
