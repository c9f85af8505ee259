//! Exact rank-one completion by propagation along the pattern graph.

use rankcert::linalg::DenseMatrix;
use rankcert::pattern::ObservationPattern;
use rankcert::solvers::{rank_one_complete, ObservedMatrix};

fn main() -> rankcert::Result<()> {
    // 2 x 2 of ones with the (1,1) entry missing.
    let p = ObservationPattern::new(2, 2, [(0, 1), (1, 0), (1, 1)])?;
    let m = ObservedMatrix::new(p, vec![1.0, 1.0, 1.0])?;
    println!("2 x 2: Y11 = {}", rank_one_complete(&m)?[(0, 0)]);

    let u = [1.0, -2.0, 0.5, 3.0];
    let v = [2.0, 1.0, -1.0, 0.25, 4.0];
    let truth = DenseMatrix::from_fn(4, 5, |i, j| u[i] * v[j]);
    let p = ObservationPattern::from_predicate(4, 5, |i, j| (i + 2 * j) % 3 != 0)?;
    let m = ObservedMatrix::from_dense(p.clone(), &truth)?;
    let y = rank_one_complete(&m)?;
    println!("4 x 5 with {} of 20 observed: max error {:.2e}", p.m(), y.sub(&truth).max_abs());
    Ok(())
}
