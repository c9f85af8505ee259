//! Jacobian rank of the parametrization at Gaussian factors versus the
//! generic value f(r, m).

use rankcert::geometry::characteristic_rank;
use rankcert::pattern::{block_diagonal, off_diagonal};

fn main() -> rankcert::Result<()> {
    let wilson = off_diagonal(6)?;
    for r in 1..=4 {
        let res = characteristic_rank(&wilson, r, 8, 1)?;
        println!("off-diagonal 6 x 6, r = {r}: rho = {}, f(r,m) = {}, generic = {}", res.rho, res.f_rm, res.generic_well_posed);
    }
    let blocks = block_diagonal(12, 14, 6, 7)?;
    let res = characteristic_rank(&blocks, 2, 8, 1)?;
    println!("block diagonal 12 x 14, r = 2: rho = {}, f(r,m) = {}", res.rho, res.f_rm);
    Ok(())
}
