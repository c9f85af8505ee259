//! A block-diagonal pattern splits into two components, so no rank-r
//! completion is unique; a staircase pattern stays connected.

use rankcert::geometry::{wellposedness_check, LowRankFactors};
use rankcert::pattern::{block_diagonal, is_reducible, staircase};
use rankcert::random::substream;

fn main() -> rankcert::Result<()> {
    let p = block_diagonal(40, 50, 20, 20)?;
    let rep = is_reducible(&p);
    println!("block pattern: m = {}, reducible = {}, components = {}", p.m(), rep.reducible, rep.component_count());
    for (k, (rows, cols)) in rep.row_groups.iter().zip(&rep.col_groups).enumerate() {
        println!("  component {k}: {} rows x {} cols", rows.len(), cols.len());
    }
    let y = LowRankFactors::gaussian(40, 50, 3, &mut substream(5, 0)).product();
    let cert = wellposedness_check(&y, 3, &p, 0.0)?;
    println!("  rank-3 certificate: well-posed = {} ({:?})", cert.well_posed, cert.decided_by);

    let s = staircase(8)?;
    println!("staircase 8 x 8: m = {}, reducible = {}", s.m(), is_reducible(&s).reducible);
    Ok(())
}
