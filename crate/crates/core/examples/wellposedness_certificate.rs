//! Certifies well-posedness of a random rank-r point on a random pattern and
//! compares with the Jacobian rank at generic factors.

use rand::Rng;
use rankcert::geometry::{characteristic_rank, wellposedness_check, LowRankFactors};
use rankcert::pattern::ObservationPattern;
use rankcert::random::substream;

fn main() -> rankcert::Result<()> {
    let (n1, n2) = (10, 12);
    let mut rng = substream(2024, 0);
    let p = ObservationPattern::from_predicate(n1, n2, |_, _| rng.random::<f64>() < 0.55)?;
    let bounds = p.bounds();
    println!("m = {}, R = {:.3}", p.m(), bounds.r_value);
    for r in 1..=bounds.r_ceil {
        let y = LowRankFactors::gaussian(n1, n2, r, &mut substream(2024, r as u64)).product();
        let rep = wellposedness_check(&y, r, &p, 0.0)?;
        let ch = characteristic_rank(&p, r, 5, 7)?;
        println!(
            "r = {r}: well-posed = {:<5} ({:?}, rank K = {:?} of {})  Jacobian rank {} / f(r,m) = {}",
            rep.well_posed, rep.decided_by, rep.rank_of_k, rep.required_rank, ch.rho, ch.f_rm
        );
    }
    Ok(())
}
