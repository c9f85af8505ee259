//! Generic rank bounds for a few grid sizes and observation counts.

use rankcert::pattern::{estimated_bound, mrfa_bound, GenericBounds};

fn main() {
    for &(n1, n2, m) in &[(6, 6, 30), (1000, 1000, 20_000), (20, 25, 300), (40, 50, 2000)] {
        let b = GenericBounds::new(n1, n2, m);
        println!(
            "{n1:>5} x {n2:<5} m = {m:<6} R = {:.4}  ceil = {}  df at ceil = {}",
            b.r_value,
            b.r_ceil,
            b.degrees_of_freedom(b.r_ceil)
        );
    }
    println!("estimated bound 20 x 25 at p = 0.4: {:.3}", estimated_bound(20, 25, 0.4));
    println!("estimated bound 20 x 25 at p = 0.6: {:.3}", estimated_bound(20, 25, 0.6));
    for p in [3, 6, 10] {
        println!("factor analysis bound, p = {p}: {:.4}", mrfa_bound(p));
    }
}
