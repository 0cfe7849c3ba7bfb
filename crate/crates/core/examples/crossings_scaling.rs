//! Momenta where the first band crosses E = 2, and their square-root growth
//! in the coupling.

use magfiber::bands::{crossing, scaling_study, CrossingOptions};

fn main() -> magfiber::Result<()> {
    let opts = CrossingOptions::default();
    let c = crossing(5, 3, 1, 2.0, 1e-9, &opts)?;
    println!("m=3: xi_m = {:.9}, lambda' = {:.6}, grid R = {}", c.xi_m, c.slope, c.grid.radius);

    let ms: Vec<u32> = (5..=20).collect();
    let s = scaling_study(5, 1, 2.0, &ms, 1e-9, &opts)?;
    for r in &s.rows {
        println!("m={:2} k={:8.2} xi/sqrt(k)={:.5} lambda' sqrt(k)={:.5}", r.m, r.k_m, r.xi_over_sqrtk, r.prime_times_sqrtk);
    }
    if let (Some(a), Some(b)) = (s.xi_fit, s.prime_fit) {
        println!("slopes: xi_m ~ k^{:.4}, |lambda'| ~ k^{:.4}", a.slope, b.slope);
    }
    Ok(())
}
