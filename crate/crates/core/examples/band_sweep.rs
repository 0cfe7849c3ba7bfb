//! Lowest three band functions of the m = 0..2 fibers in dimension 5, with
//! both derivative formulas side by side.

use magfiber::bands::sweep;
use magfiber::fiber::Grid;

fn main() -> magfiber::Result<()> {
    let xis: Vec<f64> = (0..=14).map(|i| -1.0 + 0.5 * i as f64).collect();
    let curves = sweep(5, 0..=2, 1..=3, &xis, &Grid::default())?;
    for c in &curves {
        println!("m={} p={}", c.m, c.p);
        for s in &c.samples {
            println!("  xi={:5.2}  lambda={:.8}  fh={:+.6}  bd={:+.6}", s.xi, s.lambda, s.prime_fh, s.prime_bd);
        }
        println!("  min lambda - E_p = {:.3e}, max increment = {:.3e}", c.min_gap(), c.max_increment());
    }
    Ok(())
}
