//! Eigenfunction at a threshold crossing, its mass near the well and its
//! Agmon-weighted norm.

use magfiber::bands::{agmon_norm, agmon_weight, crossing, mass_near, CrossingOptions, DEFAULT_AGMON_ALPHA};

fn main() -> magfiber::Result<()> {
    for m in [5, 10, 20, 40] {
        let c = crossing(5, m, 1, 2.0, 1e-9, &CrossingOptions::default())?;
        let pair = c.eigenpair()?;
        let w = agmon_weight(&c.params(), 2.0, &c.grid, DEFAULT_AGMON_ALPHA)?;
        let (lo, hi) = w.well;
        let near = mass_near(&pair, &c.grid, 0.5 * (lo + hi), 0.5 * (hi - lo) + 1.0);
        println!(
            "m={m:2} xi_m={:.4} well=({lo:.3}, {hi:.3}) mass near well={near:.6} weighted norm={:.4}",
            c.xi_m,
            agmon_norm(&pair, &w, &c.grid)?
        );
    }
    Ok(())
}
