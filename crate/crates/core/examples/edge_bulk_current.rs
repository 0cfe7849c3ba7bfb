//! Current carried by states in the window (1.5, 2.5): a packet on the first
//! few angular modes against single high modes.

use magfiber::bands::CrossingOptions;
use magfiber::transport::{
    band_data_for, bands_meeting_window, bulk_decay_study, current, edge_lower_bound, synthesize_state, SpectralWindow,
};

fn main() -> magfiber::Result<()> {
    let opts = CrossingOptions::default();
    let window = SpectralWindow::new(1.5, 2.5)?;
    let bands = bands_meeting_window(5, &window, 3, 1e-9, &opts)?;
    for pre in &bands.preimages {
        println!("m={} p={}: xi in ({:.6}, {:.6})", pre.m, pre.p, pre.xi_lo, pre.xi_hi);
    }
    let modes: Vec<(u32, u32, u32)> = (0..=3).map(|m| (m, 1, 1)).collect();
    let packet = synthesize_state(&bands, &modes)?;
    let data = band_data_for(&packet, 161, &opts)?;
    let edge = current(&packet, &data)?;
    println!("edge current {:.6} (C- = {:.6})", edge.normalized, edge_lower_bound(&data, &window).unwrap_or(f64::NAN));

    let bulk = bulk_decay_study(5, &window, &[9, 19, 29], 81, 1e-9, &opts)?;
    for r in &bulk.rows {
        println!("M={:2} k={:8.2} current {:.6}", r.m_cut, r.k, r.current);
    }
    if let Some(f) = bulk.fit {
        println!("current ~ k^{:.4}", f.slope);
    }
    Ok(())
}
