//! Grid refinement of one eigenvalue with Richardson extrapolation.

use magfiber::fiber::{refine, Grid};
use magfiber::model::ModelParams;

fn main() -> magfiber::Result<()> {
    let params = ModelParams::new(5, 1, 2.0)?;
    let mut grid = Grid::new(20.0, 500)?;
    for _ in 0..4 {
        let fine = grid.refined();
        let r = refine(&params, &grid, &fine, 1)?;
        println!("N={:5} coarse={:.12} fine={:.12} extrapolated={:.12} err~{:.2e}", grid.intervals, r.coarse, r.fine, r.extrapolated, r.error_estimate);
        grid = fine;
    }
    Ok(())
}
