//! Power law of the ground state near the axis against the Frobenius
//! exponent.

use magfiber::fiber::{boundary_exponent, solve, Grid};
use magfiber::model::ModelParams;

fn main() -> magfiber::Result<()> {
    let grid = Grid::new(20.0, 8000)?;
    for (n, m) in [(3, 0), (4, 0), (5, 1), (5, 3), (7, 2)] {
        let params = ModelParams::new(n, m, 1.0)?;
        let pair = &solve(&params, &grid, 1)?[0];
        let nu = boundary_exponent(pair, &grid, 40)?;
        println!("n={n} m={m}: fitted {nu:.5}, exact {:.5}", params.frobenius_exponent());
    }
    Ok(())
}
