//! With zero coupling the first band approaches E_1 = 1 exponentially fast.

use magfiber::asymptotics::{exponential_gap_check, refined_samples};
use magfiber::fiber::Grid;
use magfiber::model::ModelParams;

fn main() -> magfiber::Result<()> {
    let params = ModelParams::new(4, 0, 0.0)?;
    let xis: Vec<f64> = (0..=10).map(|i| 2.5 + 0.1 * i as f64).collect();
    let samples = refined_samples(&params, 1, &xis, &Grid::new(12.0, 4800)?)?;
    let profile = exponential_gap_check(&samples, 1)?;
    for (xi, gap, scaled) in &profile.points {
        println!("xi={xi:.2} lambda-1={gap:.6e} e^(xi^2) gap / xi = {scaled:.6}");
    }
    println!("profile max/min {:.4}, resolved {}", profile.ratio, profile.resolved);
    Ok(())
}
