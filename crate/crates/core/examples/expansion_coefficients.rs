//! Large-momentum expansion of the first band of (n, m) = (5, 1), compared
//! with Richardson-refined eigenvalues.

use magfiber::asymptotics::{coupling_sensitivity, evaluate_expansion, expansion_coefficients, refined_samples, remainder_rate};
use magfiber::fiber::Grid;
use magfiber::model::ModelParams;

fn main() -> magfiber::Result<()> {
    let params = ModelParams::new(5, 1, 0.0)?;
    let k = params.coupling_f64();
    let coeffs = expansion_coefficients(1, k, 6, 30)?;
    for (q, a) in coeffs.alphas.iter().enumerate() {
        println!("alpha_{} = {a:+.12}", q + 1);
    }
    // alpha_q stops being universal at sixth order
    let delta = coupling_sensitivity(1, 6, 30, k, 2.0 * k)?;
    let shown: Vec<String> = delta.iter().map(|d| format!("{d:.3e}")).collect();
    println!("|alpha_q(k) - alpha_q(2k)| = {}", shown.join(", "));

    let xis: Vec<f64> = (8..=15).map(f64::from).collect();
    let samples = refined_samples(&params, 1, &xis, &Grid::new(30.0, 6000)?)?;
    let second = expansion_coefficients(1, k, 2, 20)?;
    for s in &samples {
        println!("xi={:4.1} lambda={:.10} two-term={:.10}", s.xi, s.value, evaluate_expansion(&second, s.xi)?);
    }
    let rate = remainder_rate(&samples, &second)?;
    println!("remainder slope: {:?}", rate.slope);
    Ok(())
}
