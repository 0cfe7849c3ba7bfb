//! A charged particle in the unit axisymmetric field: conserved quantities
//! and the drift along the axis.

use magfiber::classical::{effective_velocity, integrate, ClassicalState, DEFAULT_DT};

fn main() -> magfiber::Result<()> {
    let start = ClassicalState::from_cylindrical(1.2, 0.3, 0.0, 0.4, 0.5, 0.8);
    let traj = integrate(&start, 200.0, DEFAULT_DT)?;
    let inv = traj.initial;
    println!("E = {:.6}, sigma = {:.6}, c = {:.6}", inv.energy, inv.sigma, inv.c);
    println!("relative drift: E {:.2e}, sigma {:.2e}, c {:.2e}", traj.drift.energy, traj.drift.sigma, traj.drift.c);
    println!("radial energy defect {:.2e}", traj.radial_energy_defect());
    let v = effective_velocity(&traj)?;
    println!("radial period {:.6}", v.period);
    println!("drift velocity: period average {:.8}, fit of z(t) {:.8}, bound {:.4}", v.formula, v.fit, v.bound);
    Ok(())
}
