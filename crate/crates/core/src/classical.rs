//! Classical motion of a unit charge in the field `B = (-y/r, x/r, 0)`.
//!
//! Newton's law `x'' = x' × B(x)` conserves the kinetic energy `E = |v|²`,
//! the areal velocity `sigma = x v_y - y v_x` and, since `F_z = r'`, the
//! quantity `c = v_z - r`. The radial motion then lives in the effective
//! potential `sigma²/r² + (r + c)²`, and `z` drifts at the mean speed
//! `v_z = <sigma²/r³>` over one radial period.

use crate::error::{Error, Result};
use crate::stats::linear_fit;

/// Integration stops when the orbit comes closer than this to the axis.
pub const R_FLOOR: f64 = 1e-6;
/// Default time step.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub t: f64,
}

/// Conserved quantities of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub energy: f64,
    pub sigma: f64,
    pub c: f64,
}

impl ClassicalState {
    /// State from cylindrical data `(r, theta, z)` and velocity components
    /// `(v_r, v_theta, v_z)` in the local frame.
    pub fn from_cylindrical(r: f64, theta: f64, z: f64, v_r: f64, v_theta: f64, v_z: f64) -> Self {
        let (s, c) = theta.sin_cos();
        ClassicalState {
            position: [r * c, r * s, z],
            velocity: [v_r * c - v_theta * s, v_r * s + v_theta * c, v_z],
            t: 0.0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }

    /// `r' = (x v_x + y v_y) / r`.
    pub fn radial_velocity(&self) -> f64 {
        let [x, y, _] = self.position;
        (x * self.velocity[0] + y * self.velocity[1]) / self.radius()
    }

    pub fn invariants(&self) -> Invariants {
        let [x, y, _] = self.position;
        let [vx, vy, vz] = self.velocity;
        Invariants { energy: vx * vx + vy * vy + vz * vz, sigma: x * vy - y * vx, c: vz - self.radius() }
    }
}

/// Unit field `(-y/r, x/r, 0)` at `position`.
pub fn field(position: [f64; 3]) -> Result<[f64; 3]> {
    let r = position[0].hypot(position[1]);
    if r == 0.0 || !r.is_finite() {
        return Err(Error::AxisSingularity);
    }
    Ok([-position[1] / r, position[0] / r, 0.0])
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

type Phase = [f64; 6];

fn rhs(y: &Phase) -> Result<Phase> {
    let v = [y[3], y[4], y[5]];
    let a = cross(v, field([y[0], y[1], y[2]])?);
    Ok([v[0], v[1], v[2], a[0], a[1], a[2]])
}

fn axpy(y: &Phase, k: &Phase, h: f64) -> Phase {
    std::array::from_fn(|i| y[i] + h * k[i])
}

fn rk4_step(y: &Phase, dt: f64) -> Result<Phase> {
    let k1 = rhs(y)?;
    let k2 = rhs(&axpy(y, &k1, 0.5 * dt))?;
    let k3 = rhs(&axpy(y, &k2, 0.5 * dt))?;
    let k4 = rhs(&axpy(y, &k3, dt))?;
    Ok(std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Largest relative change of each invariant over a run. The change of `X`
/// is measured against `max(|X(0)|, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantDrift {
    pub energy: f64,
    pub sigma: f64,
    pub c: f64,
}

impl InvariantDrift {
    pub fn max(&self) -> f64 {
        self.energy.max(self.sigma).max(self.c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub dt: f64,
    pub samples: Vec<ClassicalState>,
    pub initial: Invariants,
    pub drift: InvariantDrift,
}

impl TrajectoryResult {
    /// Largest `|r'² + sigma²/r² + (r + c)² - E|` along the run, with the
    /// initial invariants.
    pub fn radial_energy_defect(&self) -> f64 {
        let Invariants { energy, sigma, c } = self.initial;
        self.samples
            .iter()
            .map(|s| {
                let r = s.radius();
                let rd = s.radial_velocity();
                (rd * rd + sigma * sigma / (r * r) + (r + c) * (r + c) - energy).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Distance from the axis to the planar segment between two positions, so
/// that a step jumping across the axis is caught.
fn segment_clearance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 { (-(a[0] * d[0] + a[1] * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a[0] + t * d[0]).hypot(a[1] + t * d[1])
}

fn rel_change(x: f64, x0: f64) -> f64 {
    (x - x0).abs() / x0.abs().max(1.0)
}

/// Fixed-step RK4 from `initial` up to `t_max`, keeping every step.
pub fn integrate(initial: &ClassicalState, t_max: f64, dt: f64) -> Result<TrajectoryResult> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
    }
    if initial.position.iter().chain(&initial.velocity).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite initial state".into()));
    }
    if !(initial.radius() > R_FLOOR) {
        return Err(Error::InvalidInput(format!("initial radius {} is below {R_FLOOR}", initial.radius())));
    }
    let steps = (t_max / dt).round() as usize;
    let inv0 = initial.invariants();
    let mut drift = InvariantDrift { energy: 0.0, sigma: 0.0, c: 0.0 };
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(*initial);

    let p = initial.position;
    let v = initial.velocity;
    let mut y: Phase = [p[0], p[1], p[2], v[0], v[1], v[2]];
    for i in 1..=steps {
        let t = initial.t + i as f64 * dt;
        let prev = y;
        y = rk4_step(&y, dt).map_err(|_| Error::AxisApproach { r: 0.0, floor: R_FLOOR, t })?;
        let state = ClassicalState { position: [y[0], y[1], y[2]], velocity: [y[3], y[4], y[5]], t };
        let r = segment_clearance([prev[0], prev[1]], [y[0], y[1]]);
        if r < R_FLOOR {
            return Err(Error::AxisApproach { r, floor: R_FLOOR, t });
        }
        let inv = state.invariants();
        drift.energy = drift.energy.max(rel_change(inv.energy, inv0.energy));
        drift.sigma = drift.sigma.max(rel_change(inv.sigma, inv0.sigma));
        drift.c = drift.c.max(rel_change(inv.c, inv0.c));
        samples.push(state);
    }
    Ok(TrajectoryResult { dt, samples, initial: inv0, drift })
}

/// Radial period from the spacing of successive minima of `r(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPeriod {
    pub period: f64,
    /// Standard deviation of the spacings.
    pub spread: f64,
    /// Interpolated times of the minima.
    pub minima: Vec<f64>,
}

/// Minima found by quadratic interpolation through the three samples around
/// each discrete local minimum; at least three are required.
pub fn radial_period(traj: &TrajectoryResult) -> Result<RadialPeriod> {
    const NEEDED: usize = 3;
    let r: Vec<f64> = traj.samples.iter().map(|s| s.radius()).collect();
    let (lo, hi) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    // a circular orbit only shows rounding noise in r
    if hi - lo <= 1e-9 * hi {
        return Err(Error::InsufficientOscillation { found: 0, needed: NEEDED });
    }
    let mut minima = Vec::new();
    for i in 1..r.len().saturating_sub(1) {
        let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
        let curv = a - 2.0 * b + c;
        if b < a && b <= c && curv > 0.0 {
            minima.push(traj.samples[i].t + traj.dt * (a - c) / (2.0 * curv));
        }
    }
    if minima.len() < NEEDED {
        return Err(Error::InsufficientOscillation { found: minima.len(), needed: NEEDED });
    }
    let gaps: Vec<f64> = minima.windows(2).map(|w| w[1] - w[0]).collect();
    let period = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let spread = (gaps.iter().map(|g| (g - period).powi(2)).sum::<f64>() / gaps.len() as f64).sqrt();
    Ok(RadialPeriod { period, spread, minima })
}

/// Two estimates of the drift velocity along the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftVelocity {
    /// `sigma²/T ∫_0^T dt / r³` over one period.
    pub formula: f64,
    /// Least-squares slope of `z(t)` over the whole run.
    pub fit: f64,
    /// `E^{3/2} / |sigma|`.
    pub bound: f64,
    pub period: f64,
}

impl DriftVelocity {
    pub fn relative_mismatch(&self) -> f64 {
        (self.formula - self.fit).abs() / self.fit.abs().max(1e-6)
    }
}

pub fn effective_velocity(traj: &TrajectoryResult) -> Result<DriftVelocity> {
    let rp = radial_period(traj)?;
    let (t_a, t_b) = (rp.minima[0], rp.minima[1]);
    let sigma = traj.initial.sigma;
    let g = |s: &ClassicalState| sigma * sigma / s.radius().powi(3);
    let samples = &traj.samples;
    let t0 = samples[0].t;
    let index = |t: f64| ((t - t0) / traj.dt).floor() as usize;
    let (ia, ib) = (index(t_a), index(t_b));
    let lerp = |i: usize, t: f64| {
        let (s0, s1) = (&samples[i], &samples[i + 1]);
        let w = (t - s0.t) / traj.dt;
        (1.0 - w) * g(s0) + w * g(s1)
    };
    // partial cells at both ends, full cells in between
    let ga = lerp(ia, t_a);
    let gb = lerp(ib, t_b);
    let mut integral = 0.5 * (samples[ia + 1].t - t_a) * (ga + g(&samples[ia + 1]));
    for i in ia + 1..ib {
        integral += 0.5 * traj.dt * (g(&samples[i]) + g(&samples[i + 1]));
    }
    integral += 0.5 * (t_b - samples[ib].t) * (g(&samples[ib]) + gb);
    let formula = integral / (t_b - t_a);

    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let zs: Vec<f64> = samples.iter().map(|s| s.position[2]).collect();
    let fit = linear_fit(&ts, &zs).slope;
    let bound = traj.initial.energy.powf(1.5) / sigma.abs();
    Ok(DriftVelocity { formula, fit, bound, period: rp.period })
}
