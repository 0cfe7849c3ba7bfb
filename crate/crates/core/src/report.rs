//! Text output shared by the command-line front end and the acceptance suite:
//! CSV tables with 17 significant digits and JSON reports of the form
//! `{config, results, checks: [{name, value, bound, pass}]}`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bands::{BandCurve, ScalingStudy};
use crate::classical::TrajectoryResult;
use crate::error::{Error, Result};

/// `x` in scientific notation with 17 significant digits, which round-trips
/// every binary64 value.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub const SWEEP_HEADER: &str = "n,m,p,xi,lambda,lambda_prime_fh,lambda_prime_bd";
pub const SCALING_HEADER: &str = "m,k_m,xi_m,lambda_prime,xi_over_sqrtk,prime_times_sqrtk";
pub const TRAJECTORY_HEADER: &str = "t,x,y,z,vx,vy,vz,E,sigma,c";

/// Band samples as CSV rows sorted by `(m, p, xi)`.
pub fn sweep_csv(curves: &[BandCurve]) -> String {
    let mut rows: Vec<(u32, u32, u32, &crate::bands::BandSample)> =
        curves.iter().flat_map(|c| c.samples.iter().map(move |s| (c.n, c.m, c.p, s))).collect();
    rows.sort_by(|a, b| (a.1, a.2).cmp(&(b.1, b.2)).then(a.3.xi.total_cmp(&b.3.xi)));
    let mut out = String::with_capacity(rows.len() * 120);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for (n, m, p, s) in rows {
        let _ = writeln!(
            out,
            "{n},{m},{p},{},{},{},{}",
            fmt17(s.xi),
            fmt17(s.lambda),
            fmt17(s.prime_fh),
            fmt17(s.prime_bd)
        );
    }
    out
}

pub fn scaling_csv(study: &ScalingStudy) -> String {
    let mut out = String::from(SCALING_HEADER);
    out.push('\n');
    for r in &study.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.m,
            fmt17(r.k_m),
            fmt17(r.xi_m),
            fmt17(r.lambda_prime),
            fmt17(r.xi_over_sqrtk),
            fmt17(r.prime_times_sqrtk)
        );
    }
    out
}

/// Every `stride`-th sample of a trajectory with its invariants.
pub fn trajectory_csv(traj: &TrajectoryResult, stride: usize) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for s in traj.samples.iter().step_by(stride.max(1)) {
        let inv = s.invariants();
        let [x, y, z] = s.position;
        let [vx, vy, vz] = s.velocity;
        let cols = [s.t, x, y, z, vx, vy, vz, inv.energy, inv.sigma, inv.c];
        let line: Vec<String> = cols.iter().map(|v| fmt17(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// A named numerical check against a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value <= bound }
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value < bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value >= bound }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value > bound }
    }

    /// `|value - target| <= tolerance`; `bound` records the tolerance.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, bound: tolerance, pass: (value - target).abs() <= tolerance }
    }

    /// `lo <= value <= hi`; `bound` records the violated side, or `hi`.
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let pass = value >= lo && value <= hi;
        Check { name: name.into(), value, bound: if value < lo { lo } else { hi }, pass }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: ok as u8 as f64, bound: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: serde_json::Value,
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Run `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::InvalidInput("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
