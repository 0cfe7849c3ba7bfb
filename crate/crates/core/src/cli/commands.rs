use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{ConfigFile, Resolver};
use super::{
    AcceptanceArgs, AsymArgs, ClassicalArgs, Command, Common, ConvergenceArgs, CurrentArgs, ScalingArgs, SweepArgs,
    EXIT_CHECKS_FAILED, EXIT_OK,
};
use crate::acceptance::{self, CRITERIA};
use crate::asymptotics::{
    coupling_sensitivity, evaluate_expansion, expansion_coefficients, exponential_gap_check, refined_samples,
    remainder_rate,
};
use crate::bands::{scaling_study, sweep, CrossingOptions};
use crate::classical::{effective_velocity, integrate, ClassicalState, R_FLOOR};
use crate::error::{Error, Result};
use crate::fiber::{band_value, Grid, DEFAULT_INTERVALS, DEFAULT_RADIUS};
use crate::model::{level, ModelParams};
use crate::report::{scaling_csv, sweep_csv, trajectory_csv, with_workers, Check, Report};
use crate::transport::{band_data_for, bands_meeting_window, bulk_decay_study, current, edge_lower_bound, synthesize_state, SpectralWindow};

const MAX_SAMPLES: usize = 1_000_000;
const MAX_STEPS: f64 = 1e8;

/// Text destined for a file, or stdout when no path was given.
struct Output {
    path: Option<String>,
    text: String,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn resolver(common: &Common) -> Result<Resolver> {
    let file = match &common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    Ok(Resolver::new(file))
}

fn workers(r: &mut Resolver, common: &Common) -> Result<usize> {
    let w = r.value("workers", common.workers, default_workers())?;
    if w == 0 {
        return Err(invalid("workers must be at least 1"));
    }
    Ok(w)
}

/// Reject a destination whose directory does not exist before any work.
fn check_destination(path: &Option<String>) -> Result<()> {
    if let Some(p) = path {
        let parent = Path::new(p).parent().filter(|d| !d.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(invalid(format!("output directory {} does not exist", dir.display())));
            }
        }
        if Path::new(p).is_dir() {
            return Err(invalid(format!("output path {p} is a directory")));
        }
    }
    Ok(())
}

fn emit(outputs: Vec<Output>) -> Result<()> {
    for o in outputs {
        match o.path {
            Some(p) => std::fs::write(&p, o.text).map_err(|e| Error::Io(format!("{p}: {e}")))?,
            None => print!("{}", o.text),
        }
    }
    Ok(())
}

fn report_output(path: Option<String>, report: Report) -> Result<Output> {
    let mut text = report.to_json()?;
    text.push('\n');
    Ok(Output { path, text })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(invalid(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

/// `min, min + step, ...` up to `max` inclusive, computed by index.
fn arithmetic(name: &str, min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    finite(&format!("{name}-min"), min)?;
    finite(&format!("{name}-max"), max)?;
    positive(&format!("{name}-step"), step)?;
    if max < min {
        return Err(invalid(format!("{name}-max {max} is below {name}-min {min}")));
    }
    let count = ((max - min) / step + 1e-9).floor() + 1.0;
    if count > MAX_SAMPLES as f64 {
        return Err(invalid(format!("{name} range has {count} samples, limit {MAX_SAMPLES}")));
    }
    Ok((0..count as usize).map(|i| min + step * i as f64).collect())
}

fn model(n: u32, m: u32) -> Result<ModelParams> {
    ModelParams::new(n as i64, m as i64, 0.0)
}

fn crossing_options(step: f64) -> Result<CrossingOptions> {
    positive("step", step)?;
    Ok(CrossingOptions { step, ..CrossingOptions::default() })
}

fn tolerance(v: f64) -> Result<f64> {
    positive("tolerance", v)?;
    Ok(v)
}

fn is_landau_level(e: f64) -> bool {
    let q = (e + 1.0) / 2.0;
    e >= 1.0 && q == q.round()
}

pub(super) fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Sweep(a) => run_sweep(a),
        Command::Scaling(a) => run_scaling(a),
        Command::Asym(a) => run_asym(a),
        Command::Classical(a) => run_classical(a),
        Command::Current(a) => run_current(a),
        Command::Convergence(a) => run_convergence(a),
        Command::Acceptance(a) => run_acceptance(a),
    }
}

fn run_sweep(a: SweepArgs) -> Result<i32> {
    let mut r = resolver(&a.common)?;
    let n = r.value("n", a.n, 5)?;
    let m_min = r.value("m-min", a.m_min, 0)?;
    let m_max = r.value("m-max", a.m_max, 6)?;
    let p_min = r.value("p-min", a.p_min, 1)?;
    let p_max = r.value("p-max", a.p_max, 3)?;
    let xi_min = r.value("xi-min", a.xi_min, -1.0)?;
    let xi_max = r.value("xi-max", a.xi_max, 6.0)?;
    let xi_step = r.value("xi-step", a.xi_step, 0.05)?;
    let radius = r.value("radius", a.radius, DEFAULT_RADIUS)?;
    let intervals = r.value("intervals", a.intervals, DEFAULT_INTERVALS)?;
    let workers = workers(&mut r, &a.common)?;
    let output = r.optional("output", a.output)?;
    r.finish()?;

    model(n, m_min)?;
    if m_max < m_min {
        return Err(invalid(format!("m-max {m_max} is below m-min {m_min}")));
    }
    if p_min == 0 || p_max < p_min {
        return Err(invalid(format!("need 1 <= p-min <= p-max, got {p_min}..{p_max}")));
    }
    let xis = arithmetic("xi", xi_min, xi_max, xi_step)?;
    let grid = Grid::new(radius, intervals)?;
    if xi_max >= radius {
        return Err(invalid(format!("xi-max {xi_max} must stay below the radius {radius}")));
    }
    check_destination(&output)?;

    let curves = with_workers(workers, || sweep(n, m_min..=m_max, p_min..=p_max, &xis, &grid))??;
    emit(vec![Output { path: output, text: sweep_csv(&curves) }])?;
    Ok(EXIT_OK)
}

fn run_scaling(a: ScalingArgs) -> Result<i32> {
    let mut r = resolver(&a.common)?;
    let n = r.value("n", a.n, 5)?;
    let p = r.value("p", a.p, 1)?;
    let energy = r.value("energy", a.energy, 2.0)?;
    let m_min = r.value("m-min", a.m_min, 5)?;
    let m_max = r.value("m-max", a.m_max, 40)?;
    let tol = r.value("tolerance", a.tolerance, 1e-9)?;
    let step = r.value("step", a.step, DEFAULT_RADIUS / DEFAULT_INTERVALS as f64)?;
    let workers = workers(&mut r, &a.common)?;
    let output = r.optional("output", a.output)?;
    let report = r.optional("report", a.report)?;
    let config = r.finish()?;

    if p == 0 {
        return Err(invalid("p must be at least 1"));
    }
    if m_min == 0 || m_max < m_min {
        return Err(invalid(format!("need 1 <= m-min <= m-max, got {m_min}..{m_max}")));
    }
    model(n, m_min)?;
    finite("energy", energy)?;
    if is_landau_level(energy) {
        return Err(invalid(format!("energy {energy} is a Landau level")));
    }
    if energy <= level(p) {
        return Err(Error::BelowThreshold { p, energy, threshold: level(p) });
    }
    let tol = tolerance(tol)?;
    let opts = crossing_options(step)?;
    check_destination(&output)?;
    check_destination(&report)?;

    let m_list: Vec<u32> = (m_min..=m_max).collect();
    let study = with_workers(workers, || scaling_study(n, p, energy, &m_list, tol, &opts))??;

    let mut checks = vec![
        Check::at_most("max/min of xi_m/sqrt(k_m)", study.xi_ratio_spread, 2.0),
        Check::at_most("max/min of |lambda'| sqrt(k_m)", study.prime_ratio_spread, 3.0),
    ];
    if let (Some(xf), Some(pf)) = (study.xi_fit, study.prime_fit) {
        checks.insert(0, Check::near("log-log slope of xi_m vs k_m", xf.slope, 0.5, 0.05));
        checks.insert(1, Check::near("log-log slope of |lambda'| vs k_m", pf.slope, -0.5, 0.1));
    }
    let fit = |f: Option<crate::stats::LinearFit>| {
        f.map(|f| json!({"slope": f.slope, "intercept": f.intercept, "slope_stderr": f.slope_stderr}))
    };
    let results = json!({
        "rows": study.rows.len(),
        "fit_min_m": crate::bands::SCALING_FIT_MIN_M,
        "xi_fit": fit(study.xi_fit),
        "prime_fit": fit(study.prime_fit),
        "xi_ratio_spread": study.xi_ratio_spread,
        "prime_ratio_spread": study.prime_ratio_spread,
    });
    let mut outs = Vec::new();
    if output.is_some() {
        outs.push(Output { path: output, text: scaling_csv(&study) });
    }
    outs.push(report_output(report, Report { config, results, checks })?);
    emit(outs)?;
    Ok(EXIT_OK)
}

fn run_asym(a: AsymArgs) -> Result<i32> {
    let mut r = resolver(&a.common)?;
    let n = r.value("n", a.n, 5)?;
    let m = r.value("m", a.m, 1)?;
    let p = r.value("p", a.p, 1)?;
    let pr = model(n, m)?;
    let k = pr.coupling_f64();
    let gap_mode = k == 0.0;
    let order = r.value("order", a.order, 2)?;
    let basis = r.value("basis", a.basis, p as usize + 2 * order + 8)?;
    let (xi_lo, xi_hi, xi_step, rad, ivs) =
        if gap_mode { (2.5, 3.5, 0.1, 12.0, 4800) } else { (8.0, 15.0, 1.0, 30.0, 6000) };
    let xi_min = r.value("xi-min", a.xi_min, xi_lo)?;
    let xi_max = r.value("xi-max", a.xi_max, xi_hi)?;
    let xi_step = r.value("xi-step", a.xi_step, xi_step)?;
    let radius = r.value("radius", a.radius, rad)?;
    let intervals = r.value("intervals", a.intervals, ivs)?;
    let reference_k = r.value("reference-k", a.reference_k, k + 1.0)?;
    let workers = workers(&mut r, &a.common)?;
    let report = r.optional("report", a.report)?;
    let config = r.finish()?;

    if p == 0 {
        return Err(invalid("p must be at least 1"));
    }
    if basis < p as usize {
        return Err(invalid(format!("basis {basis} does not contain the level p = {p}")));
    }
    finite("reference-k", reference_k)?;
    let xis = arithmetic("xi", xi_min, xi_max, xi_step)?;
    if xis.len() < 2 {
        return Err(invalid("the momentum window needs at least two samples"));
    }
    if xi_min <= 0.0 {
        return Err(invalid(format!("xi-min must be positive, got {xi_min}")));
    }
    let grid = Grid::new(radius, intervals)?;
    if xi_max + 5.0 > radius {
        return Err(invalid(format!("radius {radius} must exceed xi-max + 5")));
    }
    check_destination(&report)?;

    let samples = with_workers(workers, || refined_samples(&pr, p, &xis, &grid))??;
    let sample_json: Vec<Value> = samples
        .iter()
        .map(|s| json!({"xi": s.xi, "lambda": s.value, "error_estimate": s.error_estimate}))
        .collect();

    let (results, checks) = if gap_mode {
        let profile = exponential_gap_check(&samples, p)?;
        let min_gap = profile.points.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
        let noise = samples.iter().zip(&profile.points).map(|(s, q)| s.error_estimate / q.1.abs()).fold(0.0, f64::max);
        let points: Vec<Value> =
            profile.points.iter().map(|&(xi, gap, prof)| json!({"xi": xi, "gap": gap, "profile": prof})).collect();
        let results = json!({
            "k_m": k,
            "regime": "exponential",
            "samples": sample_json,
            "profile": points,
            "ratio": profile.ratio,
            "decreasing": profile.decreasing,
        });
        let checks = vec![
            Check::above("min lambda - E_p", min_gap, 0.0),
            Check::at_most("profile max/min", profile.ratio, 2.0),
            Check::below("Richardson error / gap", noise, 0.1),
        ];
        (results, checks)
    } else {
        let coeffs = expansion_coefficients(p as usize, k, order, basis)?;
        let ep = level(p);
        let mut checks = Vec::new();
        let known = [(1, 0.0), (2, 1.0), (3, 0.0), (4, 1.5 * ep)];
        for (q, target) in known.into_iter().filter(|(q, _)| *q <= order) {
            checks.push(Check::near(format!("alpha_{q}"), coeffs.alpha(q), target, 1e-10));
        }
        let sensitivity = coupling_sensitivity(p as usize, order, basis, k, reference_k)?;
        let dependent: Vec<usize> =
            sensitivity.iter().enumerate().filter(|(_, d)| **d > 1e-10).map(|(i, _)| i + 1).collect();
        let (slope, remainders) = if order == 0 {
            (Value::Null, Vec::new())
        } else {
            let rate = remainder_rate(&samples, &coeffs)?;
            if let Some(s) = rate.slope {
                checks.push(Check::at_most(format!("order {order} remainder slope"), s, -(order as f64) - 0.5));
            }
            let rem: Vec<Value> = rate.remainders.iter().map(|&(xi, v)| json!({"xi": xi, "remainder": v})).collect();
            (rate.slope.map(Value::from).unwrap_or_else(|| json!("indeterminate")), rem)
        };
        let expansion: Vec<Value> = xis
            .iter()
            .map(|&xi| evaluate_expansion(&coeffs, xi).map(|v| json!({"xi": xi, "expansion": v})))
            .collect::<Result<_>>()?;
        let alphas: Vec<Value> =
            coeffs.alphas.iter().enumerate().map(|(i, v)| json!({"q": i + 1, "alpha": v})).collect();
        let residual = (1..=order).map(|q| coeffs.residual(q)).fold(0.0, f64::max);
        checks.push(Check::at_most("max hierarchy residual", residual, 1e-9));
        let results = json!({
            "k_m": k,
            "regime": "polynomial",
            "E_p": ep,
            "alphas": alphas,
            "coupling_dependent_orders": dependent,
            "reference_k": reference_k,
            "samples": sample_json,
            "expansion": expansion,
            "remainders": remainders,
            "remainder_slope": slope,
        });
        (results, checks)
    };
    emit(vec![report_output(report, Report { config, results, checks })?])?;
    Ok(EXIT_OK)
}

fn run_classical(a: ClassicalArgs) -> Result<i32> {
    let mut r = resolver(&a.common)?;
    let r0 = r.value("r0", a.r0, 1.2)?;
    let theta0 = r.value("theta0", a.theta0, 0.3)?;
    let z0 = r.value("z0", a.z0, 0.0)?;
    let vr = r.value("vr", a.vr, 0.4)?;
    let vtheta = r.value("vtheta", a.vtheta, 0.5)?;
    let vz = r.value("vz", a.vz, 0.8)?;
    let t_max = r.value("t-max", a.t_max, 200.0)?;
    let dt = r.value("dt", a.dt, crate::classical::DEFAULT_DT)?;
    let stride = r.value("stride", a.stride, 100)?;
    // no parallel work; accepted for a uniform interface
    workers(&mut r, &a.common)?;
    let output = r.optional("output", a.output)?;
    let report = r.optional("report", a.report)?;
    let config = r.finish()?;

    for (name, v) in [("theta0", theta0), ("z0", z0), ("vr", vr), ("vtheta", vtheta), ("vz", vz)] {
        finite(name, v)?;
    }
    positive("r0", r0)?;
    if r0 <= R_FLOOR {
        return Err(invalid(format!("r0 must exceed {R_FLOOR}")));
    }
    positive("t-max", t_max)?;
    positive("dt", dt)?;
    if t_max / dt > MAX_STEPS {
        return Err(invalid(format!("t-max / dt exceeds {MAX_STEPS} steps")));
    }
    if stride == 0 {
        return Err(invalid("stride must be at least 1"));
    }
    check_destination(&output)?;
    check_destination(&report)?;

    let initial = ClassicalState::from_cylindrical(r0, theta0, z0, vr, vtheta, vz);
    let traj = integrate(&initial, t_max, dt)?;
    let v = effective_velocity(&traj)?;
    let inv = traj.initial;
    let defect = traj.radial_energy_defect();
    let results = json!({
        "invariants": {"E": inv.energy, "sigma": inv.sigma, "c": inv.c},
        "drift": {"E": traj.drift.energy, "sigma": traj.drift.sigma, "c": traj.drift.c},
        "radial_energy_defect": defect,
        "radial_period": v.period,
        "drift_velocity": {"formula": v.formula, "fit": v.fit, "bound": v.bound},
        "steps": traj.samples.len() - 1,
    });
    let checks = vec![
        Check::at_most("E drift", traj.drift.energy, 1e-8),
        Check::at_most("sigma drift", traj.drift.sigma, 1e-8),
        Check::at_most("v_z - r drift", traj.drift.c, 1e-8),
        Check::at_most("radial energy identity defect", defect, 1e-6),
        Check::at_most("|formula - fit|/|fit|", v.relative_mismatch(), 1e-2),
        Check::at_most("|v_z| vs E^1.5/|sigma|", v.fit.abs(), v.bound),
    ];
    let mut outs = Vec::new();
    if output.is_some() {
        outs.push(Output { path: output, text: trajectory_csv(&traj, stride) });
    }
    outs.push(report_output(report, Report { config, results, checks })?);
    emit(outs)?;
    Ok(EXIT_OK)
}

fn run_current(a: CurrentArgs) -> Result<i32> {
    let mut r = resolver(&a.common)?;
    let n = r.value("n", a.n, 5)?;
    let wa = r.value("window-a", a.window_a, 1.5)?;
    let wb = r.value("window-b", a.window_b, 2.5)?;
    let edge_m_max = r.value("edge-m-max", a.edge_m_max, 3)?;
    let bulk = r.list("bulk", a.bulk, vec![9, 19, 29])?;
    let mut extended = r.list("extended", a.extended, acceptance::EXTENDED_BULK.to_vec())?;
    if r.value("skip-extended", a.skip_extended.then_some(true), false)? {
        extended.clear();
    }
    let band_samples = r.value("band-samples", a.band_samples, 81)?;
    let tol = r.value("tolerance", a.tolerance, 1e-9)?;
    let step = r.value("step", a.step, DEFAULT_RADIUS / DEFAULT_INTERVALS as f64)?;
    let workers = workers(&mut r, &a.common)?;
    let report = r.optional("report", a.report)?;
    let config = r.finish()?;

    if n < 4 {
        return Err(Error::InvalidModel(format!("transport needs n >= 4, got {n}")));
    }
    model(n, 0)?;
    let window = SpectralWindow::new(wa, wb)?;
    if window.band_indices().is_empty() {
        return Err(invalid(format!("window ({wa}, {wb}) lies below the first Landau level")));
    }
    let increasing = |l: &[u32]| l.windows(2).all(|w| w[1] > w[0]);
    if bulk.is_empty() || !increasing(&bulk) {
        return Err(invalid("bulk list must be non-empty and strictly increasing"));
    }
    if !increasing(&extended) {
        return Err(invalid("extended list must be strictly increasing"));
    }
    if !(2..=MAX_SAMPLES).contains(&band_samples) {
        return Err(invalid(format!("band-samples must lie in 2..={MAX_SAMPLES}")));
    }
    let tol = tolerance(tol)?;
    let opts = crossing_options(step)?;
    check_destination(&report)?;

    let (results, checks) = with_workers(workers, || -> Result<(Value, Vec<Check>)> {
        let wbands = bands_meeting_window(n, &window, edge_m_max, tol, &opts)?;
        let modes: Vec<(u32, u32, u32)> =
            wbands.p_set.iter().flat_map(|&p| (0..=edge_m_max).map(move |m| (m, 1, p))).collect();
        let packet = synthesize_state(&wbands, &modes)?;
        let data = band_data_for(&packet, 2 * band_samples - 1, &opts)?;
        let edge = current(&packet, &data)?;
        let c_minus = edge_lower_bound(&data, &window).unwrap_or(0.0);
        let bulk_study = bulk_decay_study(n, &window, &bulk, band_samples, tol, &opts)?;
        let ext = if extended.is_empty() {
            None
        } else {
            Some(bulk_decay_study(n, &window, &extended, band_samples, tol, &opts)?)
        };

        let preimages: Vec<Value> = wbands
            .preimages
            .iter()
            .map(|q| json!({"m": q.m, "p": q.p, "xi_lo": q.xi_lo, "xi_hi": q.xi_hi}))
            .collect();
        let contributions: Vec<Value> = edge
            .contributions
            .iter()
            .map(|c| json!({"m": c.m, "j": c.j, "p": c.p, "current": c.value}))
            .collect();
        let rows = |s: &crate::transport::BulkStudy| -> Vec<Value> {
            s.rows.iter().map(|r| json!({"M": r.m_cut, "k": r.k, "current": r.current})).collect()
        };
        let slope = bulk_study.fit.map(|f| f.slope);
        let results = json!({
            "p_set": wbands.p_set,
            "preimages": preimages,
            "edge": {"current": edge.total, "norm_sq": edge.norm_sq, "normalized": edge.normalized, "contributions": contributions},
            "c_minus": c_minus,
            "bulk": {"rows": rows(&bulk_study), "slope": slope, "strictly_decreasing": bulk_study.strictly_decreasing},
            "extended": ext.as_ref().map(|s| json!({"rows": rows(s)})),
        });
        let mut checks = vec![
            Check::above("C- (min |lambda'| over edge bands in I)", c_minus, 0.0),
            Check::at_least("edge |normalized current| vs C-", edge.normalized.abs(), c_minus),
            Check::flag("bulk |current| strictly decreasing", bulk_study.strictly_decreasing),
        ];
        if let Some(s) = slope {
            checks.push(Check::near("bulk log-log slope vs k", s, -0.5, 0.15));
        }
        if let Some(s) = &ext {
            let smallest = s.rows.iter().map(|r| r.current.abs()).fold(f64::INFINITY, f64::min);
            checks.push(Check::at_most("smallest bulk |current| on the extended list", smallest, 1e-2));
        }
        Ok((results, checks))
    })??;
    emit(vec![report_output(report, Report { config, results, checks })?])?;
    Ok(EXIT_OK)
}

fn run_convergence(a: ConvergenceArgs) -> Result<i32> {
    let mut r = resolver(&a.common)?;
    let n = r.value("n", a.n, 5)?;
    let m = r.value("m", a.m, 1)?;
    let p = r.value("p", a.p, 1)?;
    let xi = r.value("xi", a.xi, 2.0)?;
    let radius = r.value("radius", a.radius, DEFAULT_RADIUS)?;
    let intervals = r.value("intervals", a.intervals, 500)?;
    let levels = r.value("levels", a.levels, 5)?;
    let workers = workers(&mut r, &a.common)?;
    let output = r.optional("output", a.output)?;
    let report = r.optional("report", a.report)?;
    let config = r.finish()?;

    let pr = ModelParams::new(n as i64, m as i64, xi)?;
    if p == 0 {
        return Err(invalid("p must be at least 1"));
    }
    if !(3..=12).contains(&levels) {
        return Err(invalid(format!("levels must lie in 3..=12, got {levels}")));
    }
    let top = intervals.checked_shl(levels as u32 - 1).filter(|&t| t <= 4 * MAX_SAMPLES);
    if top.is_none() {
        return Err(invalid("finest grid exceeds the node limit"));
    }
    let grids: Vec<Grid> = (0..levels).map(|i| Grid::new(radius, intervals << i)).collect::<Result<_>>()?;
    if xi >= radius {
        return Err(invalid(format!("xi {xi} must stay below the radius {radius}")));
    }
    check_destination(&output)?;
    check_destination(&report)?;

    let values: Vec<f64> =
        with_workers(workers, || grids.par_iter().map(|g| band_value(&pr, g, p)).collect::<Result<Vec<_>>>())??;
    let mut csv = String::from("intervals,step,lambda,richardson,error_estimate,observed_order\n");
    let mut rows = Vec::new();
    let mut orders = Vec::new();
    for (i, g) in grids.iter().enumerate() {
        let (rich, est) = if i > 0 {
            ((4.0 * values[i] - values[i - 1]) / 3.0, (values[i] - values[i - 1]).abs() / 3.0)
        } else {
            (f64::NAN, f64::NAN)
        };
        let order = if i > 1 { ((values[i - 1] - values[i - 2]) / (values[i] - values[i - 1])).abs().log2() } else { f64::NAN };
        if i > 1 {
            orders.push(order);
        }
        let cell = |v: f64| if v.is_nan() { String::new() } else { crate::report::fmt17(v) };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g.intervals,
            cell(g.step),
            cell(values[i]),
            cell(rich),
            cell(est),
            cell(order)
        ));
        rows.push(json!({
            "intervals": g.intervals,
            "step": g.step,
            "lambda": values[i],
            "richardson": (i > 0).then_some(rich),
            "error_estimate": (i > 0).then_some(est),
            "observed_order": (i > 1).then_some(order),
        }));
    }
    let last_order = *orders.last().expect("levels >= 3");
    let n_last = values.len() - 1;
    let richardson_gap = ((4.0 * values[n_last] - values[n_last - 1]) / 3.0
        - (4.0 * values[n_last - 1] - values[n_last - 2]) / 3.0)
        .abs();
    let results = json!({"rows": rows, "observed_order": last_order, "richardson_change": richardson_gap});
    let checks = vec![
        Check::near("observed order on the finest grids", last_order, 2.0, 0.2),
        Check::at_most(
            "Richardson change vs error estimate",
            richardson_gap,
            (values[n_last - 1] - values[n_last - 2]).abs() / 3.0,
        ),
    ];
    let mut outs = Vec::new();
    if output.is_some() {
        outs.push(Output { path: output, text: csv });
    }
    outs.push(report_output(report, Report { config, results, checks })?);
    emit(outs)?;
    Ok(EXIT_OK)
}

fn run_acceptance(a: AcceptanceArgs) -> Result<i32> {
    let mut r = resolver(&a.common)?;
    let only = r.list("only", a.only, (1..=CRITERIA).collect())?;
    let workers = workers(&mut r, &a.common)?;
    let report = r.optional("report", a.report)?;
    let config = r.finish()?;
    if let Some(bad) = only.iter().find(|id| !(1..=CRITERIA).contains(*id)) {
        return Err(invalid(format!("no criterion {bad}; valid ids are 1..={CRITERIA}")));
    }
    check_destination(&report)?;

    let mut all_pass = true;
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for id in only {
        let c = with_workers(workers, || acceptance::run(id))??;
        println!("{}", c.summary());
        all_pass &= c.passed();
        summary.push(json!({"id": c.id, "title": c.title, "pass": c.passed()}));
        checks.extend(c.checks.into_iter().map(|k| Check { name: format!("{id}: {}", k.name), ..k }));
    }
    if report.is_some() {
        emit(vec![report_output(report, Report { config, results: json!({"criteria": summary}), checks })?])?;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECKS_FAILED })
}
