//! The acceptance suite: thirteen numbered criteria, each a list of checks
//! evaluated at its stated tolerance.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotics::{
    evaluate_expansion, expansion_coefficients, exponential_gap_check, refined_samples, remainder_rate,
};
use crate::bands::{agmon_norm, agmon_weight, crossing, scaling_study, sweep, CrossingOptions, DEFAULT_AGMON_ALPHA};
use crate::classical::{effective_velocity, integrate, ClassicalState};
use crate::error::Result;
use crate::fiber::{
    band_value, boundary_exponent, derivative_boundary_form, derivative_feynman_hellmann, radial_oscillator_level,
    refine, solve, Grid,
};
use crate::model::{level, ModelParams};
use crate::report::{sweep_csv, with_workers, Check};
use crate::stats::median;
use crate::transport::{
    band_data_for, bands_meeting_window, bulk_decay_study, current, edge_lower_bound, synthesize_state,
    SpectralWindow,
};

pub const CRITERIA: u32 = 13;

/// Seed of every random draw in the suite.
pub const SEED: u64 = 0x6d61_6766;

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// One summary line followed by an indented line per failed check.
    pub fn summary(&self) -> String {
        let ok = self.checks.iter().filter(|c| c.pass).count();
        let mut s = format!(
            "[{}] {:>2} {} ({}/{} checks)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            ok,
            self.checks.len()
        );
        for c in self.checks.iter().filter(|c| !c.pass) {
            s.push_str(&format!("\n       {}: value {:.6e}, bound {:.6e}", c.name, c.value, c.bound));
        }
        s
    }
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "exact spectrum at zero momentum",
        2 => "band figure structure",
        3 => "expansion coefficients",
        4 => "leading-order asymptotics",
        5 => "derivative cross-validation",
        6 => "boundary exponent",
        7 => "high-frequency growth",
        8 => "scaling laws",
        9 => "Agmon uniformity",
        10 => "exponential regime at k_m = 0",
        11 => "classical dynamics",
        12 => "current dichotomy",
        13 => "sweep determinism",
        _ => "unknown",
    }
}

/// Run criterion `id` (1-based).
pub fn run(id: u32) -> Result<Criterion> {
    let checks = match id {
        1 => exact_spectrum()?,
        2 => band_figure()?,
        3 => expansion()?,
        4 => leading_order()?,
        5 => derivatives()?,
        6 => exponent()?,
        7 => high_frequency()?,
        8 => scaling()?,
        9 => agmon()?,
        10 => exponential_regime()?,
        11 => classical()?,
        12 => current_dichotomy()?,
        13 => determinism()?,
        _ => return Err(crate::Error::InvalidInput(format!("no criterion {id}; valid ids are 1..={CRITERIA}"))),
    };
    Ok(Criterion { id, title: title(id), checks })
}

fn params(n: i64, m: i64, xi: f64) -> ModelParams {
    ModelParams::new(n, m, xi).expect("suite parameters are valid")
}

fn exact_spectrum() -> Result<Vec<Check>> {
    let coarse = Grid::new(12.0, 4800)?;
    let fine = coarse.refined();
    let cases: Vec<(i64, i64, u32)> =
        [(4, 0), (5, 0), (5, 2), (3, 1)].iter().flat_map(|&(n, m)| (1..=3).map(move |p| (n, m, p))).collect();
    cases
        .par_iter()
        .map(|&(n, m, p)| {
            let pr = params(n, m, 0.0);
            let r = refine(&pr, &coarse, &fine, p)?;
            let exact = radial_oscillator_level(&pr, p);
            Ok(Check::at_most(format!("n={n} m={m} p={p} relative error"), (r.extrapolated - exact).abs() / exact, 1e-4))
        })
        .collect()
}

fn band_figure() -> Result<Vec<Check>> {
    let xis: Vec<f64> = (0..=140).map(|i| -1.0 + 0.05 * i as f64).collect();
    let curves = sweep(5, 0..=6, 1..=3, &xis, &Grid::default())?;
    let mut checks = Vec::new();
    for c in &curves {
        checks.push(Check::below(format!("m={} p={} largest increment", c.m, c.p), c.max_increment(), 1e-8));
        checks.push(Check::above(format!("m={} p={} min lambda - E_p", c.m, c.p), c.min_gap(), 0.0));
        if c.p == 1 {
            let at6 = c.samples.last().expect("non-empty sweep");
            let k = params(5, c.m as i64, 0.0).coupling_f64();
            checks.push(Check::at_most(format!("m={} lambda(6) - 1 vs 1.5 k_m/36", c.m), at6.lambda - 1.0, 1.5 * k / 36.0));
        }
    }
    Ok(checks)
}

/// Normalized Hermite functions from the physicists' polynomials,
/// `H_{q-1}(s) e^{-s²/2} / sqrt(2^{q-1} (q-1)! sqrt(pi))`.
fn hermite_table(basis: usize, s: f64) -> Vec<f64> {
    let mut h = vec![0.0; basis];
    h[0] = 1.0;
    if basis > 1 {
        h[1] = 2.0 * s;
    }
    for n in 1..basis - 1 {
        h[n + 1] = 2.0 * s * h[n] - 2.0 * n as f64 * h[n - 1];
    }
    let gauss = (-0.5 * s * s).exp();
    let mut norm = std::f64::consts::PI.sqrt();
    (0..basis)
        .map(|n| {
            if n > 0 {
                norm *= 2.0 * n as f64;
            }
            h[n] * gauss / norm.sqrt()
        })
        .collect()
}

/// Dense recursion: position matrix by quadrature, `A_q` as matrix powers,
/// resolvent by a pseudo-inverse of `H_0 - E_p`.
pub fn dense_alphas(p: usize, k: f64, order: usize, basis: usize) -> Vec<f64> {
    let (half, nodes) = (14.0, 8001);
    let ds = 2.0 * half / (nodes - 1) as f64;
    let mut s_mat = DMatrix::<f64>::zeros(basis, basis);
    for i in 0..nodes {
        let s = -half + i as f64 * ds;
        let w = if i == 0 || i == nodes - 1 { 0.5 * ds } else { ds };
        let psi = DVector::from_vec(hermite_table(basis, s));
        s_mat += (&psi * psi.transpose()) * (w * s);
    }
    let identity = DMatrix::<f64>::identity(basis, basis);
    let a = |q: usize| -> DMatrix<f64> {
        if q == 1 {
            return DMatrix::zeros(basis, basis);
        }
        let mut m = identity.clone();
        for _ in 0..q - 2 {
            m = &m * (-&s_mat);
        }
        m * (q - 1) as f64
    };
    let ep = (2 * p - 1) as f64;
    let shifted = DMatrix::from_fn(basis, basis, |i, j| if i == j { (2 * i + 1) as f64 - ep } else { 0.0 });
    let resolvent = shifted.pseudo_inverse(1e-9).expect("diagonal pseudo-inverse");

    let mut g0 = DVector::<f64>::zeros(basis);
    g0[p - 1] = 1.0;
    let mut modes = vec![g0.clone()];
    let mut alphas = Vec::new();
    for q in 1..=order {
        let mut src = DVector::<f64>::zeros(basis);
        for j in 1..=q {
            src += a(j) * &modes[q - j];
            if j < q {
                src -= &modes[q - j] * alphas[j - 1];
            }
        }
        let alpha = src.dot(&g0);
        alphas.push(alpha);
        src -= &g0 * alpha;
        modes.push(-(&resolvent * src) * k);
    }
    alphas
}

fn expansion() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for p in 1..=3usize {
        for k in [0.75, 8.75] {
            let c = expansion_coefficients(p, k, 4, 30)?;
            let dense = dense_alphas(p, k, 4, 30);
            let tag = format!("p={p} k={k}");
            checks.push(Check::near(format!("{tag} alpha_1"), c.alpha(1), 0.0, 1e-12));
            checks.push(Check::near(format!("{tag} alpha_2"), c.alpha(2), 1.0, 1e-12));
            checks.push(Check::near(format!("{tag} alpha_3 vs dense"), c.alpha(3), dense[2], 1e-10));
            checks.push(Check::near(format!("{tag} alpha_4 vs dense"), c.alpha(4), dense[3], 1e-10));
            checks.push(Check::near(format!("{tag} dense alpha_3"), dense[2], 0.0, 1e-10));
            checks.push(Check::near(format!("{tag} dense alpha_4 vs 3E_p/2"), dense[3], 1.5 * level(p as u32), 1e-10));
        }
    }
    Ok(checks)
}

fn leading_order() -> Result<Vec<Check>> {
    let pr = params(5, 1, 0.0);
    let k = pr.coupling_f64();
    let grid = Grid::new(30.0, 6000)?;
    let xis: Vec<f64> = (8..=15).map(f64::from).collect();
    let samples = refined_samples(&pr, 1, &xis, &grid)?;
    let at15 = samples.last().expect("samples");
    let lead = 15.0f64.powi(2) * (at15.value - 1.0) / k;
    let coeffs = expansion_coefficients(1, k, 2, 20)?;
    let rate = remainder_rate(&samples, &coeffs)?;
    Ok(vec![
        Check::within("xi^2 (lambda - 1)/k_m at xi = 15", lead, 0.9, 1.1),
        Check::at_most("N = 2 remainder slope on [8, 15]", rate.slope.unwrap_or(f64::NAN), -2.5),
        Check::at_most(
            "N = 2 expansion error at xi = 15",
            (at15.value - evaluate_expansion(&coeffs, 15.0)?).abs(),
            1e-3,
        ),
    ])
}

fn derivatives() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let draws: Vec<(u32, u32, f64)> =
        (0..20).map(|_| (rng.gen_range(0..=6), rng.gen_range(1..=3), rng.gen_range(0.0..5.0))).collect();
    let grid = Grid::default();
    let delta = 1e-3;
    let per: Vec<Vec<Check>> = draws
        .par_iter()
        .map(|&(m, p, xi)| {
            let pr = params(5, m as i64, xi);
            let pair = &solve(&pr, &grid, p as usize)?[p as usize - 1];
            let fh = derivative_feynman_hellmann(&pr, pair, &grid);
            let bd = derivative_boundary_form(&pr, pair, &grid);
            let up = band_value(&pr.with_xi(xi + delta), &grid, p)?;
            let down = band_value(&pr.with_xi(xi - delta), &grid, p)?;
            let cd = (up - down) / (2.0 * delta);
            let tag = format!("m={m} p={p} xi={xi:.3}");
            Ok(vec![
                Check::at_most(format!("{tag} |FH - boundary|/|FH|"), (fh - bd).abs() / fh.abs(), 1e-2),
                Check::at_most(format!("{tag} |FH - centered|/|FH|"), (fh - cd).abs() / fh.abs(), 1e-3),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Nodes in the least-squares window of the exponent fit.
pub const EXPONENT_WINDOW: usize = 40;

fn exponent() -> Result<Vec<Check>> {
    let grid = Grid::new(20.0, 8000)?;
    [(4, 0), (5, 1), (5, 3)]
        .iter()
        .map(|&(n, m)| {
            let pr = params(n, m, 1.0);
            let pair = &solve(&pr, &grid, 1)?[0];
            let nu = boundary_exponent(pair, &grid, EXPONENT_WINDOW)?;
            let exact = pr.frobenius_exponent();
            Ok(Check::at_most(format!("n={n} m={m} |nu - {exact}|/{exact}"), (nu - exact).abs() / exact, 0.05))
        })
        .collect()
}

fn high_frequency() -> Result<Vec<Check>> {
    let grid = Grid::default();
    let mut checks = Vec::new();
    for m in 0..=3 {
        let pairs = solve(&params(5, m, -10.0), &grid, 2)?;
        for (i, pair) in pairs.iter().enumerate() {
            checks.push(Check::within(format!("m={m} p={} lambda(-10)/100", i + 1), pair.value / 100.0, 1.0, 1.1));
        }
    }
    Ok(checks)
}

fn scaling_family() -> Vec<u32> {
    (5..=40).collect()
}

fn scaling() -> Result<Vec<Check>> {
    let s = scaling_study(5, 1, 2.0, &scaling_family(), 1e-9, &CrossingOptions::default())?;
    let xi_fit = s.xi_fit.expect("family has many rows");
    let prime_fit = s.prime_fit.expect("family has many rows");
    Ok(vec![
        Check::near("log-log slope of xi_m vs k_m", xi_fit.slope, 0.5, 0.05),
        Check::near("log-log slope of |lambda'| vs k_m", prime_fit.slope, -0.5, 0.1),
        Check::at_most("max/min of xi_m/sqrt(k_m)", s.xi_ratio_spread, 2.0),
        Check::at_most("max/min of |lambda'| sqrt(k_m)", s.prime_ratio_spread, 3.0),
    ])
}

fn agmon() -> Result<Vec<Check>> {
    let norms: Vec<(u32, f64)> = scaling_family()
        .par_iter()
        .map(|&m| {
            let c = crossing(5, m, 1, 2.0, 1e-9, &CrossingOptions::default())?;
            let pair = c.eigenpair()?;
            let w = agmon_weight(&c.params(), 2.0, &c.grid, DEFAULT_AGMON_ALPHA)?;
            Ok((m, agmon_norm(&pair, &w, &c.grid).unwrap_or(f64::INFINITY)))
        })
        .collect::<Result<_>>()?;
    let finite = norms.iter().filter(|(_, v)| v.is_finite()).count();
    let tail: Vec<f64> = norms.iter().filter(|(m, _)| (10..=40).contains(m)).map(|(_, v)| *v).collect();
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let med = median(&tail);
    Ok(vec![
        Check::at_least("finite weighted norms (of 36)", finite as f64, norms.len() as f64),
        Check::at_most("max / median over m in [10, 40]", max / med, 4.0),
    ])
}

fn exponential_regime() -> Result<Vec<Check>> {
    let pr = params(4, 0, 0.0);
    let xis: Vec<f64> = (0..=10).map(|i| 2.5 + 0.1 * i as f64).collect();
    let samples = refined_samples(&pr, 1, &xis, &Grid::new(12.0, 4800)?)?;
    let profile = exponential_gap_check(&samples, 1)?;
    let min_gap = profile.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let worst_noise = samples.iter().zip(&profile.points).map(|(s, p)| s.error_estimate / p.1).fold(0.0, f64::max);
    Ok(vec![
        Check::above("min lambda - 1 on [2.5, 3.5]", min_gap, 0.0),
        Check::at_most("profile max/min", profile.ratio, 2.0),
        Check::below("Richardson error / gap", worst_noise, 0.1),
    ])
}

/// Random initial state with `E` in `[1, 4]` and `|sigma|` in `[0.2, 1]`.
pub fn random_classical_state(rng: &mut impl Rng) -> ClassicalState {
    let energy: f64 = rng.gen_range(1.0..4.0);
    let r0: f64 = rng.gen_range(0.8..2.0);
    let sigma_abs: f64 = rng.gen_range(0.2..1.0);
    let sigma = if rng.gen_bool(0.5) { sigma_abs } else { -sigma_abs };
    let v_theta = sigma / r0;
    let rest = (energy - v_theta * v_theta).max(0.0).sqrt();
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    ClassicalState::from_cylindrical(r0, theta, 0.0, rest * phi.cos(), v_theta, rest * phi.sin())
}

fn classical() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let states: Vec<ClassicalState> = (0..5).map(|_| random_classical_state(&mut rng)).collect();
    let per: Vec<Vec<Check>> = states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let traj = integrate(s, 200.0, 1e-3)?;
            let v = effective_velocity(&traj)?;
            let inv = traj.initial;
            let tag = format!("run {i} (E={:.3}, sigma={:.3})", inv.energy, inv.sigma);
            Ok(vec![
                Check::at_most(format!("{tag} E drift"), traj.drift.energy, 1e-8),
                Check::at_most(format!("{tag} sigma drift"), traj.drift.sigma, 1e-8),
                Check::at_most(format!("{tag} v_z - r drift"), traj.drift.c, 1e-8),
                Check::at_most(format!("{tag} |formula - fit|/|fit|"), v.relative_mismatch(), 1e-2),
                Check::at_most(format!("{tag} |v_z| vs E^1.5/|sigma|"), v.fit.abs(), v.bound),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Angular cut-offs `M` of the extended bulk list, searched for a packet with
/// `|current| <= 1e-2`.
pub const EXTENDED_BULK: [u32; 4] = [59, 119, 239, 479];

fn current_dichotomy() -> Result<Vec<Check>> {
    let opts = CrossingOptions::default();
    let window = SpectralWindow::new(1.5, 2.5)?;
    let wb = bands_meeting_window(5, &window, 3, 1e-9, &opts)?;
    let modes: Vec<(u32, u32, u32)> = (0..=3).map(|m| (m, 1, 1)).collect();
    let packet = synthesize_state(&wb, &modes)?;
    let data = band_data_for(&packet, 161, &opts)?;
    let edge = current(&packet, &data)?;
    let c_minus = edge_lower_bound(&data, &window).unwrap_or(0.0);

    let bulk = bulk_decay_study(5, &window, &[9, 19, 29], 81, 1e-9, &opts)?;
    let slope = bulk.fit.map(|f| f.slope).unwrap_or(f64::NAN);
    let extended = bulk_decay_study(5, &window, &EXTENDED_BULK, 81, 1e-9, &opts)?;
    let smallest = extended.rows.iter().map(|r| r.current.abs()).fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::above("C- (min |lambda'| over edge bands in I)", c_minus, 0.0),
        Check::at_least("edge |normalized current| vs C-", edge.normalized.abs(), c_minus),
        Check::flag("bulk |current| strictly decreasing for M+1 in {10, 20, 30}", bulk.strictly_decreasing),
        Check::near("bulk log-log slope vs k", slope, -0.5, 0.15),
        Check::at_most("smallest bulk |current| on the extended list", smallest, 1e-2),
    ])
}

fn determinism() -> Result<Vec<Check>> {
    let xis: Vec<f64> = (0..=28).map(|i| -1.0 + 0.25 * i as f64).collect();
    let render = |workers: usize| -> Result<String> {
        with_workers(workers, || sweep(5, 0..=3, 1..=3, &xis, &Grid::default()).map(|c| sweep_csv(&c)))?
    };
    let reference = render(1)?;
    let mut checks = Vec::new();
    for w in [4, 8] {
        checks.push(Check::flag(format!("CSV with {w} workers identical to 1 worker"), render(w)? == reference));
    }
    Ok(checks)
}
