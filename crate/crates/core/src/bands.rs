//! Band-function sweeps, threshold crossings, high-angular-momentum scaling
//! and Agmon-weight diagnostics.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fiber::{
    band_value, derivative_boundary_form, derivative_feynman_hellmann, solve, EigenPair, Grid, DEFAULT_INTERVALS,
    DEFAULT_RADIUS,
};
use crate::model::{level, potential_minimum, potential_unchecked, turning_points_from, ModelParams};
use crate::stats::{log_log_fit, spread, LinearFit};

/// One sample of a band curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSample {
    pub xi: f64,
    pub lambda: f64,
    pub prime_fh: f64,
    pub prime_bd: f64,
}

/// Sampled `lambda_{m,p}` with both derivative evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCurve {
    pub n: u32,
    pub m: u32,
    pub p: u32,
    pub samples: Vec<BandSample>,
}

impl BandCurve {
    /// Largest forward difference `lambda_{i+1} - lambda_i`.
    pub fn max_increment(&self) -> f64 {
        self.samples.windows(2).map(|w| w[1].lambda - w[0].lambda).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest `lambda - E_p` over the samples.
    pub fn min_gap(&self) -> f64 {
        let ep = level(self.p);
        self.samples.iter().map(|s| s.lambda - ep).fold(f64::INFINITY, f64::min)
    }

    /// Largest relative disagreement of the two derivative formulas.
    pub fn max_derivative_mismatch(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.prime_fh - s.prime_bd).abs() / s.prime_fh.abs())
            .fold(0.0, f64::max)
    }

    /// Number of sign changes of `lambda - energy` along the samples.
    pub fn sign_changes(&self, energy: f64) -> usize {
        self.samples.windows(2).filter(|w| (w[0].lambda > energy) != (w[1].lambda > energy)).count()
    }

    /// Linear interpolation of `(lambda, lambda'_FH)` at `xi`, `None` outside
    /// the sampled range.
    pub fn interpolate(&self, xi: f64) -> Option<(f64, f64)> {
        let s = &self.samples;
        if s.is_empty() || xi < s[0].xi || xi > s[s.len() - 1].xi {
            return None;
        }
        let i = s.partition_point(|a| a.xi <= xi);
        if i == s.len() {
            let last = s[s.len() - 1];
            return Some((last.lambda, last.prime_fh));
        }
        if i == 0 {
            return Some((s[0].lambda, s[0].prime_fh));
        }
        let (a, b) = (s[i - 1], s[i]);
        let t = (xi - a.xi) / (b.xi - a.xi);
        Some((a.lambda + t * (b.lambda - a.lambda), a.prime_fh + t * (b.prime_fh - a.prime_fh)))
    }
}

fn check_range(name: &str, r: &RangeInclusive<u32>) -> Result<()> {
    if r.is_empty() {
        return Err(Error::InvalidInput(format!("{name} range {}..={} is empty", r.start(), r.end())));
    }
    Ok(())
}

/// Bands `(m, p)` for `m` in `m_range`, `p` in `p_range` over `xi_samples`.
///
/// Work items are whole fiber solves keyed by `(m, xi)`; the output is ordered
/// by `(m, p, xi)` whatever the scheduling.
pub fn sweep(
    n: u32,
    m_range: RangeInclusive<u32>,
    p_range: RangeInclusive<u32>,
    xi_samples: &[f64],
    grid: &Grid,
) -> Result<Vec<BandCurve>> {
    check_range("m", &m_range)?;
    check_range("p", &p_range)?;
    if *p_range.start() == 0 {
        return Err(Error::InvalidInput("band index p must be at least 1".into()));
    }
    if xi_samples.is_empty() {
        return Err(Error::InvalidInput("no momentum samples".into()));
    }
    if xi_samples.iter().any(|x| !x.is_finite()) || xi_samples.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("momentum samples must be finite and strictly increasing".into()));
    }
    ModelParams::new(n as i64, *m_range.start() as i64, 0.0)?;
    let p_max = *p_range.end() as usize;
    if p_max > grid.len() {
        return Err(Error::InvalidInput(format!("p = {p_max} exceeds the {} grid nodes", grid.len())));
    }

    let tasks: Vec<(u32, f64)> = m_range.clone().flat_map(|m| xi_samples.iter().map(move |&xi| (m, xi))).collect();
    let solved: Vec<Vec<BandSample>> = tasks
        .par_iter()
        .map(|&(m, xi)| {
            let params = ModelParams { n, m, xi };
            let pairs = solve(&params, grid, p_max)?;
            Ok(p_range
                .clone()
                .map(|p| {
                    let pair = &pairs[p as usize - 1];
                    BandSample {
                        xi,
                        lambda: pair.value,
                        prime_fh: derivative_feynman_hellmann(&params, pair, grid),
                        prime_bd: derivative_boundary_form(&params, pair, grid),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let per_m = xi_samples.len();
    let mut curves = Vec::new();
    for (mi, m) in m_range.enumerate() {
        for (pi, p) in p_range.clone().enumerate() {
            let samples = (0..per_m).map(|x| solved[mi * per_m + x][pi]).collect();
            curves.push(BandCurve { n, m, p, samples });
        }
    }
    Ok(curves)
}

/// One band curve on the grid that `options` assigns to the largest sample,
/// so that the truncation radius exceeds every `xi` by the margin.
pub fn band_curve(n: u32, m: u32, p: u32, xi_samples: &[f64], options: &CrossingOptions) -> Result<BandCurve> {
    let top = xi_samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::InvalidInput("no momentum samples".into()));
    }
    let grid = options.grid_for(top)?;
    let mut curves = sweep(n, m..=m, p..=p, xi_samples, &grid)?;
    Ok(curves.swap_remove(0))
}

/// Grid policy for crossing searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingOptions {
    pub step: f64,
    pub min_radius: f64,
    /// The grid radius is at least `xi + margin`.
    pub margin: f64,
    pub max_bisections: usize,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        CrossingOptions {
            step: DEFAULT_RADIUS / DEFAULT_INTERVALS as f64,
            min_radius: DEFAULT_RADIUS,
            margin: 10.0,
            max_bisections: 60,
        }
    }
}

impl CrossingOptions {
    pub fn grid_for(&self, xi: f64) -> Result<Grid> {
        Grid::with_step(self.min_radius.max(xi + self.margin), self.step)
    }
}

/// Solution `xi_m` of `lambda_{m,p}(xi_m) = E`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingResult {
    pub n: u32,
    pub m: u32,
    pub p: u32,
    pub energy: f64,
    pub xi_m: f64,
    pub lambda: f64,
    /// `lambda'(xi_m)`, Feynman–Hellmann.
    pub slope: f64,
    pub k_m: f64,
    pub grid: Grid,
}

impl CrossingResult {
    pub fn params(&self) -> ModelParams {
        ModelParams { n: self.n, m: self.m, xi: self.xi_m }
    }

    /// Eigenpair of band `p` at the crossing, on the crossing grid.
    pub fn eigenpair(&self) -> Result<EigenPair> {
        let mut pairs = solve(&self.params(), &self.grid, self.p as usize)?;
        Ok(pairs.swap_remove(self.p as usize - 1))
    }
}

const SEARCH_LIMIT: f64 = (1u64 << 30) as f64;

/// Bisection for `lambda_{m,p}(xi) = E` after bracketing by doubling from 0.
pub fn crossing(n: u32, m: u32, p: u32, energy: f64, tolerance: f64, options: &CrossingOptions) -> Result<CrossingResult> {
    let base = ModelParams::new(n as i64, m as i64, 0.0)?;
    if p == 0 {
        return Err(Error::InvalidInput("band index p must be at least 1".into()));
    }
    let k_m = base.coupling_f64();
    if k_m < 0.0 {
        return Err(Error::InvalidModel(format!("crossing needs k_m >= 0, (n, m) = ({n}, {m}) gives {k_m}")));
    }
    if !(tolerance > 0.0) || !energy.is_finite() {
        return Err(Error::InvalidInput(format!("bad crossing target E = {energy}, tolerance = {tolerance}")));
    }
    let threshold = level(p);
    if !(energy > threshold) {
        return Err(Error::BelowThreshold { p, energy, threshold });
    }

    let f = |xi: f64, grid: &Grid| band_value(&base.with_xi(xi), grid, p).map(|l| l - energy);

    // bracket [lo, hi] with f(lo) > 0 > f(hi)
    let f0 = f(0.0, &options.grid_for(0.0)?)?;
    let (mut lo, mut hi) = if f0 == 0.0 {
        (0.0, 0.0)
    } else {
        let dir = if f0 > 0.0 { 1.0 } else { -1.0 };
        let mut prev = 0.0;
        let mut step = 1.0;
        loop {
            if step > SEARCH_LIMIT {
                return Err(Error::SearchFailure { m, p, energy });
            }
            let xi = dir * step;
            let v = f(xi, &options.grid_for(xi)?)?;
            if (v > 0.0) != (f0 > 0.0) || v == 0.0 {
                break if dir > 0.0 { (prev, xi) } else { (xi, prev) };
            }
            prev = xi;
            step *= 2.0;
        }
    };

    let grid = options.grid_for(hi)?;
    let mut xi_m = 0.5 * (lo + hi);
    for _ in 0..options.max_bisections {
        xi_m = 0.5 * (lo + hi);
        let v = f(xi_m, &grid)?;
        if v.abs() <= 0.01 * tolerance || xi_m <= lo || xi_m >= hi {
            break;
        }
        if v > 0.0 {
            lo = xi_m;
        } else {
            hi = xi_m;
        }
    }
    let params = base.with_xi(xi_m);
    let mut pairs = solve(&params, &grid, p as usize)?;
    let pair = pairs.swap_remove(p as usize - 1);
    if (pair.value - energy).abs() > tolerance {
        return Err(Error::Convergence { what: "crossing bisection", index: m as usize });
    }
    Ok(CrossingResult {
        n,
        m,
        p,
        energy,
        xi_m,
        lambda: pair.value,
        slope: derivative_feynman_hellmann(&params, &pair, &grid),
        k_m,
        grid,
    })
}

/// One row of the scaling table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub m: u32,
    pub k_m: f64,
    pub xi_m: f64,
    pub lambda_prime: f64,
    pub xi_over_sqrtk: f64,
    pub prime_times_sqrtk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub n: u32,
    pub p: u32,
    pub energy: f64,
    pub rows: Vec<ScalingRow>,
    /// Regression of `ln xi_m` on `ln k_m` over rows with `m >= 5`.
    pub xi_fit: Option<LinearFit>,
    /// Regression of `ln |lambda'|` on `ln k_m` over rows with `m >= 5`.
    pub prime_fit: Option<LinearFit>,
    /// `max / min` of `xi_m / sqrt(k_m)`.
    pub xi_ratio_spread: f64,
    /// `max / min` of `|lambda'| sqrt(k_m)`.
    pub prime_ratio_spread: f64,
}

/// Smallest `m` entering the log-log regressions.
pub const SCALING_FIT_MIN_M: u32 = 5;

pub fn scaling_study(
    n: u32,
    p: u32,
    energy: f64,
    m_list: &[u32],
    tolerance: f64,
    options: &CrossingOptions,
) -> Result<ScalingStudy> {
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::InvalidInput("m list must be non-empty with entries >= 1".into()));
    }
    if (energy + 1.0) / 2.0 == ((energy + 1.0) / 2.0).round() && energy >= 1.0 {
        return Err(Error::InvalidInput(format!("E = {energy} is a Landau level")));
    }
    let crossings: Vec<CrossingResult> =
        m_list.par_iter().map(|&m| crossing(n, m, p, energy, tolerance, options)).collect::<Result<_>>()?;
    let rows: Vec<ScalingRow> = crossings
        .iter()
        .map(|c| {
            let sk = c.k_m.sqrt();
            ScalingRow {
                m: c.m,
                k_m: c.k_m,
                xi_m: c.xi_m,
                lambda_prime: c.slope,
                xi_over_sqrtk: c.xi_m / sk,
                prime_times_sqrtk: c.slope * sk,
            }
        })
        .collect();
    let fit_rows: Vec<&ScalingRow> = rows.iter().filter(|r| r.m >= SCALING_FIT_MIN_M).collect();
    let (xi_fit, prime_fit) = if fit_rows.len() >= 2 {
        let ks: Vec<f64> = fit_rows.iter().map(|r| r.k_m).collect();
        let xis: Vec<f64> = fit_rows.iter().map(|r| r.xi_m).collect();
        let primes: Vec<f64> = fit_rows.iter().map(|r| r.lambda_prime).collect();
        (Some(log_log_fit(&ks, &xis)), Some(log_log_fit(&ks, &primes)))
    } else {
        (None, None)
    };
    let xi_ratio_spread = spread(&rows.iter().map(|r| r.xi_over_sqrtk).collect::<Vec<_>>());
    let prime_ratio_spread = spread(&rows.iter().map(|r| r.prime_times_sqrtk.abs()).collect::<Vec<_>>());
    Ok(ScalingStudy { n, p, energy, rows, xi_fit, prime_fit, xi_ratio_spread, prime_ratio_spread })
}

/// Agmon weight `Phi_m = delta_m d(·, I_m)` on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AgmonWeight {
    pub delta: f64,
    pub alpha: f64,
    pub energy: f64,
    pub values: Vec<f64>,
    /// Turning points `(r_-, r_+)` bounding `I_m = {V_m < E}`.
    pub well: (f64, f64),
}

/// Default `alpha` in `delta_m = alpha / sqrt(k_m)`.
pub const DEFAULT_AGMON_ALPHA: f64 = 2.0;

/// `Phi_m` by cumulative trapezoid quadrature of `delta_m sqrt((V_m - E)_+)`
/// outward from the turning points.
pub fn agmon_weight(params: &ModelParams, energy: f64, grid: &Grid, alpha: f64) -> Result<AgmonWeight> {
    if !(alpha > 1.5) {
        return Err(Error::InvalidInput(format!("alpha must exceed 3/2, got {alpha}")));
    }
    let k = params.coupling_f64();
    if !(k > 0.0) {
        return Err(Error::InvalidModel(format!("Agmon weight needs k_m > 0, got {k}")));
    }
    let profile = potential_minimum(params)?;
    let (r_minus, r_plus) = turning_points_from(&profile, energy)?;
    let delta = alpha / k.sqrt();
    let g = |r: f64| delta * (potential_unchecked(k, params.xi, r) - energy).max(0.0).sqrt();

    let len = grid.len();
    let mut values = vec![0.0; len];
    // left of the well: integrate from r_- down to the axis
    let first_in = (0..len).find(|&j| grid.node(j) >= r_minus).unwrap_or(len);
    if first_in > 0 {
        let j = first_in - 1;
        let r = grid.node(j);
        values[j] = 0.5 * (r_minus - r) * g(r);
        for j in (0..first_in - 1).rev() {
            values[j] = values[j + 1] + 0.5 * grid.step * (g(grid.node(j)) + g(grid.node(j + 1)));
        }
    }
    // right of the well
    if let Some(first_out) = (0..len).find(|&j| grid.node(j) > r_plus) {
        let r = grid.node(first_out);
        values[first_out] = 0.5 * (r - r_plus) * g(r);
        for j in first_out + 1..len {
            values[j] = values[j - 1] + 0.5 * grid.step * (g(grid.node(j - 1)) + g(grid.node(j)));
        }
    }
    Ok(AgmonWeight { delta, alpha, energy, values, well: (r_minus, r_plus) })
}

impl AgmonWeight {
    /// Largest relative eikonal defect `| |Phi'|² - delta²(V - E)_+ | / delta²(V - E)_+`
    /// over interior nodes at least `skip` nodes away from the axis and
    /// from the turning points, with `Phi'` from central differences.
    pub fn eikonal_defect(&self, params: &ModelParams, grid: &Grid, skip: usize) -> f64 {
        let k = params.coupling_f64();
        let h = grid.step;
        let near_turn = |r: f64| (r - self.well.0).abs() < skip as f64 * h || (r - self.well.1).abs() < skip as f64 * h;
        let mut worst: f64 = 0.0;
        for j in skip.max(1)..grid.len() - 1 {
            let r = grid.node(j);
            if near_turn(r) {
                continue;
            }
            let d = (self.values[j + 1] - self.values[j - 1]) / (2.0 * h);
            let target = self.delta * self.delta * (potential_unchecked(k, params.xi, r) - self.energy).max(0.0);
            if target > 0.0 {
                worst = worst.max((d * d - target).abs() / target);
            }
        }
        worst
    }
}

/// `‖e^{Phi_m} u‖` in the `h`-weighted grid norm.
///
/// The squared norm is accumulated in log space; a result beyond the range
/// of binary64 is an error.
pub fn agmon_norm(pair: &EigenPair, weight: &AgmonWeight, grid: &Grid) -> Result<f64> {
    if pair.vector.len() != weight.values.len() || pair.vector.len() != grid.len() {
        return Err(Error::InvalidInput("eigenvector, weight and grid sizes differ".into()));
    }
    let logs: Vec<f64> = pair
        .vector
        .iter()
        .zip(&weight.values)
        .filter(|(u, _)| **u != 0.0)
        .map(|(u, phi)| 2.0 * phi + 2.0 * u.abs().ln())
        .collect();
    if logs.is_empty() {
        return Ok(0.0);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    let log_norm_sq = top + sum.ln() + grid.step.ln();
    let norm = (0.5 * log_norm_sq).exp();
    if !norm.is_finite() {
        return Err(Error::Overflow { log_norm_sq });
    }
    Ok(norm)
}

/// `h Σ_{|r_j - center| <= half_width} u²`.
pub fn mass_near(pair: &EigenPair, grid: &Grid, center: f64, half_width: f64) -> f64 {
    grid.step
        * pair.vector.iter().enumerate().filter(|(j, _)| (grid.node(*j) - center).abs() <= half_width).map(|(_, u)| u * u).sum::<f64>()
}

/// `h Σ_{r_j <= radius} u²`.
pub fn mass_below(pair: &EigenPair, grid: &Grid, radius: f64) -> f64 {
    grid.step * pair.vector.iter().enumerate().take_while(|(j, _)| grid.node(*j) <= radius).map(|(_, u)| u * u).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spread_abs(v: &[f64]) -> f64 {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn coarse() -> Grid {
        Grid::new(20.0, 2000).unwrap()
    }

    #[test]
    fn sweep_shape_and_order() {
        let xis: Vec<f64> = (0..13).map(|i| -1.0 + 0.5 * i as f64).collect();
        let curves = sweep(5, 0..=3, 1..=3, &xis, &coarse()).unwrap();
        assert_eq!(curves.len(), 12);
        let keys: Vec<(u32, u32)> = curves.iter().map(|c| (c.m, c.p)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for c in &curves {
            assert_eq!(c.samples.len(), xis.len());
            assert!(c.max_increment() < 0.0, "(m, p) = ({}, {})", c.m, c.p);
            assert!(c.min_gap() > 0.0);
        }
    }

    #[test]
    fn sweep_validation() {
        let g = coarse();
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 3..=2;
        assert!(sweep(5, empty, 1..=1, &[0.0], &g).is_err());
        assert!(sweep(5, 0..=1, 0..=1, &[0.0], &g).is_err());
        assert!(sweep(5, 0..=1, 1..=1, &[1.0, 0.0], &g).is_err());
        assert!(sweep(2, 0..=1, 1..=1, &[0.0], &g).is_err());
    }

    #[test]
    fn derivative_formulas_agree_along_sweep() {
        let xis = [0.0, 1.0, 2.5, 4.0];
        for c in sweep(5, 1..=4, 1..=2, &xis, &Grid::default()).unwrap() {
            assert!(c.max_derivative_mismatch() < 1e-2, "(m, p) = ({}, {})", c.m, c.p);
        }
    }

    #[test]
    fn band_grows_with_m_at_zero_momentum() {
        let curves = sweep(5, 0..=8, 1..=1, &[0.0], &coarse()).unwrap();
        let vals: Vec<f64> = curves.iter().map(|c| c.samples[0].lambda).collect();
        for w in vals.windows(2) {
            assert!(w[1] > w[0]);
        }
        // oracle 4(p-1) + |2m+n-3| + 2 at m = 8
        assert!((vals[8] - 20.0).abs() < 1e-2);
    }

    #[test]
    fn crossing_matches_dense_scan() {
        let opts = CrossingOptions::default();
        let c = crossing(5, 0, 1, 2.0, 1e-10, &opts).unwrap();
        assert!((c.lambda - 2.0).abs() <= 1e-8);
        assert!(c.slope < 0.0);
        // oracle: sign change of lambda - 2 on a 0.05 scan
        let g = opts.grid_for(c.xi_m + 1.0).unwrap();
        let base = ModelParams::new(5, 0, 0.0).unwrap();
        let scan: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let xi = -2.0 + 0.05 * i as f64;
                (xi, band_value(&base.with_xi(xi), &g, 1).unwrap() - 2.0)
            })
            .collect();
        let changes: Vec<f64> = scan.windows(2).filter(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0)).map(|w| w[0].0).collect();
        assert_eq!(changes.len(), 1);
        assert!(c.xi_m >= changes[0] && c.xi_m <= changes[0] + 0.05);
    }

    #[test]
    fn crossing_errors_and_monotonicity() {
        let opts = CrossingOptions::default();
        assert!(matches!(crossing(5, 1, 1, 1.0, 1e-8, &opts), Err(Error::BelowThreshold { .. })));
        assert!(matches!(crossing(3, 0, 1, 2.0, 1e-8, &opts), Err(Error::InvalidModel(_))));
        let low = crossing(5, 2, 1, 2.0, 1e-8, &opts).unwrap();
        let high = crossing(5, 2, 1, 5.0, 1e-8, &opts).unwrap();
        assert!(high.xi_m < low.xi_m);
    }

    #[test]
    fn turning_points_bracketed_by_sqrt_k() {
        let c = crossing(5, 10, 1, 2.0, 1e-9, &CrossingOptions::default()).unwrap();
        let params = c.params();
        let (rm, rp) = crate::model::turning_points(&params, 2.0).unwrap();
        // oracle: dense scan of sign changes of V - E
        let sk = c.k_m.sqrt();
        let mut roots = Vec::new();
        let mut prev = potential_unchecked(c.k_m, c.xi_m, 0.01) - 2.0;
        for i in 2..200_000 {
            let r = 0.01 * i as f64 * 0.05;
            let v = potential_unchecked(c.k_m, c.xi_m, r) - 2.0;
            if (v > 0.0) != (prev > 0.0) {
                roots.push(r);
            }
            prev = v;
        }
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - rm).abs() < 1e-3 && (roots[1] - rp).abs() < 1e-3);
        assert!(rm > 0.5 * sk && rp < 2.0 * sk);
    }

    #[test]
    fn small_scaling_study() {
        let s = scaling_study(5, 1, 2.0, &[2, 5, 10, 20], 1e-9, &CrossingOptions::default()).unwrap();
        assert_eq!(s.rows.len(), 4);
        let fit = s.xi_fit.unwrap();
        assert!((fit.slope - 0.5).abs() < 0.1, "{fit:?}");
        assert!(s.prime_fit.unwrap().slope < -0.3);
        assert!(scaling_study(5, 1, 3.0, &[5], 1e-9, &CrossingOptions::default()).is_err());
        assert!(scaling_study(5, 1, 2.0, &[0, 5], 1e-9, &CrossingOptions::default()).is_err());
    }

    #[test]
    fn agmon_weight_shape() {
        let c = crossing(5, 10, 1, 2.0, 1e-9, &CrossingOptions::default()).unwrap();
        let params = c.params();
        let w = agmon_weight(&params, 2.0, &c.grid, 2.0).unwrap();
        let (rm, rp) = w.well;
        for (j, phi) in w.values.iter().enumerate() {
            let r = c.grid.node(j);
            if r > rm && r < rp {
                assert_eq!(*phi, 0.0);
            }
        }
        for j in 1..w.values.len() {
            let r = c.grid.node(j);
            if r < rm {
                assert!(w.values[j] <= w.values[j - 1]);
            } else if c.grid.node(j - 1) > rp {
                assert!(w.values[j] >= w.values[j - 1]);
            }
        }
        let defect = w.eikonal_defect(&params, &c.grid, 50);
        assert!(defect < 1e-3, "{defect}");
        // Phi + alpha ln r stays bounded near the axis
        let bounded = |j: usize| w.values[j] + 2.0 * c.grid.node(j).ln();
        let near: Vec<f64> = [0, 1, 3, 9, 29, 99].iter().map(|&j| bounded(j)).collect();
        assert!(spread_abs(&near) < 0.5, "{near:?}");
        // Phi / (delta r² / 2) -> 1 at large r
        let far = agmon_weight(&params, 2.0, &Grid::new(4000.0, 400_000).unwrap(), 2.0).unwrap();
        let last = far.values.len() - 1;
        let r = 4000.0 * last as f64 / 400_000.0 + 0.01;
        let ratio = far.values[last] / (far.delta * r * r / 2.0);
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn agmon_norm_trivial_weight_and_family() {
        let params = ModelParams::new(5, 1, 0.0).unwrap();
        let grid = Grid::new(5.0, 400).unwrap();
        let pair = solve(&params, &grid, 1).unwrap().swap_remove(0);
        let vmax = grid.nodes().map(|r| potential_unchecked(params.coupling_f64(), 0.0, r)).fold(0.0, f64::max);
        let w = agmon_weight(&params, vmax + 1.0, &grid, 2.0).unwrap();
        assert!(w.values.iter().all(|v| *v == 0.0));
        assert!((agmon_norm(&pair, &w, &grid).unwrap() - 1.0).abs() < 1e-12);

        for m in [5u32, 15] {
            let c = crossing(5, m, 1, 2.0, 1e-9, &CrossingOptions::default()).unwrap();
            let pair = c.eigenpair().unwrap();
            let w = agmon_weight(&c.params(), 2.0, &c.grid, 2.0).unwrap();
            let norm = agmon_norm(&pair, &w, &c.grid).unwrap();
            assert!(norm.is_finite() && norm >= 1.0);
        }
    }

    #[test]
    fn agmon_norm_reports_overflow() {
        let params = ModelParams::new(5, 1, 2.0).unwrap();
        let grid = Grid::new(20.0, 1000).unwrap();
        let pair = solve(&params, &grid, 1).unwrap().swap_remove(0);
        let mut w = agmon_weight(&params, 2.0, &grid, 2.0).unwrap();
        w.values.iter_mut().for_each(|v| *v += 2000.0);
        assert!(matches!(agmon_norm(&pair, &w, &grid), Err(Error::Overflow { .. })));
    }

    #[test]
    fn mass_localization() {
        let energy = 2.0;
        for m in [5u32, 20] {
            let c = crossing(5, m, 1, energy, 1e-9, &CrossingOptions::default()).unwrap();
            let pair = c.eigenpair().unwrap();
            assert!((pair.norm_sq(&c.grid) - 1.0).abs() < 1e-12);
            let eps: f64 = 0.1;
            assert!(mass_near(&pair, &c.grid, c.xi_m, (energy / eps).sqrt()) >= 1.0 - eps);
            let at = 0.5;
            assert!(mass_below(&pair, &c.grid, (c.k_m * at / energy).sqrt()) <= at);
        }
    }

    #[test]
    fn interpolation() {
        let curve = BandCurve {
            n: 5,
            m: 1,
            p: 1,
            samples: vec![
                BandSample { xi: 0.0, lambda: 4.0, prime_fh: -2.0, prime_bd: -2.0 },
                BandSample { xi: 1.0, lambda: 2.0, prime_fh: -1.0, prime_bd: -1.0 },
            ],
        };
        assert_eq!(curve.interpolate(0.5), Some((3.0, -1.5)));
        assert_eq!(curve.interpolate(1.0), Some((2.0, -1.0)));
        assert_eq!(curve.interpolate(1.5), None);
        assert_eq!(curve.sign_changes(3.0), 1);
    }
}
