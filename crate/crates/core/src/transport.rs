//! Wave packets in the generalized Fourier representation and the current
//! functional
//!
//! ```text
//! <J phi, phi> = Σ_{m,j,p} ∫ lambda'_{m,p}(xi) |phi_{m,j,p}(xi)|² dxi
//! ```
//!
//! A packet whose profiles live in `lambda_{m,p}^{-1}(I)` has energy in the
//! window `I`. Low angular momenta carry a current bounded below; a single
//! high-`m` mode carries a current of order `k_m^{-1/2}`.

use rayon::prelude::*;

use crate::bands::{band_curve, crossing, BandCurve, CrossingOptions};
use crate::error::{Error, Result};
use crate::model::{harmonic_multiplicity, level, ModelParams};
use crate::stats::{log_log_fit, LinearFit};

/// Open energy interval `(a, b)` whose closure avoids every Landau level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralWindow {
    pub a: f64,
    pub b: f64,
}

impl SpectralWindow {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("window ({a}, {b}) is not a bounded interval")));
        }
        // odd integers in [a, b]
        let first = ((a - 1.0) / 2.0).ceil().max(0.0);
        let candidate = 2.0 * first + 1.0;
        if candidate <= b {
            return Err(Error::WindowTouchesLevel { a, b, level: candidate });
        }
        Ok(SpectralWindow { a, b })
    }

    pub fn contains(&self, energy: f64) -> bool {
        energy > self.a && energy < self.b
    }

    /// Band indices `p` with `E_p < sup I`.
    pub fn band_indices(&self) -> Vec<u32> {
        (1..).take_while(|&p| level(p) < self.b).collect()
    }
}

/// `lambda_{m,p}^{-1}(I) = (xi_lo, xi_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub m: u32,
    pub p: u32,
    pub xi_lo: f64,
    pub xi_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowBands {
    pub n: u32,
    pub window: SpectralWindow,
    pub p_set: Vec<u32>,
    /// Ordered by `(p, m)`.
    pub preimages: Vec<Preimage>,
}

impl WindowBands {
    pub fn preimage(&self, m: u32, p: u32) -> Option<&Preimage> {
        self.preimages.iter().find(|q| q.m == m && q.p == p)
    }
}

fn check_dimension(n: u32) -> Result<()> {
    if n < 4 {
        return Err(Error::InvalidModel(format!("transport needs n >= 4, got {n}")));
    }
    Ok(())
}

/// Preimage of `window` under a monotone band: the crossings at the two
/// window endpoints.
pub fn preimage(n: u32, m: u32, p: u32, window: &SpectralWindow, tolerance: f64, options: &CrossingOptions) -> Result<Preimage> {
    let lo = crossing(n, m, p, window.b, tolerance, options)?;
    let hi = crossing(n, m, p, window.a, tolerance, options)?;
    if !(lo.xi_m < hi.xi_m) {
        return Err(Error::EmptyPreimage { m, p });
    }
    Ok(Preimage { m, p, xi_lo: lo.xi_m, xi_hi: hi.xi_m })
}

/// `P_I` and the preimages of `I` for every `p` in it and `m <= m_max`.
pub fn bands_meeting_window(
    n: u32,
    window: &SpectralWindow,
    m_max: u32,
    tolerance: f64,
    options: &CrossingOptions,
) -> Result<WindowBands> {
    check_dimension(n)?;
    let p_set = window.band_indices();
    let keys: Vec<(u32, u32)> = p_set.iter().flat_map(|&p| (0..=m_max).map(move |m| (p, m))).collect();
    let preimages =
        keys.par_iter().map(|&(p, m)| preimage(n, m, p, window, tolerance, options)).collect::<Result<Vec<_>>>()?;
    Ok(WindowBands { n, window: *window, p_set, preimages })
}

/// Sampled coefficient profile `phi_{m,j,p}` on a momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketEntry {
    pub m: u32,
    pub j: u32,
    pub p: u32,
    pub xi: Vec<f64>,
    pub phi: Vec<f64>,
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

impl PacketEntry {
    /// Bump `(1 - t²)²`, `t = (xi - center)/half_width`, sampled at
    /// `samples` points across its support and scaled to `∫ |phi|² = mass`.
    pub fn bump(m: u32, j: u32, p: u32, center: f64, half_width: f64, mass: f64, samples: usize) -> Result<Self> {
        if !(half_width > 0.0 && center.is_finite() && mass >= 0.0) || samples < 3 {
            return Err(Error::InvalidInput(format!(
                "bump needs half-width > 0, mass >= 0 and 3+ samples (got {half_width}, {mass}, {samples})"
            )));
        }
        let xi: Vec<f64> =
            (0..samples).map(|i| center - half_width + 2.0 * half_width * i as f64 / (samples - 1) as f64).collect();
        let raw: Vec<f64> = xi.iter().map(|x| (1.0 - ((x - center) / half_width).powi(2)).powi(2)).collect();
        let sq: Vec<f64> = raw.iter().map(|v| v * v).collect();
        let scale = (mass / trapezoid(&xi, &sq)).sqrt();
        Ok(PacketEntry { m, j, p, xi, phi: raw.iter().map(|v| v * scale).collect() })
    }

    /// `∫ |phi|²`.
    pub fn norm_sq(&self) -> f64 {
        let sq: Vec<f64> = self.phi.iter().map(|v| v * v).collect();
        trapezoid(&self.xi, &sq)
    }

    /// Samples with `phi != 0` outside `(xi_lo, xi_hi)`.
    pub fn support_violations(&self, pre: &Preimage) -> usize {
        self.xi.iter().zip(&self.phi).filter(|(x, v)| **v != 0.0 && !(**x > pre.xi_lo && **x < pre.xi_hi)).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    pub n: u32,
    pub entries: Vec<PacketEntry>,
}

impl WavePacket {
    /// Parseval: `Σ ∫ |phi_{m,j,p}|²`.
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sq()).sum()
    }
}

/// Number of momentum samples per synthesized profile.
pub const PROFILE_SAMPLES: usize = 401;
/// Fraction of the preimage half-length used as the bump half-width.
pub const SUPPORT_FRACTION: f64 = 0.9;

/// Equal-weight unit-norm packet with one bump per mode, centred in each
/// preimage.
pub fn synthesize_state(bands: &WindowBands, modes: &[(u32, u32, u32)]) -> Result<WavePacket> {
    check_dimension(bands.n)?;
    if modes.is_empty() {
        return Err(Error::InvalidInput("empty mode set".into()));
    }
    let mass = 1.0 / modes.len() as f64;
    let mut entries = Vec::with_capacity(modes.len());
    for &(m, j, p) in modes {
        if !bands.p_set.contains(&p) {
            return Err(Error::InvalidInput(format!("band p = {p} does not meet the window")));
        }
        let multiplicity = harmonic_multiplicity(bands.n as i64, m as i64)?;
        if j == 0 || j as u64 > multiplicity {
            return Err(Error::MultiplicityRange { m, j, multiplicity });
        }
        let pre = bands.preimage(m, p).ok_or(Error::EmptyPreimage { m, p })?;
        let center = 0.5 * (pre.xi_lo + pre.xi_hi);
        let half = SUPPORT_FRACTION * 0.5 * (pre.xi_hi - pre.xi_lo);
        entries.push(PacketEntry::bump(m, j, p, center, half, mass, PROFILE_SAMPLES)?);
    }
    Ok(WavePacket { n: bands.n, entries })
}

/// Current carried by one `(m, j, p)` entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub m: u32,
    pub j: u32,
    pub p: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentReport {
    pub total: f64,
    pub contributions: Vec<Contribution>,
    pub norm_sq: f64,
    pub normalized: f64,
}

/// Trapezoid quadrature of `lambda' |phi|²` per entry, with `lambda'`
/// interpolated from band curves covering every profile sample.
pub fn current(packet: &WavePacket, bands: &[BandCurve]) -> Result<CurrentReport> {
    let mut contributions = Vec::with_capacity(packet.entries.len());
    for e in &packet.entries {
        let curve = bands.iter().find(|c| c.n == packet.n && c.m == e.m && c.p == e.p);
        let mut integrand = Vec::with_capacity(e.xi.len());
        for (&x, &v) in e.xi.iter().zip(&e.phi) {
            let prime = match curve.and_then(|c| c.interpolate(x)) {
                Some((_, d)) => d,
                None => return Err(Error::MissingBandData { m: e.m, p: e.p, xi: x }),
            };
            integrand.push(prime * v * v);
        }
        contributions.push(Contribution { m: e.m, j: e.j, p: e.p, value: trapezoid(&e.xi, &integrand) });
    }
    let total = contributions.iter().map(|c| c.value).sum();
    let norm_sq = packet.norm_sq();
    Ok(CurrentReport { total, contributions, norm_sq, normalized: total / norm_sq })
}

/// Band curves sampled across the support of every entry of `packet`.
pub fn band_data_for(packet: &WavePacket, samples: usize, options: &CrossingOptions) -> Result<Vec<BandCurve>> {
    let mut keys: Vec<(u32, u32)> = packet.entries.iter().map(|e| (e.m, e.p)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.par_iter()
        .map(|&(m, p)| {
            let (lo, hi) = packet
                .entries
                .iter()
                .filter(|e| e.m == m && e.p == p)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.xi[0]), b.max(e.xi[e.xi.len() - 1])));
            let xis: Vec<f64> =
                (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples.max(2) - 1) as f64).collect();
            band_curve(packet.n, m, p, &xis, options)
        })
        .collect()
}

/// `min |lambda'|` over samples of the curves whose value lies in `window`.
pub fn edge_lower_bound(bands: &[BandCurve], window: &SpectralWindow) -> Option<f64> {
    bands
        .iter()
        .flat_map(|c| c.samples.iter())
        .filter(|s| window.contains(s.lambda))
        .map(|s| s.prime_fh.abs())
        .reduce(f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkRow {
    pub m_cut: u32,
    /// `k_{M+1}`.
    pub k: f64,
    pub current: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BulkStudy {
    pub rows: Vec<BulkRow>,
    /// Regression of `ln |current|` on `ln k_{M+1}`.
    pub fit: Option<LinearFit>,
    pub strictly_decreasing: bool,
}

/// Normalized current of a single-mode packet `(M + 1, 1, 1)` for each `M`.
pub fn bulk_decay_study(
    n: u32,
    window: &SpectralWindow,
    m_list: &[u32],
    band_samples: usize,
    tolerance: f64,
    options: &CrossingOptions,
) -> Result<BulkStudy> {
    check_dimension(n)?;
    if m_list.is_empty() || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("M list must be non-empty and strictly increasing".into()));
    }
    let p = 1;
    let rows = m_list
        .par_iter()
        .map(|&cut| {
            let m = cut + 1;
            let pre = preimage(n, m, p, window, tolerance, options)?;
            let bands = WindowBands { n, window: *window, p_set: vec![p], preimages: vec![pre] };
            let packet = synthesize_state(&bands, &[(m, 1, p)])?;
            let data = band_data_for(&packet, band_samples, options)?;
            let report = current(&packet, &data)?;
            let k = ModelParams { n, m, xi: 0.0 }.coupling_f64();
            Ok(BulkRow { m_cut: cut, k, current: report.normalized })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = (rows.len() >= 2).then(|| {
        let ks: Vec<f64> = rows.iter().map(|r| r.k).collect();
        let cs: Vec<f64> = rows.iter().map(|r| r.current).collect();
        log_log_fit(&ks, &cs)
    });
    let strictly_decreasing = rows.windows(2).all(|w| w[1].current.abs() < w[0].current.abs());
    Ok(BulkStudy { rows, fit, strictly_decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn window() -> SpectralWindow {
        SpectralWindow::new(1.5, 2.5).unwrap()
    }

    #[test]
    fn window_validation() {
        assert!(SpectralWindow::new(0.5, 1.5).is_err());
        assert!(SpectralWindow::new(1.0, 1.5).is_err());
        assert!(SpectralWindow::new(2.5, 3.0).is_err());
        assert!(SpectralWindow::new(2.0, 2.0).is_err());
        assert_eq!(SpectralWindow::new(1.5, 2.5).unwrap().band_indices(), vec![1]);
        assert_eq!(SpectralWindow::new(3.5, 4.5).unwrap().band_indices(), vec![1, 2]);
        assert_eq!(SpectralWindow::new(0.2, 0.9).unwrap().band_indices(), Vec::<u32>::new());
    }

    #[test]
    fn preimages_nonempty_and_nested() {
        let opts = CrossingOptions::default();
        let wide = bands_meeting_window(5, &SpectralWindow::new(3.5, 4.5).unwrap(), 2, TOL, &opts).unwrap();
        assert_eq!(wide.p_set, vec![1, 2]);
        assert_eq!(wide.preimages.len(), 6);
        for pre in &wide.preimages {
            assert!(pre.xi_lo < pre.xi_hi);
        }
        let narrow = bands_meeting_window(5, &SpectralWindow::new(3.8, 4.2).unwrap(), 2, TOL, &opts).unwrap();
        for (a, b) in wide.preimages.iter().zip(&narrow.preimages) {
            assert!(a.xi_lo < b.xi_lo && b.xi_hi < a.xi_hi);
        }
        assert!(bands_meeting_window(3, &window(), 2, TOL, &opts).is_err());
    }

    #[test]
    fn synthesis_norms_and_support() {
        let opts = CrossingOptions::default();
        let wb = bands_meeting_window(5, &window(), 1, TOL, &opts).unwrap();
        let single = synthesize_state(&wb, &[(0, 1, 1)]).unwrap();
        assert!((single.norm_sq() - 1.0).abs() < 1e-12);
        let pair = synthesize_state(&wb, &[(0, 1, 1), (1, 3, 1)]).unwrap();
        assert!((pair.norm_sq() - 1.0).abs() < 1e-12);
        for e in &pair.entries {
            assert!((e.norm_sq() - 0.5).abs() < 1e-12);
            assert_eq!(e.support_violations(wb.preimage(e.m, e.p).unwrap()), 0);
        }
        // N_1 = 4 for n = 5
        assert!(matches!(synthesize_state(&wb, &[(1, 5, 1)]), Err(Error::MultiplicityRange { .. })));
        assert!(synthesize_state(&wb, &[(0, 1, 2)]).is_err());
    }

    #[test]
    fn narrow_bump_reads_off_the_derivative() {
        let opts = CrossingOptions::default();
        let xi_star = 2.0;
        let entry = PacketEntry::bump(2, 1, 1, xi_star, 0.005, 1.0, 101).unwrap();
        let packet = WavePacket { n: 5, entries: vec![entry] };
        let data = band_data_for(&packet, 11, &opts).unwrap();
        let report = current(&packet, &data).unwrap();
        let exact = crate::fiber::derivative_feynman_hellmann(
            &ModelParams { n: 5, m: 2, xi: xi_star },
            &crate::fiber::solve(&ModelParams { n: 5, m: 2, xi: xi_star }, &opts.grid_for(xi_star + 0.005).unwrap(), 1)
                .unwrap()[0],
            &opts.grid_for(xi_star + 0.005).unwrap(),
        );
        assert!((report.normalized - exact).abs() <= 1e-2 * exact.abs(), "{} {exact}", report.normalized);
    }

    #[test]
    fn current_properties() {
        let opts = CrossingOptions::default();
        let wb = bands_meeting_window(5, &window(), 3, TOL, &opts).unwrap();
        let a = synthesize_state(&wb, &[(1, 1, 1)]).unwrap();
        let b = synthesize_state(&wb, &[(2, 1, 1)]).unwrap();
        let both = WavePacket { n: 5, entries: vec![a.entries[0].clone(), b.entries[0].clone()] };
        let data = band_data_for(&both, 81, &opts).unwrap();
        let ca = current(&a, &data).unwrap();
        let cb = current(&b, &data).unwrap();
        let cab = current(&both, &data).unwrap();
        assert!(ca.total < 0.0 && cb.total < 0.0);
        assert!((cab.total - (ca.total + cb.total)).abs() < 1e-10);

        let mut other_j = a.clone();
        other_j.entries[0].j = 3;
        assert_eq!(current(&other_j, &data).unwrap().total, ca.total);

        let far = WavePacket { n: 5, entries: vec![PacketEntry::bump(5, 1, 1, 2.0, 0.1, 1.0, 11).unwrap()] };
        assert!(matches!(current(&far, &data), Err(Error::MissingBandData { m: 5, .. })));
    }

    #[test]
    fn edge_packet_bounded_below() {
        let opts = CrossingOptions::default();
        let w = window();
        let wb = bands_meeting_window(5, &w, 3, TOL, &opts).unwrap();
        let modes: Vec<(u32, u32, u32)> = (0..=3).map(|m| (m, 1, 1)).collect();
        let packet = synthesize_state(&wb, &modes).unwrap();
        let data = band_data_for(&packet, 81, &opts).unwrap();
        let report = current(&packet, &data).unwrap();
        let c_minus = edge_lower_bound(&data, &w).unwrap();
        assert!(c_minus > 0.0);
        assert!(report.normalized.abs() >= c_minus);
    }

    #[test]
    fn bulk_current_decreases() {
        let study = bulk_decay_study(5, &window(), &[9, 19], 41, TOL, &CrossingOptions::default()).unwrap();
        assert!(study.strictly_decreasing);
        assert!(study.rows.iter().all(|r| r.current < 0.0));
    }
}
