//! Closed-form quantities of the reduced radial problem.
//!
//! After Fourier transform along the invariant axis and decomposition in
//! spherical harmonics, each fiber is the half-line operator
//!
//! ```text
//! L_m(xi) = -d²/dr² + V_m(r, xi),    V_m(r, xi) = k_m / r² + (r - xi)²
//! ```
//!
//! with coupling `k_m = ((2m + n - 3)² - 1) / 4`. This module holds the
//! coupling, the potential and its extrema, turning points, the Landau levels
//! `E_p = 2p - 1` and the spherical-harmonic multiplicities.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Exact rational number used for the coupling constant.
pub type Rational = Ratio<i64>;

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 100;

/// One fiber operator: dimension `n`, angular number `m` and momentum `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: u32,
    pub m: u32,
    pub xi: f64,
}

impl ModelParams {
    pub fn new(n: i64, m: i64, xi: f64) -> Result<Self> {
        validate_nm(n, m)?;
        if !xi.is_finite() {
            return Err(Error::InvalidInput(format!("xi must be finite, got {xi}")));
        }
        Ok(ModelParams { n: n as u32, m: m as u32, xi })
    }

    /// Same fiber at another momentum.
    pub fn with_xi(self, xi: f64) -> Self {
        ModelParams { xi, ..self }
    }

    pub fn coupling(&self) -> Rational {
        coupling_exact(self.n, self.m)
    }

    pub fn coupling_f64(&self) -> f64 {
        let k = self.coupling();
        *k.numer() as f64 / *k.denom() as f64
    }

    /// `|2m + n - 3|`, the quantity fixing the boundary behaviour at the axis.
    pub fn centrifugal_index(&self) -> u32 {
        2 * self.m + self.n - 3
    }

    /// Frobenius exponent `(1 + |2m + n - 3|) / 2` of the admissible solution.
    pub fn frobenius_exponent(&self) -> f64 {
        (1.0 + self.centrifugal_index() as f64) / 2.0
    }

    pub fn potential(&self, r: f64) -> Result<f64> {
        potential(self, r)
    }
}

fn validate_nm(n: i64, m: i64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidModel(format!("dimension n = {n} must be at least 3")));
    }
    if m < 0 {
        return Err(Error::InvalidModel(format!("angular number m = {m} must be non-negative")));
    }
    if n > 1_000_000 || m > 1_000_000 {
        return Err(Error::InvalidModel(format!("(n, m) = ({n}, {m}) out of supported range")));
    }
    Ok(())
}

fn coupling_exact(n: u32, m: u32) -> Rational {
    let a = 2 * m as i64 + n as i64 - 3;
    Rational::new(a * a - 1, 4)
}

/// Coupling constant `k_m = ((2m + n - 3)² - 1) / 4`, exact.
pub fn coupling_constant(n: i64, m: i64) -> Result<Rational> {
    validate_nm(n, m)?;
    Ok(coupling_exact(n as u32, m as u32))
}

/// A Landau level `E_p = 2p - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandauLevel {
    pub p: u32,
    pub value: f64,
}

pub fn landau_level(p: i64) -> Result<LandauLevel> {
    if !(1..=u32::MAX as i64 / 2).contains(&p) {
        return Err(Error::InvalidInput(format!("band index p = {p} must be at least 1")));
    }
    Ok(LandauLevel { p: p as u32, value: (2 * p - 1) as f64 })
}

/// `E_p` as a float for an already validated index.
#[inline]
pub(crate) fn level(p: u32) -> f64 {
    (2 * p as u64 - 1) as f64
}

/// `V_m(r, xi) = k_m / r² + (r - xi)²`.
pub fn potential(params: &ModelParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("potential evaluated at r = {r} <= 0")));
    }
    Ok(potential_unchecked(params.coupling_f64(), params.xi, r))
}

#[inline]
pub(crate) fn potential_unchecked(k: f64, xi: f64, r: f64) -> f64 {
    k / (r * r) + (r - xi) * (r - xi)
}

/// Location and value of the minimum of `V_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialProfile {
    pub params: ModelParams,
    pub r_min: f64,
    pub v_min: f64,
}

/// Minimum of `V_m`: the positive root of `r - xi - k_m / r³ = 0`
/// (equivalently `r⁴ - xi r³ - k_m = 0`).
///
/// Newton iteration from `max(xi, k^{1/4})`, kept inside a sign-change
/// bracket and falling back to bisection when a step leaves it.
pub fn potential_minimum(params: &ModelParams) -> Result<PotentialProfile> {
    let (r_min, v_min) = minimum_of(params.coupling_f64(), params.xi)?;
    Ok(PotentialProfile { params: *params, r_min, v_min })
}

pub(crate) fn minimum_of(k: f64, xi: f64) -> Result<(f64, f64)> {
    if k < 0.0 || (k == 0.0 && xi <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "potential has no interior minimum for k_m = {k}, xi = {xi}"
        )));
    }
    let g = |r: f64| r - xi - k / (r * r * r);
    let dg = |r: f64| 1.0 + 3.0 * k / (r * r * r * r);

    let mut lo = xi.max(0.0);
    let mut hi = xi.max(0.0) + k.powf(0.25) + 1.0;
    let mut r = xi.max(k.powf(0.25));
    if !(r > lo && r < hi) {
        r = 0.5 * (lo + hi);
    }
    for _ in 0..ROOT_MAX_ITER {
        let gr = g(r);
        if gr.abs() < ROOT_TOL {
            return Ok((r, potential_unchecked(k, xi, r)));
        }
        if gr < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let step = r - gr / dg(r);
        r = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }
    Err(Error::Convergence { what: "potential minimum", index: 0 })
}

/// Endpoints `(r_-, r_+)` of the classically allowed well `{V_m < E}`.
pub fn turning_points(params: &ModelParams, energy: f64) -> Result<(f64, f64)> {
    let profile = potential_minimum(params)?;
    turning_points_from(&profile, energy)
}

pub(crate) fn turning_points_from(profile: &PotentialProfile, energy: f64) -> Result<(f64, f64)> {
    turning_points_of(profile.params.coupling_f64(), profile.params.xi, profile.r_min, profile.v_min, energy)
}

pub(crate) fn turning_points_of(k: f64, xi: f64, r_min: f64, v_min: f64, energy: f64) -> Result<(f64, f64)> {
    if !(energy > v_min) {
        return Err(Error::EmptyWell { energy, v_min });
    }
    let v = |r: f64| potential_unchecked(k, xi, r);

    // left branch: V decreasing on (0, r_min]
    let mut lo = r_min;
    let mut found = false;
    for _ in 0..2000 {
        lo *= 0.5;
        if lo <= 0.0 {
            break;
        }
        if v(lo) > energy {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::InvalidInput(format!(
            "well {{V < {energy}}} reaches the axis (k_m = {k}, xi = {xi})"
        )));
    }
    let r_minus = bisect_level(&v, energy, lo, r_min);

    // right branch: V increasing on [r_min, inf)
    let hi = r_min + energy.sqrt() + 1.0;
    let r_plus = bisect_level(&v, energy, r_min, hi);
    Ok((r_minus, r_plus))
}

/// Bisection for `f(r) = level` on a monotone bracket `[a, b]`.
fn bisect_level(f: &impl Fn(f64) -> f64, level: f64, a: f64, b: f64) -> f64 {
    let (mut a, mut b) = (a, b);
    let fa_above = f(a) > level;
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (f(mid) > level) == fa_above {
            a = mid;
        } else {
            b = mid;
        }
    }
    if (f(a) - level).abs() <= (f(b) - level).abs() {
        a
    } else {
        b
    }
}

fn binomial(a: i64, b: i64) -> u128 {
    if b < 0 || a < b || a < 0 {
        return 0;
    }
    let b = b.min(a - b) as u128;
    let a = a as u128;
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc * (a - i) / (i + 1);
    }
    acc
}

/// Number `N_m` of linearly independent degree-`m` spherical harmonics on
/// the sphere `S^{n-2}`: `C(m+n-2, n-2) - C(m+n-4, n-2)`.
pub fn harmonic_multiplicity(n: i64, m: i64) -> Result<u64> {
    validate_nm(n, m)?;
    let count = binomial(m + n - 2, n - 2) - binomial(m + n - 4, n - 2);
    u64::try_from(count).map_err(|_| Error::InvalidInput(format!("N_m overflows for (n, m) = ({n}, {m})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: i64, m: i64, xi: f64) -> ModelParams {
        ModelParams::new(n, m, xi).unwrap()
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(coupling_constant(3, 0).unwrap(), Rational::new(-1, 4));
        assert_eq!(coupling_constant(4, 0).unwrap(), Rational::new(0, 1));
        assert_eq!(coupling_constant(5, 2).unwrap(), Rational::new(35, 4));
    }

    #[test]
    fn coupling_rejects_invalid_model() {
        assert!(matches!(coupling_constant(2, 0), Err(Error::InvalidModel(_))));
        assert!(matches!(coupling_constant(5, -1), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn coupling_closed_forms_agree() {
        for n in 3..12i64 {
            for m in 0..40i64 {
                let mu = Rational::from_integer(m * (m + n - 3));
                let half = Rational::new(n - 2, 2);
                let alt = mu + half * (half - Rational::from_integer(1));
                assert_eq!(coupling_constant(n, m).unwrap(), alt);
            }
        }
    }

    #[test]
    fn coupling_increasing_in_m() {
        for n in 3..10 {
            for m in 0..50 {
                assert!(coupling_constant(n, m + 1).unwrap() > coupling_constant(n, m).unwrap());
            }
        }
    }

    #[test]
    fn landau_levels() {
        assert_eq!(landau_level(1).unwrap().value, 1.0);
        assert_eq!(landau_level(2).unwrap().value, 3.0);
        assert_eq!(landau_level(3).unwrap().value, 5.0);
        assert!(landau_level(0).is_err());
    }

    #[test]
    fn potential_examples() {
        // k = 0: (n, m) = (4, 0)
        assert_eq!(potential(&params(4, 0, 2.0), 2.0).unwrap(), 0.0);
        // n = 3, m = 0: k = -1/4
        assert_eq!(potential(&params(3, 0, 0.0), 1.0).unwrap(), 0.75);
        // k = 1 at xi = 0, r = 1
        assert_eq!(potential_unchecked(1.0, 0.0, 1.0), 2.0);
        assert!(potential(&params(4, 0, 0.0), 0.0).is_err());
        assert!(potential(&params(4, 0, 0.0), -1.0).is_err());
    }

    #[test]
    fn minimum_pure_parabola() {
        let prof = potential_minimum(&params(4, 0, 2.0)).unwrap();
        assert!((prof.r_min - 2.0).abs() < 1e-12);
        assert!(prof.v_min.abs() < 1e-20);
        assert!(potential_minimum(&params(4, 0, 0.0)).is_err());
        assert!(potential_minimum(&params(3, 0, 1.0)).is_err());
    }

    #[test]
    fn minimum_unit_coupling() {
        let (r, v) = minimum_of(1.0, 0.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn minimum_quartic_matches_bisection_oracle() {
        // k = 35/4 is (n, m) = (5, 2)
        let p = params(5, 2, 3.0);
        let prof = potential_minimum(&p).unwrap();
        // oracle: plain bisection on r^4 - 3 r^3 - 35/4 over [3, 10]
        let f = |r: f64| r.powi(4) - 3.0 * r.powi(3) - 8.75;
        let (mut a, mut b) = (3.0f64, 10.0f64);
        while b - a > 1e-13 {
            let c = 0.5 * (a + b);
            if f(c) < 0.0 {
                a = c
            } else {
                b = c
            }
        }
        assert!((prof.r_min - 0.5 * (a + b)).abs() < 1e-11);
        assert!(prof.r_min > 3.0);
    }

    #[test]
    fn turning_point_examples() {
        let (a, b) = turning_points(&params(4, 0, 2.0), 1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 3.0).abs() < 1e-12);

        // k = 1 is not a coupling of any (n, m); use the raw routines.
        let (r_min, v_min) = minimum_of(1.0, 0.0).unwrap();
        let (a, b) = turning_points_of(1.0, 0.0, r_min, v_min, 3.0).unwrap();
        // 1/r² + r² = 3 -> r² = (3 ± sqrt 5) / 2
        assert!((a * a - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-11);
        assert!((b * b - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-11);
    }

    #[test]
    fn turning_points_empty_well() {
        let p = params(5, 2, 0.0);
        let prof = potential_minimum(&p).unwrap();
        assert!(matches!(turning_points(&p, prof.v_min), Err(Error::EmptyWell { .. })));
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(harmonic_multiplicity(4, 3).unwrap(), 7);
        assert_eq!(harmonic_multiplicity(5, 2).unwrap(), 9);
        for n in 3..9 {
            assert_eq!(harmonic_multiplicity(n, 0).unwrap(), 1);
        }
    }

    #[test]
    fn multiplicity_sums_match_polynomial_dimension() {
        // n = 4: harmonics on S², sum up to M is (M+1)²
        let mut total = 0;
        for m in 0..=30 {
            total += harmonic_multiplicity(4, m).unwrap();
            assert_eq!(total, ((m + 1) * (m + 1)) as u64);
        }
        // n = 5: harmonics on S³, N_m = (m+1)²
        for m in 0..30 {
            assert_eq!(harmonic_multiplicity(5, m).unwrap(), ((m + 1) * (m + 1)) as u64);
        }
    }
}
