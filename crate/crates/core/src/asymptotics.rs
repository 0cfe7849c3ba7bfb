//! Large-momentum expansion of the band functions.
//!
//! After the shift `s = r - xi` the fiber operator reads
//! `H_0 + k_m Σ_q A_q / xi^q` with `H_0 = -d²/ds² + s²`, `A_1 = 0` and
//! `A_q = (q - 1)(-s)^{q-2}`. Quasi-modes are built order by order in the
//! normalized Hermite basis `Psi_1, Psi_2, ...` (`H_0 Psi_q = (2q - 1) Psi_q`),
//! where multiplication by `s` is the ladder
//!
//! ```text
//! s Psi_q = sqrt((q-1)/2) Psi_{q-1} + sqrt(q/2) Psi_{q+1}
//! ```
//!
//! and every operation stays exact up to rounding in a finite basis.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fiber::{refine, Grid};
use crate::model::{level, ModelParams};
use crate::stats::{log_log_fit, spread};

/// Spill mass above which a recursion step is declared basis-limited.
pub const SPILL_TOLERANCE: f64 = 1e-14;
/// Relative size of `<rhs, Psi_p>` tolerated by the Fredholm solve.
pub const SOLVABILITY_TOLERANCE: f64 = 1e-10;

/// Coefficients `c_1..c_Q` over `Psi_1..Psi_Q`. Index 0 holds `c_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteVector {
    pub coefficients: Vec<f64>,
}

impl HermiteVector {
    pub fn zeros(basis: usize) -> Self {
        HermiteVector { coefficients: vec![0.0; basis] }
    }

    /// `Psi_q` in a basis of size `basis` (1-based `q`).
    pub fn basis_vector(q: usize, basis: usize) -> Self {
        assert!(q >= 1 && q <= basis, "Psi_{q} outside a basis of size {basis}");
        let mut v = HermiteVector::zeros(basis);
        v.coefficients[q - 1] = 1.0;
        v
    }

    pub fn basis_size(&self) -> usize {
        self.coefficients.len()
    }

    /// Coefficient on `Psi_q` (1-based).
    pub fn get(&self, q: usize) -> f64 {
        self.coefficients[q - 1]
    }

    pub fn dot(&self, other: &HermiteVector) -> f64 {
        self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        HermiteVector { coefficients: self.coefficients.iter().map(|c| c * factor).collect() }
    }

    pub fn add_scaled(&mut self, other: &HermiteVector, factor: f64) {
        for (a, b) in self.coefficients.iter_mut().zip(&other.coefficients) {
            *a += factor * b;
        }
    }

    /// 1-based indices of the non-zero coefficients.
    pub fn support(&self) -> Vec<usize> {
        self.coefficients.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, _)| i + 1).collect()
    }

    /// Value of `Σ c_q Psi_q(s)`.
    pub fn evaluate(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        let mut prev = 0.0;
        let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * s * s).exp();
        for (i, c) in self.coefficients.iter().enumerate() {
            let q = (i + 1) as f64;
            acc += c * cur;
            let next = (2.0 / q).sqrt() * s * cur - ((q - 1.0) / q).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        acc
    }
}

/// A ladder-operator result together with the mass pushed past `Psi_Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub vector: HermiteVector,
    pub spill: f64,
}

/// Multiplication by `s`.
pub fn apply_s(v: &HermiteVector) -> Applied {
    let size = v.basis_size();
    let mut out = HermiteVector::zeros(size);
    let mut spill = 0.0;
    for (i, &c) in v.coefficients.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let q = (i + 1) as f64;
        if i > 0 {
            out.coefficients[i - 1] += ((q - 1.0) / 2.0).sqrt() * c;
        }
        let up = (q / 2.0).sqrt() * c;
        if i + 1 < size {
            out.coefficients[i + 1] += up;
        } else {
            spill += up * up;
        }
    }
    Applied { vector: out, spill }
}

/// `A_q v` with `A_1 = 0` and `A_q = (q - 1)(-s)^{q-2}`.
pub fn apply_a(q: usize, v: &HermiteVector) -> Applied {
    assert!(q >= 1, "A_q is defined for q >= 1");
    if q == 1 {
        return Applied { vector: HermiteVector::zeros(v.basis_size()), spill: 0.0 };
    }
    let mut cur = v.clone();
    let mut spill = 0.0;
    for _ in 0..q - 2 {
        let next = apply_s(&cur);
        spill += next.spill;
        cur = next.vector.scaled(-1.0);
    }
    let factor = (q - 1) as f64;
    Applied { vector: cur.scaled(factor), spill: spill * factor * factor }
}

/// Solve `(H_0 - E_p) g = -rhs` on the orthogonal complement of `Psi_p`.
pub fn solve_fredholm(p: usize, rhs: &HermiteVector) -> Result<HermiteVector> {
    if p == 0 || p > rhs.basis_size() {
        return Err(Error::InvalidInput(format!("band index {p} outside the basis of size {}", rhs.basis_size())));
    }
    let projection = rhs.get(p);
    if projection.abs() > SOLVABILITY_TOLERANCE * rhs.norm() {
        return Err(Error::Fredholm { p, projection });
    }
    let ep = level(p as u32);
    let mut g = HermiteVector::zeros(rhs.basis_size());
    for (i, c) in rhs.coefficients.iter().enumerate() {
        let q = i + 1;
        if q != p {
            g.coefficients[i] = -c / (level(q as u32) - ep);
        }
    }
    Ok(g)
}

/// Output of the quasi-mode recursion for one band.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    pub p: usize,
    pub k_m: f64,
    pub order: usize,
    pub basis: usize,
    /// `alpha_1..alpha_N`; `alphas[q - 1]` is `alpha_q`.
    pub alphas: Vec<f64>,
    /// `g_0..g_N`.
    pub modes: Vec<HermiteVector>,
}

impl ExpansionCoefficients {
    pub fn alpha(&self, q: usize) -> f64 {
        self.alphas[q - 1]
    }

    /// Residual `‖(H_0 - E_p) g_q + k Σ_{j=1}^q (A_j - alpha_j) g_{q-j}‖` of
    /// the `q`-th equation of the hierarchy.
    pub fn residual(&self, q: usize) -> f64 {
        let ep = level(self.p as u32);
        let mut r = HermiteVector::zeros(self.basis);
        for (i, c) in self.modes[q].coefficients.iter().enumerate() {
            r.coefficients[i] = (level(i as u32 + 1) - ep) * c;
        }
        for j in 1..=q {
            let g = &self.modes[q - j];
            r.add_scaled(&apply_a(j, g).vector, self.k_m);
            if j <= self.alphas.len() {
                r.add_scaled(g, -self.k_m * self.alpha(j));
            }
        }
        r.norm()
    }

    /// Truncated quasi-mode `Σ_q g_q(s) / xi^q` at the shifted coordinate `s`.
    pub fn quasi_mode(&self, xi: f64, s: f64) -> f64 {
        self.modes.iter().enumerate().map(|(q, g)| g.evaluate(s) / xi.powi(q as i32)).sum()
    }
}

/// Run the hierarchy to order `order` in a Hermite basis of size `basis`.
///
/// `g_0 = Psi_p`; for `q >= 1`
///
/// ```text
/// alpha_q = <A_q g_0, g_0> + Σ_{j<q} <(A_j - alpha_j) g_{q-j}, g_0>
/// (H_0 - E_p) g_q = -k Σ_{j=1}^q (A_j - alpha_j) g_{q-j},   <g_q, g_0> = 0
/// ```
pub fn expansion_coefficients(p: usize, k_m: f64, order: usize, basis: usize) -> Result<ExpansionCoefficients> {
    if p == 0 {
        return Err(Error::InvalidInput("band index p must be at least 1".into()));
    }
    if basis < p {
        return Err(Error::InvalidInput(format!("basis of size {basis} does not contain Psi_{p}")));
    }
    if !k_m.is_finite() {
        return Err(Error::InvalidInput(format!("coupling must be finite, got {k_m}")));
    }
    let g0 = HermiteVector::basis_vector(p, basis);
    let mut modes = vec![g0.clone()];
    let mut alphas: Vec<f64> = Vec::with_capacity(order);

    for q in 1..=order {
        // source term Σ_{j=1}^{q} (A_j - alpha_j) g_{q-j}, alpha_q still unknown
        let mut source = HermiteVector::zeros(basis);
        let mut spill = 0.0;
        for j in 1..=q {
            let g = &modes[q - j];
            let applied = apply_a(j, g);
            spill += applied.spill;
            source.add_scaled(&applied.vector, 1.0);
            if j < q {
                source.add_scaled(g, -alphas[j - 1]);
            }
        }
        if spill > SPILL_TOLERANCE {
            return Err(Error::InsufficientBasis { basis, order: q, spill });
        }
        let alpha = source.dot(&g0);
        alphas.push(alpha);
        source.add_scaled(&g0, -alpha);
        // remove the rounding residue along Psi_p before the solvability test
        source.coefficients[p - 1] = 0.0;
        let g = solve_fredholm(p, &source.scaled(k_m))?;
        modes.push(g);
    }

    Ok(ExpansionCoefficients { p, k_m, order, basis, alphas, modes })
}

/// `E_p + k_m Σ_{q=1}^N alpha_q / xi^q`.
pub fn evaluate_expansion(coeffs: &ExpansionCoefficients, xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::InvalidInput(format!("expansion needs xi > 0, got {xi}")));
    }
    let tail: f64 = coeffs.alphas.iter().enumerate().map(|(i, a)| a / xi.powi(i as i32 + 1)).sum();
    Ok(level(coeffs.p as u32) + coeffs.k_m * tail)
}

/// Largest `|alpha_q(k_a) - alpha_q(k_b)|` for each order, used to flag the
/// coupling dependence that the hierarchy develops at high order.
pub fn coupling_sensitivity(p: usize, order: usize, basis: usize, k_a: f64, k_b: f64) -> Result<Vec<f64>> {
    let a = expansion_coefficients(p, k_a, order, basis)?;
    let b = expansion_coefficients(p, k_b, order, basis)?;
    Ok(a.alphas.iter().zip(&b.alphas).map(|(x, y)| (x - y).abs()).collect())
}

/// A Richardson-refined band sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedSample {
    pub xi: f64,
    pub value: f64,
    pub error_estimate: f64,
}

/// Richardson-refined `lambda_{m,p}` at each momentum, grid pair
/// `(grid, grid.refined())`.
pub fn refined_samples(params: &ModelParams, p: u32, xis: &[f64], grid: &Grid) -> Result<Vec<RefinedSample>> {
    let fine = grid.refined();
    xis.par_iter()
        .map(|&xi| {
            let r = refine(&params.with_xi(xi), grid, &fine, p)?;
            Ok(RefinedSample { xi, value: r.extrapolated, error_estimate: r.error_estimate })
        })
        .collect()
}

/// Regression of `ln |lambda - lambda^N|` against `ln xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderRate {
    /// `None` when some remainder is not resolved above the noise floor.
    pub slope: Option<f64>,
    pub remainders: Vec<(f64, f64)>,
    pub indeterminate: bool,
}

/// Remainder decay rate of the order-`N` expansion over the samples.
///
/// A remainder within ten error estimates of zero makes the rate
/// indeterminate rather than failing.
pub fn remainder_rate(samples: &[RefinedSample], coeffs: &ExpansionCoefficients) -> Result<RemainderRate> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("remainder regression needs at least two samples".into()));
    }
    let mut remainders = Vec::with_capacity(samples.len());
    let mut indeterminate = false;
    for s in samples {
        let rem = s.value - evaluate_expansion(coeffs, s.xi)?;
        if rem.abs() <= 10.0 * s.error_estimate || rem == 0.0 {
            indeterminate = true;
        }
        remainders.push((s.xi, rem));
    }
    let slope = if indeterminate {
        None
    } else {
        let xs: Vec<f64> = remainders.iter().map(|r| r.0).collect();
        let ys: Vec<f64> = remainders.iter().map(|r| r.1).collect();
        Some(log_log_fit(&xs, &ys).slope)
    };
    Ok(RemainderRate { slope, remainders, indeterminate })
}

/// Profile `e^{xi²} (lambda - E_p) / xi^{2p-1}` of the exponentially small gap
/// of the `k_m = 0` fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub p: u32,
    /// `(xi, lambda - E_p, profile)` per sample.
    pub points: Vec<(f64, f64, f64)>,
    /// `max / min` of the profile.
    pub ratio: f64,
    pub all_positive: bool,
    /// Every gap exceeds ten Richardson error estimates.
    pub resolved: bool,
    /// Gap strictly decreasing along the samples.
    pub decreasing: bool,
}

pub fn exponential_gap_check(samples: &[RefinedSample], p: u32) -> Result<GapProfile> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("gap profile needs at least two samples".into()));
    }
    let ep = level(p);
    let points: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| {
            let gap = s.value - ep;
            (s.xi, gap, (s.xi * s.xi).exp() * gap / s.xi.powi(2 * p as i32 - 1))
        })
        .collect();
    let all_positive = points.iter().all(|p| p.1 > 0.0);
    let resolved = samples.iter().zip(&points).all(|(s, p)| p.1.abs() > 10.0 * s.error_estimate);
    let decreasing = points.windows(2).all(|w| w[1].1 < w[0].1);
    let profile: Vec<f64> = points.iter().map(|p| p.2).collect();
    let ratio = if all_positive { spread(&profile) } else { f64::INFINITY };
    Ok(GapProfile { p, points, ratio, all_positive, resolved, decreasing })
}
