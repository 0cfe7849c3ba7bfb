//! Finite-difference discretization of the fiber operator `L_m(xi)` on a
//! truncated half-line `(0, R)` with Dirichlet conditions at both ends.
//!
//! Nodes are `r_j = j h`, `j = 1..N-1`, so the `1/r²` singularity is never
//! evaluated at the axis. Eigenvectors are normalized in the discrete
//! `h`-weighted norm, `h Σ u(r_j)² = 1`, and oriented so that `u(r_1) > 0`.

use crate::error::{Error, Result};
use crate::model::{potential_unchecked, ModelParams};
use crate::tridiag::SymTridiagonal;

/// Default truncation radius.
pub const DEFAULT_RADIUS: f64 = 20.0;
/// Default number of intervals on `(0, DEFAULT_RADIUS)`, h = 0.005.
pub const DEFAULT_INTERVALS: usize = 4000;

/// Uniform grid on `(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub radius: f64,
    pub intervals: usize,
    pub step: f64,
}

impl Grid {
    pub fn new(radius: f64, intervals: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("grid radius must be positive, got {radius}")));
        }
        if intervals < 16 {
            return Err(Error::InvalidInput(format!("grid needs at least 16 intervals, got {intervals}")));
        }
        Ok(Grid { radius, intervals, step: radius / intervals as f64 })
    }

    /// Grid on `(0, radius)` with the spacing closest to `step`.
    pub fn with_step(radius: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
        }
        Grid::new(radius, ((radius / step).round() as usize).max(16))
    }

    /// Same radius, twice the number of intervals.
    pub fn refined(&self) -> Self {
        Grid { radius: self.radius, intervals: 2 * self.intervals, step: self.radius / (2 * self.intervals) as f64 }
    }

    /// Number of interior nodes, `N - 1`.
    pub fn len(&self) -> usize {
        self.intervals - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Radius of interior node `j` (0-based index, `r = (j + 1) h`).
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.node(j))
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::new(DEFAULT_RADIUS, DEFAULT_INTERVALS).expect("default grid is valid")
    }
}

/// Second-order central-difference matrix of `L_m(xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub diagonal: Vec<f64>,
    pub offdiagonal: Vec<f64>,
}

impl DiscreteOperator {
    fn tridiagonal(&self) -> Result<SymTridiagonal> {
        SymTridiagonal::new(self.diagonal.clone(), self.offdiagonal.clone())
    }
}

pub fn assemble(params: &ModelParams, grid: &Grid) -> DiscreteOperator {
    let h2 = grid.step * grid.step;
    let k = params.coupling_f64();
    let diagonal = grid.nodes().map(|r| 2.0 / h2 + potential_unchecked(k, params.xi, r)).collect();
    let offdiagonal = vec![-1.0 / h2; grid.len() - 1];
    DiscreteOperator { diagonal, offdiagonal }
}

/// Eigenvalue and `h`-normalized grid eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

impl EigenPair {
    /// `h Σ u²`.
    pub fn norm_sq(&self, grid: &Grid) -> f64 {
        grid.step * self.vector.iter().map(|u| u * u).sum::<f64>()
    }
}

/// The `count` lowest eigenpairs of an assembled operator, ascending.
pub fn lowest_eigenpairs(op: &DiscreteOperator, grid: &Grid, count: usize) -> Result<Vec<EigenPair>> {
    if op.diagonal.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "operator of size {} does not match grid with {} nodes",
            op.diagonal.len(),
            grid.len()
        )));
    }
    if count == 0 || count > grid.len() {
        return Err(Error::InvalidInput(format!("count = {count} outside 1..={}", grid.len())));
    }
    let t = op.tridiagonal()?;
    let values = t.lowest_eigenvalues(count)?;
    let scale = grid.step.sqrt();
    let pairs = values
        .into_iter()
        .map(|value| {
            let mut vector = t.eigenvector(value);
            let lead = vector.iter().copied().find(|v| *v != 0.0).unwrap_or(1.0);
            let sign = if lead < 0.0 { -1.0 } else { 1.0 };
            vector.iter_mut().for_each(|v| *v *= sign / scale);
            EigenPair { value, vector }
        })
        .collect::<Vec<_>>();
    for (idx, w) in pairs.windows(2).enumerate() {
        if !(w[1].value > w[0].value) {
            return Err(Error::Convergence { what: "simple eigenvalue separation", index: idx + 1 });
        }
    }
    Ok(pairs)
}

/// Assemble and solve one fiber.
pub fn solve(params: &ModelParams, grid: &Grid, count: usize) -> Result<Vec<EigenPair>> {
    lowest_eigenpairs(&assemble(params, grid), grid, count).map_err(|e| e.in_fiber(params.n, params.m, params.xi))
}

/// Eigenvalue `lambda_{m,p}(xi)` alone (1-based band index).
pub fn band_value(params: &ModelParams, grid: &Grid, p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidInput("band index p must be at least 1".into()));
    }
    let op = assemble(params, grid);
    let t = op.tridiagonal()?;
    t.lowest_eigenvalues(p as usize)
        .map(|v| v[p as usize - 1])
        .map_err(|e| e.in_fiber(params.n, params.m, params.xi))
}

/// Least-squares slope of `ln u(r_j)` against `ln r_j` over the first
/// `fit_window` nodes: an estimate of the exponent `nu` in `u ~ r^nu`.
pub fn boundary_exponent(pair: &EigenPair, grid: &Grid, fit_window: usize) -> Result<f64> {
    if fit_window < 3 || fit_window > pair.vector.len() {
        return Err(Error::InvalidInput(format!("fit window {fit_window} outside 3..={}", pair.vector.len())));
    }
    let mut xs = Vec::with_capacity(fit_window);
    let mut ys = Vec::with_capacity(fit_window);
    for (j, &u) in pair.vector.iter().take(fit_window).enumerate() {
        if !(u > 0.0) {
            return Err(Error::SignPattern { node: j + 1, value: u });
        }
        xs.push(grid.node(j).ln());
        ys.push(u.ln());
    }
    Ok(crate::stats::linear_fit(&xs, &ys).slope)
}

/// Feynman–Hellmann derivative `lambda' = -2 h Σ (r_j - xi) u(r_j)²`.
///
/// This is the exact derivative of the discrete eigenvalue with respect to
/// `xi`, since only the diagonal of the matrix depends on it.
pub fn derivative_feynman_hellmann(params: &ModelParams, pair: &EigenPair, grid: &Grid) -> f64 {
    let sum: f64 = pair.vector.iter().enumerate().map(|(j, u)| (grid.node(j) - params.xi) * u * u).sum();
    -2.0 * grid.step * sum
}

/// Derivative from the boundary-integral formulas.
///
/// * `(n, m) = (3, 0)`: `-∫ r⁻² (u²/r - K) dr` with `K = lim u²/r`,
///   extrapolated quadratically from the first three nodes.
/// * `(n, m) = (4, 0)`: `-|u'(0)|²`, one-sided difference at the axis.
/// * otherwise: `-2 k_m ∫ u² / r³ dr`.
pub fn derivative_boundary_form(params: &ModelParams, pair: &EigenPair, grid: &Grid) -> f64 {
    let h = grid.step;
    let u = &pair.vector;
    match (params.n, params.m) {
        (3, 0) => {
            let w = |j: usize| u[j] * u[j] / grid.node(j);
            // w(r) = K + O(r²); quadratic through r = h, 2h, 3h evaluated at 0
            let limit = 3.0 * w(0) - 3.0 * w(1) + w(2);
            let sum: f64 = (0..u.len()).map(|j| (w(j) - limit) / grid.node(j).powi(2)).sum();
            -h * sum
        }
        (4, 0) => -(u[0] / h).powi(2),
        _ => {
            let k = params.coupling_f64();
            let sum: f64 = u.iter().enumerate().map(|(j, v)| v * v / grid.node(j).powi(3)).sum();
            -2.0 * k * h * sum
        }
    }
}

/// Richardson-extrapolated eigenvalue from a grid and its refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
    /// `|fine - coarse| / 3`, the error estimate of the fine value.
    pub error_estimate: f64,
}

/// Second-order Richardson extrapolation of `lambda_{m,p}` from `grid_a`
/// and `grid_b`, which must share the radius with `N_b = 2 N_a`.
pub fn refine(params: &ModelParams, grid_a: &Grid, grid_b: &Grid, p: u32) -> Result<Refined> {
    if grid_a.radius != grid_b.radius || grid_b.intervals != 2 * grid_a.intervals {
        return Err(Error::InvalidInput(format!(
            "refinement needs the same radius and doubled intervals, got ({}, {}) and ({}, {})",
            grid_a.radius, grid_a.intervals, grid_b.radius, grid_b.intervals
        )));
    }
    let coarse = band_value(params, grid_a, p)?;
    let fine = band_value(params, grid_b, p)?;
    Ok(Refined {
        coarse,
        fine,
        extrapolated: (4.0 * fine - coarse) / 3.0,
        error_estimate: (fine - coarse).abs() / 3.0,
    })
}

/// Exact eigenvalues at `xi = 0`: `4(p - 1) + |2m + n - 3| + 2`.
pub fn radial_oscillator_level(params: &ModelParams, p: u32) -> f64 {
    4.0 * (p as f64 - 1.0) + params.centrifugal_index() as f64 + 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: i64, m: i64, xi: f64) -> ModelParams {
        ModelParams::new(n, m, xi).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 15).is_err());
        assert!(Grid::new(0.0, 100).is_err());
        let g = Grid::new(20.0, 4000).unwrap();
        assert!((g.step * g.intervals as f64 - g.radius).abs() < 1e-12);
        assert_eq!(g.len(), 3999);
        assert_eq!(g.refined().intervals, 8000);
    }

    #[test]
    fn assemble_small_example() {
        let g = Grid { radius: 1.0, intervals: 4, step: 0.25 };
        let op = assemble(&params(4, 0, 0.0), &g);
        assert_eq!(op.diagonal, vec![32.0 + 1.0 / 16.0, 32.0 + 0.25, 32.0 + 9.0 / 16.0]);
        assert_eq!(op.offdiagonal, vec![-16.0, -16.0]);
    }

    #[test]
    fn assemble_attractive_case_stays_positive() {
        let g = Grid::new(20.0, 4000).unwrap();
        let op = assemble(&params(3, 0, 0.3), &g);
        let h = g.step;
        let expected = 2.0 / (h * h) - 0.25 / (h * h) + (h - 0.3) * (h - 0.3);
        assert!((op.diagonal[0] - expected).abs() < 1e-9 * expected);
        assert!(op.diagonal[0] > 0.0);
    }

    #[test]
    fn oscillator_levels_at_zero_momentum() {
        let g = Grid::new(12.0, 4800).unwrap();
        let pairs = solve(&params(4, 0, 0.0), &g, 3).unwrap();
        for (p, pair) in pairs.iter().enumerate() {
            let exact = [3.0, 7.0, 11.0][p];
            assert!((pair.value - exact).abs() / exact < 1e-4, "{} vs {exact}", pair.value);
        }
        let pairs = solve(&params(5, 0, 0.0), &g, 2).unwrap();
        assert!((pairs[0].value - 4.0).abs() / 4.0 < 1e-4);
        assert!((pairs[1].value - 8.0).abs() / 8.0 < 1e-4);
    }

    #[test]
    fn normalization_and_sign() {
        let g = Grid::default();
        for pair in solve(&params(5, 2, 1.5), &g, 3).unwrap() {
            assert!((pair.norm_sq(&g) - 1.0).abs() < 1e-12);
            assert!(pair.vector[0] > 0.0);
        }
    }

    #[test]
    fn approaches_first_landau_level_from_above() {
        // At xi = 6 the gap is ~1e-15, below what binary64 resolves next to 1;
        // the extrapolated value only pins it to the level.
        let a = Grid::default();
        let r = refine(&params(4, 0, 6.0), &a, &a.refined(), 1).unwrap();
        assert!(r.extrapolated - 1.0 > -1e-8 && r.extrapolated - 1.0 < 1e-3, "{r:?}");
        // At xi = 3 the gap is ~4e-4 and clearly positive.
        let r = refine(&params(4, 0, 3.0), &a, &a.refined(), 1).unwrap();
        assert!(r.extrapolated - 1.0 > 0.0 && r.extrapolated - 1.0 < 1e-3, "{r:?}");
    }

    #[test]
    fn boundary_exponent_examples() {
        let g = Grid::new(20.0, 8000).unwrap();
        for (n, m, nu) in [(4, 0, 1.0), (5, 2, 3.5)] {
            let p = params(n, m, 1.0);
            let pair = &solve(&p, &g, 1).unwrap()[0];
            let est = boundary_exponent(pair, &g, 40).unwrap();
            assert!((est - nu).abs() / nu < 0.05, "(n, m) = ({n}, {m}): {est} vs {nu}");
        }
        // (3, 0): double indicial root, the grid solution carries a sqrt(r) ln r
        // companion and the local slope approaches 1/2 only logarithmically.
        let p = params(3, 0, 1.0);
        let pair = &solve(&p, &g, 1).unwrap()[0];
        let est = boundary_exponent(pair, &g, 40).unwrap();
        assert!((0.5..0.8).contains(&est), "{est}");
    }

    #[test]
    fn boundary_exponent_rejects_bad_window_and_signs() {
        let g = Grid::new(10.0, 100).unwrap();
        let pair = EigenPair { value: 1.0, vector: vec![1.0, -1.0, 2.0, 3.0] };
        assert!(matches!(boundary_exponent(&pair, &g, 2), Err(Error::InvalidInput(_))));
        assert!(matches!(boundary_exponent(&pair, &g, 3), Err(Error::SignPattern { node: 2, .. })));
    }

    #[test]
    fn feynman_hellmann_matches_finite_difference() {
        let g = Grid::default();
        let delta = 1e-3;
        for (m, xi) in [(1, 0.5), (1, 2.0), (3, 3.0)] {
            let p = params(5, m, xi);
            let pair = &solve(&p, &g, 1).unwrap()[0];
            let fh = derivative_feynman_hellmann(&p, pair, &g);
            assert!(fh < 0.0);
            let plus = band_value(&p.with_xi(xi + delta), &g, 1).unwrap();
            let minus = band_value(&p.with_xi(xi - delta), &g, 1).unwrap();
            let fd = (plus - minus) / (2.0 * delta);
            assert!((fh - fd).abs() <= 1e-3 * fh.abs(), "m={m} xi={xi}: {fh} vs {fd}");
        }
    }

    #[test]
    fn derivative_at_large_negative_momentum() {
        let g = Grid::default();
        let p = params(5, 1, -10.0);
        let pair = &solve(&p, &g, 1).unwrap()[0];
        let fh = derivative_feynman_hellmann(&p, pair, &g);
        assert!((fh - 2.0 * p.xi).abs() <= 0.1 * 2.0 * p.xi.abs(), "{fh}");
    }

    #[test]
    fn boundary_form_agrees_with_feynman_hellmann() {
        let g = Grid::default();
        let p = params(5, 1, 2.0);
        let pair = &solve(&p, &g, 1).unwrap()[0];
        let fh = derivative_feynman_hellmann(&p, pair, &g);
        let bd = derivative_boundary_form(&p, pair, &g);
        assert!(bd < 0.0);
        assert!((fh - bd).abs() <= 1e-2 * fh.abs(), "{fh} vs {bd}");

        // k_m = 0: -|u'(0)|²
        let p = params(4, 0, 1.0);
        let pair = &solve(&p, &g, 1).unwrap()[0];
        let fh = derivative_feynman_hellmann(&p, pair, &g);
        let bd = derivative_boundary_form(&p, pair, &g);
        assert!(bd <= 0.0);
        assert!((fh - bd).abs() <= 1e-2 * fh.abs(), "{fh} vs {bd}");
    }

    #[test]
    fn boundary_form_negative_for_positive_m() {
        let g = Grid::default();
        for n in [3, 4, 6] {
            for xi in [-1.0, 0.0, 3.0] {
                let p = params(n, 1, xi);
                for pair in solve(&p, &g, 2).unwrap() {
                    assert!(derivative_boundary_form(&p, &pair, &g) < 0.0);
                }
            }
        }
    }

    #[test]
    fn richardson_improves_exact_case() {
        let a = Grid::new(12.0, 600).unwrap();
        let b = a.refined();
        let r = refine(&params(4, 0, 0.0), &a, &b, 1).unwrap();
        assert!((r.extrapolated - 3.0).abs() < (r.fine - 3.0).abs());

        // error estimate drops about fourfold per refinement
        let c = b.refined();
        let r2 = refine(&params(4, 0, 0.0), &b, &c, 1).unwrap();
        let ratio = r.error_estimate / r2.error_estimate;
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn richardson_rejects_identical_grids() {
        let a = Grid::new(12.0, 600).unwrap();
        assert!(matches!(refine(&params(4, 0, 0.0), &a, &a, 1), Err(Error::InvalidInput(_))));
    }
}
