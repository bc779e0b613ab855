//! Reduced S¹-invariant metric kernel on P¹.
//!
//! States are relative Kähler potentials φ sampled on a uniform grid over the
//! background moment coordinate x₀ ∈ [0,1] (Fubini-Study background, V = 1).
//! With s(x₀) = x₀(1-x₀) and w = 1 + (s φ')' the dictionary is
//!
//!   ω_φ / ω₀          = w                (positivity: w > 0)
//!   ∫_X F ω_φ         = ∫₀¹ F w dx₀
//!   R(ω_φ)            = (2 - (s w'/w)') / w      (R ≡ 2 for φ = 0)
//!   Δ_φ f             = (s f')' / w
//!   |∇f|²_φ           = (s/w) (f')²
//!   (i/2)∂∂̄ f  ↦ x₀-density  (s f')'
//!
//! Spatial derivatives are 4th-order finite differences with one-sided closures;
//! grid integrals use composite Boole weights (Simpson on awkward sizes).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum P1Error {
    #[error("metric density must be positive everywhere (min w = {min_w} at node {node})")]
    NonPositiveMetric { min_w: f64, node: usize },
    #[error("grid size must be an even integer >= 8, got {m}")]
    BadGrid { m: usize },
    #[error("metric volume {volume} deviates from 1 beyond 1e-8")]
    BadVolume { volume: f64 },
}

/// Uniform grid over x₀ ∈ [0,1] with differentiation stencils, quadrature
/// weights, and a prefactored solver for the degenerate Poisson operator
/// f ↦ (s f')'. Everything downstream of the grid is deterministic.
#[derive(Debug, Clone)]
pub struct Grid {
    pub m: usize,
    pub h: f64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub sp: Vec<f64>,
    quad_w: Vec<f64>,
    poisson: DMatrix<f64>,
}

impl Grid {
    pub fn new(m: usize) -> Self {
        assert!(m >= 8, "grid too coarse for 4th-order stencils");
        let h = 1.0 / m as f64;
        let x: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
        let s: Vec<f64> = x.iter().map(|&t| t * (1.0 - t)).collect();
        let sp: Vec<f64> = x.iter().map(|&t| 1.0 - 2.0 * t).collect();
        let quad_w = quad_weights(m, h);
        let poisson = build_poisson_pinv(m, h, &s, &sp, &quad_w);
        Grid {
            m,
            h,
            x,
            s,
            sp,
            quad_w,
            poisson,
        }
    }

    /// 4th-order first derivative.
    pub fn d1(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m;
        let h = self.h;
        let mut g = vec![0.0; m + 1];
        for i in 2..m - 1 {
            g[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
        }
        g[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
        g[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
        g[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3]
            + 3.0 * f[m - 4])
            / (12.0 * h);
        g[m - 1] =
            (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4])
                / (12.0 * h);
        g
    }

    /// 4th-order second derivative.
    pub fn d2(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m;
        let h2 = self.h * self.h;
        let mut g = vec![0.0; m + 1];
        for i in 2..m - 1 {
            g[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
                / (12.0 * h2);
        }
        let c0 = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
        let c1 = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
        g[0] = c0.iter().enumerate().map(|(k, c)| c * f[k]).sum::<f64>() / (12.0 * h2);
        g[1] = c1.iter().enumerate().map(|(k, c)| c * f[k]).sum::<f64>() / (12.0 * h2);
        g[m] = c0.iter().enumerate().map(|(k, c)| c * f[m - k]).sum::<f64>() / (12.0 * h2);
        g[m - 1] = c1.iter().enumerate().map(|(k, c)| c * f[m - k]).sum::<f64>() / (12.0 * h2);
        g
    }

    /// ∫₀¹ f dx₀ with composite Boole (4 | m) or Simpson weights.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.quad_w).map(|(a, w)| a * w).sum()
    }

    /// ∫₀¹ f g dx₀.
    pub fn integrate2(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.quad_w)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// Metric density w = 1 + s' φ' + s φ''.
    pub fn metric_density(&self, phi: &[f64]) -> Vec<f64> {
        let d1 = self.d1(phi);
        let d2 = self.d2(phi);
        (0..=self.m)
            .map(|i| 1.0 + self.sp[i] * d1[i] + self.s[i] * d2[i])
            .collect()
    }

    /// Scalar curvature R = (2 - s'(log w)' - s (log w)'') / w; the product-rule
    /// expansion keeps the endpoint values first-derivative only.
    pub fn curvature_from_density(&self, w: &[f64]) -> Vec<f64> {
        let lw: Vec<f64> = w.iter().map(|v| v.ln()).collect();
        let d1 = self.d1(&lw);
        let d2 = self.d2(&lw);
        (0..=self.m)
            .map(|i| (2.0 - (self.sp[i] * d1[i] + self.s[i] * d2[i])) / w[i])
            .collect()
    }

    pub fn curvature(&self, phi: &[f64]) -> Vec<f64> {
        self.curvature_from_density(&self.metric_density(phi))
    }

    /// Δ_φ f = (s f')'/w.
    pub fn laplacian(&self, w: &[f64], f: &[f64]) -> Vec<f64> {
        let dd = self.ddbar_density(f);
        (0..=self.m).map(|i| dd[i] / w[i]).collect()
    }

    /// |∇f|²_φ = (s/w)(f')².
    pub fn grad_norm_sq(&self, w: &[f64], f: &[f64]) -> Vec<f64> {
        let d1 = self.d1(f);
        (0..=self.m)
            .map(|i| self.s[i] / w[i] * d1[i] * d1[i])
            .collect()
    }

    /// x₀-density of (i/2)∂∂̄f, i.e. (s f')'.
    pub fn ddbar_density(&self, f: &[f64]) -> Vec<f64> {
        let d1 = self.d1(f);
        let d2 = self.d2(f);
        (0..=self.m)
            .map(|i| self.sp[i] * d1[i] + self.s[i] * d2[i])
            .collect()
    }

    /// Solve (s f')' = rhs in the mean-zero gauge (prefactored least squares).
    pub fn solve_degenerate_poisson(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = DVector::zeros(self.m + 2);
        for i in 0..=self.m {
            b[i] = rhs[i];
        }
        let f = &self.poisson * b;
        f.as_slice().to_vec()
    }

    /// μ-twisted Ricci potential of the metric (w_b, R_b): solve
    /// (s f₀')' = (R_b - μ) w_b, then shift so ∫ e^{f₀} w_b dx₀ = Vol.
    pub fn ricci_potential(&self, w_b: &[f64], r_b: &[f64], mu: f64) -> Vec<f64> {
        let vol = self.integrate(w_b);
        let mut rhs: Vec<f64> = (0..=self.m).map(|i| (r_b[i] - mu) * w_b[i]).collect();
        let excess = self.integrate(&rhs) / vol;
        for (r, wv) in rhs.iter_mut().zip(w_b) {
            *r -= excess * wv;
        }
        let mut f0 = self.solve_degenerate_poisson(&rhs);
        let ef: Vec<f64> = f0.iter().zip(w_b).map(|(f, w)| f.exp() * w).collect();
        let norm = (self.integrate(&ef) / vol).ln();
        for f in f0.iter_mut() {
            *f -= norm;
        }
        f0
    }

    /// Reduced Lichnerowicz residual ‖𝒟_φ f‖_{L²(ω_φ)} with
    /// (𝒟f)(x₀) = s · d/dx₀ (f'/w): zero iff ∇f is holomorphic.
    pub fn lichnerowicz_residual(&self, w: &[f64], f: &[f64]) -> f64 {
        let d1 = self.d1(f);
        let ratio: Vec<f64> = d1.iter().zip(w).map(|(d, wv)| d / wv).collect();
        let dr = self.d1(&ratio);
        let integrand: Vec<f64> = (0..=self.m)
            .map(|i| {
                let df = self.s[i] * dr[i];
                df * df * w[i]
            })
            .collect();
        self.integrate(&integrand).max(0.0).sqrt()
    }
}

fn quad_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; m + 1];
    if m % 4 == 0 {
        let c = 2.0 * h / 45.0;
        for p in (0..m).step_by(4) {
            w[p] += 7.0 * c;
            w[p + 1] += 32.0 * c;
            w[p + 2] += 12.0 * c;
            w[p + 3] += 32.0 * c;
            w[p + 4] += 7.0 * c;
        }
    } else if m % 2 == 0 {
        let c = h / 3.0;
        for p in (0..m).step_by(2) {
            w[p] += c;
            w[p + 1] += 4.0 * c;
            w[p + 2] += c;
        }
    } else {
        for (i, slot) in w.iter_mut().enumerate() {
            *slot = if i == 0 || i == m { 0.5 * h } else { h };
        }
    }
    w
}

fn build_poisson_pinv(
    m: usize,
    h: f64,
    s: &[f64],
    sp: &[f64],
    quad_w: &[f64],
) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m + 2, m + 1);
    let d1 = d1_matrix(m, h);
    let d2 = d2_matrix(m, h);
    for i in 0..=m {
        for j in 0..=m {
            a[(i, j)] = s[i] * d2[(i, j)] + sp[i] * d1[(i, j)];
        }
    }
    for j in 0..=m {
        a[(m + 1, j)] = quad_w[j];
    }
    let svd = a.svd(true, true);
    svd.pseudo_inverse(1e-12).expect("poisson pseudoinverse")
}

fn d1_matrix(m: usize, h: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m + 1, m + 1);
    let c = 1.0 / (12.0 * h);
    for i in 2..m - 1 {
        a[(i, i - 2)] = c;
        a[(i, i - 1)] = -8.0 * c;
        a[(i, i + 1)] = 8.0 * c;
        a[(i, i + 2)] = -c;
    }
    for (j, v) in [(0usize, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)] {
        a[(0, j)] = v * c;
        a[(m, m - j)] = -v * c;
    }
    for (j, v) in [(0usize, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)] {
        a[(1, j)] = v * c;
        a[(m - 1, m - j)] = -v * c;
    }
    a
}

fn d2_matrix(m: usize, h: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m + 1, m + 1);
    let c = 1.0 / (12.0 * h * h);
    for i in 2..m - 1 {
        a[(i, i - 2)] = -c;
        a[(i, i - 1)] = 16.0 * c;
        a[(i, i)] = -30.0 * c;
        a[(i, i + 1)] = 16.0 * c;
        a[(i, i + 2)] = -c;
    }
    for (j, v) in [
        (0usize, 45.0),
        (1, -154.0),
        (2, 214.0),
        (3, -156.0),
        (4, 61.0),
        (5, -10.0),
    ] {
        a[(0, j)] = v * c;
        a[(m, m - j)] = v * c;
    }
    for (j, v) in [
        (0usize, 10.0),
        (1, -15.0),
        (2, -4.0),
        (3, 14.0),
        (4, -6.0),
        (5, 1.0),
    ] {
        a[(1, j)] = v * c;
        a[(m - 1, m - j)] = v * c;
    }
    a
}

/// An S¹-invariant Kähler metric on P¹: grid values of the relative potential
/// over the background moment coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantMetricP1 {
    pub grid: Vec<f64>,
    /// one-sided stencil order used at the endpoints
    pub endpoint_order: usize,
}

impl InvariantMetricP1 {
    pub fn from_values(grid: Vec<f64>) -> Result<Self, P1Error> {
        let m = grid.len().saturating_sub(1);
        if m < 8 || m % 2 != 0 {
            return Err(P1Error::BadGrid { m });
        }
        Ok(InvariantMetricP1 {
            grid,
            endpoint_order: 4,
        })
    }

    pub fn fubini_study(m: usize) -> Self {
        InvariantMetricP1 {
            grid: vec![0.0; m + 1],
            endpoint_order: 4,
        }
    }

    /// Sample an analytic potential x₀ ↦ φ(x₀) on an m-grid.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Self {
        InvariantMetricP1 {
            grid: (0..=m).map(|i| f(i as f64 / m as f64)).collect(),
            endpoint_order: 4,
        }
    }

    pub fn m(&self) -> usize {
        self.grid.len() - 1
    }

    /// Positivity of the induced density and unit total measure.
    pub fn validate(&self, grid: &Grid) -> Result<(), P1Error> {
        assert_eq!(grid.m, self.m(), "metric and grid sizes must match");
        let w = grid.metric_density(&self.grid);
        let (node, min_w) = w
            .iter()
            .enumerate()
            .fold((0usize, f64::INFINITY), |acc, (i, &v)| {
                if v < acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
        if min_w <= 0.0 {
            return Err(P1Error::NonPositiveMetric { min_w, node });
        }
        let vol = grid.integrate(&w);
        if (vol - 1.0).abs() > 1e-8 {
            return Err(P1Error::BadVolume { volume: vol });
        }
        Ok(())
    }
}

/// Relative potential of the pullback by the torus flow by log-parameter `a`
/// (a one-parameter family of round metrics, all with R ≡ 2).
pub fn translate_potential(m: usize, a: f64) -> Vec<f64> {
    let softplus = |t: f64| if t > 30.0 { t } else { t.exp().ln_1p() };
    let mut phi = vec![0.0; m + 1];
    for (i, slot) in phi.iter_mut().enumerate().skip(1).take(m - 1) {
        let x = i as f64 / m as f64;
        let xi = (x / (1.0 - x)).ln();
        *slot = softplus(xi + a) - softplus(xi);
    }
    phi[m] = a;
    phi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(m: usize, c: f64) -> Vec<f64> {
        (0..=m)
            .map(|i| {
                let x = i as f64 / m as f64;
                c * x * x * (1.0 - x) * (1.0 - x)
            })
            .collect()
    }

    #[test]
    fn fs_metric_is_flat_density() {
        let g = Grid::new(64);
        let w = g.metric_density(&vec![0.0; 65]);
        assert!(w.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let r = g.curvature(&vec![0.0; 65]);
        assert!(r.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn translate_metric_is_round() {
        let m = 128;
        let g = Grid::new(m);
        let phi = translate_potential(m, 0.4);
        let r = g.curvature(&phi);
        let dev = r.iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max);
        assert!(dev < 5e-7, "dev={dev}");
        let w = g.metric_density(&phi);
        assert!((g.integrate(&w) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn volume_is_conserved_for_relative_potentials() {
        let g = Grid::new(256);
        let w = g.metric_density(&bump(256, 0.25));
        assert!((g.integrate(&w) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn laplacian_integrates_to_zero() {
        let g = Grid::new(128);
        let phi = bump(128, 0.2);
        let w = g.metric_density(&phi);
        let f = bump(128, 1.0);
        let lap = g.laplacian(&w, &f);
        let integrand: Vec<f64> = lap.iter().zip(&w).map(|(l, wv)| l * wv).collect();
        assert!(g.integrate(&integrand).abs() < 1e-10);
    }

    #[test]
    fn integration_by_parts_for_gradient() {
        let g = Grid::new(128);
        let phi = bump(128, 0.15);
        let w = g.metric_density(&phi);
        let f = bump(128, 0.7);
        let lap = g.laplacian(&w, &f);
        let lhs: Vec<f64> = (0..=128).map(|i| f[i] * lap[i] * w[i]).collect();
        let grad = g.grad_norm_sq(&w, &f);
        let rhs: Vec<f64> = (0..=128).map(|i| grad[i] * w[i]).collect();
        assert!((g.integrate(&lhs) + g.integrate(&rhs)).abs() < 1e-9);
    }

    #[test]
    fn ricci_potential_of_fs_vanishes() {
        let g = Grid::new(96);
        let w = vec![1.0; 97];
        let r = vec![2.0; 97];
        let f0 = g.ricci_potential(&w, &r, 2.0);
        assert!(f0.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn ricci_potential_solves_poisson() {
        let m = 128;
        let g = Grid::new(m);
        let phi = bump(m, 0.2);
        let w = g.metric_density(&phi);
        let rb = g.curvature(&phi);
        let f0 = g.ricci_potential(&w, &rb, 2.0);
        let lhs = g.ddbar_density(&f0);
        let mut dev: f64 = 0.0;
        for i in 0..=m {
            dev = dev.max((lhs[i] - (rb[i] - 2.0) * w[i]).abs());
        }
        assert!(dev < 1e-6, "poisson residual {dev}");
        let ef: Vec<f64> = f0.iter().zip(&w).map(|(f, wv)| f.exp() * wv).collect();
        assert!((g.integrate(&ef) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lichnerowicz_annihilates_constant_curvature() {
        let g = Grid::new(96);
        let w = vec![1.0; 97];
        let r = vec![2.0; 97];
        assert!(g.lichnerowicz_residual(&w, &r) < 1e-12);
    }

    #[test]
    fn metric_validation_catches_degenerate_density() {
        let g = Grid::new(64);
        // large coefficient drives w = 1 + (s phi')' negative near the center
        let worse = InvariantMetricP1::from_fn(64, |x| 8.0 * (x * (1.0 - x)).powi(2));
        assert!(matches!(
            worse.validate(&g),
            Err(P1Error::NonPositiveMetric { .. })
        ));
    }
}
