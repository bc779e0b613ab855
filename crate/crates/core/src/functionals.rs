//! Energy functionals I, J, F⁰, F and the Mabuchi K-energy on S¹-invariant
//! potentials on P¹, evaluated in the reduced coordinate against an arbitrary
//! background metric in the class (so the cocycle identities are testable).

use crate::p1::Grid;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Mean scalar curvature of the class on P¹ in the V = 1 normalization.
pub const RBAR: f64 = 2.0;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("omega_phi is not positive (min density {min_w})")]
    NonPositiveMetric { min_w: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub i: f64,
    pub j: f64,
    pub f0: f64,
    pub f: f64,
    pub k: f64,
}

/// Evaluation context: a fixed background metric (given by its potential
/// relative to Fubini-Study) plus cached density, curvature, and normalized
/// Ricci potential.
pub struct FunctionalCtx<'g> {
    pub grid: &'g Grid,
    pub phi_b: Vec<f64>,
    pub w_b: Vec<f64>,
    pub r_b: Vec<f64>,
    pub f0: Vec<f64>,
}

impl<'g> FunctionalCtx<'g> {
    pub fn new(grid: &'g Grid, phi_b: Vec<f64>) -> Self {
        let w_b = grid.metric_density(&phi_b);
        let r_b = grid.curvature_from_density(&w_b);
        let f0 = grid.ricci_potential(&w_b, &r_b, RBAR);
        FunctionalCtx {
            grid,
            phi_b,
            w_b,
            r_b,
            f0,
        }
    }

    pub fn fs(grid: &'g Grid) -> Self {
        Self::new(grid, vec![0.0; grid.m + 1])
    }

    fn total_density(&self, phi: &[f64]) -> Result<Vec<f64>, FunctionalError> {
        let total: Vec<f64> = self
            .phi_b
            .iter()
            .zip(phi)
            .map(|(b, p)| b + p)
            .collect();
        let w = self.grid.metric_density(&total);
        let min_w = w.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_w <= 0.0 {
            return Err(FunctionalError::NonPositiveMetric { min_w });
        }
        Ok(w)
    }

    /// I(φ) = (1/V)∫ φ (ω_bⁿ - ω_φⁿ) and J(φ) = (1/2V)∫ s (φ')² (n = 1).
    pub fn eval_i_j(&self, phi: &[f64]) -> Result<(f64, f64), FunctionalError> {
        let w = self.total_density(phi)?;
        let g = self.grid;
        let diff: Vec<f64> = (0..=g.m).map(|i| phi[i] * (self.w_b[i] - w[i])).collect();
        let i_val = g.integrate(&diff);
        let d1 = g.d1(phi);
        let jint: Vec<f64> = (0..=g.m).map(|i| g.s[i] * d1[i] * d1[i]).collect();
        let j_val = 0.5 * g.integrate(&jint);
        Ok((i_val, j_val))
    }

    /// F⁰(φ) = J(φ) - (1/V)∫ φ ω_bⁿ.
    pub fn eval_f0(&self, phi: &[f64]) -> Result<f64, FunctionalError> {
        let (_, j) = self.eval_i_j(phi)?;
        Ok(j - self.grid.integrate2(phi, &self.w_b))
    }

    /// The second expression -[(I-J)(φ) + (1/V)∫ φ ω_φⁿ]; agrees with eval_f0.
    pub fn eval_f0_alt(&self, phi: &[f64]) -> Result<f64, FunctionalError> {
        let w = self.total_density(phi)?;
        let (i, j) = self.eval_i_j(phi)?;
        Ok(-((i - j) + self.grid.integrate2(phi, &w)))
    }

    /// F(φ) = F⁰(φ) - log((1/V)∫ e^{f₀ - φ} ω_bⁿ).
    pub fn eval_f(&self, phi: &[f64]) -> Result<f64, FunctionalError> {
        let f0v = self.eval_f0(phi)?;
        let g = self.grid;
        let integrand: Vec<f64> = (0..=g.m)
            .map(|i| (self.f0[i] - phi[i]).exp() * self.w_b[i])
            .collect();
        Ok(f0v - g.integrate(&integrand).ln())
    }

    /// Mabuchi K-energy, explicit reduced form (n = 1):
    /// K = (1/V)[ ∫ log(ω_φ/ω_b) ω_φ - ∫ φ Ric(ω_b) + (R̄/2) ∫ φ (ω_b + ω_φ) ].
    /// The interpretation of the explicit formula is pinned by agreement with
    /// the path integral of the variational definition (see `eval_k_path`).
    pub fn eval_k(&self, phi: &[f64]) -> Result<f64, FunctionalError> {
        let w = self.total_density(phi)?;
        let g = self.grid;
        let mut ent = vec![0.0; g.m + 1];
        let mut ric = vec![0.0; g.m + 1];
        let mut lin = vec![0.0; g.m + 1];
        for i in 0..=g.m {
            ent[i] = (w[i] / self.w_b[i]).ln() * w[i];
            ric[i] = phi[i] * self.r_b[i] * self.w_b[i];
            lin[i] = phi[i] * (self.w_b[i] + w[i]);
        }
        Ok(g.integrate(&ent) - g.integrate(&ric) + 0.5 * RBAR * g.integrate(&lin))
    }

    /// K via the path integral of its defining variation along t ↦ tφ:
    /// K = -∫₀¹ (1/V)∫ φ (R_{tφ} - R̄) ω_{tφ}ⁿ dt (Gauss-Legendre in t).
    pub fn eval_k_path(&self, phi: &[f64], nt: usize) -> Result<f64, FunctionalError> {
        let g = self.grid;
        let (tn, tw) = crate::quad1d::gauss_legendre(nt);
        let mut acc = 0.0;
        for (t, wq) in tn.iter().zip(&tw) {
            let t01 = 0.5 * (t + 1.0);
            let scaled: Vec<f64> = phi.iter().map(|p| t01 * p).collect();
            let w = self.total_density(&scaled)?;
            let r = g.curvature_from_density(&w);
            let integrand: Vec<f64> = (0..=g.m)
                .map(|i| phi[i] * (r[i] - RBAR) * w[i])
                .collect();
            acc += 0.5 * wq * (-g.integrate(&integrand));
        }
        Ok(acc)
    }

    pub fn report(&self, phi: &[f64]) -> Result<FunctionalReport, FunctionalError> {
        let (i, j) = self.eval_i_j(phi)?;
        let f0 = self.eval_f0(phi)?;
        let f = self.eval_f(phi)?;
        let k = self.eval_k(phi)?;
        Ok(FunctionalReport { i, j, f0, f, k })
    }
}

/// Seeded random potentials φ = Σ_{j<=4} c_j B_j(x₀) with smooth polynomial
/// bumps, rejection-sampled so ω_φ stays positive over the background.
pub fn random_potentials(
    grid: &Grid,
    seed: u64,
    count: usize,
    amplitude: f64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: [fn(f64) -> f64; 4] = [
        |x| x * x * (1.0 - x) * (1.0 - x),
        |x| x * x * x * (1.0 - x) * (1.0 - x),
        |x| x * x * (1.0 - x) * (1.0 - x) * (1.0 - x),
        |x| x * x * (1.0 - x) * (1.0 - x) * (x - 0.5) * (x - 0.5),
    ];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let coefs: Vec<f64> = (0..4)
            .map(|_| rng.random_range(-amplitude..amplitude))
            .collect();
        let phi: Vec<f64> = (0..=grid.m)
            .map(|i| {
                let x = i as f64 / grid.m as f64;
                coefs.iter().zip(&bumps).map(|(c, b)| c * b(x)).sum()
            })
            .collect();
        let w = grid.metric_density(&phi);
        if w.iter().all(|&v| v > 1e-2) {
            out.push(phi);
        }
    }
    out
}
