//! Small dense least-squares fits used by the asymptotic extrapolations.

use nalgebra::{DMatrix, DVector};

/// Least-squares fit of `y ~ sum_j c_j basis_j(x)`; returns (coefficients, rms residual).
pub fn lsq_fit(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> (Vec<f64>, f64) {
    let n = xs.len();
    let p = basis.len();
    assert!(n >= p, "need at least as many samples as basis functions");
    let a = DMatrix::from_fn(n, p, |i, j| basis[j](xs[i]));
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-14).expect("svd solve");
    let resid = (&a * &c - &b).norm() / (n as f64).sqrt();
    (c.as_slice().to_vec(), resid)
}

/// Fit y = c0 + c1/x (+ c2/x^2 when three or more samples and `quadratic`).
pub fn fit_in_inverse_powers(ks: &[f64], ys: &[f64], quadratic: bool) -> (Vec<f64>, f64) {
    let one = |_x: f64| 1.0;
    let inv = |x: f64| 1.0 / x;
    let inv2 = |x: f64| 1.0 / (x * x);
    if quadratic && ks.len() >= 3 {
        lsq_fit(ks, ys, &[&one, &inv, &inv2])
    } else {
        lsq_fit(ks, ys, &[&one, &inv])
    }
}

/// Fit log y = log C + beta * log g(x); returns (C, beta).
pub fn fit_power_law(gs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = gs.iter().map(|g| g.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let one = |_x: f64| 1.0;
    let id = |x: f64| x;
    let (c, _) = lsq_fit(&lx, &ly, &[&one, &id]);
    (c[0].exp(), c[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_inverse_power_coefficients() {
        let ks: Vec<f64> = vec![4.0, 8.0, 16.0, 32.0, 64.0];
        let ys: Vec<f64> = ks.iter().map(|k| 0.25 + 0.25 / k - 0.1 / (k * k)).collect();
        let (c, r) = fit_in_inverse_powers(&ks, &ys, true);
        assert!((c[0] - 0.25).abs() < 1e-12);
        assert!((c[1] - 0.25).abs() < 1e-10);
        assert!(r < 1e-12);
    }

    #[test]
    fn recovers_power_law() {
        let gs: Vec<f64> = vec![0.5, 0.25, 0.125, 0.0625];
        let ys: Vec<f64> = gs.iter().map(|g| 3.0 * g.powf(1.2)).collect();
        let (c, beta) = fit_power_law(&gs, &ys);
        assert!((c - 3.0).abs() < 1e-10);
        assert!((beta - 1.2).abs() < 1e-12);
    }
}
