//! Symplectic potentials on a Delzant polytope: the canonical Guillemin part,
//! polynomial corrections with analytic derivatives to order 4, Hessian fields,
//! Abreu's scalar-curvature operator, and the Legendre transform.

use crate::polytope::Polytope;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("Hessian is singular or not positive definite at {point:?}")]
    SingularHessian { point: Vec<f64> },
    #[error("point {point:?} is not interior (margin {margin})")]
    NotInterior { point: Vec<f64>, margin: f64 },
    #[error("Newton inversion of the moment map failed at slope {slope:?}")]
    InversionFailed { slope: Vec<f64> },
}

/// A polynomial in n variables with analytic derivatives of every order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PolyND {
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl PolyND {
    pub fn zero() -> Self {
        PolyND { terms: vec![] }
    }

    /// Derivative by the multi-index `d`, evaluated at x.
    pub fn eval_deriv(&self, x: &[f64], d: &[u32]) -> f64 {
        let mut acc = 0.0;
        'terms: for (exps, coef) in &self.terms {
            let mut c = *coef;
            let mut pow_acc = 1.0;
            for (i, (&e, &di)) in exps.iter().zip(d).enumerate() {
                if di > e {
                    continue 'terms;
                }
                let mut fall = 1.0;
                for j in 0..di {
                    fall *= (e - j) as f64;
                }
                c *= fall;
                pow_acc *= x[i].powi((e - di) as i32);
            }
            acc += c * pow_acc;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> PolyND {
        PolyND {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn add(&self, other: &PolyND) -> PolyND {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        PolyND { terms }
    }
}

/// Symplectic potential u = c * sum_k delta_k log delta_k + correction.
/// The canonical part's derivatives are closed-form in the facet functions;
/// corrections are polynomials (closed under the linear blends used by the
/// exact toric geodesic).
#[derive(Debug, Clone)]
pub struct SymplecticPotential {
    pub polytope: Arc<Polytope>,
    pub canonical_coefficient: f64,
    pub correction: PolyND,
    /// strict-interiority margin for curvature queries, in delta_k units
    pub interior_margin: f64,
}

/// Value and derivative tensors of u at an interior point; tensors are fully
/// symmetric so only the raw index loops below read them.
#[derive(Debug, Clone)]
pub struct Jet4 {
    pub n: usize,
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
    pub third: Vec<Vec<Vec<f64>>>,
    pub fourth: Vec<Vec<Vec<Vec<f64>>>>,
}

/// Hessian data at a point: u_ij, its inverse u^ij, and the first and second
/// derivative tensors of the inverse (matrix-calculus chain rule, no finite
/// differences anywhere).
#[derive(Debug, Clone)]
pub struct HessianField {
    pub hess: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    /// d_a u^{ij}
    pub dinv: Vec<DMatrix<f64>>,
    /// d_a d_b u^{ij}
    pub ddinv: Vec<Vec<DMatrix<f64>>>,
}

pub fn guillemin_potential(poly: Arc<Polytope>) -> SymplecticPotential {
    SymplecticPotential {
        polytope: poly,
        canonical_coefficient: 1.0,
        correction: PolyND::zero(),
        interior_margin: 1e-6,
    }
}

impl SymplecticPotential {
    pub fn with_correction(poly: Arc<Polytope>, correction: PolyND) -> Self {
        SymplecticPotential {
            polytope: poly,
            canonical_coefficient: 1.0,
            correction,
            interior_margin: 1e-6,
        }
    }

    /// Linear blend (1-t) u0 + t u1 on the same polytope; exact in the
    /// canonical coefficient and the polynomial correction.
    pub fn blend(u0: &SymplecticPotential, u1: &SymplecticPotential, t: f64) -> Self {
        assert!(Arc::ptr_eq(&u0.polytope, &u1.polytope) || u0.polytope.dim == u1.polytope.dim);
        SymplecticPotential {
            polytope: u0.polytope.clone(),
            canonical_coefficient: (1.0 - t) * u0.canonical_coefficient
                + t * u1.canonical_coefficient,
            correction: u0.correction.scale(1.0 - t).add(&u1.correction.scale(t)),
            interior_margin: u0.interior_margin.min(u1.interior_margin),
        }
    }

    pub fn is_interior(&self, x: &[f64]) -> bool {
        self.polytope
            .facets
            .iter()
            .all(|f| f.delta_f64(x) > self.interior_margin)
    }

    /// Full jet (value through fourth derivatives), analytic.
    pub fn jet(&self, x: &[f64]) -> Jet4 {
        let n = self.polytope.dim;
        let c = self.canonical_coefficient;
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut hess = vec![vec![0.0; n]; n];
        let mut third = vec![vec![vec![0.0; n]; n]; n];
        let mut fourth = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for f in &self.polytope.facets {
            let d = f.delta_f64(x);
            let l: Vec<f64> = f.normal.iter().map(|&v| v as f64).collect();
            let ld = d.ln();
            value += c * d * ld;
            for i in 0..n {
                grad[i] += c * l[i] * (ld + 1.0);
                for j in 0..n {
                    hess[i][j] += c * l[i] * l[j] / d;
                    for k in 0..n {
                        third[i][j][k] -= c * l[i] * l[j] * l[k] / (d * d);
                        for m in 0..n {
                            fourth[i][j][k][m] += 2.0 * c * l[i] * l[j] * l[k] * l[m] / (d * d * d);
                        }
                    }
                }
            }
        }
        // polynomial correction: evaluate each sorted multi-index once and
        // write it into every symmetric slot
        let mut di = vec![0u32; n];
        value += self.correction.eval_deriv(x, &di);
        for i in 0..n {
            di[i] += 1;
            grad[i] += self.correction.eval_deriv(x, &di);
            for j in i..n {
                di[j] += 1;
                let h = self.correction.eval_deriv(x, &di);
                hess[i][j] += h;
                if i != j {
                    hess[j][i] += h;
                }
                for k in j..n {
                    di[k] += 1;
                    let t = self.correction.eval_deriv(x, &di);
                    add_sym3(&mut third, i, j, k, t);
                    for m in k..n {
                        di[m] += 1;
                        let q = self.correction.eval_deriv(x, &di);
                        add_sym4(&mut fourth, i, j, k, m, q);
                        di[m] -= 1;
                    }
                    di[k] -= 1;
                }
                di[j] -= 1;
            }
            di[i] -= 1;
        }
        Jet4 {
            n,
            value,
            grad,
            hess,
            third,
            fourth,
        }
    }

    /// Hessian, inverse, and inverse-derivative tensors at x.
    pub fn hessian_field(&self, x: &[f64]) -> Result<HessianField, PotentialError> {
        let jet = self.jet(x);
        hessian_field_from_jet(&jet).ok_or(PotentialError::SingularHessian {
            point: x.to_vec(),
        })
    }

    /// Abreu's scalar curvature R(x) = -sum_ij d_i d_j u^{ij}, fully analytic.
    pub fn scalar_curvature(&self, x: &[f64]) -> Result<f64, PotentialError> {
        if !self.is_interior(x) {
            return Err(PotentialError::NotInterior {
                point: x.to_vec(),
                margin: self.interior_margin,
            });
        }
        let jet = self.jet(x);
        let hf = hessian_field_from_jet(&jet).ok_or(PotentialError::SingularHessian {
            point: x.to_vec(),
        })?;
        let n = jet.n;
        let mut r = 0.0;
        for i in 0..n {
            for j in 0..n {
                r -= hf.ddinv[i][j][(i, j)];
            }
        }
        Ok(r)
    }

    /// Legendre transform: xi = grad u(x), phi(xi) = <x, xi> - u(x).
    pub fn legendre_to_kahler(&self, x: &[f64]) -> Result<(Vec<f64>, f64), PotentialError> {
        if !self.is_interior(x) {
            return Err(PotentialError::NotInterior {
                point: x.to_vec(),
                margin: self.interior_margin,
            });
        }
        let jet = self.jet(x);
        hessian_pd(&jet).ok_or(PotentialError::SingularHessian {
            point: x.to_vec(),
        })?;
        let xi = jet.grad.clone();
        let phi = x.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>() - jet.value;
        Ok((xi, phi))
    }

    /// Invert the moment map: find x with grad u(x) = xi (damped Newton started
    /// at `start`). Used to verify the Legendre round trip d(phi)/d(xi) = x.
    pub fn moment_from_slope(
        &self,
        xi: &[f64],
        start: &[f64],
    ) -> Result<Vec<f64>, PotentialError> {
        let n = self.polytope.dim;
        let mut x = start.to_vec();
        for _ in 0..200 {
            let jet = self.jet(&x);
            let res: Vec<f64> = (0..n).map(|i| jet.grad[i] - xi[i]).collect();
            let norm = res.iter().map(|r| r * r).sum::<f64>().sqrt();
            if norm < 1e-13 {
                return Ok(x);
            }
            let h = DMatrix::from_fn(n, n, |i, j| jet.hess[i][j]);
            let rhs = nalgebra::DVector::from_column_slice(&res);
            let step = h
                .lu()
                .solve(&rhs)
                .ok_or(PotentialError::SingularHessian { point: x.clone() })?;
            // damp so the iterate stays strictly interior
            let mut lambda = 1.0;
            loop {
                let cand: Vec<f64> = (0..n).map(|i| x[i] - lambda * step[i]).collect();
                if self
                    .polytope
                    .facets
                    .iter()
                    .all(|f| f.delta_f64(&cand) > 0.25 * self.interior_margin)
                {
                    x = cand;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-12 {
                    return Err(PotentialError::InversionFailed { slope: xi.to_vec() });
                }
            }
        }
        Err(PotentialError::InversionFailed { slope: xi.to_vec() })
    }
}

fn add_sym3(t: &mut [Vec<Vec<f64>>], i: usize, j: usize, k: usize, v: f64) {
    for p in perms(&[i, j, k]) {
        t[p[0]][p[1]][p[2]] += v;
    }
}

fn add_sym4(t: &mut [Vec<Vec<Vec<f64>>>], i: usize, j: usize, k: usize, m: usize, v: f64) {
    for p in perms(&[i, j, k, m]) {
        t[p[0]][p[1]][p[2]][p[3]] += v;
    }
}

/// Distinct permutations of an index multiset.
fn perms(idx: &[usize]) -> Vec<Vec<usize>> {
    if idx.len() == 1 {
        return vec![idx.to_vec()];
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..idx.len() {
        let mut rest = idx.to_vec();
        let v = rest.remove(i);
        for mut p in perms(&rest) {
            p.insert(0, v);
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

fn hessian_pd(jet: &Jet4) -> Option<DMatrix<f64>> {
    let n = jet.n;
    let h = DMatrix::from_fn(n, n, |i, j| jet.hess[i][j]);
    let chol = h.clone().cholesky()?;
    let _ = chol;
    Some(h)
}

fn hessian_field_from_jet(jet: &Jet4) -> Option<HessianField> {
    let n = jet.n;
    let h = hessian_pd(jet)?;
    let inv = h.clone().try_inverse()?;
    let g = |i: usize, j: usize| inv[(i, j)];
    // d_a u^{ij} = - u^{ik} u_{kl,a} u^{lj}
    let mut dinv = Vec::with_capacity(n);
    for a in 0..n {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        s -= g(i, k) * jet.third[k][l][a] * g(l, j);
                    }
                }
                m[(i, j)] = s;
            }
        }
        dinv.push(m);
    }
    // d_a d_b u^{ij} = u^{im}u_{mn,b}u^{nk}u_{kl,a}u^{lj}
    //                + u^{ik}u_{kl,a}u^{lm}u_{mn,b}u^{nj} - u^{ik}u_{kl,ab}u^{lj}
    let mut ddinv = vec![vec![DMatrix::zeros(n, n); n]; n];
    for a in 0..n {
        for b in 0..n {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        for l in 0..n {
                            s -= g(i, k) * jet.fourth[k][l][a][b] * g(l, j);
                            for p in 0..n {
                                for q in 0..n {
                                    s += g(i, p) * jet.third[p][q][b] * g(q, k)
                                        * jet.third[k][l][a] * g(l, j);
                                    s += g(i, k) * jet.third[k][l][a] * g(l, p)
                                        * jet.third[p][q][b] * g(q, j);
                                }
                            }
                        }
                    }
                    m[(i, j)] = s;
                }
            }
            ddinv[a][b] = m;
        }
    }
    Some(HessianField {
        hess: h,
        inv,
        dinv,
        ddinv,
    })
}

/// μ = σ(∂P)/Vol(P); the unique constant making F(const) = 0.
pub fn futaki_normalization(poly: &Polytope) -> f64 {
    poly.mu()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{build_polytope, HalfSpace};
    use crate::rational::rat_int;

    fn interval() -> Arc<Polytope> {
        Arc::new(
            build_polytope(
                1,
                vec![
                    HalfSpace::new(vec![1], rat_int(0)),
                    HalfSpace::new(vec![-1], rat_int(1)),
                ],
            )
            .unwrap(),
        )
    }

    fn simplex2() -> Arc<Polytope> {
        Arc::new(
            build_polytope(
                2,
                vec![
                    HalfSpace::new(vec![1, 0], rat_int(0)),
                    HalfSpace::new(vec![0, 1], rat_int(0)),
                    HalfSpace::new(vec![-1, -1], rat_int(1)),
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn guillemin_values_on_interval() {
        let u = guillemin_potential(interval());
        // u0(x) = x log x + (1-x) log(1-x), u0'' = 1/(x(1-x))
        let x = [0.3];
        let jet = u.jet(&x);
        let expect = 0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln();
        assert!((jet.value - expect).abs() < 1e-14);
        assert!((jet.hess[0][0] - 1.0 / (0.3 * 0.7)).abs() < 1e-12);
    }

    #[test]
    fn guillemin_value_at_simplex_center() {
        let u = guillemin_potential(simplex2());
        let jet = u.jet(&[1.0 / 3.0, 1.0 / 3.0]);
        assert!((jet.value - (-(3.0f64).ln())).abs() < 1e-14);
    }

    #[test]
    fn abreu_on_interval_is_two() {
        let u = guillemin_potential(interval());
        for i in 1..50 {
            let x = [i as f64 / 50.0];
            let r = u.scalar_curvature(&x).unwrap();
            assert!((r - 2.0).abs() < 1e-9, "x={:?} r={}", x, r);
        }
    }

    #[test]
    fn abreu_on_simplex_is_six() {
        let u = guillemin_potential(simplex2());
        for &p in &[[0.25, 0.25], [0.1, 0.2], [0.4, 0.35], [0.05, 0.9], [0.3, 0.1]] {
            let r = u.scalar_curvature(&p).unwrap();
            assert!((r - 6.0).abs() < 1e-8, "p={:?} r={}", p, r);
        }
    }

    #[test]
    fn perturbed_interval_curvature_is_continuous_in_eps() {
        let poly = interval();
        let x = [0.37];
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let u = SymplecticPotential::with_correction(
                poly.clone(),
                PolyND {
                    terms: vec![(vec![2], 0.5 * eps)],
                },
            );
            let r = u.scalar_curvature(&x).unwrap();
            assert!((r - 2.0).abs() < 8.0 * eps, "eps={} r={}", eps, r);
        }
    }

    #[test]
    fn affine_addition_leaves_curvature_unchanged() {
        let poly = interval();
        let u0 = guillemin_potential(poly.clone());
        let u1 = SymplecticPotential::with_correction(
            poly,
            PolyND {
                terms: vec![(vec![1], 3.5), (vec![0], -1.25)],
            },
        );
        for i in 1..20 {
            let x = [i as f64 / 20.0];
            let r0 = u0.scalar_curvature(&x).unwrap();
            let r1 = u1.scalar_curvature(&x).unwrap();
            assert!((r0 - r1).abs() < 1e-10);
        }
    }

    #[test]
    fn legendre_on_interval() {
        let u = guillemin_potential(interval());
        let (xi, phi) = u.legendre_to_kahler(&[0.5]).unwrap();
        assert!(xi[0].abs() < 1e-14);
        assert!((phi - 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn legendre_round_trip() {
        let u = SymplecticPotential::with_correction(
            simplex2(),
            PolyND {
                terms: vec![(vec![2, 0], 0.05), (vec![0, 2], 0.08), (vec![1, 1], 0.02)],
            },
        );
        for &p in &[[0.2, 0.3], [0.5, 0.25], [0.1, 0.1], [0.6, 0.2]] {
            let (xi, _phi) = u.legendre_to_kahler(&p).unwrap();
            let back = u.moment_from_slope(&xi, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
            let err = (back[0] - p[0]).hypot(back[1] - p[1]);
            assert!(err < 1e-9, "{:?} -> {:?}", p, back);
        }
    }

    #[test]
    fn affine_shift_moves_slope_not_phi() {
        let poly = interval();
        let u0 = guillemin_potential(poly.clone());
        let a = 0.8;
        let u1 = SymplecticPotential::with_correction(
            poly,
            PolyND {
                terms: vec![(vec![1], a)],
            },
        );
        let x = [0.42];
        let (xi0, phi0) = u0.legendre_to_kahler(&x).unwrap();
        let (xi1, phi1) = u1.legendre_to_kahler(&x).unwrap();
        assert!((xi1[0] - xi0[0] - a).abs() < 1e-13);
        // relabeling: phi1(xi + a) = phi0(xi) (the linear term cancels in <x,xi> - u)
        assert!((phi1 - phi0).abs() < 1e-13);
    }
}
