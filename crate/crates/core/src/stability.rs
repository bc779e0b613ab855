//! Toric stability machinery: the polytope Futaki functional, the toric
//! K-energy, piecewise-linear test configurations and their weight spectra,
//! the trace-asymptotics cross-check, the configuration norm D(T), Donaldson's
//! Calabi-energy lower bound, and a crease-grid destabilizer scan.
//!
//! Piecewise-linear data is integrated exactly (rational cell decompositions);
//! floating point enters only in fits and in smooth-integrand quadrature.

use crate::fit::fit_in_inverse_powers;
use crate::polytope::{
    clip_polygon, polygon_area, polygon_centroid, segment_sigma_length, Polytope,
};
use crate::potentials::SymplecticPotential;
use crate::rational::{rat_int, to_f64, Rat};
use num::traits::{Signed, ToPrimitive, Zero};
use num::BigInt;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("need at least 3 distinct k values, each >= 2")]
    InsufficientData,
    #[error("degenerate test configuration: D(T) = 0")]
    DegenerateConfiguration,
    #[error("polytope lattice error: {0}")]
    Polytope(#[from] crate::polytope::PolytopeError),
    #[error("toric K-energy requires dimension <= 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("potential error: {0}")]
    Potential(#[from] crate::potentials::PotentialError),
}

/// Rational piecewise-linear convex function f(x) = max_i (<a_i, x> + b_i):
/// a toric test configuration.
#[derive(Debug, Clone)]
pub struct PLConvexFunction {
    pub pieces: Vec<(Vec<Rat>, Rat)>,
}

impl PLConvexFunction {
    pub fn new(pieces: Vec<(Vec<Rat>, Rat)>) -> Self {
        assert!(!pieces.is_empty());
        PLConvexFunction { pieces }
    }

    pub fn constant(dim: usize, c: Rat) -> Self {
        PLConvexFunction {
            pieces: vec![(vec![Rat::zero(); dim], c)],
        }
    }

    /// simple crease max(0, <a,x> + b)
    pub fn crease(a: Vec<Rat>, b: Rat) -> Self {
        let dim = a.len();
        PLConvexFunction {
            pieces: vec![(vec![Rat::zero(); dim], Rat::zero()), (a, b)],
        }
    }

    pub fn eval_exact(&self, x: &[Rat]) -> Rat {
        self.pieces
            .iter()
            .map(|(a, b)| affine_eval(a, b, x))
            .max()
            .unwrap()
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|(a, b)| {
                let mut acc = to_f64(b);
                for (ai, xi) in a.iter().zip(x) {
                    acc += to_f64(ai) * xi;
                }
                acc
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        PLConvexFunction {
            pieces: self
                .pieces
                .iter()
                .map(|(a, b)| (a.iter().map(|v| v * c).collect(), b * c))
                .collect(),
        }
    }

    /// Pointwise sum: max_i p_i + max_j q_j = max_{ij} (p_i + q_j).
    pub fn sum(&self, other: &PLConvexFunction) -> Self {
        let mut pieces = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for (a, b) in &self.pieces {
            for (c, d) in &other.pieces {
                let coeffs: Vec<Rat> = a.iter().zip(c).map(|(x, y)| x + y).collect();
                pieces.push((coeffs, b + d));
            }
        }
        PLConvexFunction { pieces }
    }

    /// Drop pieces that are nowhere maximal on P (zero-volume active cell).
    pub fn simplify(&self, poly: &Polytope) -> Self {
        let cells = active_cells(poly, self);
        let pieces: Vec<(Vec<Rat>, Rat)> = self
            .pieces
            .iter()
            .zip(&cells)
            .filter(|(_, c)| c.is_some())
            .map(|(p, _)| p.clone())
            .collect();
        if pieces.is_empty() {
            self.clone()
        } else {
            PLConvexFunction { pieces }
        }
    }
}

fn affine_eval(a: &[Rat], b: &Rat, x: &[Rat]) -> Rat {
    let mut acc = b.clone();
    for (ai, xi) in a.iter().zip(x) {
        acc += ai * xi;
    }
    acc
}

/// Active cell of one PL piece: the region of P where the piece is maximal.
enum Cell {
    Interval(Rat, Rat),
    Polygon(Vec<Vec<Rat>>),
}

fn active_cells(poly: &Polytope, f: &PLConvexFunction) -> Vec<Option<Cell>> {
    match poly.dim {
        1 => {
            let lo = poly.vertices.iter().map(|v| v[0].clone()).min().unwrap();
            let hi = poly.vertices.iter().map(|v| v[0].clone()).max().unwrap();
            f.pieces
                .iter()
                .enumerate()
                .map(|(i, (ai, bi))| {
                    let mut clo = lo.clone();
                    let mut chi = hi.clone();
                    for (j, (aj, bj)) in f.pieces.iter().enumerate() {
                        if i == j {
                            continue;
                        }
                        // require (ai - aj) x + (bi - bj) >= 0 on the cell
                        let da = &ai[0] - &aj[0];
                        let db = bi - bj;
                        if da.is_zero() {
                            if db.is_negative() {
                                return None;
                            }
                        } else {
                            let bound = -db / &da;
                            if da.is_positive() {
                                if bound > clo {
                                    clo = bound;
                                }
                            } else if bound < chi {
                                chi = bound;
                            }
                        }
                    }
                    if clo < chi {
                        Some(Cell::Interval(clo, chi))
                    } else {
                        None
                    }
                })
                .collect()
        }
        2 => {
            let base = poly.polygon_cycle();
            f.pieces
                .iter()
                .enumerate()
                .map(|(i, (ai, bi))| {
                    let mut cell = base.clone();
                    for (j, (aj, bj)) in f.pieces.iter().enumerate() {
                        if i == j || cell.len() < 3 {
                            continue;
                        }
                        let ca = &ai[0] - &aj[0];
                        let cb = &ai[1] - &aj[1];
                        let cc = bi - bj;
                        if ca.is_zero() && cb.is_zero() {
                            if cc.is_negative() {
                                return None;
                            }
                            continue;
                        }
                        cell = clip_polygon(&cell, &ca, &cb, &cc);
                    }
                    if cell.len() >= 3 && polygon_area(&cell).is_positive() {
                        Some(Cell::Polygon(cell))
                    } else {
                        None
                    }
                })
                .collect()
        }
        d => panic!("PL integration implemented for dim <= 2, got {d}"),
    }
}

/// Exact ∫_P f dx for PL f.
pub fn integral_pl_exact(poly: &Polytope, f: &PLConvexFunction) -> Rat {
    let cells = active_cells(poly, f);
    let mut acc = Rat::zero();
    for ((a, b), cell) in f.pieces.iter().zip(&cells) {
        match cell {
            Some(Cell::Interval(lo, hi)) => {
                let mid = (lo + hi) / rat_int(2);
                acc += (hi - lo) * affine_eval(a, b, &[mid]);
            }
            Some(Cell::Polygon(cyc)) => {
                let area = polygon_area(cyc);
                let cen = polygon_centroid(cyc);
                acc += area * affine_eval(a, b, &cen);
            }
            None => {}
        }
    }
    acc
}

/// Exact ∫_P f² dx for PL f (midpoint rules exact on quadratics).
pub fn integral_pl_sq_exact(poly: &Polytope, f: &PLConvexFunction) -> Rat {
    let cells = active_cells(poly, f);
    let mut acc = Rat::zero();
    let half = Rat::new(BigInt::from(1), BigInt::from(2));
    for ((a, b), cell) in f.pieces.iter().zip(&cells) {
        match cell {
            Some(Cell::Interval(lo, hi)) => {
                let mid = (lo + hi) / rat_int(2);
                let g = |x: &Rat| {
                    let v = affine_eval(a, b, std::slice::from_ref(x));
                    &v * &v
                };
                acc += (hi - lo) * (g(lo) + rat_int(4) * g(&mid) + g(hi)) / rat_int(6);
            }
            Some(Cell::Polygon(cyc)) => {
                for t in 1..cyc.len() - 1 {
                    let tri = [&cyc[0], &cyc[t], &cyc[t + 1]];
                    let area =
                        polygon_area(&[tri[0].clone(), tri[1].clone(), tri[2].clone()]);
                    let mut s = Rat::zero();
                    for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                        let mid = vec![
                            (&tri[p][0] + &tri[q][0]) * &half,
                            (&tri[p][1] + &tri[q][1]) * &half,
                        ];
                        let v = affine_eval(a, b, &mid);
                        s += &v * &v;
                    }
                    acc += area * s / rat_int(3);
                }
            }
            None => {}
        }
    }
    acc
}

/// Exact ∫_{∂P} f dσ for PL f.
pub fn boundary_integral_pl_exact(poly: &Polytope, f: &PLConvexFunction) -> Rat {
    let mut acc = Rat::zero();
    match poly.dim {
        1 => {
            for fv in &poly.facet_vertices {
                acc += f.eval_exact(&poly.vertices[fv[0]]); // sigma-mass 1 per endpoint
            }
        }
        2 => {
            let half = Rat::new(BigInt::from(1), BigInt::from(2));
            for (k, fv) in poly.facet_vertices.iter().enumerate() {
                let p = &poly.vertices[fv[0]];
                let q = &poly.vertices[fv[1]];
                // breakpoints of f restricted to x(t) = p + t(q - p), t ∈ [0,1]
                let mut ts: Vec<Rat> = vec![Rat::zero(), rat_int(1)];
                for i in 0..f.pieces.len() {
                    for j in (i + 1)..f.pieces.len() {
                        let (ai, bi) = &f.pieces[i];
                        let (aj, bj) = &f.pieces[j];
                        let da = [&ai[0] - &aj[0], &ai[1] - &aj[1]];
                        let c0 = &da[0] * &p[0] + &da[1] * &p[1] + (bi - bj);
                        let c1 = &da[0] * (&q[0] - &p[0]) + &da[1] * (&q[1] - &p[1]);
                        if !c1.is_zero() {
                            let t = -c0 / c1;
                            if t.is_positive() && t < rat_int(1) && !ts.contains(&t) {
                                ts.push(t);
                            }
                        }
                    }
                }
                ts.sort();
                let sigma = segment_sigma_length(p, q, &poly.facets[k].normal);
                let point = |t: &Rat| -> Vec<Rat> {
                    vec![&p[0] + t * (&q[0] - &p[0]), &p[1] + t * (&q[1] - &p[1])]
                };
                for win in ts.windows(2) {
                    let f0 = f.eval_exact(&point(&win[0]));
                    let f1 = f.eval_exact(&point(&win[1]));
                    acc += (&win[1] - &win[0]) * &sigma * (f0 + f1) * &half;
                }
            }
        }
        d => panic!("PL boundary integration implemented for dim <= 2, got {d}"),
    }
    acc
}

/// The polytope Futaki functional F(f) = -μ ∫_P f dx + ∫_{∂P} f dσ, exact for
/// PL test configurations.
pub fn futaki_pl(poly: &Polytope, f: &PLConvexFunction) -> Rat {
    let mu = poly.mu_exact();
    -mu * integral_pl_exact(poly, f) + boundary_integral_pl_exact(poly, f)
}

/// F(f) for a general integrand by quadrature.
pub fn futaki_quadrature(poly: &Polytope, f: impl Fn(&[f64]) -> f64, order: usize) -> f64 {
    let q = poly.quadrature(order);
    let mu = poly.mu();
    -mu * q.integrate(&f) + q.integrate_boundary(|x, _| f(x))
}

/// Toric K-energy K(u) = -∫_P log det u_ij dx + F(u).
///
/// The log-singular part splits analytically: log det u_ij = r(x) - Σ_k log δ_k
/// with r = log(det u_ij · Π δ_k) bounded (identically zero for Guillemin data
/// on Delzant polytopes), integrated by quadrature, while ∫ log δ_k dx and the
/// canonical Σ δ log δ part of F(u) use exact slice measures with closed-form
/// t log t primitives. Dimensions 1 and 2.
pub fn toric_k_energy(u: &SymplecticPotential, order: usize) -> Result<f64, StabilityError> {
    let poly = &u.polytope;
    let n = poly.dim;
    if n > 2 {
        return Err(StabilityError::UnsupportedDimension(n));
    }
    let q = poly.quadrature(order);

    // -∫ r dx by quadrature (r is smooth up to the boundary)
    let mut reg = 0.0;
    for (node, wq) in q.interior_nodes.iter().zip(&q.interior_weights) {
        let jet = u.jet(node);
        let det = match n {
            1 => jet.hess[0][0],
            _ => jet.hess[0][0] * jet.hess[1][1] - jet.hess[0][1] * jet.hess[1][0],
        };
        if det <= 0.0 {
            return Err(StabilityError::Potential(
                crate::potentials::PotentialError::SingularHessian { point: node.clone() },
            ));
        }
        let mut prod_delta = 1.0;
        for fct in &poly.facets {
            prod_delta *= fct.delta_f64(node);
        }
        reg += wq * (det * prod_delta).ln();
    }

    // + Σ_k ∫ log δ_k dx
    let mut log_delta_sum = 0.0;
    for k in 0..poly.facets.len() {
        log_delta_sum += slice_integral(poly, k, LogKind::Log);
    }

    // F(u) = -μ ∫ u + ∫_∂P u dσ
    let mu = poly.mu();
    let mut int_u = 0.0;
    for k in 0..poly.facets.len() {
        int_u += u.canonical_coefficient * slice_integral(poly, k, LogKind::TLogT);
    }
    int_u += q.integrate(|x| u.correction.eval_deriv(x, &vec![0u32; n]));

    let mut bnd_u = 0.0;
    for k in 0..poly.facets.len() {
        bnd_u += boundary_potential_integral(u, k);
    }

    Ok(-reg + log_delta_sum + (-mu * int_u + bnd_u))
}

enum LogKind {
    Log,
    TLogT,
}

/// ∫_P g(δ_k(x)) dx by exact slice decomposition: the pushforward of Lebesgue
/// measure under δ_k has piecewise-polynomial density M(t) of degree n-1,
/// reconstructed exactly from rational chord measurements; g ∈ {log t, t log t}
/// integrates in closed form against each piece.
fn slice_integral(poly: &Polytope, k: usize, kind: LogKind) -> f64 {
    let f = &poly.facets[k];
    match poly.dim {
        1 => {
            let hi = poly
                .vertices
                .iter()
                .map(|v| f.delta(v))
                .max()
                .map(|r| to_f64(&r))
                .unwrap();
            match kind {
                LogKind::Log => hi * hi.ln() - hi,
                LogKind::TLogT => hi * hi / 2.0 * hi.ln() - hi * hi / 4.0,
            }
        }
        2 => {
            let mut breaks: Vec<Rat> = poly.vertices.iter().map(|v| f.delta(v)).collect();
            breaks.sort();
            breaks.dedup();
            let cycle = poly.polygon_cycle();
            let chord = |t: &Rat| -> Rat {
                let mut pts: Vec<Vec<Rat>> = Vec::new();
                let nv = cycle.len();
                for i in 0..nv {
                    let p = &cycle[i];
                    let q = &cycle[(i + 1) % nv];
                    let dp = f.delta(p) - t.clone();
                    let dq = f.delta(q) - t.clone();
                    if (dp.is_negative() && dq.is_positive())
                        || (dp.is_positive() && dq.is_negative())
                    {
                        let lam = &dp / (&dp - &dq);
                        pts.push(vec![
                            &p[0] + &lam * (&q[0] - &p[0]),
                            &p[1] + &lam * (&q[1] - &p[1]),
                        ]);
                    }
                }
                if pts.len() < 2 {
                    return Rat::zero();
                }
                segment_sigma_length(&pts[0], &pts[1], &f.normal)
            };
            let mut acc = 0.0;
            for win in breaks.windows(2) {
                let (t0, t1) = (&win[0], &win[1]);
                let third = (t1 - t0) / rat_int(3);
                let ta = t0 + &third;
                let tb = t0 + &third * rat_int(2);
                let ma = chord(&ta);
                let mb = chord(&tb);
                let beta = (&mb - &ma) / (&tb - &ta);
                let alpha = &ma - &beta * &ta;
                let (a, b) = (to_f64(&alpha), to_f64(&beta));
                let (x0, x1) = (to_f64(t0), to_f64(t1));
                let prim = |x: f64| -> f64 {
                    if x <= 0.0 {
                        return 0.0;
                    }
                    match kind {
                        LogKind::Log => {
                            a * (x * x.ln() - x) + b * (x * x / 2.0 * x.ln() - x * x / 4.0)
                        }
                        LogKind::TLogT => {
                            a * (x * x / 2.0 * x.ln() - x * x / 4.0)
                                + b * (x * x * x / 3.0 * x.ln() - x * x * x / 9.0)
                        }
                    }
                };
                acc += prim(x1) - prim(x0);
            }
            acc
        }
        _ => unreachable!(),
    }
}

/// ∫_{facet j} u dσ with panels graded toward the corners (the non-vanishing
/// canonical terms behave like t log t there).
fn boundary_potential_integral(u: &SymplecticPotential, j: usize) -> f64 {
    let poly = &u.polytope;
    let fv = &poly.facet_vertices[j];
    let value = |x: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (k, fct) in poly.facets.iter().enumerate() {
            if k == j {
                continue; // δ_j log δ_j vanishes on its own facet
            }
            let d = fct.delta_f64(x);
            if d > 0.0 {
                acc += u.canonical_coefficient * d * d.ln();
            }
        }
        acc + u.correction.eval_deriv(x, &vec![0u32; poly.dim])
    };
    match poly.dim {
        1 => {
            let v: Vec<f64> = poly.vertices[fv[0]].iter().map(to_f64).collect();
            value(&v)
        }
        2 => {
            let p: Vec<f64> = poly.vertices[fv[0]].iter().map(to_f64).collect();
            let q: Vec<f64> = poly.vertices[fv[1]].iter().map(to_f64).collect();
            let sigma = to_f64(&segment_sigma_length(
                &poly.vertices[fv[0]],
                &poly.vertices[fv[1]],
                &poly.facets[j].normal,
            ));
            let rule = crate::quad1d::Rule1D::graded_gauss(10, 40, 0.0, 1.0);
            sigma
                * rule.integrate(|t| {
                    let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                    value(&x)
                })
        }
        _ => unreachable!(),
    }
}

/// Weight spectrum of a test configuration at level k: B_k(α) = k f(α/k) on
/// α ∈ Z^n ∩ kP (exact, integral after clearing denominators) and its
/// traceless part A_k.
#[derive(Debug, Clone)]
pub struct WeightSpectrum {
    pub k: u64,
    pub lattice: Vec<Vec<i64>>,
    pub b_entries: Vec<BigInt>,
    /// denominator cleared from k f(α/k); recorded scaling of f
    pub scale: BigInt,
    /// A_k(α) = B_k(α) - tr/(N_k+1), in the scaled units
    pub a_entries: Vec<f64>,
}

impl WeightSpectrum {
    pub fn trace(&self) -> BigInt {
        self.b_entries.iter().cloned().sum()
    }

    pub fn count(&self) -> usize {
        self.b_entries.len()
    }

    /// Hilbert-Schmidt norm of A_k in the unscaled units.
    pub fn a_norm(&self) -> f64 {
        let scale = self.scale.to_f64().unwrap();
        (self.a_entries.iter().map(|a| a * a).sum::<f64>()).sqrt() / scale
    }

    /// Trace B_k / (k (N_k+1)) in the unscaled units.
    pub fn normalized_trace(&self) -> f64 {
        let tr = Rat::new(self.trace(), self.scale.clone());
        to_f64(&tr) / (self.k as f64 * self.count() as f64)
    }
}

pub fn weights_from_pl(
    poly: &Polytope,
    f: &PLConvexFunction,
    k: u64,
) -> Result<WeightSpectrum, StabilityError> {
    let lattice = poly.lattice_points(k)?;
    let kr = rat_int(k as i64);
    let values: Vec<Rat> = lattice
        .iter()
        .map(|alpha| {
            let x: Vec<Rat> = alpha.iter().map(|&a| rat_int(a) / kr.clone()).collect();
            kr.clone() * f.eval_exact(&x)
        })
        .collect();
    let mut scale = BigInt::from(1);
    for v in &values {
        scale = num::integer::lcm(scale, v.denom().clone());
    }
    let b_entries: Vec<BigInt> = values
        .iter()
        .map(|v| (v * Rat::from_integer(scale.clone())).to_integer())
        .collect();
    let n_total = b_entries.len() as f64;
    let tr: BigInt = b_entries.iter().cloned().sum();
    let mean = tr.to_f64().unwrap() / n_total;
    let a_entries: Vec<f64> = b_entries
        .iter()
        .map(|b| b.to_f64().unwrap() - mean)
        .collect();
    Ok(WeightSpectrum {
        k,
        lattice,
        b_entries,
        scale,
        a_entries,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FutakiWeightReport {
    pub k_values: Vec<u64>,
    pub normalized_traces: Vec<f64>,
    /// F(α): minus the fitted 1/k coefficient of Trace B_k / (k (N_k+1))
    pub f_est: f64,
    pub f0_est: f64,
    pub fit_residual: f64,
    /// exact polytope Futaki F(f)
    pub f_polytope: f64,
    /// the calibrated contract F_est = -F(f) / (2 Vol)
    pub predicted_f_est: f64,
    pub relative_gap: f64,
}

/// Fit Trace B_k/(k(N_k+1)) = F0 - F(α)/k + c/k² over k_list and cross-check
/// the fitted F(α) against the polytope formula through the factor -1/(2 Vol)
/// (sign and factor pinned once on ([0,1], |x - 1/2|)).
pub fn futaki_from_weights(
    poly: &Polytope,
    f: &PLConvexFunction,
    k_list: &[u64],
) -> Result<FutakiWeightReport, StabilityError> {
    let mut ks: Vec<u64> = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() < 3 || ks.iter().any(|&k| k < 2) {
        return Err(StabilityError::InsufficientData);
    }
    let mut traces = Vec::with_capacity(ks.len());
    for &k in &ks {
        traces.push(weights_from_pl(poly, f, k)?.normalized_trace());
    }
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let (coef, resid) = fit_in_inverse_powers(&kf, &traces, true);
    let f_est = -coef[1];
    let f_polytope = to_f64(&futaki_pl(poly, f));
    let vol = poly.volume();
    let predicted = -f_polytope / (2.0 * vol);
    let denom = predicted.abs().max(1e-12);
    Ok(FutakiWeightReport {
        k_values: ks,
        normalized_traces: traces,
        f_est,
        f0_est: coef[0],
        fit_residual: resid,
        f_polytope,
        predicted_f_est: predicted,
        relative_gap: (f_est - predicted).abs() / denom,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DtNormReport {
    pub k_values: Vec<u64>,
    pub normalized_norms: Vec<f64>,
    /// D(T) = lim ||A_k|| / k^{n/2+1}
    pub d: f64,
    pub fit_residual: f64,
    /// exact Vol·var_P(f) = ∫ f² - (∫ f)²/Vol
    pub variance_oracle: f64,
    pub relative_gap: f64,
}

/// D(T) by extrapolating ||A_k||/k^{n/2+1} in 1/k; exact consistency oracle
/// D² = ∫_P f² dx - (∫_P f dx)²/Vol from the PL integrals.
pub fn dt_norm(
    poly: &Polytope,
    f: &PLConvexFunction,
    k_list: &[u64],
) -> Result<DtNormReport, StabilityError> {
    let mut ks: Vec<u64> = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() < 3 || ks.iter().any(|&k| k < 2) {
        return Err(StabilityError::InsufficientData);
    }
    let n = poly.dim as f64;
    let mut norms = Vec::with_capacity(ks.len());
    for &k in &ks {
        let ws = weights_from_pl(poly, f, k)?;
        norms.push(ws.a_norm() / (k as f64).powf(n / 2.0 + 1.0));
    }
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let (coef, resid) = fit_in_inverse_powers(&kf, &norms, true);
    let d = coef[0];
    let int_f = integral_pl_exact(poly, f);
    let int_f2 = integral_pl_sq_exact(poly, f);
    let vol = poly.volume_exact();
    let var = to_f64(&(int_f2 - &int_f * &int_f / vol));
    Ok(DtNormReport {
        k_values: ks,
        normalized_norms: norms,
        d,
        fit_residual: resid,
        variance_oracle: var,
        relative_gap: if var > 1e-14 {
            (d * d - var).abs() / var
        } else {
            d.abs()
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CalabiBoundReport {
    pub f_est: f64,
    pub d: f64,
    /// lower bound for inf ||R - R̄||_{L²}: F_est/D, i.e. -F_{D02}(T)/D(T) in
    /// the sign convention fixed by `futaki_from_weights`
    pub bound: f64,
    pub active: bool,
}

/// Donaldson's Calabi-energy lower bound datum for one test configuration.
pub fn calabi_lower_bound(
    poly: &Polytope,
    f: &PLConvexFunction,
    k_list: &[u64],
) -> Result<CalabiBoundReport, StabilityError> {
    let var = {
        let int_f = integral_pl_exact(poly, f);
        let int_f2 = integral_pl_sq_exact(poly, f);
        let vol = poly.volume_exact();
        int_f2 - &int_f * &int_f / vol
    };
    if !var.is_positive() {
        return Err(StabilityError::DegenerateConfiguration);
    }
    let fr = futaki_from_weights(poly, f, k_list)?;
    let dr = dt_norm(poly, f, k_list)?;
    if dr.d <= 1e-12 {
        return Err(StabilityError::DegenerateConfiguration);
    }
    let bound = fr.f_est / dr.d;
    Ok(CalabiBoundReport {
        f_est: fr.f_est,
        d: dr.d,
        bound,
        active: bound > 0.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DestabilizerReport {
    pub tested: usize,
    pub skipped_degenerate: usize,
    pub min_normalized_futaki: f64,
    pub best_normal: Vec<String>,
    pub best_offset: String,
    pub destabilizer_found: bool,
    /// F on the coordinate affine functions (the classical Futaki character,
    /// printed, not asserted to vanish)
    pub affine_futaki: Vec<f64>,
}

/// Scan simple creases f = max(0, <a,x> + b) over a finite grid, scoring by
/// F(f) / ||f - mean(f)||_{L²(P, dx)}.
pub fn destabilizer_search(
    poly: &Polytope,
    normals: &[Vec<Rat>],
    offsets: &[Rat],
) -> DestabilizerReport {
    let vol = poly.volume_exact();
    let mut best = f64::INFINITY;
    let mut best_normal: Vec<Rat> = vec![];
    let mut best_offset = Rat::zero();
    let mut tested = 0usize;
    let mut skipped = 0usize;
    for a in normals {
        for b in offsets {
            let f = PLConvexFunction::crease(a.clone(), b.clone());
            let int_f = integral_pl_exact(poly, &f);
            let int_f2 = integral_pl_sq_exact(poly, &f);
            let var = &int_f2 - &int_f * &int_f / &vol;
            let var_f = to_f64(&var);
            if var_f < 1e-14 {
                skipped += 1; // crease misses P: degenerates to the affine case
                continue;
            }
            tested += 1;
            let score = to_f64(&futaki_pl(poly, &f)) / var_f.sqrt();
            if score < best {
                best = score;
                best_normal = a.clone();
                best_offset = b.clone();
            }
        }
    }
    let affine_futaki: Vec<f64> = (0..poly.dim)
        .map(|i| {
            let mut a = vec![Rat::zero(); poly.dim];
            a[i] = rat_int(1);
            let f = PLConvexFunction::new(vec![(a, Rat::zero())]);
            to_f64(&futaki_pl(poly, &f))
        })
        .collect();
    DestabilizerReport {
        tested,
        skipped_degenerate: skipped,
        min_normalized_futaki: best,
        best_normal: best_normal.iter().map(crate::rational::format_rat).collect(),
        best_offset: crate::rational::format_rat(&best_offset),
        destabilizer_found: best <= 0.0,
        affine_futaki,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{build_polytope, HalfSpace};
    use crate::potentials::guillemin_potential;
    use crate::rational::rat;
    use std::sync::Arc;

    fn interval() -> Polytope {
        build_polytope(
            1,
            vec![
                HalfSpace::new(vec![1], rat_int(0)),
                HalfSpace::new(vec![-1], rat_int(1)),
            ],
        )
        .unwrap()
    }

    fn simplex2() -> Polytope {
        build_polytope(
            2,
            vec![
                HalfSpace::new(vec![1, 0], rat_int(0)),
                HalfSpace::new(vec![0, 1], rat_int(0)),
                HalfSpace::new(vec![-1, -1], rat_int(1)),
            ],
        )
        .unwrap()
    }

    fn square() -> Polytope {
        build_polytope(
            2,
            vec![
                HalfSpace::new(vec![1, 0], rat_int(0)),
                HalfSpace::new(vec![0, 1], rat_int(0)),
                HalfSpace::new(vec![-1, 0], rat_int(1)),
                HalfSpace::new(vec![0, -1], rat_int(1)),
            ],
        )
        .unwrap()
    }

    fn vee() -> PLConvexFunction {
        PLConvexFunction::new(vec![
            (vec![rat_int(-1)], rat(1, 2)),
            (vec![rat_int(1)], rat(-1, 2)),
        ])
    }

    #[test]
    fn futaki_affine_on_interval_is_zero() {
        let p = interval();
        let f = PLConvexFunction::new(vec![(vec![rat_int(1)], rat_int(0))]);
        assert_eq!(futaki_pl(&p, &f), rat_int(0));
    }

    #[test]
    fn futaki_vee_is_half() {
        assert_eq!(futaki_pl(&interval(), &vee()), rat(1, 2));
    }

    #[test]
    fn futaki_constant_is_zero_everywhere() {
        for p in [interval(), simplex2(), square()] {
            let f = PLConvexFunction::constant(p.dim, rat_int(1));
            assert_eq!(futaki_pl(&p, &f), rat_int(0));
        }
    }

    #[test]
    fn futaki_linear_in_f() {
        let p = square();
        let f = PLConvexFunction::crease(vec![rat_int(1), rat_int(1)], rat(-1, 2));
        let g = PLConvexFunction::crease(vec![rat_int(1), rat_int(0)], rat(-1, 3));
        // homogeneity
        assert_eq!(futaki_pl(&p, &f.scale(&rat_int(3))), rat_int(3) * futaki_pl(&p, &f));
        // additivity via the exact PL sum
        let s = f.sum(&g);
        assert_eq!(futaki_pl(&p, &s), futaki_pl(&p, &f) + futaki_pl(&p, &g));
    }

    #[test]
    fn pl_integrals_exact_on_square() {
        let p = square();
        let f = PLConvexFunction::crease(vec![rat_int(1), rat_int(0)], rat(-1, 2));
        assert_eq!(integral_pl_exact(&p, &f), rat(1, 8));
        assert_eq!(integral_pl_sq_exact(&p, &f), rat(1, 24));
        assert_eq!(
            boundary_integral_pl_exact(&p, &f),
            rat(1, 8) + rat(1, 8) + rat(1, 2)
        );
    }

    #[test]
    fn futaki_invariant_under_functions_vanishing_on_p() {
        // adding a piece that is never maximal on P changes nothing
        let p = interval();
        let mut f = vee();
        f.pieces.push((vec![rat_int(3)], rat_int(-3))); // 3x - 3 < |x-1/2| on [0,1]
        assert_eq!(futaki_pl(&p, &f), rat(1, 2));
    }

    #[test]
    fn weights_on_interval_linear() {
        let p = interval();
        let f = PLConvexFunction::new(vec![(vec![rat_int(1)], rat_int(0))]);
        let ws = weights_from_pl(&p, &f, 3).unwrap();
        assert_eq!(ws.count(), 4);
        let b: Vec<i64> = ws.b_entries.iter().map(|b| b.to_i64().unwrap()).collect();
        assert_eq!(b, vec![0, 1, 2, 3]);
        assert_eq!(ws.trace(), BigInt::from(6));
        assert!((ws.a_entries[0] + 1.5).abs() < 1e-12);
        assert!((ws.a_entries[3] - 1.5).abs() < 1e-12);
        assert!(ws.a_entries.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn weights_vee_k2() {
        let ws = weights_from_pl(&interval(), &vee(), 2).unwrap();
        let b: Vec<i64> = ws.b_entries.iter().map(|b| b.to_i64().unwrap()).collect();
        assert_eq!(ws.scale, BigInt::from(1));
        assert_eq!(b, vec![1, 0, 1]);
    }

    #[test]
    fn constant_config_weights_are_traceless_zero() {
        let ws = weights_from_pl(&interval(), &PLConvexFunction::constant(1, rat_int(2)), 4)
            .unwrap();
        assert!(ws.a_entries.iter().all(|a| a.abs() < 1e-12));
        assert!(ws.a_norm() < 1e-12);
    }

    #[test]
    fn futaki_weights_cross_check_interval_vee() {
        let r = futaki_from_weights(&interval(), &vee(), &[4, 8, 16, 32, 64]).unwrap();
        // exact: T_k = 1/4 + 1/(4(k+1)); F(α) = -1/4 = -F(f)/(2 Vol)
        assert!((r.predicted_f_est + 0.25).abs() < 1e-12);
        assert!(r.relative_gap < 0.02, "gap {}", r.relative_gap);
    }

    #[test]
    fn futaki_weights_affine_is_zero() {
        let p = interval();
        let f = PLConvexFunction::new(vec![(vec![rat_int(1)], rat_int(0))]);
        let r = futaki_from_weights(&p, &f, &[4, 8, 16, 32, 64]).unwrap();
        assert!(r.f_est.abs() < 1e-3, "f_est = {}", r.f_est);
    }

    #[test]
    fn futaki_weights_constant_trace_exact() {
        let p = interval();
        let f = PLConvexFunction::constant(1, rat_int(1));
        let r = futaki_from_weights(&p, &f, &[4, 8, 16, 32]).unwrap();
        for (k, t) in r.k_values.iter().zip(&r.normalized_traces) {
            assert!((t - 1.0 / *k as f64).abs() < 1e-12);
        }
        assert!((r.f_est + 1.0).abs() < 1e-6);
    }

    #[test]
    fn insufficient_data_detected() {
        assert!(matches!(
            futaki_from_weights(&interval(), &vee(), &[4, 8]),
            Err(StabilityError::InsufficientData)
        ));
        assert!(matches!(
            dt_norm(&interval(), &vee(), &[1, 4, 8]),
            Err(StabilityError::InsufficientData)
        ));
    }

    #[test]
    fn dt_norm_linear_on_interval() {
        let p = interval();
        let f = PLConvexFunction::new(vec![(vec![rat_int(1)], rat_int(0))]);
        let r = dt_norm(&p, &f, &[8, 16, 32, 64]).unwrap();
        assert!((r.variance_oracle - 1.0 / 12.0).abs() < 1e-14);
        assert!(
            (r.d * r.d - 1.0 / 12.0).abs() / (1.0 / 12.0) < 0.02,
            "D^2 = {}",
            r.d * r.d
        );
    }

    #[test]
    fn dt_norm_vee_and_scaling() {
        let p = interval();
        let r = dt_norm(&p, &vee(), &[8, 16, 32, 64]).unwrap();
        assert!((r.variance_oracle - 1.0 / 48.0).abs() < 1e-14);
        assert!((r.d * r.d - 1.0 / 48.0).abs() / (1.0 / 48.0) < 0.02);
        let r3 = dt_norm(&p, &vee().scale(&rat_int(3)), &[8, 16, 32, 64]).unwrap();
        assert!((r3.d - 3.0 * r.d).abs() < 0.06 * r.d.abs());
    }

    #[test]
    fn calabi_bound_vacuous_on_stable_interval() {
        let p = interval();
        let r = calabi_lower_bound(&p, &vee(), &[8, 16, 32, 64]).unwrap();
        assert!(r.bound <= 0.0, "bound {}", r.bound);
        assert!(!r.active);
        assert!(matches!(
            calabi_lower_bound(&p, &PLConvexFunction::constant(1, rat_int(5)), &[8, 16, 32]),
            Err(StabilityError::DegenerateConfiguration)
        ));
    }

    #[test]
    fn destabilizer_scan_finds_none_on_interval() {
        let p = interval();
        let normals: Vec<Vec<Rat>> = vec![vec![rat_int(1)], vec![rat_int(-1)]];
        let offsets: Vec<Rat> = (1..51).map(|i| rat(i, 51) - rat(1, 2)).collect();
        let rep = destabilizer_search(&p, &normals, &offsets);
        assert!(rep.tested >= 100 - 10);
        assert!(rep.min_normalized_futaki > 0.0);
        assert!(!rep.destabilizer_found);
        assert!(rep.affine_futaki[0].abs() < 1e-12);
    }

    #[test]
    fn destabilizer_scan_finds_none_on_simplex() {
        let p = simplex2();
        let mut normals = Vec::new();
        for i in -2i64..=2 {
            for j in -2i64..=2 {
                if i != 0 || j != 0 {
                    normals.push(vec![rat_int(i), rat_int(j)]);
                }
            }
        }
        let offsets: Vec<Rat> = (-4..=4).map(|i| rat(i, 4)).collect();
        let rep = destabilizer_search(&p, &normals, &offsets);
        assert!(rep.tested >= 150);
        assert!(
            rep.min_normalized_futaki > 0.0,
            "min {}",
            rep.min_normalized_futaki
        );
    }

    #[test]
    fn crease_outside_polytope_degenerates_to_affine() {
        let p = interval();
        let f = PLConvexFunction::crease(vec![rat_int(1)], rat_int(-2));
        assert_eq!(futaki_pl(&p, &f), rat_int(0));
        assert_eq!(f.simplify(&p).pieces.len(), 1);
    }

    #[test]
    fn k_energy_guillemin_interval() {
        // hand value: -∫ log det u0'' dx = ∫ (log x + log(1-x)) dx = -2;
        // F(u0) = -2 ∫ u0 + 0 = -2 · 2(-1/4) · ... = 1; so K(u0) = -1
        let u = guillemin_potential(Arc::new(interval()));
        let k = toric_k_energy(&u, 16).unwrap();
        assert!((k + 1.0).abs() < 1e-10, "K = {k}");
    }

    #[test]
    fn k_energy_affine_invariance_on_interval() {
        let poly = Arc::new(interval());
        let u0 = guillemin_potential(poly.clone());
        let u1 = SymplecticPotential::with_correction(
            poly,
            crate::potentials::PolyND {
                terms: vec![(vec![1], 0.7), (vec![0], -0.3)],
            },
        );
        let k0 = toric_k_energy(&u0, 16).unwrap();
        let k1 = toric_k_energy(&u1, 16).unwrap();
        assert!((k0 - k1).abs() < 1e-9, "{k0} vs {k1}");
    }

    #[test]
    fn k_energy_zero_correction_recovers_guillemin() {
        let poly = Arc::new(interval());
        let u0 = guillemin_potential(poly.clone());
        let u1 = SymplecticPotential::with_correction(poly, crate::potentials::PolyND::zero());
        let k0 = toric_k_energy(&u0, 14).unwrap();
        let k1 = toric_k_energy(&u1, 14).unwrap();
        assert!((k0 - k1).abs() < 1e-12);
    }

    #[test]
    fn k_energy_guillemin_simplex_hand_value() {
        // det u_ij · x y δ = 1 identically, so the quadrature remainder
        // vanishes; closed forms: ∫_P log x dx = -3/4 (three facets),
        // ∫ u0 = 3 ∫_P x log x dx = -5/12, ∫_∂P u0 dσ = 3(-1/2);
        // K = 3(-3/4) + (-6)(-5/12) - 3/2 = -9/4 + 5/2 - 3/2 = -5/4
        let u = guillemin_potential(Arc::new(simplex2()));
        let k = toric_k_energy(&u, 16).unwrap();
        assert!((k + 1.25).abs() < 1e-9, "K = {k}");
    }
}
