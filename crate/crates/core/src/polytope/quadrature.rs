//! Interior and facet quadrature on a Delzant polytope.
//!
//! The interior rule decomposes the polytope into simplices by coning the
//! triangulated facets over the vertex barycenter, then maps product
//! Gauss-Legendre rules through the Duffy transform. Facet rules use the same
//! construction one dimension down, with weights normalized so the rule
//! integrates against dσ (Euclidean measure divided by the facet normal length,
//! equivalently dσ ∧ dδ_k = ±dx).

use super::{HalfSpace, Polytope};
use crate::quad1d::gauss_legendre;
use crate::rational::{rat_int, to_f64, Rat};
use num::traits::Zero;

/// Quadrature nodes and weights for the interior and each facet of a polytope.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    pub interior_nodes: Vec<Vec<f64>>,
    pub interior_weights: Vec<f64>,
    /// one (nodes, weights) pair per facet, weights normalized against dσ
    pub facet_nodes: Vec<Vec<Vec<f64>>>,
    pub facet_weights: Vec<Vec<f64>>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.interior_nodes
            .iter()
            .zip(&self.interior_weights)
            .map(|(x, &w)| w * f(x))
            .sum()
    }

    pub fn integrate_facet(&self, k: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.facet_nodes[k]
            .iter()
            .zip(&self.facet_weights[k])
            .map(|(x, &w)| w * f(x))
            .sum()
    }

    pub fn integrate_boundary(&self, f: impl Fn(&[f64], usize) -> f64) -> f64 {
        (0..self.facet_nodes.len())
            .map(|k| self.integrate_facet(k, |x| f(x, k)))
            .sum()
    }

    pub fn volume(&self) -> f64 {
        self.interior_weights.iter().sum()
    }

    pub fn facet_sigma(&self, k: usize) -> f64 {
        self.facet_weights[k].iter().sum()
    }

    pub fn sigma_total(&self) -> f64 {
        (0..self.facet_weights.len())
            .map(|k| self.facet_sigma(k))
            .sum()
    }
}

/// A simplex with exact rational vertices (dim+1 of them).
pub(super) struct Simplex(pub Vec<Vec<Rat>>);

pub(super) fn simplex_volume_exact(s: &Simplex) -> Rat {
    let n = s.0[0].len();
    let rows: Vec<Vec<Rat>> = (1..=n)
        .map(|i| (0..n).map(|j| &s.0[i][j] - &s.0[0][j]).collect())
        .collect();
    let mut det = crate::rational::det_exact(&rows);
    if num::traits::Signed::is_negative(&det) {
        det = -det;
    }
    let mut fact = rat_int(1);
    for i in 1..=n {
        fact *= rat_int(i as i64);
    }
    det / fact
}

/// Cone the triangulated facets over the vertex barycenter.
pub(super) fn decompose_simplices(poly: &Polytope) -> Vec<Simplex> {
    let n = poly.dim;
    if n == 1 {
        return vec![Simplex(poly.vertices.clone())];
    }
    let bary: Vec<Rat> = {
        let count = rat_int(poly.vertices.len() as i64);
        (0..n)
            .map(|i| {
                poly.vertices
                    .iter()
                    .map(|v| v[i].clone())
                    .sum::<Rat>()
                    / count.clone()
            })
            .collect()
    };
    let mut out = Vec::new();
    for fv in &poly.facet_vertices {
        for tri in triangulate_facet(fv) {
            let mut verts = vec![bary.clone()];
            verts.extend(tri.iter().map(|&i| poly.vertices[i].clone()));
            out.push(Simplex(verts));
        }
    }
    out
}

/// Fan-triangulate an ordered facet vertex cycle into (n-1)-simplices.
fn triangulate_facet(fv: &[usize]) -> Vec<Vec<usize>> {
    if fv.len() <= 2 {
        return vec![fv.to_vec()];
    }
    (1..fv.len() - 1)
        .map(|i| vec![fv[0], fv[i], fv[i + 1]])
        .collect()
}

/// Gauss points per axis so the Duffy-mapped product rule is exact for total
/// degree `order` polynomials (jacobian degree included).
fn duffy_points(order: usize, dim: usize) -> usize {
    ((order + dim) / 2 + 1).max(2)
}

/// Map a product Gauss rule on [0,1]^d through the Duffy transform onto the
/// standard simplex, then affinely onto `verts` (d+1 points in R^ambient).
/// Returns nodes and weights against d-dimensional measure scaled by `measure`
/// (the simplex measure; the reference simplex has measure 1/d!).
fn simplex_rule(
    verts: &[Vec<f64>],
    order: usize,
    measure: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = verts.len() - 1;
    let ambient = verts[0].len();
    if d == 0 {
        return (vec![verts[0].clone()], vec![measure]);
    }
    let q = duffy_points(order, d);
    let (gx, gw) = gauss_legendre(q);
    let gx: Vec<f64> = gx.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let gw: Vec<f64> = gw.iter().map(|t| 0.5 * t).collect();

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        // Duffy: u_j = s_j * prod_{i<j} (1 - s_i); jacobian prod (1-s_j)^(d-1-j)
        let mut u = vec![0.0; d];
        let mut jac = 1.0;
        let mut prefix = 1.0;
        for j in 0..d {
            let s = gx[idx[j]];
            u[j] = s * prefix;
            jac *= prefix;
            prefix *= 1.0 - s;
        }
        let mut w = jac;
        for j in 0..d {
            w *= gw[idx[j]];
        }
        // barycentric point: v0 + sum u_j (v_{j+1} - v0)
        let mut x = verts[0].clone();
        for j in 0..d {
            for a in 0..ambient {
                x[a] += u[j] * (verts[j + 1][a] - verts[0][a]);
            }
        }
        nodes.push(x);
        // reference simplex has volume 1/d!; product-rule covers it with weight sum 1/d!
        weights.push(w * measure * factorial(d));
        if !advance(&mut idx, q) {
            break;
        }
    }
    (nodes, weights)
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|i| i as f64).product::<f64>().max(1.0)
}

fn advance(idx: &mut [usize], q: usize) -> bool {
    for slot in idx.iter_mut() {
        *slot += 1;
        if *slot < q {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Euclidean measure of a d-simplex embedded in R^n: sqrt(det(E^T E)) / d!.
fn embedded_measure(verts: &[Vec<Rat>]) -> f64 {
    let d = verts.len() - 1;
    if d == 0 {
        return 1.0;
    }
    let n = verts[0].len();
    let e: Vec<Vec<f64>> = (1..=d)
        .map(|i| (0..n).map(|j| to_f64(&(&verts[i][j] - &verts[0][j]))).collect())
        .collect();
    let mut g = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            g[i][j] = (0..n).map(|a| e[i][a] * e[j][a]).sum();
        }
    }
    let det = match d {
        1 => g[0][0],
        2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
        _ => nalgebra::DMatrix::from_fn(d, d, |i, j| g[i][j]).determinant(),
    };
    det.max(0.0).sqrt() / factorial(d)
}

/// Exact sigma-measure of facet k (lattice-normalized).
pub(super) fn facet_sigma_exact(poly: &Polytope, k: usize) -> Rat {
    let fv = &poly.facet_vertices[k];
    match poly.dim {
        1 => rat_int(1), // primitive normal in 1-D has |l| = 1
        2 => crate::polytope::exact::segment_sigma_length(
            &poly.vertices[fv[0]],
            &poly.vertices[fv[1]],
            &poly.facets[k].normal,
        ),
        _ => {
            // fall back through the float rule; exactness only claimed for n <= 2
            let f = &poly.facets[k];
            let mut total = 0.0;
            for tri in triangulate_facet(fv) {
                let verts: Vec<Vec<Rat>> =
                    tri.iter().map(|&i| poly.vertices[i].clone()).collect();
                total += embedded_measure(&verts) / f.norm_f64();
            }
            crate::rational::Rat::from_float(total).unwrap_or_else(Rat::zero)
        }
    }
}

pub(super) fn build(poly: &Polytope, order: usize) -> QuadratureRule {
    assert!(order >= 1);
    let mut interior_nodes = Vec::new();
    let mut interior_weights = Vec::new();
    for s in decompose_simplices(poly) {
        let measure = to_f64(&simplex_volume_exact(&s));
        let verts: Vec<Vec<f64>> = s.0.iter().map(|v| v.iter().map(to_f64).collect()).collect();
        let (n, w) = simplex_rule(&verts, order, measure);
        interior_nodes.extend(n);
        interior_weights.extend(w);
    }

    let mut facet_nodes = Vec::new();
    let mut facet_weights = Vec::new();
    for (k, f) in poly.facets.iter().enumerate() {
        let fv = &poly.facet_vertices[k];
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        if poly.dim == 1 {
            nodes.push(poly.vertices[fv[0]].iter().map(to_f64).collect::<Vec<_>>());
            weights.push(1.0); // point mass 1/|l| with |l| = 1
        } else {
            for tri in triangulate_facet(fv) {
                let verts: Vec<Vec<Rat>> =
                    tri.iter().map(|&i| poly.vertices[i].clone()).collect();
                let measure = if poly.dim == 2 {
                    to_f64(&crate::polytope::exact::segment_sigma_length(
                        &verts[0], &verts[1], &f.normal,
                    ))
                } else {
                    embedded_measure(&verts) / f.norm_f64()
                };
                let vf: Vec<Vec<f64>> =
                    verts.iter().map(|v| v.iter().map(to_f64).collect()).collect();
                let (n, w) = simplex_rule(&vf, order, measure);
                nodes.extend(n);
                weights.extend(w);
            }
        }
        facet_nodes.push(nodes);
        facet_weights.push(weights);
    }

    QuadratureRule {
        order,
        interior_nodes,
        interior_weights,
        facet_nodes,
        facet_weights,
    }
}
