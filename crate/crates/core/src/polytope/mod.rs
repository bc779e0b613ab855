//! Delzant polytopes: exact vertex enumeration, Delzant and boundedness checks,
//! the lattice-normalized boundary measure dσ, quadrature, and lattice points.
//!
//! All combinatorial geometry is done in exact rational arithmetic; floating
//! point enters only through quadrature nodes and weights.

mod exact;
mod quadrature;

pub use exact::{clip_polygon, polygon_area, polygon_centroid, segment_sigma_length};
pub use quadrature::QuadratureRule;

use crate::rational::{det_exact, rat_int, solve_exact, to_f64, Rat};
use num::traits::{Signed, ToPrimitive, Zero};
use num::BigInt;
use thiserror::Error;

/// A closed half-space `<normal, x> + offset >= 0` with primitive integer normal.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<i64>,
    pub offset: Rat,
}

impl HalfSpace {
    pub fn new(normal: Vec<i64>, offset: Rat) -> Self {
        HalfSpace { normal, offset }
    }

    /// delta_k(x) = <l_k, x> + c_k, exact.
    pub fn delta(&self, x: &[Rat]) -> Rat {
        let mut acc = self.offset.clone();
        for (l, xi) in self.normal.iter().zip(x) {
            acc += Rat::from_integer(BigInt::from(*l)) * xi;
        }
        acc
    }

    pub fn delta_f64(&self, x: &[f64]) -> f64 {
        let mut acc = to_f64(&self.offset);
        for (l, xi) in self.normal.iter().zip(x) {
            acc += *l as f64 * xi;
        }
        acc
    }

    pub fn norm_f64(&self) -> f64 {
        self.normal
            .iter()
            .map(|&l| (l as f64) * (l as f64))
            .sum::<f64>()
            .sqrt()
    }

    fn is_primitive(&self) -> bool {
        let mut g: u64 = 0;
        for &l in &self.normal {
            g = gcd(g, l.unsigned_abs());
        }
        g == 1
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("facet {index} has non-primitive or zero normal {normal:?}")]
    NonPrimitiveNormal { index: usize, normal: Vec<i64> },
    #[error("polytope is unbounded (recession direction {direction:?})")]
    Unbounded { direction: Vec<String> },
    #[error("polytope has empty interior")]
    EmptyInterior,
    #[error("polytope is not Delzant at vertex {vertex:?}: {reason}")]
    NotDelzant { vertex: Vec<String>, reason: String },
    #[error("facet {index} has zero (n-1)-measure")]
    DegenerateFacet { index: usize },
    #[error("polytope does not have integral vertices (vertex {vertex:?})")]
    NonLatticePolytope { vertex: Vec<String> },
    #[error("dimension must be >= 1 and facet list nonempty")]
    BadInput,
}

fn fmt_vertex(v: &[Rat]) -> Vec<String> {
    v.iter().map(crate::rational::format_rat).collect()
}

/// A Delzant polytope presented as an intersection of half-spaces, with exact
/// vertices and per-facet vertex incidences cached at construction.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub dim: usize,
    pub facets: Vec<HalfSpace>,
    pub vertices: Vec<Vec<Rat>>,
    /// indices into `vertices` for each facet, in facet-boundary order for n = 2
    pub facet_vertices: Vec<Vec<usize>>,
}

/// Enumerate vertices and verify the Delzant invariants.
pub fn build_polytope(dim: usize, facets: Vec<HalfSpace>) -> Result<Polytope, PolytopeError> {
    if dim == 0 || facets.is_empty() {
        return Err(PolytopeError::BadInput);
    }
    for (i, f) in facets.iter().enumerate() {
        if f.normal.len() != dim || !f.is_primitive() {
            return Err(PolytopeError::NonPrimitiveNormal {
                index: i,
                normal: f.normal.clone(),
            });
        }
    }
    if let Some(dir) = recession_direction(dim, &facets) {
        return Err(PolytopeError::Unbounded {
            direction: fmt_vertex(&dir),
        });
    }

    // vertex enumeration over all n-subsets of facets
    let m = facets.len();
    let mut vertices: Vec<Vec<Rat>> = Vec::new();
    let mut subset = vec![0usize; dim];
    enumerate_subsets(m, dim, &mut subset, 0, 0, &mut |idx: &[usize]| {
        let a: Vec<Vec<Rat>> = idx
            .iter()
            .map(|&i| {
                facets[i]
                    .normal
                    .iter()
                    .map(|&l| rat_int(l))
                    .collect::<Vec<_>>()
            })
            .collect();
        let b: Vec<Rat> = idx.iter().map(|&i| -facets[i].offset.clone()).collect();
        if let Some(x) = solve_exact(&a, &b) {
            let feasible = facets.iter().all(|f| !f.delta(&x).is_negative());
            if feasible && !vertices.contains(&x) {
                vertices.push(x);
            }
        }
    });
    if vertices.is_empty() {
        return Err(PolytopeError::EmptyInterior);
    }

    // Delzant check at each vertex: exactly n active facets forming a lattice basis
    for v in &vertices {
        let active: Vec<usize> = (0..m).filter(|&i| facets[i].delta(v).is_zero()).collect();
        if active.len() != dim {
            return Err(PolytopeError::NotDelzant {
                vertex: fmt_vertex(v),
                reason: format!("{} facets meet (need {})", active.len(), dim),
            });
        }
        let mat: Vec<Vec<Rat>> = active
            .iter()
            .map(|&i| facets[i].normal.iter().map(|&l| rat_int(l)).collect())
            .collect();
        let d = det_exact(&mat);
        if d.abs() != rat_int(1) {
            return Err(PolytopeError::NotDelzant {
                vertex: fmt_vertex(v),
                reason: format!("normals have determinant {}", crate::rational::format_rat(&d)),
            });
        }
    }

    // interior nonempty: vertex barycenter strictly inside
    let bary = barycenter(&vertices);
    if facets.iter().any(|f| !f.delta(&bary).is_positive()) {
        return Err(PolytopeError::EmptyInterior);
    }

    // facet incidences; every facet needs an (n-1)-dimensional vertex set
    let mut facet_vertices = Vec::with_capacity(m);
    for (i, f) in facets.iter().enumerate() {
        let mut on: Vec<usize> = (0..vertices.len())
            .filter(|&vi| f.delta(&vertices[vi]).is_zero())
            .collect();
        if on.len() < dim {
            return Err(PolytopeError::DegenerateFacet { index: i });
        }
        if dim == 2 {
            // edges have exactly two endpoints
            if on.len() != 2 {
                return Err(PolytopeError::DegenerateFacet { index: i });
            }
        }
        if dim >= 3 {
            order_facet_cycle(&vertices, &mut on);
        }
        facet_vertices.push(on);
    }

    Ok(Polytope {
        dim,
        facets,
        vertices,
        facet_vertices,
    })
}

fn enumerate_subsets(
    m: usize,
    k: usize,
    buf: &mut Vec<usize>,
    pos: usize,
    start: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if pos == k {
        f(buf);
        return;
    }
    for i in start..m {
        buf[pos] = i;
        enumerate_subsets(m, k, buf, pos + 1, i + 1, f);
    }
}

fn barycenter(vertices: &[Vec<Rat>]) -> Vec<Rat> {
    let n = vertices[0].len();
    let count = rat_int(vertices.len() as i64);
    (0..n)
        .map(|i| {
            let mut s = Rat::zero();
            for v in vertices {
                s += v[i].clone();
            }
            s / count.clone()
        })
        .collect()
}

/// Order >=3 coplanar vertices into a boundary cycle (used only for n = 3 facets);
/// angular sort around the facet centroid in an orthonormal chart.
fn order_facet_cycle(vertices: &[Vec<Rat>], on: &mut [usize]) {
    let pts: Vec<Vec<f64>> = on
        .iter()
        .map(|&i| vertices[i].iter().map(to_f64).collect())
        .collect();
    let n = pts[0].len();
    let c: Vec<f64> = (0..n)
        .map(|d| pts.iter().map(|p| p[d]).sum::<f64>() / pts.len() as f64)
        .collect();
    let e1: Vec<f64> = (0..n).map(|d| pts[0][d] - c[d]).collect();
    let norm1 = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
    let e1: Vec<f64> = e1.iter().map(|x| x / norm1).collect();
    let mut e2 = vec![0.0; n];
    for p in pts.iter().skip(1) {
        let d: Vec<f64> = (0..n).map(|d| p[d] - c[d]).collect();
        let proj: f64 = d.iter().zip(&e1).map(|(a, b)| a * b).sum();
        let res: Vec<f64> = (0..n).map(|i| d[i] - proj * e1[i]).collect();
        let rn = res.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rn > 1e-12 {
            e2 = res.iter().map(|x| x / rn).collect();
            break;
        }
    }
    let mut keyed: Vec<(f64, usize)> = on
        .iter()
        .map(|&i| {
            let p: Vec<f64> = vertices[i].iter().map(to_f64).collect();
            let d: Vec<f64> = (0..n).map(|k| p[k] - c[k]).collect();
            let a: f64 = d.iter().zip(&e1).map(|(x, y)| x * y).sum();
            let b: f64 = d.iter().zip(&e2).map(|(x, y)| x * y).sum();
            (b.atan2(a), i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (slot, (_, i)) in keyed.into_iter().enumerate() {
        on[slot] = i;
    }
}

/// Search for a nonzero direction d with <l_k, d> >= 0 for all facets.
fn recession_direction(dim: usize, facets: &[HalfSpace]) -> Option<Vec<Rat>> {
    for j in 0..dim {
        for sign in [1i64, -1] {
            // constraints sum_i l_i d_i >= 0 with d_j = sign
            let cons: Vec<(Vec<Rat>, Rat)> = facets
                .iter()
                .map(|f| {
                    let coeffs: Vec<Rat> = (0..dim)
                        .filter(|&i| i != j)
                        .map(|i| rat_int(f.normal[i]))
                        .collect();
                    let rhs = rat_int(-sign * f.normal[j]);
                    (coeffs, rhs)
                })
                .collect();
            if let Some(partial) = fm_solve(dim - 1, cons) {
                let mut d = Vec::with_capacity(dim);
                let mut it = partial.into_iter();
                for i in 0..dim {
                    if i == j {
                        d.push(rat_int(sign));
                    } else {
                        d.push(it.next().unwrap());
                    }
                }
                return Some(d);
            }
        }
    }
    None
}

/// Fourier-Motzkin: find a point satisfying `sum coeffs*x >= rhs` for every row,
/// in `nvars` variables. Returns a witness when feasible.
fn fm_solve(nvars: usize, cons: Vec<(Vec<Rat>, Rat)>) -> Option<Vec<Rat>> {
    if nvars == 0 {
        return if cons.iter().all(|(_, r)| !r.is_positive()) {
            Some(vec![])
        } else {
            None
        };
    }
    let v = nvars - 1; // eliminate the last variable
    let mut lower: Vec<(Vec<Rat>, Rat)> = Vec::new(); // x_v >= expr
    let mut upper: Vec<(Vec<Rat>, Rat)> = Vec::new(); // x_v <= expr
    let mut rest: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for (c, r) in cons {
        let a = c[v].clone();
        let head: Vec<Rat> = c[..v].to_vec();
        if a.is_zero() {
            rest.push((head, r));
        } else if a.is_positive() {
            // x_v >= L(x) = r/a - sum (c_i/a) x_i
            lower.push((head.iter().map(|h| -(h / &a)).collect(), &r / &a));
        } else {
            // x_v <= U(x) = -r/na + sum (c_i/na) x_i, na = -a > 0
            let na = -a;
            upper.push((head.iter().map(|h| h / &na).collect(), -(&r / &na)));
        }
    }
    // every lower/upper pair needs U(x) >= L(x), i.e. (uc - lc).x >= lr - ur
    for (lc, lr) in &lower {
        for (uc, ur) in &upper {
            let coeffs: Vec<Rat> = uc.iter().zip(lc).map(|(u, l)| u - l).collect();
            let rhs = lr - ur;
            rest.push((coeffs, rhs));
        }
    }
    let head = fm_solve(v, rest)?;
    // pick x_v between the bounds
    let eval = |row: &(Vec<Rat>, Rat)| -> Rat {
        let mut s = row.1.clone();
        for (c, x) in row.0.iter().zip(&head) {
            s += c * x;
        }
        s
    };
    let lo = lower.iter().map(&eval).max();
    let hi = upper.iter().map(&eval).min();
    let x = match (lo, hi) {
        (Some(l), Some(h)) => {
            if l > h {
                return None;
            }
            (l + h) / rat_int(2)
        }
        (Some(l), None) => l,
        (None, Some(h)) => h,
        (None, None) => Rat::zero(),
    };
    let mut out = head;
    out.push(x);
    Some(out)
}

impl Polytope {
    /// Exact volume via the simplex decomposition used by the quadrature.
    pub fn volume_exact(&self) -> Rat {
        quadrature::decompose_simplices(self)
            .iter()
            .map(quadrature::simplex_volume_exact)
            .sum()
    }

    pub fn volume(&self) -> f64 {
        to_f64(&self.volume_exact())
    }

    /// sigma-measure of facet k: Euclidean (n-1)-measure divided by |l_k|.
    /// Exact by lattice normalization (dσ ∧ dδ_k = ±dx).
    pub fn facet_sigma_exact(&self, k: usize) -> Rat {
        quadrature::facet_sigma_exact(self, k)
    }

    pub fn sigma_total_exact(&self) -> Rat {
        (0..self.facets.len())
            .map(|k| self.facet_sigma_exact(k))
            .sum()
    }

    pub fn sigma_total(&self) -> f64 {
        to_f64(&self.sigma_total_exact())
    }

    /// μ = σ(∂P) / Vol(P), the unique constant with F(1) = 0.
    pub fn mu_exact(&self) -> Rat {
        self.sigma_total_exact() / self.volume_exact()
    }

    pub fn mu(&self) -> f64 {
        to_f64(&self.mu_exact())
    }

    pub fn quadrature(&self, order: usize) -> QuadratureRule {
        quadrature::build(self, order)
    }

    pub fn has_integral_vertices(&self) -> bool {
        self.vertices
            .iter()
            .all(|v| v.iter().all(|c| c.is_integer()))
    }

    /// alpha in Z^n with delta_k(alpha) * 1 + k-scaled offsets >= 0, i.e. Z^n ∩ kP.
    pub fn lattice_points(&self, k: u64) -> Result<Vec<Vec<i64>>, PolytopeError> {
        if let Some(v) = self.vertices.iter().find(|v| !v.iter().all(|c| c.is_integer())) {
            return Err(PolytopeError::NonLatticePolytope {
                vertex: fmt_vertex(v),
            });
        }
        let kb = rat_int(k as i64);
        let n = self.dim;
        // bounding box of kP from scaled vertices
        let mut lo = vec![i64::MAX; n];
        let mut hi = vec![i64::MIN; n];
        for v in &self.vertices {
            for i in 0..n {
                let s = (&v[i] * &kb).to_integer();
                let s = s.to_i64().expect("lattice bound fits i64");
                lo[i] = lo[i].min(s);
                hi[i] = hi[i].max(s);
            }
        }
        let mut out = Vec::new();
        let mut alpha = lo.clone();
        'outer: loop {
            let inside = self.facets.iter().all(|f| {
                let mut acc = &f.offset * &kb;
                for (l, a) in f.normal.iter().zip(&alpha) {
                    acc += rat_int(l * a);
                }
                !acc.is_negative()
            });
            if inside {
                out.push(alpha.clone());
            }
            for i in 0..n {
                alpha[i] += 1;
                if alpha[i] <= hi[i] {
                    continue 'outer;
                }
                alpha[i] = lo[i];
            }
            break;
        }
        Ok(out)
    }

    /// Barycenter of the vertex set (a strictly interior point).
    pub fn interior_point(&self) -> Vec<f64> {
        barycenter(&self.vertices).iter().map(to_f64).collect()
    }

    /// Polytope vertices ordered counterclockwise (n = 2 only).
    pub fn polygon_cycle(&self) -> Vec<Vec<Rat>> {
        assert_eq!(self.dim, 2);
        exact::order_polygon(&self.vertices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    pub fn interval() -> Polytope {
        // {x > 0, 1 - x > 0}
        build_polytope(
            1,
            vec![
                HalfSpace::new(vec![1], rat_int(0)),
                HalfSpace::new(vec![-1], rat_int(1)),
            ],
        )
        .unwrap()
    }

    pub fn simplex2() -> Polytope {
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

    pub fn square() -> Polytope {
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

    #[test]
    fn interval_vertices() {
        let p = interval();
        let mut vs: Vec<Rat> = p.vertices.iter().map(|v| v[0].clone()).collect();
        vs.sort();
        assert_eq!(vs, vec![rat_int(0), rat_int(1)]);
        assert_eq!(p.volume_exact(), rat_int(1));
        assert_eq!(p.sigma_total_exact(), rat_int(2));
        assert_eq!(p.mu_exact(), rat_int(2));
    }

    #[test]
    fn simplex_vertices_and_measures() {
        let p = simplex2();
        assert_eq!(p.vertices.len(), 3);
        assert_eq!(p.volume_exact(), rat(1, 2));
        // each facet carries sigma-mass 1 (hypotenuse: length sqrt(2) / |(-1,-1)|)
        for k in 0..3 {
            assert_eq!(p.facet_sigma_exact(k), rat_int(1));
        }
        assert_eq!(p.mu_exact(), rat_int(6));
    }

    #[test]
    fn square_measures() {
        let p = square();
        assert_eq!(p.vertices.len(), 4);
        assert_eq!(p.volume_exact(), rat_int(1));
        assert_eq!(p.sigma_total_exact(), rat_int(4));
        assert_eq!(p.mu_exact(), rat_int(4));
    }

    #[test]
    fn missing_facet_is_unbounded() {
        let err = build_polytope(
            2,
            vec![
                HalfSpace::new(vec![1, 0], rat_int(0)),
                HalfSpace::new(vec![0, 1], rat_int(0)),
                HalfSpace::new(vec![-1, 0], rat_int(1)),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, PolytopeError::Unbounded { .. }));
    }

    #[test]
    fn non_primitive_normal_rejected() {
        let err = build_polytope(
            1,
            vec![
                HalfSpace::new(vec![2], rat_int(0)),
                HalfSpace::new(vec![-1], rat_int(1)),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, PolytopeError::NonPrimitiveNormal { .. }));
    }

    #[test]
    fn non_delzant_vertex_named() {
        // triangle {x>=0, y>=0, 2-x-... } with normals meeting non-unimodularly:
        // facets x>=0, y>=0, and 2 - x - 2y >= 0 has vertex (0,1) with normals
        // (1,0),(0,... active facets there: x=0 and 2-x-2y=0 -> det = -2
        let err = build_polytope(
            2,
            vec![
                HalfSpace::new(vec![1, 0], rat_int(0)),
                HalfSpace::new(vec![0, 1], rat_int(0)),
                HalfSpace::new(vec![-1, -2], rat_int(2)),
            ],
        )
        .unwrap_err();
        match err {
            PolytopeError::NotDelzant { vertex, .. } => {
                assert_eq!(vertex, vec!["0".to_string(), "1".to_string()]);
            }
            other => panic!("expected NotDelzant, got {other:?}"),
        }
    }

    #[test]
    fn empty_interior_detected() {
        let err = build_polytope(
            1,
            vec![
                HalfSpace::new(vec![1], rat_int(0)),
                HalfSpace::new(vec![-1], rat_int(0)),
            ],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            PolytopeError::EmptyInterior | PolytopeError::NotDelzant { .. }
        ));
    }

    #[test]
    fn lattice_point_counts() {
        let p = interval();
        assert_eq!(p.lattice_points(3).unwrap().len(), 4);
        let s = simplex2();
        assert_eq!(s.lattice_points(2).unwrap().len(), 6);
        let q = square();
        assert_eq!(q.lattice_points(1).unwrap().len(), 4);
    }

    #[test]
    fn non_lattice_polytope_rejected_for_points() {
        let p = build_polytope(
            1,
            vec![
                HalfSpace::new(vec![1], rat_int(0)),
                HalfSpace::new(vec![-2, ][..1].to_vec(), rat_int(1)),
            ],
        );
        // normal -2 is non-primitive; construct [0, 1/2] with primitive data instead
        assert!(p.is_err());
        let p = build_polytope(
            1,
            vec![
                HalfSpace::new(vec![1], rat_int(0)),
                HalfSpace::new(vec![-1], rat(1, 2)),
            ],
        )
        .unwrap();
        assert!(matches!(
            p.lattice_points(1),
            Err(PolytopeError::NonLatticePolytope { .. })
        ));
    }
}
