//! Exact rational polygon machinery (n = 2): ordering, clipping, areas,
//! centroids, and lattice-normalized segment lengths.

use crate::rational::{rat_int, Rat};
use num::traits::{Signed, Zero};

/// Order distinct points into a counterclockwise convex cycle around their mean.
/// Comparison is exact: quadrant classification plus cross-product sign.
pub fn order_polygon(pts: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    assert!(pts.iter().all(|p| p.len() == 2));
    let n = rat_int(pts.len() as i64);
    let cx: Rat = pts.iter().map(|p| p[0].clone()).sum::<Rat>() / n.clone();
    let cy: Rat = pts.iter().map(|p| p[1].clone()).sum::<Rat>() / n;
    let mut keyed: Vec<(Rat, Rat, Vec<Rat>)> = pts
        .iter()
        .map(|p| (&p[0] - &cx, &p[1] - &cy, p.clone()))
        .collect();
    let half = |dx: &Rat, dy: &Rat| -> u8 {
        // 0: angle in [0, pi) starting from +x axis, 1: [pi, 2pi)
        if dy.is_positive() || (dy.is_zero() && dx.is_positive()) {
            0
        } else {
            1
        }
    };
    keyed.sort_by(|a, b| {
        let ha = half(&a.0, &a.1);
        let hb = half(&b.0, &b.1);
        if ha != hb {
            return ha.cmp(&hb);
        }
        // same half-plane: counterclockwise iff cross(a, b) > 0
        let cross = &a.0 * &b.1 - &a.1 * &b.0;
        if cross.is_positive() {
            std::cmp::Ordering::Less
        } else if cross.is_negative() {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    keyed.into_iter().map(|(_, _, p)| p).collect()
}

/// Shoelace area of a counterclockwise polygon, exact.
pub fn polygon_area(cycle: &[Vec<Rat>]) -> Rat {
    let n = cycle.len();
    if n < 3 {
        return Rat::zero();
    }
    let mut acc = Rat::zero();
    for i in 0..n {
        let j = (i + 1) % n;
        acc += &cycle[i][0] * &cycle[j][1] - &cycle[j][0] * &cycle[i][1];
    }
    acc / rat_int(2)
}

/// Area centroid of a convex polygon with positive area, exact.
pub fn polygon_centroid(cycle: &[Vec<Rat>]) -> Vec<Rat> {
    let a = polygon_area(cycle);
    let n = cycle.len();
    let mut cx = Rat::zero();
    let mut cy = Rat::zero();
    for i in 0..n {
        let j = (i + 1) % n;
        let w = &cycle[i][0] * &cycle[j][1] - &cycle[j][0] * &cycle[i][1];
        cx += (&cycle[i][0] + &cycle[j][0]) * &w;
        cy += (&cycle[i][1] + &cycle[j][1]) * &w;
    }
    let six_a = rat_int(6) * a;
    vec![cx / six_a.clone(), cy / six_a]
}

/// Clip a counterclockwise convex polygon by the half-plane a.x + b*y + c >= 0
/// (Sutherland-Hodgman, exact). Returns the clipped cycle (possibly empty).
pub fn clip_polygon(cycle: &[Vec<Rat>], a: &Rat, b: &Rat, c: &Rat) -> Vec<Vec<Rat>> {
    let val = |p: &Vec<Rat>| -> Rat { a * &p[0] + b * &p[1] + c };
    let n = cycle.len();
    let mut out: Vec<Vec<Rat>> = Vec::new();
    for i in 0..n {
        let p = &cycle[i];
        let q = &cycle[(i + 1) % n];
        let vp = val(p);
        let vq = val(q);
        let p_in = !vp.is_negative();
        let q_in = !vq.is_negative();
        if p_in {
            out.push(p.clone());
        }
        if p_in != q_in {
            // intersection: p + t (q - p) with t = vp / (vp - vq)
            let t = &vp / (&vp - &vq);
            let ix = &p[0] + &t * (&q[0] - &p[0]);
            let iy = &p[1] + &t * (&q[1] - &p[1]);
            out.push(vec![ix, iy]);
        }
    }
    // drop exact duplicates introduced by vertices lying on the clip line
    let mut dedup: Vec<Vec<Rat>> = Vec::new();
    for p in out {
        if dedup.last() != Some(&p) && (dedup.is_empty() || dedup[0] != p) {
            dedup.push(p);
        }
    }
    dedup
}

/// Lattice-normalized length of the segment [p, q] lying inside a line with
/// primitive integer normal `l`: Euclidean length / |l|. Exact because
/// q - p is a rational multiple of rot90(l), which has the same norm as l.
pub fn segment_sigma_length(p: &[Rat], q: &[Rat], l: &[i64]) -> Rat {
    let dx = &q[0] - &p[0];
    let dy = &q[1] - &p[1];
    // direction rot90(l) = (-l1, l0)
    let r0 = rat_int(-l[1]);
    let r1 = rat_int(l[0]);
    let lam = if !r0.is_zero() { dx / r0 } else { dy / r1 };
    lam.abs()
}
