//! Planar mod-2 regions described by their boundary segments.
//!
//! A mod-2 planar 2-chain is determined a.e. by its boundary multiset: the
//! parity at a generic point equals the number of boundary segments crossed
//! by a downward vertical ray. Triangles contribute their three edges, a
//! closed polygon contributes its segments (even–odd interior). The slab
//! decomposition below evaluates that parity on every face of the
//! arrangement exactly.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::{Signed, Zero};

use crate::rational::{int_point, primitive_direction, Rational};

pub type P2 = [Rational; 2];
pub type Seg2 = (P2, P2);

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

fn cross2(o: &P2, a: &P2, b: &P2) -> Rational {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Twice the signed area of a planar triangle.
pub fn orient(a: &P2, b: &P2, c: &P2) -> Rational {
    cross2(a, b, c)
}

/// x-coordinate of the intersection point of two closed segments, when they
/// meet in a single point.
fn intersection_x(s: &Seg2, t: &Seg2) -> Option<Rational> {
    let (p, p2) = s;
    let (q, q2) = t;
    let r = [&p2[0] - &p[0], &p2[1] - &p[1]];
    let u = [&q2[0] - &q[0], &q2[1] - &q[1]];
    let denom = &r[0] * &u[1] - &r[1] * &u[0];
    if denom.is_zero() {
        return None;
    }
    let qp = [&q[0] - &p[0], &q[1] - &p[1]];
    let ta = (&qp[0] * &u[1] - &qp[1] * &u[0]) / &denom;
    let tb = (&qp[0] * &r[1] - &qp[1] * &r[0]) / &denom;
    let zero = Rational::zero();
    let one = Rational::from_integer(1.into());
    if ta < zero || ta > one || tb < zero || tb > one {
        return None;
    }
    Some(&p[0] + &ta * &r[0])
}

fn y_at(s: &Seg2, x: &Rational) -> Rational {
    let (a, b) = s;
    &a[1] + (x - &a[0]) * (&b[1] - &a[1]) / (&b[0] - &a[0])
}

/// One odd-parity trapezoid between two segments across a slab.
#[derive(Clone, Debug)]
pub struct OddCell {
    pub x_left: Rational,
    pub x_right: Rational,
    pub lower: Seg2,
    pub upper: Seg2,
    pub witness: P2,
}

/// Equivalent segment set with no two segments overlapping: collinear
/// segments are replaced by the odd-multiplicity parts of their union.
/// Ray-crossing parity only sees these, so the region is unchanged.
pub fn normalize(segs: &[Seg2]) -> Vec<Seg2> {
    type LineKey = ([BigInt; 3], Rational);
    let mut lines: BTreeMap<LineKey, Vec<(P2, P2)>> = BTreeMap::new();
    for (a, b) in segs {
        if a == b {
            continue;
        }
        let d = primitive_direction(&[&b[0] - &a[0], &b[1] - &a[1], Rational::zero()]);
        let dq = int_point(&d);
        let offset = &dq[0] * &a[1] - &dq[1] * &a[0];
        let (lo, hi) = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        lines.entry((d, offset)).or_default().push((lo, hi));
    }
    let mut out = Vec::new();
    for (_, ivs) in lines {
        if ivs.len() == 1 {
            out.extend(ivs);
            continue;
        }
        // Points on one line are totally ordered lexicographically.
        let mut ev: Vec<P2> = ivs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        ev.sort();
        let mut parity = false;
        let mut open: Option<P2> = None;
        let mut i = 0;
        while i < ev.len() {
            let mut j = i;
            while j < ev.len() && ev[j] == ev[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                parity = !parity;
                if parity {
                    open = Some(ev[i].clone());
                } else if let Some(a) = open.take() {
                    out.push((a, ev[i].clone()));
                }
            }
            i = j;
        }
    }
    out
}

/// Walks slabs, calling `visit` on every odd cell; stops early when `visit`
/// returns false.
fn for_each_odd_cell(segs: &[Seg2], mut visit: impl FnMut(OddCell) -> bool) {
    let segs: Vec<Seg2> = normalize(segs)
        .into_iter()
        .map(|(a, b)| if a[0] <= b[0] { (a, b) } else { (b, a) })
        .collect();
    if segs.is_empty() {
        return;
    }
    let mut xs: Vec<Rational> = Vec::with_capacity(segs.len() * 2);
    for (a, b) in &segs {
        xs.push(a[0].clone());
        xs.push(b[0].clone());
    }
    for i in 0..segs.len() {
        for j in (i + 1)..segs.len() {
            let (si, sj) = (&segs[i], &segs[j]);
            if si.1[0] < sj.0[0] || sj.1[0] < si.0[0] {
                continue;
            }
            if let Some(x) = intersection_x(si, sj) {
                xs.push(x);
            }
        }
    }
    xs.sort();
    xs.dedup();
    for w in xs.windows(2) {
        let (xl, xr) = (&w[0], &w[1]);
        let xm = (xl + xr) * half();
        let mut active: Vec<(Rational, &Seg2)> = segs
            .iter()
            .filter(|s| s.0[0] < xm && xm < s.1[0])
            .map(|s| (y_at(s, &xm), s))
            .collect();
        if active.is_empty() {
            continue;
        }
        active.sort_by(|a, b| a.0.cmp(&b.0));
        let mut parity = false;
        let mut i = 0;
        while i < active.len() {
            let mut j = i;
            while j < active.len() && active[j].0 == active[i].0 {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                parity = !parity;
            }
            if parity && j < active.len() {
                let ym = (&active[i].0 + &active[j].0) * half();
                let cell = OddCell {
                    x_left: xl.clone(),
                    x_right: xr.clone(),
                    lower: active[i].1.clone(),
                    upper: active[j].1.clone(),
                    witness: [xm.clone(), ym],
                };
                if !visit(cell) {
                    return;
                }
            }
            i = j;
        }
    }
}

/// A point where the parity function is odd, if it is not a.e. zero.
pub fn odd_witness(segs: &[Seg2]) -> Option<P2> {
    let mut found = None;
    for_each_odd_cell(segs, |c| {
        found = Some(c.witness);
        false
    });
    found
}

/// Disjoint triangles covering exactly the odd region.
pub fn odd_triangles(segs: &[Seg2]) -> Vec<[P2; 3]> {
    let mut out = Vec::new();
    for_each_odd_cell(segs, |c| {
        let ll = [c.x_left.clone(), y_at(&c.lower, &c.x_left)];
        let lr = [c.x_right.clone(), y_at(&c.lower, &c.x_right)];
        let ul = [c.x_left.clone(), y_at(&c.upper, &c.x_left)];
        let ur = [c.x_right.clone(), y_at(&c.upper, &c.x_right)];
        for tri in [[ll.clone(), lr, ur.clone()], [ll, ur, ul]] {
            if !orient(&tri[0], &tri[1], &tri[2]).is_zero() {
                out.push(tri);
            }
        }
        true
    });
    out
}

/// Area of the odd region (exact).
pub fn odd_area(segs: &[Seg2]) -> Rational {
    odd_triangles(segs).iter().map(|t| orient(&t[0], &t[1], &t[2]).abs() * half()).fold(Rational::zero(), |a, b| a + b)
}

/// Edges of a planar triangle.
pub fn triangle_edges(t: &[P2; 3]) -> [Seg2; 3] {
    [(t[0].clone(), t[1].clone()), (t[1].clone(), t[2].clone()), (t[2].clone(), t[0].clone())]
}

/// Closed segments meet (touching counts).
pub fn segments_intersect(s: &Seg2, t: &Seg2) -> bool {
    let d1 = orient(&t.0, &t.1, &s.0);
    let d2 = orient(&t.0, &t.1, &s.1);
    let d3 = orient(&s.0, &s.1, &t.0);
    let d4 = orient(&s.0, &s.1, &t.1);
    let strictly = |a: &Rational, b: &Rational| (a.is_positive() && b.is_negative()) || (a.is_negative() && b.is_positive());
    if strictly(&d1, &d2) && strictly(&d3, &d4) {
        return true;
    }
    let on = |p: &P2, a: &P2, b: &P2, d: &Rational| {
        d.is_zero()
            && p[0] >= std::cmp::min(a[0].clone(), b[0].clone())
            && p[0] <= std::cmp::max(a[0].clone(), b[0].clone())
            && p[1] >= std::cmp::min(a[1].clone(), b[1].clone())
            && p[1] <= std::cmp::max(a[1].clone(), b[1].clone())
    };
    on(&s.0, &t.0, &t.1, &d1) || on(&s.1, &t.0, &t.1, &d2) || on(&t.0, &s.0, &s.1, &d3) || on(&t.1, &s.0, &s.1, &d4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    fn p(x: i64, y: i64) -> P2 {
        [q(x), q(y)]
    }

    fn square_tris(n: i64) -> Vec<[P2; 3]> {
        // n×n grid of the unit square, 2 triangles per cell
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let a = [qf(i, n), qf(j, n)];
                let b = [qf(i + 1, n), qf(j, n)];
                let c = [qf(i + 1, n), qf(j + 1, n)];
                let d = [qf(i, n), qf(j + 1, n)];
                out.push([a.clone(), b, c.clone()]);
                out.push([a, c, d]);
            }
        }
        out
    }

    #[test]
    fn two_presentations_of_the_square_cancel() {
        let mut segs: Vec<Seg2> = Vec::new();
        for t in square_tris(1).iter().chain(square_tris(2).iter()) {
            segs.extend(triangle_edges(t));
        }
        assert!(odd_witness(&segs).is_none());
        let segs1: Vec<Seg2> = square_tris(2).iter().flat_map(triangle_edges).collect();
        assert_eq!(odd_area(&segs1), q(1));
    }

    #[test]
    fn polygon_even_odd_matches_triangles() {
        let poly = [p(0, 0), p(1, 0), p(1, 1), p(0, 1)];
        let mut segs: Vec<Seg2> = (0..4).map(|i| (poly[i].clone(), poly[(i + 1) % 4].clone())).collect();
        assert_eq!(odd_area(&segs), q(1));
        segs.extend(square_tris(1).iter().flat_map(triangle_edges));
        assert!(odd_witness(&segs).is_none());
    }

    #[test]
    fn overlapping_triangles_have_odd_lune() {
        let t1 = [p(0, 0), p(2, 0), p(0, 2)];
        let t2 = [p(0, 0), p(2, 0), p(2, 2)];
        let segs: Vec<Seg2> = triangle_edges(&t1).into_iter().chain(triangle_edges(&t2)).collect();
        // symmetric difference: total 4 minus twice the overlap (area 1)
        assert_eq!(odd_area(&segs), q(2));
    }

    #[test]
    fn segment_intersection_predicate() {
        assert!(segments_intersect(&(p(0, 0), p(2, 2)), &(p(0, 2), p(2, 0))));
        assert!(segments_intersect(&(p(0, 0), p(1, 0)), &(p(1, 0), p(1, 1))));
        assert!(!segments_intersect(&(p(0, 0), p(1, 0)), &(p(0, 1), p(1, 1))));
    }
}
