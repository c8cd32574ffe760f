//! Mod-2 simplicial chains with exact rational vertices.
//!
//! Chains are kept in presentation form: identical canonical simplices cancel
//! on insertion, and geometric equality of different presentations is decided
//! by [`chains_equal_mod2`].

mod maps;
mod overlay;

use std::collections::BTreeSet;

use num::{Signed, Zero};

use crate::error::{FilmError, Result};
use crate::grid::BoxRegion;
use crate::measure::Measure;
use crate::rational::{cross, det3, dot, is_zero_vec, lerp, norm2, primitive_direction, sub, Point, Rational};

pub use maps::{clamp_point, clamp_to_cube, pushforward, AffineMap, PLMap};
pub use overlay::{
    chains_equal_mod2, chains_equal_mod2_with, geometric_mass, reduce_mod2, reduce_mod2_on_grid, EqualityMode,
    EqualityReport, ExactLimit,
};

/// A simplex with canonically (lexicographically) ordered vertices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Simplex {
    vertices: Vec<Point>,
}

impl Simplex {
    pub fn new(mut vertices: Vec<Point>) -> Self {
        assert!(!vertices.is_empty() && vertices.len() <= 4, "simplices in R³ have 1 to 4 vertices");
        vertices.sort();
        Self { vertices }
    }

    pub fn point(p: Point) -> Self {
        Self { vertices: vec![p] }
    }

    pub fn segment(a: Point, b: Point) -> Self {
        Self::new(vec![a, b])
    }

    pub fn triangle(a: Point, b: Point, c: Point) -> Self {
        Self::new(vec![a, b, c])
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edge_vectors(&self) -> Vec<Point> {
        self.vertices[1..].iter().map(|v| sub(v, &self.vertices[0])).collect()
    }

    /// Squared k-volume scaled by (k!)²: the Gram determinant of the edge
    /// vectors.
    pub fn gram(&self) -> Rational {
        let e = self.edge_vectors();
        match e.len() {
            0 => Rational::from_integer(1.into()),
            1 => norm2(&e[0]),
            2 => norm2(&cross(&e[0], &e[1])),
            _ => {
                let d = det3(&e[0], &e[1], &e[2]);
                &d * &d
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        let v = &self.vertices;
        match v.len() {
            1 => false,
            2 => v[0] == v[1],
            3 => is_zero_vec(&cross(&sub(&v[1], &v[0]), &sub(&v[2], &v[0]))),
            _ => det3(&sub(&v[1], &v[0]), &sub(&v[2], &v[0]), &sub(&v[3], &v[0])).is_zero(),
        }
    }

    /// The k-volume √det(GᵀG)/k!, in radical form keyed by the primitive
    /// direction (segment) or normal (triangle) so parallel pieces share a
    /// radicand.
    pub fn mass(&self) -> Measure {
        let e = self.edge_vectors();
        match e.len() {
            0 => Measure::from_int(1),
            1 => vector_length(&e[0]),
            2 => vector_length(&cross(&e[0], &e[1])).scale(&Rational::new(1.into(), 2.into())),
            _ => Measure::rational(det3(&e[0], &e[1], &e[2]).abs() / Rational::from_integer(6.into())),
        }
    }

    pub fn facets(&self) -> Vec<Simplex> {
        if self.dim() == 0 {
            return Vec::new();
        }
        (0..self.vertices.len())
            .map(|skip| {
                let v: Vec<Point> =
                    self.vertices.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, p)| p.clone()).collect();
                Simplex { vertices: v }
            })
            .collect()
    }

    /// Join with an apex.
    pub fn cone(&self, apex: &Point) -> Simplex {
        let mut v = self.vertices.clone();
        v.push(apex.clone());
        Simplex::new(v)
    }

    /// Barycentric coordinates of `x` if it lies in the affine hull.
    pub fn barycentric(&self, x: &Point) -> Option<Vec<Rational>> {
        let e = self.edge_vectors();
        let d = sub(x, &self.vertices[0]);
        let k = e.len();
        if k == 0 {
            return if d.iter().all(Zero::is_zero) { Some(vec![Rational::from_integer(1.into())]) } else { None };
        }
        // Solve (EᵀE) λ = Eᵀ d by Cramer's rule.
        let g: Vec<Vec<Rational>> = (0..k).map(|i| (0..k).map(|j| dot(&e[i], &e[j])).collect()).collect();
        let rhs: Vec<Rational> = (0..k).map(|i| dot(&e[i], &d)).collect();
        let det = det_small(&g);
        if det.is_zero() {
            return None;
        }
        let mut lam = Vec::with_capacity(k);
        for col in 0..k {
            let mut m = g.clone();
            for (row, r) in m.iter_mut().zip(&rhs) {
                row[col] = r.clone();
            }
            lam.push(det_small(&m) / &det);
        }
        let mut recon = self.vertices[0].clone();
        for (l, ev) in lam.iter().zip(&e) {
            for c in 0..3 {
                recon[c] += l * &ev[c];
            }
        }
        if &recon != x {
            return None;
        }
        let first = Rational::from_integer(1.into()) - lam.iter().fold(Rational::zero(), |a, b| a + b);
        let mut out = vec![first];
        out.extend(lam);
        Some(out)
    }

    /// Closed containment.
    pub fn contains(&self, x: &Point) -> bool {
        self.barycentric(x).is_some_and(|b| b.iter().all(|c| !c.is_negative()))
    }

    /// Containment in the relative interior.
    pub fn contains_interior(&self, x: &Point) -> bool {
        self.barycentric(x).is_some_and(|b| b.iter().all(|c| c.is_positive()))
    }
}

fn det_small(m: &[Vec<Rational>]) -> Rational {
    match m.len() {
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        3 => {
            let r = |i: usize| [m[i][0].clone(), m[i][1].clone(), m[i][2].clone()];
            det3(&r(0), &r(1), &r(2))
        }
        _ => unreachable!("at most 3x3"),
    }
}

/// Length of a rational vector as `|s|·√|p|²` with `p` primitive.
pub(crate) fn vector_length(v: &Point) -> Measure {
    if v.iter().all(Zero::is_zero) {
        return Measure::zero();
    }
    let p = primitive_direction(v);
    let i = (0..3).find(|i| !p[*i].is_zero()).unwrap();
    let s = (&v[i] / Rational::from_integer(p[i].clone())).abs();
    let n = &p[0] * &p[0] + &p[1] * &p[1] + &p[2] * &p[2];
    Measure::sqrt_int_scaled(&n, s)
}

/// Square ℓ² length of `v` as a measure.
pub fn length(v: &Point) -> Measure {
    vector_length(v)
}

/// A mod-2 k-chain of simplices; degenerate simplices are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimplicialChain {
    k: usize,
    simplices: BTreeSet<Simplex>,
}

impl SimplicialChain {
    pub fn empty(k: usize) -> Self {
        Self { k, simplices: BTreeSet::new() }
    }

    pub fn new(k: usize, simplices: impl IntoIterator<Item = Simplex>) -> Result<Self> {
        let mut out = Self::empty(k);
        for s in simplices {
            if s.dim() != k {
                return Err(FilmError::Dimension(format!("{}-simplex in a {k}-chain", s.dim())));
            }
            out.toggle(s);
        }
        Ok(out)
    }

    /// Toggles a simplex; degenerate ones are dropped.
    pub fn toggle(&mut self, s: Simplex) {
        debug_assert_eq!(s.dim(), self.k);
        if s.is_degenerate() {
            return;
        }
        if !self.simplices.remove(&s) {
            self.simplices.insert(s);
        }
    }

    /// Toggle for a simplex already known to be nondegenerate.
    pub(crate) fn toggle_nondegenerate(&mut self, s: Simplex) {
        debug_assert!(!s.is_degenerate());
        if !self.simplices.remove(&s) {
            self.simplices.insert(s);
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Simplex> {
        self.simplices.iter()
    }

    pub fn simplices(&self) -> &BTreeSet<Simplex> {
        &self.simplices
    }

    pub fn add(&self, other: &SimplicialChain) -> Result<SimplicialChain> {
        if self.k != other.k {
            return Err(FilmError::Dimension(format!("cannot add a {}-chain to a {}-chain", other.k, self.k)));
        }
        Ok(Self { k: self.k, simplices: self.simplices.symmetric_difference(&other.simplices).cloned().collect() })
    }

    pub fn add_assign(&mut self, other: &SimplicialChain) -> Result<()> {
        if self.k != other.k {
            return Err(FilmError::Dimension(format!("cannot add a {}-chain to a {}-chain", other.k, self.k)));
        }
        for s in &other.simplices {
            if !self.simplices.remove(s) {
                self.simplices.insert(s.clone());
            }
        }
        Ok(())
    }

    pub fn boundary(&self) -> Result<SimplicialChain> {
        if self.k == 0 {
            return Err(FilmError::Dimension("boundary of a 0-chain".into()));
        }
        let mut out = Self::empty(self.k - 1);
        for s in &self.simplices {
            for f in s.facets() {
                // Faces of a nondegenerate simplex are nondegenerate.
                if !out.simplices.remove(&f) {
                    out.simplices.insert(f);
                }
            }
        }
        Ok(out)
    }

    /// Mass of the stored presentation.
    pub fn mass(&self) -> Measure {
        self.simplices.iter().map(Simplex::mass).sum()
    }

    /// Distinct vertices in canonical order.
    pub fn vertices(&self) -> Vec<Point> {
        let set: BTreeSet<&Point> = self.simplices.iter().flat_map(|s| s.vertices.iter()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn is_inside(&self, b: &BoxRegion) -> bool {
        self.simplices.iter().all(|s| s.vertices.iter().all(|v| b.contains(v)))
    }

    /// Cone from `apex`: each simplex gains the apex; degenerate joins drop.
    pub fn cone(&self, apex: &Point) -> SimplicialChain {
        let mut out = Self::empty(self.k + 1);
        for s in &self.simplices {
            out.toggle(s.cone(apex));
        }
        out
    }

    /// Exact clip to the closed box.
    pub fn restrict(&self, x: &BoxRegion) -> SimplicialChain {
        self.split_by_box(x).0
    }

    /// Part inside `x` and the remainder; together they subdivide the chain.
    pub fn split_by_box(&self, x: &BoxRegion) -> (SimplicialChain, SimplicialChain) {
        let mut inside = Self::empty(self.k);
        let mut outside = Self::empty(self.k);
        let planes = box_planes(x);
        for s in &self.simplices {
            if s.vertices.iter().all(|v| x.contains(v)) {
                inside.toggle_nondegenerate(s.clone());
                continue;
            }
            let mut current = vec![s.clone()];
            for pl in &planes {
                let mut next = Vec::new();
                for piece in current {
                    for (side, sub) in pl.split_nondegenerate(&piece) {
                        if side > 0 {
                            outside.toggle_nondegenerate(sub);
                        } else {
                            next.push(sub);
                        }
                    }
                }
                current = next;
            }
            for piece in current {
                inside.toggle_nondegenerate(piece);
            }
        }
        (inside, outside)
    }
}

/// An affine function `x ↦ n·x − d`; its zero set is a plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    pub normal: Point,
    pub offset: Rational,
}

impl Plane {
    pub fn new(normal: Point, offset: Rational) -> Self {
        Self { normal, offset }
    }

    pub fn eval(&self, x: &Point) -> Rational {
        dot(&self.normal, x) - &self.offset
    }

    /// Splits by edge bisection into pieces with all values ≤ 0 (side −1),
    /// ≥ 0 (side +1) or = 0 (side 0). An edge crossing the plane is cut at
    /// its unique crossing point, so simplices sharing a face split that face
    /// identically.
    pub fn split(&self, s: &Simplex) -> Vec<(i8, Simplex)> {
        let mut out = Vec::new();
        self.split_into(s, !s.is_degenerate(), &mut out);
        out
    }

    /// `split` for a simplex already known to be nondegenerate.
    pub(crate) fn split_nondegenerate(&self, s: &Simplex) -> Vec<(i8, Simplex)> {
        let mut out = Vec::new();
        self.split_into(s, true, &mut out);
        out
    }

    /// Replacing a vertex by an interior point of a crossing edge scales the
    /// volume by a nonzero factor, so children keep `nondegenerate`.
    fn split_into(&self, s: &Simplex, nondegenerate: bool, out: &mut Vec<(i8, Simplex)>) {
        let vals: Vec<Rational> = s.vertices.iter().map(|v| self.eval(v)).collect();
        let mut crossing = None;
        'outer: for i in 0..vals.len() {
            for j in 0..vals.len() {
                if vals[i].is_negative() && vals[j].is_positive() {
                    crossing = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = crossing else {
            let side = if vals.iter().any(Signed::is_positive) {
                1
            } else if vals.iter().any(Signed::is_negative) {
                -1
            } else {
                0
            };
            out.push((side, s.clone()));
            return;
        };
        let t = &vals[i] / (&vals[i] - &vals[j]);
        let m = lerp(&s.vertices[i], &s.vertices[j], &t);
        for replace in [i, j] {
            let mut v = s.vertices.clone();
            v[replace] = m.clone();
            if nondegenerate {
                self.split_into(&Simplex::new(v), true, out);
            }
        }
    }
}

/// The six half-space functions of a box, each ≤ 0 inside.
pub(crate) fn box_planes(x: &BoxRegion) -> Vec<Plane> {
    let mut out = Vec::with_capacity(6);
    for axis in 0..3 {
        let mut n = crate::rational::zero_point();
        n[axis] = Rational::from_integer(1.into());
        out.push(Plane::new(n.clone(), x.hi[axis].clone()));
        let neg = crate::rational::scale(&n, &Rational::from_integer((-1).into()));
        out.push(Plane::new(neg, -x.lo[axis].clone()));
    }
    out
}
