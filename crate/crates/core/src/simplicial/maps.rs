//! Piecewise-linear pushforwards and the radial clamp into a cube.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};

use super::{Plane, Simplex, SimplicialChain};
use crate::error::{FilmError, Result};
use crate::measure::Measure;
use crate::rational::{dot, q, scale, sub, sup_norm, zero_point, Point, Rational};

pub type Matrix3 = [[Rational; 3]; 3];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub matrix: Matrix3,
    pub translation: Point,
}

/// Enclosure of `λ_max(MᵀM)`, the squared operator norm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorNorm {
    pub sq_lo: Rational,
    pub sq_hi: Rational,
    /// `sq_lo == sq_hi` and the value was confirmed as an eigenvalue.
    pub exact: bool,
}

impl OperatorNorm {
    /// Certified upper bound for `Lip^k`.
    pub fn power_upper(&self, k: usize) -> Measure {
        let sq = &self.sq_hi;
        let mut out = Measure::rational(Rational::one());
        for _ in 0..k / 2 {
            out = out.scale(sq);
        }
        if k % 2 == 1 {
            out = out.mul(&Measure::sqrt(sq));
        }
        out
    }
}

impl AffineMap {
    pub fn new(matrix: Matrix3, translation: Point) -> Self {
        Self { matrix, translation }
    }

    pub fn identity() -> Self {
        Self::scaling(&Rational::one())
    }

    pub fn scaling(s: &Rational) -> Self {
        let mut m: Matrix3 = Default::default();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = s.clone();
        }
        Self::new(m, zero_point())
    }

    pub fn translation(t: Point) -> Self {
        let mut a = Self::identity();
        a.translation = t;
        a
    }

    pub fn apply(&self, x: &Point) -> Point {
        let mut out = self.translation.clone();
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..3 {
                *o += &self.matrix[i][j] * &x[j];
            }
        }
        out
    }

    /// `MᵀM`.
    pub fn gram(&self) -> Matrix3 {
        let mut g: Matrix3 = Default::default();
        for (i, row) in g.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|r| &self.matrix[r][i] * &self.matrix[r][j]).sum();
            }
        }
        g
    }

    /// Squared operator norm by exact bisection on `tI − MᵀM ⪰ 0`.
    pub fn operator_norm(&self) -> OperatorNorm {
        let g = self.gram();
        let mut lo = Rational::zero();
        let mut hi: Rational = (0..3).map(|i| g[i][i].clone()).sum();
        let shifted = |t: &Rational| -> Vec<Vec<Rational>> {
            (0..3)
                .map(|i| (0..3).map(|j| if i == j { t - &g[i][j] } else { -g[i][j].clone() }).collect())
                .collect()
        };
        let width = Rational::new(1.into(), num::BigInt::from(1u64) << 80);
        while &hi - &lo > width {
            // Try the simplest rational in range first; eigenvalues of small
            // integer matrices are often rational.
            let s = simplest_between(&lo, &hi);
            let m = shifted(&s);
            if is_psd(&m) {
                if det(&m).is_zero() {
                    return OperatorNorm { sq_lo: s.clone(), sq_hi: s, exact: true };
                }
                hi = s;
            } else {
                lo = s;
            }
            let mid = (&lo + &hi) / q(2);
            if is_psd(&shifted(&mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if det(&shifted(&hi)).is_zero() && is_psd(&shifted(&hi)) {
            return OperatorNorm { sq_lo: hi.clone(), sq_hi: hi, exact: true };
        }
        OperatorNorm { sq_lo: lo, sq_hi: hi, exact: false }
    }
}

/// Simplest rational (smallest denominator) in the closed interval.
fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let fl = lo.floor();
    if &fl == lo || &fl + Rational::one() <= *hi {
        return if &fl == lo { fl } else { fl + Rational::one() };
    }
    // lo, hi share the same integer part; recurse on reciprocals of the fractional parts.
    let a = lo - &fl;
    let b = hi - &fl;
    let inner = simplest_between(&b.recip(), &a.recip());
    fl + inner.recip()
}

pub(crate) fn det(m: &[Vec<Rational>]) -> Rational {
    match m.len() {
        0 => Rational::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        n => {
            let mut acc = Rational::zero();
            for c in 0..n {
                if m[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Rational>> =
                    m[1..].iter().map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| v.clone()).collect()).collect();
                let term = &m[0][c] * det(&minor);
                if c % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
    }
}

/// Positive semidefiniteness of a symmetric matrix via all principal minors.
pub(crate) fn is_psd(m: &[Vec<Rational>]) -> bool {
    let n = m.len();
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sub: Vec<Vec<Rational>> = idx.iter().map(|&i| idx.iter().map(|&j| m[i][j].clone()).collect()).collect();
        if det(&sub).is_negative() {
            return false;
        }
    }
    true
}

/// Checks `|E′x| ≤ L|Ex|` for all x, where E and E′ are the edge matrices
/// of a simplex and its image.
fn stretch_within(src: &[Point], img: &[Point], lip: &Rational) -> bool {
    let k = src.len();
    let l2 = lip * lip;
    let m: Vec<Vec<Rational>> = (0..k)
        .map(|i| (0..k).map(|j| &l2 * dot(&src[i], &src[j]) - dot(&img[i], &img[j])).collect())
        .collect();
    is_psd(&m)
}

/// A piecewise-linear map with a declared Lipschitz constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PLMap {
    Affine { map: AffineMap, lip: Rational },
    /// Vertex relocation on a fixed complex: any simplex pushed forward must
    /// have all its vertices in the table, and is mapped linearly.
    Table { table: BTreeMap<Point, Point>, lip: Rational },
}

impl PLMap {
    pub fn affine(map: AffineMap, lip: Rational) -> Self {
        PLMap::Affine { map, lip }
    }

    pub fn identity() -> Self {
        PLMap::affine(AffineMap::identity(), Rational::one())
    }

    pub fn lip(&self) -> &Rational {
        match self {
            PLMap::Affine { lip, .. } | PLMap::Table { lip, .. } => lip,
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match self {
            PLMap::Affine { map, .. } => Ok(map.apply(x)),
            PLMap::Table { table, .. } => table
                .get(x)
                .cloned()
                .ok_or_else(|| FilmError::Precondition(format!("vertex {x:?} outside the map's domain"))),
        }
    }
}

/// `f_*A`: images of simplices, degenerate images dropped.
pub fn pushforward(f: &PLMap, chain: &SimplicialChain) -> Result<SimplicialChain> {
    if let PLMap::Affine { map, lip } = f {
        let g = map.gram();
        let l2 = lip * lip;
        let m: Vec<Vec<Rational>> =
            (0..3).map(|i| (0..3).map(|j| if i == j { &l2 - &g[i][j] } else { -g[i][j].clone() }).collect()).collect();
        if lip.is_negative() || !is_psd(&m) {
            return Err(FilmError::Contract(format!("affine map stretches more than declared Lipschitz constant {lip}")));
        }
    }
    let mut out = SimplicialChain::empty(chain.k());
    for s in chain.iter() {
        let imgs: Vec<Point> = s.vertices().iter().map(|v| f.apply(v)).collect::<Result<_>>()?;
        if let PLMap::Table { lip, .. } = f {
            let e = s.edge_vectors();
            let e2: Vec<Point> = imgs[1..].iter().map(|v| sub(v, &imgs[0])).collect();
            if !stretch_within(&e, &e2, lip) {
                return Err(FilmError::Contract(format!("simplex stretch exceeds declared Lipschitz constant {lip}")));
            }
        }
        out.toggle(Simplex::new(imgs));
    }
    Ok(out)
}

/// `f_r(x) = x` for `|x|∞ ≤ r`, else `r·x/|x|∞`.
pub fn clamp_point(r: &Rational, x: &Point) -> Point {
    let n = sup_norm(x);
    if &n <= r {
        x.clone()
    } else {
        scale(x, &(r / n))
    }
}

fn clamp_planes(r: &Rational) -> Vec<Plane> {
    let mut out = Vec::with_capacity(12);
    for i in 0..3 {
        for j in i + 1..3 {
            for s in [1, -1] {
                let mut n = zero_point();
                n[i] = q(1);
                n[j] = q(s);
                out.push(Plane::new(n, Rational::zero()));
            }
        }
    }
    for i in 0..3 {
        for s in [1, -1] {
            let mut n = zero_point();
            n[i] = q(s);
            out.push(Plane::new(n, r.clone()));
        }
    }
    out
}

/// Radial clamp into the cube `|x|∞ ≤ r`.
///
/// Simplices leaving the cube are cut by the diagonal planes `x_i = ±x_j` and
/// the face planes, so every piece lies in one wedge where the clamp is
/// projective and its image is again a simplex.
pub fn clamp_to_cube(r: &Rational, chain: &SimplicialChain) -> Result<SimplicialChain> {
    if !r.is_positive() {
        return Err(FilmError::Precondition(format!("clamp radius must be positive, got {r}")));
    }
    let planes = clamp_planes(r);
    let mut out = SimplicialChain::empty(chain.k());
    for s in chain.iter() {
        if s.vertices().iter().all(|v| &sup_norm(v) <= r) {
            out.toggle(s.clone());
            continue;
        }
        let mut pieces = vec![s.clone()];
        for pl in &planes {
            pieces = pieces.iter().flat_map(|p| pl.split(p).into_iter().map(|(_, x)| x)).collect();
        }
        for p in pieces {
            out.toggle(Simplex::new(p.vertices().iter().map(|v| clamp_point(r, v)).collect()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{pt, qf};
    use crate::simplicial::{chains_equal_mod2, EqualityMode};

    fn rowm(rows: [[i64; 3]; 3]) -> Matrix3 {
        rows.map(|r| r.map(q))
    }

    #[test]
    fn operator_norm_of_scaling_is_exact() {
        let n = AffineMap::scaling(&q(2)).operator_norm();
        assert!(n.exact);
        assert_eq!(n.sq_hi, q(4));
    }

    #[test]
    fn operator_norm_of_shear() {
        // Shear [[1,1],[0,1]]: λ_max(MᵀM) = (3+√5)/2.
        let m = AffineMap::new(rowm([[1, 1, 0], [0, 1, 0], [0, 0, 1]]), zero_point());
        let n = m.operator_norm();
        assert!(!n.exact);
        let truth = (3.0 + 5f64.sqrt()) / 2.0;
        assert!(crate::rational::to_f64(&n.sq_lo) <= truth + 1e-12);
        assert!(crate::rational::to_f64(&n.sq_hi) >= truth - 1e-12);
        assert!(&n.sq_hi - &n.sq_lo < qf(1, 1_000_000_000));
    }

    #[test]
    fn identity_pushforward() {
        let c = SimplicialChain::new(2, [Simplex::triangle(pt(0, 0, 0), pt(1, 0, 0), pt(0, 1, 0))]).unwrap();
        assert_eq!(pushforward(&PLMap::identity(), &c).unwrap(), c);
    }

    #[test]
    fn scaling_doubles_length() {
        let c = SimplicialChain::new(1, [Simplex::segment(pt(0, 0, 0), pt(1, 1, 0))]).unwrap();
        let f = PLMap::affine(AffineMap::scaling(&q(2)), q(2));
        let img = pushforward(&f, &c).unwrap();
        assert_eq!(img.mass(), c.mass().scale(&q(2)));
    }

    #[test]
    fn projection_kills_vertical_triangle() {
        let c = SimplicialChain::new(2, [Simplex::triangle(pt(0, 0, 0), pt(1, 0, 0), pt(0, 0, 1))]).unwrap();
        let p = PLMap::affine(AffineMap::new(rowm([[1, 0, 0], [0, 1, 0], [0, 0, 0]]), zero_point()), q(1));
        assert!(pushforward(&p, &c).unwrap().is_empty());
    }

    #[test]
    fn understated_lipschitz_is_rejected() {
        let c = SimplicialChain::new(1, [Simplex::segment(pt(0, 0, 0), pt(1, 0, 0))]).unwrap();
        let f = PLMap::affine(AffineMap::scaling(&q(2)), qf(3, 2));
        assert!(matches!(pushforward(&f, &c), Err(FilmError::Contract(_))));
        let mut table = BTreeMap::new();
        table.insert(pt(0, 0, 0), pt(0, 0, 0));
        table.insert(pt(1, 0, 0), pt(3, 0, 0));
        let t = PLMap::Table { table, lip: q(2) };
        assert!(matches!(pushforward(&t, &c), Err(FilmError::Contract(_))));
    }

    #[test]
    fn clamp_point_formula() {
        let r = q(1);
        assert_eq!(clamp_point(&r, &pt(3, 0, 0)), pt(1, 0, 0));
        assert_eq!(clamp_point(&r, &pt(1, -1, 0)), pt(1, -1, 0));
    }

    #[test]
    fn clamp_segment_to_surface() {
        let r = q(1);
        let c = SimplicialChain::new(1, [Simplex::segment(pt(2, 0, 0), pt(0, 2, 0))]).unwrap();
        let out = clamp_to_cube(&r, &c).unwrap();
        assert!(out.iter().all(|s| s.vertices().iter().all(|v| sup_norm(v) <= r)));
        // Image is the polyline (1,0,0)-(1,1,0)-(0,1,0).
        let expect = SimplicialChain::new(
            1,
            [Simplex::segment(pt(1, 0, 0), pt(1, 1, 0)), Simplex::segment(pt(1, 1, 0), pt(0, 1, 0))],
        )
        .unwrap();
        assert!(chains_equal_mod2(&out, &expect, EqualityMode::Exact).unwrap().equal);
        assert!(out.mass().le(&c.mass()));
        assert_eq!(clamp_to_cube(&r, &out).unwrap(), out);
    }
}
