//! Projections, shadows and the spanning test.
//!
//! A planar mod-2 region is carried by its boundary segments: a point's
//! parity is the number of segments crossed by a ray from it. Under this
//! encoding the region enclosed by a projected curve is just the curve's
//! segment list, so comparing a shadow with it is a single overlay.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dipoly::{Chain, Dipolyhedron};
use crate::error::{FilmError, Result};
use crate::grid::{Axes, GridChain};
use crate::measure::Measure;
use crate::planar::{self, orient, Seg2, P2};
use crate::rational::{cross, is_zero_vec, norm2, q, sub, Point, Rational};
use crate::simplicial::{chains_equal_mod2, EqualityMode, SimplicialChain};

/// Projection along `direction` onto a plane transverse to it.
///
/// Points are mapped along the direction onto the coordinate plane
/// `x_i = 0` for the dominant axis i; this differs from the orthogonal
/// projection by an affine isomorphism of planes, so parity questions have
/// the same answers and areas differ by the factor [`area_factor`].
///
/// [`area_factor`]: ProjectionDir::area_factor
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionDir {
    direction: Point,
    drop: usize,
}

impl ProjectionDir {
    pub fn new(direction: Point) -> Result<Self> {
        if is_zero_vec(&direction) {
            return Err(FilmError::Precondition("projection direction must be nonzero".into()));
        }
        let mut drop = 0;
        for i in 1..3 {
            if direction[i].abs() > direction[drop].abs() {
                drop = i;
            }
        }
        Ok(Self { direction, drop })
    }

    pub fn axis(i: usize) -> Self {
        let mut d = crate::rational::zero_point();
        d[i] = q(1);
        Self { direction: d, drop: i }
    }

    pub fn direction(&self) -> &Point {
        &self.direction
    }

    /// The coordinate axis this direction is parallel to, if any.
    pub fn as_axis(&self) -> Option<usize> {
        let nz: Vec<usize> = (0..3).filter(|i| !self.direction[*i].is_zero()).collect();
        (nz.len() == 1).then(|| nz[0])
    }

    pub fn project(&self, x: &Point) -> P2 {
        let i = self.drop;
        let t = &x[i] / &self.direction[i];
        let o: Vec<usize> = (0..3).filter(|j| *j != i).collect();
        [&x[o[0]] - &t * &self.direction[o[0]], &x[o[1]] - &t * &self.direction[o[1]]]
    }

    /// Orthogonal-plane area per unit of coordinate-plane area, `|d_i|/|d|`.
    pub fn area_factor(&self) -> Measure {
        let n2 = norm2(&self.direction);
        let di = self.direction[self.drop].abs();
        // |d_i|/|d| = sqrt(d_i²/|d|²).
        Measure::sqrt(&(&di * &di / n2))
    }
}

/// A projected chain in the target plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shadow {
    /// A mod-2 region, given by its boundary segments.
    Region(Vec<Seg2>),
    /// A mod-2 planar 1-chain.
    Curve(Vec<Seg2>),
}

impl Shadow {
    pub fn segments(&self) -> &[Seg2] {
        match self {
            Shadow::Region(s) | Shadow::Curve(s) => s,
        }
    }

    /// Area of the odd region in the coordinate plane (zero for curves).
    pub fn planar_area(&self) -> Rational {
        match self {
            Shadow::Region(s) => planar::odd_area(s),
            Shadow::Curve(_) => Rational::zero(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Shadow::Region(s) => planar::odd_witness(s).is_none(),
            Shadow::Curve(s) => {
                let mut m: BTreeMap<Seg2, usize> = BTreeMap::new();
                for (a, b) in s {
                    let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
                    *m.entry(key).or_insert(0) += 1;
                }
                m.values().all(|n| n % 2 == 0)
            }
        }
    }
}

fn grid_shadow(c: &GridChain, axis: usize) -> Result<Shadow> {
    let g = c.grid();
    let others: Vec<usize> = (0..3).filter(|j| *j != axis).collect();
    let mut stacks: BTreeMap<(i64, i64, Axes), usize> = BTreeMap::new();
    for cell in c.cells() {
        if cell.axes.contains(axis) {
            continue;
        }
        *stacks.entry((cell.base[others[0]], cell.base[others[1]], cell.axes)).or_insert(0) += 1;
    }
    let mut segs = Vec::new();
    let dir = ProjectionDir::axis(axis);
    for ((u, v, axes), n) in stacks {
        if n % 2 == 0 {
            continue;
        }
        let mut base = [0i64; 3];
        base[others[0]] = u;
        base[others[1]] = v;
        let cell = crate::grid::GridCell::new(base, axes);
        let corners: Vec<P2> = cell.corners().iter().map(|p| dir.project(&g.lattice_point(*p))).collect();
        match c.k() {
            1 => segs.push((corners[0].clone(), corners[1].clone())),
            2 => {
                // corners are ordered by bitmask: 00, 10, 01, 11.
                let cyc = [0, 1, 3, 2];
                for e in 0..4 {
                    segs.push((corners[cyc[e]].clone(), corners[cyc[(e + 1) % 4]].clone()));
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(if c.k() == 2 { Shadow::Region(segs) } else { Shadow::Curve(segs) })
}

fn simplicial_shadow(c: &SimplicialChain, dir: &ProjectionDir) -> Shadow {
    let mut segs = Vec::new();
    for s in c.iter() {
        let p: Vec<P2> = s.vertices().iter().map(|v| dir.project(v)).collect();
        match c.k() {
            1 => {
                if p[0] != p[1] {
                    segs.push((p[0].clone(), p[1].clone()));
                }
            }
            _ => {
                if !orient(&p[0], &p[1], &p[2]).is_zero() {
                    segs.extend(planar::triangle_edges(&[p[0].clone(), p[1].clone(), p[2].clone()]));
                }
            }
        }
    }
    if c.k() == 2 {
        Shadow::Region(segs)
    } else {
        Shadow::Curve(segs)
    }
}

/// `Π_*` of a 1- or 2-chain.
pub fn shadow(chain: &Chain, dir: &ProjectionDir) -> Result<Shadow> {
    if !matches!(chain.k(), 1 | 2) {
        return Err(FilmError::Dimension(format!("shadows are defined for k = 1, 2, got {}", chain.k())));
    }
    match chain {
        Chain::Grid(g) => match dir.as_axis() {
            Some(axis) => grid_shadow(g, axis),
            None => Err(FilmError::Unsupported("non-axis projection of a grid chain; embed it first".into())),
        },
        Chain::Simplicial(s) => Ok(simplicial_shadow(s, dir)),
    }
}

/// Why a direction cannot be used for a given curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inadmissible {
    ParallelSegment,
    NotSimple(String),
}

/// Checks that no segment of γ is parallel to the direction and that the
/// projected curve is a simple closed polygon.
pub fn admissibility(gamma: &SimplicialChain, dir: &ProjectionDir) -> std::result::Result<Vec<Seg2>, Inadmissible> {
    let mut segs = Vec::new();
    for s in gamma.iter() {
        let v = s.vertices();
        if is_zero_vec(&cross(&sub(&v[1], &v[0]), dir.direction())) {
            return Err(Inadmissible::ParallelSegment);
        }
        segs.push((dir.project(&v[0]), dir.project(&v[1])));
    }
    if segs.is_empty() {
        return Err(Inadmissible::NotSimple("empty curve".into()));
    }
    let mut degree: BTreeMap<&P2, usize> = BTreeMap::new();
    for (a, b) in &segs {
        *degree.entry(a).or_insert(0) += 1;
        *degree.entry(b).or_insert(0) += 1;
    }
    if degree.values().any(|d| *d != 2) {
        return Err(Inadmissible::NotSimple("projected vertex of degree other than 2".into()));
    }
    // Connectedness: walk the single loop.
    let mut adj: BTreeMap<&P2, Vec<&P2>> = BTreeMap::new();
    for (a, b) in &segs {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let start = &segs[0].0;
    let (mut prev, mut cur) = (start, &segs[0].1);
    let mut steps = 1;
    while cur != start {
        let nb = &adj[cur];
        let next = if nb[0] == prev { nb[1] } else { nb[0] };
        prev = cur;
        cur = next;
        steps += 1;
        if steps > segs.len() {
            break;
        }
    }
    if steps != segs.len() {
        return Err(Inadmissible::NotSimple("projected curve has several components".into()));
    }
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let (s, t) = (&segs[i], &segs[j]);
            let shared: Vec<&P2> = [&s.0, &s.1].into_iter().filter(|p| **p == t.0 || **p == t.1).collect();
            if shared.is_empty() {
                if planar::segments_intersect(s, t) {
                    return Err(Inadmissible::NotSimple("projected segments cross".into()));
                }
            } else {
                let c = shared[0];
                let a = if s.0 == *c { &s.1 } else { &s.0 };
                let b = if t.0 == *c { &t.1 } else { &t.0 };
                if orient(c, a, b).is_zero() {
                    let da = [&a[0] - &c[0], &a[1] - &c[1]];
                    let db = [&b[0] - &c[0], &b[1] - &c[1]];
                    if (&da[0] * &db[0] + &da[1] * &db[1]).is_positive() {
                        return Err(Inadmissible::NotSimple("projected segments overlap".into()));
                    }
                }
            }
        }
    }
    Ok(segs)
}

/// The 3 axes followed by 10 fixed pseudo-random integer directions.
pub fn default_directions() -> Vec<ProjectionDir> {
    let mut out: Vec<ProjectionDir> = (0..3).map(ProjectionDir::axis).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
    while out.len() < 13 {
        let mut d = crate::rational::zero_point();
        for c in d.iter_mut() {
            let m: i64 = rng.gen_range(1..=9);
            *c = q(if rng.gen_bool(0.5) { m } else { -m });
        }
        let p = ProjectionDir::new(d).expect("nonzero");
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Spans,
    DoesNotSpan,
    /// No admissible direction was supplied; nothing was decided.
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionReport {
    pub direction: Point,
    pub admissible: bool,
    pub reason: Option<String>,
    /// Whether the shadow of B equals the enclosed region.
    pub matches: Option<bool>,
    /// Area of the enclosed region in the plane orthogonal to the direction.
    pub enclosed_area: Option<Measure>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningReport {
    pub verdict: Verdict,
    pub boundary_ok: bool,
    pub directions: Vec<DirectionReport>,
}

impl SpanningReport {
    pub fn spans(&self) -> bool {
        self.verdict == Verdict::Spans
    }
}

/// `∂A = δγ`, i.e. `∂C = 0` and `∂B + C = γ`.
pub fn has_boundary(a: &Dipolyhedron, gamma: &SimplicialChain) -> Result<bool> {
    if a.k() != 2 || gamma.k() != 1 {
        return Err(FilmError::Dimension("spanning needs a 2-dipolyhedron and a 1-cycle".into()));
    }
    if let (Chain::Grid(b), Chain::Grid(c)) = (a.b(), a.c()) {
        let g = GridChain::from_simplicial_edges(b.grid(), gamma);
        if let Some(g) = g {
            return Ok(c.boundary()?.is_empty() && b.boundary()?.add(c)? == g);
        }
    }
    let b = a.b().to_simplicial();
    let c = a.c().to_simplicial();
    let dc = c.boundary()?;
    if !dc.is_empty() && !chains_equal_mod2(&dc, &SimplicialChain::empty(0), EqualityMode::Exact)?.equal {
        return Ok(false);
    }
    let lhs = b.boundary()?.add(&c)?;
    Ok(chains_equal_mod2(&lhs, gamma, EqualityMode::Exact)?.equal)
}

/// Spanning test: `∂A = δγ`, and for every admissible direction the shadow
/// of B has the same mod-2 parity as the region enclosed by the projected γ.
pub fn spanning_check(a: &Dipolyhedron, gamma: &SimplicialChain, dirs: &[ProjectionDir]) -> Result<SpanningReport> {
    if !has_boundary(a, gamma)? {
        return Ok(SpanningReport { verdict: Verdict::DoesNotSpan, boundary_ok: false, directions: Vec::new() });
    }
    let b = a.b().to_simplicial();
    let mut reports = Vec::new();
    let mut any = false;
    let mut all = true;
    for d in dirs {
        match admissibility(gamma, d) {
            Err(why) => reports.push(DirectionReport {
                direction: d.direction().clone(),
                admissible: false,
                reason: Some(format!("{why:?}")),
                matches: None,
                enclosed_area: None,
            }),
            Ok(curve) => {
                any = true;
                let mut segs = simplicial_shadow(&b, d).segments().to_vec();
                let area = d.area_factor().scale(&planar::odd_area(&curve));
                segs.extend(curve);
                let ok = planar::odd_witness(&segs).is_none();
                all &= ok;
                reports.push(DirectionReport {
                    direction: d.direction().clone(),
                    admissible: true,
                    reason: None,
                    matches: Some(ok),
                    enclosed_area: Some(area),
                });
            }
        }
    }
    let verdict = match (any, all) {
        (false, _) => Verdict::Vacuous,
        (true, true) => Verdict::Spans,
        (true, false) => Verdict::DoesNotSpan,
    };
    Ok(SpanningReport { verdict, boundary_ok: true, directions: reports })
}
