//! Geometric equality and normalization of mod-2 presentations.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Simplex, SimplicialChain};
use crate::error::{FilmError, Result};
use crate::grid::{minimal_carrier, GridCell, GridSpec};
use crate::measure::Measure;
use crate::planar::{self, Seg2, P2};
use crate::rational::{cross, dot, int_point, primitive_direction, sub, Point, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqualityMode {
    Exact,
    Sampled { trials: usize, seed: u64 },
}

/// Largest number of boundary segments handled by one exact planar overlay.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactLimit(pub usize);

impl Default for ExactLimit {
    fn default() -> Self {
        ExactLimit(6000)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqualityReport {
    pub equal: bool,
    /// False only for a sampled "equal" verdict.
    pub certain: bool,
    pub mode: &'static str,
    /// A point where the two chains have different coverage parity.
    pub witness: Option<Point>,
    /// Set when exact mode could not run and sampling was used instead.
    pub fallback: Option<String>,
}

type LineKey = ([BigInt; 3], Point);
type PlaneKey = ([BigInt; 3], Rational);

fn line_key(s: &Simplex) -> (LineKey, usize) {
    let v = s.vertices();
    let p = primitive_direction(&sub(&v[1], &v[0]));
    let i = (0..3).find(|i| !p[*i].is_zero()).unwrap();
    let pr = int_point(&p);
    let t = &v[0][i] / &pr[i];
    let base: Point = [&v[0][0] - &t * &pr[0], &v[0][1] - &t * &pr[1], &v[0][2] - &t * &pr[2]];
    ((p, base), i)
}

fn plane_key(s: &Simplex) -> (PlaneKey, usize) {
    let v = s.vertices();
    let n = cross(&sub(&v[1], &v[0]), &sub(&v[2], &v[0]));
    let p = primitive_direction(&n);
    let j = (0..3).find(|i| !p[*i].is_zero()).unwrap();
    let d = dot(&int_point(&p), &v[0]);
    ((p, d), j)
}

fn project_drop(x: &Point, j: usize) -> P2 {
    let o: Vec<usize> = (0..3).filter(|i| *i != j).collect();
    [x[o[0]].clone(), x[o[1]].clone()]
}

fn lift(y: &P2, key: &PlaneKey, j: usize) -> Point {
    let (p, d) = key;
    let pr = int_point(p);
    let o: Vec<usize> = (0..3).filter(|i| *i != j).collect();
    let mut x: Point = crate::rational::zero_point();
    x[o[0]] = y[0].clone();
    x[o[1]] = y[1].clone();
    x[j] = (d - &pr[o[0]] * &y[0] - &pr[o[1]] * &y[1]) / &pr[j];
    x
}

struct Groups {
    points: BTreeMap<Point, usize>,
    lines: BTreeMap<(LineKey, Option<GridCell>), (usize, Vec<(Rational, Rational)>)>,
    planes: BTreeMap<(PlaneKey, Option<GridCell>), (usize, Vec<Seg2>)>,
}

fn group(chain: &SimplicialChain, grid: Option<&GridSpec>) -> Result<Groups> {
    let mut g = Groups { points: BTreeMap::new(), lines: BTreeMap::new(), planes: BTreeMap::new() };
    let carrier = |s: &Simplex| grid.and_then(|gr| minimal_carrier(gr, s.vertices()));
    match chain.k() {
        0 => {
            for s in chain.iter() {
                *g.points.entry(s.vertices()[0].clone()).or_insert(0) += 1;
            }
        }
        1 => {
            for s in chain.iter() {
                let (key, i) = line_key(s);
                let v = s.vertices();
                let e = g.lines.entry((key, carrier(s))).or_insert((i, Vec::new()));
                e.1.push((v[0][i].clone(), v[1][i].clone()));
            }
        }
        2 => {
            for s in chain.iter() {
                let (key, j) = plane_key(s);
                let v = s.vertices();
                let t: Vec<P2> = v.iter().map(|x| project_drop(x, j)).collect();
                let e = g.planes.entry((key, carrier(s))).or_insert((j, Vec::new()));
                e.1.extend(planar::triangle_edges(&[t[0].clone(), t[1].clone(), t[2].clone()]));
            }
        }
        k => return Err(FilmError::Unsupported(format!("exact overlay of {k}-chains"))),
    }
    // Pieces not confined to one grid cell may overlap pieces of any carrier
    // in the same plane or line: merge such groups.
    if grid.is_some() {
        let loose_lines: Vec<LineKey> = g.lines.keys().filter(|(_, c)| c.is_none()).map(|(k, _)| k.clone()).collect();
        for key in loose_lines {
            let parts: Vec<_> = g.lines.keys().filter(|(k, _)| *k == key).cloned().collect();
            let mut merged: Option<(usize, Vec<(Rational, Rational)>)> = None;
            for p in parts {
                let (i, v) = g.lines.remove(&p).unwrap();
                merged.get_or_insert((i, Vec::new())).1.extend(v);
            }
            g.lines.insert((key, None), merged.unwrap());
        }
        let loose_planes: Vec<PlaneKey> = g.planes.keys().filter(|(_, c)| c.is_none()).map(|(k, _)| k.clone()).collect();
        for key in loose_planes {
            let parts: Vec<_> = g.planes.keys().filter(|(k, _)| *k == key).cloned().collect();
            let mut merged: Option<(usize, Vec<Seg2>)> = None;
            for p in parts {
                let (j, v) = g.planes.remove(&p).unwrap();
                merged.get_or_insert((j, Vec::new())).1.extend(v);
            }
            g.planes.insert((key, None), merged.unwrap());
        }
    }
    Ok(g)
}

/// Odd-parity intervals of a multiset of closed intervals.
fn odd_intervals(ivs: &[(Rational, Rational)]) -> Vec<(Rational, Rational)> {
    let mut ev: Vec<Rational> = Vec::with_capacity(ivs.len() * 2);
    for (a, b) in ivs {
        ev.push(a.clone());
        ev.push(b.clone());
    }
    ev.sort();
    let mut out: Vec<(Rational, Rational)> = Vec::new();
    let mut parity = false;
    let mut i = 0;
    let mut open: Option<Rational> = None;
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
    out
}

fn line_point(key: &LineKey, i: usize, t: &Rational) -> Point {
    let (p, base) = key;
    let pr = int_point(p);
    let s = t / &pr[i];
    [&base[0] + &s * &pr[0], &base[1] + &s * &pr[1], &base[2] + &s * &pr[2]]
}

fn exact_witness(s: &SimplicialChain, limit: ExactLimit, grid: Option<&GridSpec>) -> Result<Option<Point>> {
    let g = group(s, grid)?;
    for (p, n) in &g.points {
        if n % 2 == 1 {
            return Ok(Some(p.clone()));
        }
    }
    for ((key, _), (i, ivs)) in &g.lines {
        if let Some((a, b)) = odd_intervals(ivs).first() {
            let half = Rational::new(1.into(), 2.into());
            return Ok(Some(line_point(key, *i, &((a + b) * half))));
        }
    }
    for ((key, _), (j, segs)) in &g.planes {
        if segs.len() > limit.0 {
            return Err(FilmError::Unsupported(format!(
                "exact overlay size {} exceeds limit {}",
                segs.len(),
                limit.0
            )));
        }
        if let Some(w) = planar::odd_witness(segs) {
            return Ok(Some(lift(&w, key, *j)));
        }
    }
    Ok(None)
}

fn random_interior_point(s: &Simplex, rng: &mut ChaCha8Rng) -> Point {
    let w: Vec<u64> = (0..s.vertices().len()).map(|_| rng.gen_range(1..=1u64 << 20)).collect();
    let total: u64 = w.iter().sum();
    let mut out = crate::rational::zero_point();
    for (v, wi) in s.vertices().iter().zip(&w) {
        let c = Rational::new(BigInt::from(*wi), BigInt::from(total));
        for a in 0..3 {
            out[a] += &c * &v[a];
        }
    }
    out
}

fn sampled_witness(s: &SimplicialChain, trials: usize, seed: u64) -> Option<Point> {
    if s.is_empty() {
        return None;
    }
    let simplices: Vec<&Simplex> = s.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        for _attempt in 0..20 {
            let base = simplices[rng.gen_range(0..simplices.len())];
            let x = random_interior_point(base, &mut rng);
            let mut on_boundary = false;
            let mut parity = false;
            for t in &simplices {
                if let Some(b) = t.barycentric(&x) {
                    if b.iter().any(Signed::is_negative) {
                        continue;
                    }
                    if b.iter().any(Zero::is_zero) {
                        on_boundary = true;
                        break;
                    }
                    parity = !parity;
                }
            }
            if on_boundary {
                continue;
            }
            if parity {
                return Some(x);
            }
            break;
        }
    }
    None
}

/// Decides whether two presentations define the same mod-2 chain.
///
/// Exact mode overlays the symmetric difference inside each supporting line
/// or plane and looks for an odd-parity cell; it is sound and complete for
/// k ≤ 2. For 3-chains, or when an overlay exceeds the limit, it reports a
/// fallback to sampling.
pub fn chains_equal_mod2(a: &SimplicialChain, b: &SimplicialChain, mode: EqualityMode) -> Result<EqualityReport> {
    chains_equal_mod2_with(a, b, mode, ExactLimit::default(), None)
}

/// As [`chains_equal_mod2`], bucketing pieces by their minimal grid cell.
pub fn chains_equal_mod2_with(
    a: &SimplicialChain,
    b: &SimplicialChain,
    mode: EqualityMode,
    limit: ExactLimit,
    grid: Option<&GridSpec>,
) -> Result<EqualityReport> {
    let s = a.add(b)?;
    match mode {
        EqualityMode::Exact => match exact_witness(&s, limit, grid) {
            Ok(w) => Ok(EqualityReport { equal: w.is_none(), certain: true, mode: "exact", witness: w, fallback: None }),
            Err(FilmError::Unsupported(why)) => {
                let w = sampled_witness(&s, 256, 0);
                Ok(EqualityReport {
                    equal: w.is_none(),
                    certain: w.is_some(),
                    mode: "sampled",
                    witness: w,
                    fallback: Some(format!("fallback to sampled: {why}")),
                })
            }
            Err(e) => Err(e),
        },
        EqualityMode::Sampled { trials, seed } => {
            let w = sampled_witness(&s, trials, seed);
            Ok(EqualityReport { equal: w.is_none(), certain: w.is_some(), mode: "sampled", witness: w, fallback: None })
        }
    }
}

/// Minimal presentation: disjoint pieces covering the odd-parity set.
pub fn reduce_mod2(chain: &SimplicialChain) -> Result<SimplicialChain> {
    reduce_impl(chain, None)
}

/// As [`reduce_mod2`], processing pieces grid cell by grid cell.
pub fn reduce_mod2_on_grid(chain: &SimplicialChain, grid: &GridSpec) -> Result<SimplicialChain> {
    reduce_impl(chain, Some(grid))
}

fn reduce_impl(chain: &SimplicialChain, grid: Option<&GridSpec>) -> Result<SimplicialChain> {
    let g = group(chain, grid)?;
    let mut out = SimplicialChain::empty(chain.k());
    for (p, n) in g.points {
        if n % 2 == 1 {
            out.toggle(Simplex::point(p));
        }
    }
    for ((key, _), (i, ivs)) in g.lines {
        for (a, b) in odd_intervals(&ivs) {
            out.toggle(Simplex::segment(line_point(&key, i, &a), line_point(&key, i, &b)));
        }
    }
    for ((key, _), (j, segs)) in g.planes {
        for t in planar::odd_triangles(&segs) {
            let v: Vec<Point> = t.iter().map(|y| lift(y, &key, j)).collect();
            out.toggle(Simplex::new(v));
        }
    }
    Ok(out)
}

/// Mass of the chain as a set (overlaps cancelled mod 2).
pub fn geometric_mass(chain: &SimplicialChain) -> Result<Measure> {
    Ok(reduce_mod2(chain)?.mass())
}
