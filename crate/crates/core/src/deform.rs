//! Deformation of simplicial chains onto the k-skeleton of a cubical grid.
//!
//! The chain is clipped to grid cubes and then pushed outward cell by cell,
//! from cubes down to (k+1)-faces, by radial projection from an interior
//! center onto the cell boundary. Each piece is first cut by the planes
//! where two facet ratios agree, so a single facet is hit and the
//! projection is projective on it. The swept prisms of the chain form R and
//! those of its boundary form Q. The boundary is pushed one level further,
//! through the k-cells, so that what remains in the k-skeleton has constant
//! parity on each k-face and snaps to whole faces as P.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dipoly::{Chain, Dipolyhedron};
use crate::error::{FilmError, Result};
use crate::grid::{minimal_carrier, GridCell, GridChain, GridSpec};
use crate::measure::Measure;
use crate::rational::{add, dot, norm2, q, scale, sub, to_f64, Point, Rational};
use crate::simplicial::{
    chains_equal_mod2_with, EqualityMode, ExactLimit, Plane, Simplex, SimplicialChain,
};

#[derive(Clone, Debug, PartialEq)]
pub struct DeformConfig {
    pub candidate_centers: usize,
    /// Minimum distance from the chain to a center, as a fraction of ε.
    pub clearance: Rational,
    pub seed: u64,
    pub c_max: f64,
}

impl Default for DeformConfig {
    fn default() -> Self {
        Self { candidate_centers: 16, clearance: Rational::new(1.into(), 8.into()), seed: 0, c_max: 100.0 }
    }
}

impl DeformConfig {
    fn validate(&self) -> Result<()> {
        if self.candidate_centers == 0 {
            return Err(FilmError::Precondition("need at least one candidate center".into()));
        }
        if !self.clearance.is_positive() || self.clearance >= Rational::new(1.into(), 2.into()) {
            return Err(FilmError::Precondition(format!("clearance {} must lie in (0, 1/2)", self.clearance)));
        }
        Ok(())
    }
}

/// Measured ratios; `0/0` is reported as 0 and `x/0` as infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct Constants {
    pub c_p: f64,
    pub c_dp: f64,
    pub c_q: f64,
    pub c_r: f64,
}

impl Constants {
    pub fn max(&self) -> f64 {
        self.c_p.max(self.c_dp).max(self.c_q).max(self.c_r)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.c_p, self.c_dp, self.c_q, self.c_r]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportReport {
    /// Upper bound on the distance of `|P| ∪ |R|` from `|A|`, in units of ε.
    pub pr_from_a: f64,
    /// Upper bound on the distance of `|∂P| ∪ |Q|` from `|∂A|`, in units of ε.
    pub dpq_from_da: f64,
    /// Both bounds certified exactly to be at most 6ε.
    pub within_six_eps: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeformationResult {
    pub p: GridChain,
    pub q: SimplicialChain,
    pub r: SimplicialChain,
    pub constants: Constants,
    pub support: SupportReport,
    /// Cells where no candidate met the clearance and the most distant one was used.
    pub fallbacks: Vec<GridCell>,
    /// `A − P = Q + ∂R` checked by exact overlay.
    pub identity_verified: bool,
    /// The projected chain coincides with the snapped P.
    pub skeleton_verified: bool,
}

fn ratio_m(a: &Measure, b: &Measure) -> f64 {
    if b.is_zero() {
        if a.is_zero() {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        a.approx() / b.approx()
    }
}

/// Cuts every simplex along the grid planes it crosses.
pub fn clip_to_grid(chain: &SimplicialChain, grid: &GridSpec) -> SimplicialChain {
    let mut out = SimplicialChain::empty(chain.k());
    for s in chain.iter() {
        let mut pieces = vec![s.clone()];
        for axis in 0..3 {
            let lo = s.vertices().iter().map(|v| &v[axis]).min().unwrap();
            let hi = s.vertices().iter().map(|v| &v[axis]).max().unwrap();
            let i0 = grid.floor_index(axis, lo) + 1;
            let i1 = grid.floor_index(axis, hi);
            for i in i0..=i1 {
                let mut n = crate::rational::zero_point();
                n[axis] = q(1);
                let off = &grid.origin[axis] + &grid.epsilon * Rational::from_integer(i.into());
                if &off >= hi {
                    continue;
                }
                let pl = Plane::new(n, off);
                pieces = pieces.iter().flat_map(|p| pl.split_nondegenerate(p).into_iter().map(|(_, x)| x)).collect();
            }
        }
        for p in pieces {
            out.toggle_nondegenerate(p);
        }
    }
    out
}

/// `ρ_F(x) = α·x_j + β`, which equals 1 on facet F and 0 at the center.
#[derive(Clone, Debug)]
struct FacetRatio {
    axis: usize,
    alpha: Rational,
    beta: Rational,
}

impl FacetRatio {
    fn eval(&self, x: &Point) -> Rational {
        &self.alpha * &x[self.axis] + &self.beta
    }
}

fn cell_bounds(grid: &GridSpec, cell: &GridCell) -> (Point, Point) {
    (grid.lattice_point(cell.base), grid.lattice_point(cell.top()))
}

fn facet_ratios(grid: &GridSpec, cell: &GridCell, c: &Point) -> Vec<FacetRatio> {
    let (lo, hi) = cell_bounds(grid, cell);
    let mut out = Vec::new();
    for axis in cell.axes.iter() {
        for b in [&hi[axis], &lo[axis]] {
            let alpha = (b - &c[axis]).recip();
            let beta = -(&c[axis] * &alpha);
            out.push(FacetRatio { axis, alpha, beta });
        }
    }
    out
}

/// The plane `ρ_F = ρ_G`.
fn ratio_plane(f: &FacetRatio, g: &FacetRatio) -> Plane {
    let mut n = crate::rational::zero_point();
    n[f.axis] += &f.alpha;
    n[g.axis] -= &g.alpha;
    Plane::new(n, &g.beta - &f.beta)
}

/// Index of a facet whose ratio is maximal at every vertex, if any.
fn common_facet(vals: &[Vec<Rational>]) -> Option<usize> {
    (0..vals[0].len()).find(|&f| vals.iter().all(|row| row.iter().all(|g| &row[f] >= g)))
}

/// Splits `s` until each part has a single facet of maximal ratio, cutting
/// only along planes that separate two vertices with different maxima.
fn split_by_facet(s: &Simplex, fr: &[FacetRatio], out: &mut Vec<(Simplex, usize)>) -> Result<()> {
    let vals: Vec<Vec<Rational>> = s.vertices().iter().map(|v| fr.iter().map(|f| f.eval(v)).collect()).collect();
    if let Some(f) = common_facet(&vals) {
        out.push((s.clone(), f));
        return Ok(());
    }
    // Without a common facet some pair of ratios is strictly ordered both
    // ways on the vertices; otherwise the pairwise order has a maximum.
    let n = fr.len();
    let (f, g) = (0..n)
        .flat_map(|f| (f + 1..n).map(move |g| (f, g)))
        .find(|&(f, g)| vals.iter().any(|r| r[f] > r[g]) && vals.iter().any(|r| r[g] > r[f]))
        .ok_or_else(|| FilmError::Contract("no separating ratio plane".into()))?;
    let parts = ratio_plane(&fr[f], &fr[g]).split_nondegenerate(s);
    if parts.len() < 2 {
        return Err(FilmError::Contract("ratio plane failed to separate a piece".into()));
    }
    for (_, p) in parts {
        split_by_facet(&p, fr, out)?;
    }
    Ok(())
}

/// Images and swept prisms of the pieces of one cell.
struct Projected {
    images: Vec<Simplex>,
    tracks: Vec<Simplex>,
}

fn staircase(a: &[Point], b: &[Point]) -> Vec<Simplex> {
    match a.len() {
        1 => vec![Simplex::segment(a[0].clone(), b[0].clone())],
        2 => vec![
            Simplex::triangle(a[0].clone(), a[1].clone(), b[1].clone()),
            Simplex::triangle(a[0].clone(), b[0].clone(), b[1].clone()),
        ],
        3 => vec![
            Simplex::new(vec![a[0].clone(), a[1].clone(), a[2].clone(), b[2].clone()]),
            Simplex::new(vec![a[0].clone(), a[1].clone(), b[1].clone(), b[2].clone()]),
            Simplex::new(vec![a[0].clone(), b[0].clone(), b[1].clone(), b[2].clone()]),
        ],
        n => unreachable!("pieces of dimension {} are not deformed", n - 1),
    }
}

fn project_cell(grid: &GridSpec, cell: &GridCell, c: &Point, pieces: &[Simplex]) -> Result<Projected> {
    let fr = facet_ratios(grid, cell, c);
    let mut out = Projected { images: Vec::new(), tracks: Vec::new() };
    for s in pieces {
        let mut parts = Vec::new();
        split_by_facet(s, &fr, &mut parts)?;
        for (part, facet) in parts {
            let a: Vec<Point> = part.vertices().to_vec();
            let mut b = Vec::with_capacity(a.len());
            for v in &a {
                let rho = fr[facet].eval(v);
                if !rho.is_positive() {
                    return Err(FilmError::Contract("projection center lies on the chain".into()));
                }
                b.push(add(c, &scale(&sub(v, c), &rho.recip())));
            }
            out.tracks.extend(staircase(&a, &b));
            let img = Simplex::new(b);
            if !img.is_degenerate() {
                out.images.push(img);
            }
        }
    }
    Ok(out)
}

/// Exact squared distance from a point to a simplex of dimension ≤ 2.
pub fn dist2_point_simplex(x: &Point, s: &Simplex) -> Rational {
    let v = s.vertices();
    let n = v.len();
    let mut best: Option<Rational> = None;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let p0 = &v[idx[0]];
        let e: Vec<Point> = idx[1..].iter().map(|&i| sub(&v[i], p0)).collect();
        let w = sub(x, p0);
        let cand = match e.len() {
            0 => Some(norm2(&w)),
            1 => {
                let ee = dot(&e[0], &e[0]);
                let t = dot(&w, &e[0]) / &ee;
                (t.is_positive() && t < q(1)).then(|| norm2(&sub(&w, &scale(&e[0], &t))))
            }
            2 => {
                let (a, b, cc) = (dot(&e[0], &e[0]), dot(&e[0], &e[1]), dot(&e[1], &e[1]));
                let (r0, r1) = (dot(&w, &e[0]), dot(&w, &e[1]));
                let det = &a * &cc - &b * &b;
                if det.is_zero() {
                    None
                } else {
                    let s0 = (&r0 * &cc - &r1 * &b) / &det;
                    let s1 = (&a * &r1 - &b * &r0) / &det;
                    (s0.is_positive() && s1.is_positive() && &s0 + &s1 < q(1)).then(|| {
                        let proj = add(&scale(&e[0], &s0), &scale(&e[1], &s1));
                        norm2(&sub(&w, &proj))
                    })
                }
            }
            _ => None,
        };
        if let Some(d) = cand {
            if best.as_ref().is_none_or(|b| &d < b) {
                best = Some(d);
            }
        }
    }
    best.expect("vertices always give a candidate")
}

fn random_center(grid: &GridSpec, cell: &GridCell, rng: &mut ChaCha8Rng) -> Point {
    let (lo, _) = cell_bounds(grid, cell);
    let mut c = lo;
    for axis in cell.axes.iter() {
        let m: i64 = rng.gen_range(4..=60);
        c[axis] += &grid.epsilon * Rational::new(m.into(), 64.into());
    }
    c
}

fn min_dist2(c: &Point, pieces: &[Simplex]) -> Rational {
    pieces.iter().map(|s| dist2_point_simplex(c, s)).min().unwrap_or_else(|| q(1_000_000))
}

type F3 = [f64; 3];

fn fpoint(p: &Point) -> F3 {
    [to_f64(&p[0]), to_f64(&p[1]), to_f64(&p[2])]
}

fn fsub(a: &F3, b: &F3) -> F3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn fdot(a: &F3, b: &F3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn fcross(a: &F3, b: &F3) -> F3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Squared distance to a point, segment or triangle, by projected gradient
/// steps over barycentric coordinates; plenty for ranking candidates.
fn fdist2(x: &F3, s: &[F3]) -> f64 {
    let d2 = |p: &F3| fdot(&fsub(x, p), &fsub(x, p));
    let mut best = s.iter().map(d2).fold(f64::INFINITY, f64::min);
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let e = fsub(&s[j], &s[i]);
            let ee = fdot(&e, &e);
            if ee > 0.0 {
                let t = (fdot(&fsub(x, &s[i]), &e) / ee).clamp(0.0, 1.0);
                let p = [s[i][0] + t * e[0], s[i][1] + t * e[1], s[i][2] + t * e[2]];
                best = best.min(d2(&p));
            }
        }
    }
    if s.len() == 3 {
        let n = fcross(&fsub(&s[1], &s[0]), &fsub(&s[2], &s[0]));
        let nn = fdot(&n, &n);
        if nn > 0.0 {
            let h = fdot(&fsub(x, &s[0]), &n) / nn;
            let p = [x[0] - h * n[0], x[1] - h * n[1], x[2] - h * n[2]];
            let inside = (0..3).all(|i| fdot(&fcross(&fsub(&s[(i + 1) % 3], &s[i]), &fsub(&p, &s[i])), &n) >= 0.0);
            if inside {
                best = best.min(d2(&p));
            }
        }
    }
    best
}

fn fmass(s: &Simplex) -> f64 {
    let v: Vec<F3> = s.vertices().iter().map(fpoint).collect();
    match v.len() {
        1 => 1.0,
        2 => fdot(&fsub(&v[1], &v[0]), &fsub(&v[1], &v[0])).sqrt(),
        3 => {
            let n = fcross(&fsub(&v[1], &v[0]), &fsub(&v[2], &v[0]));
            0.5 * fdot(&n, &n).sqrt()
        }
        _ => fdot(&fcross(&fsub(&v[1], &v[0]), &fsub(&v[2], &v[0])), &fsub(&v[3], &v[0])).abs() / 6.0,
    }
}

/// Keeps the part of a convex polygon (or segment) where `f ≥ 0`.
fn fclip(poly: &[F3], f: impl Fn(&F3) -> f64) -> Vec<F3> {
    let vals: Vec<f64> = poly.iter().map(&f).collect();
    if poly.len() == 2 {
        let (a, b) = (vals[0], vals[1]);
        let lerp = |t: f64| {
            let (p, q) = (&poly[0], &poly[1]);
            [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]
        };
        return match (a >= 0.0, b >= 0.0) {
            (true, true) => poly.to_vec(),
            (false, false) => Vec::new(),
            (true, false) => vec![poly[0], lerp(a / (a - b))],
            (false, true) => vec![lerp(a / (a - b)), poly[1]],
        };
    }
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        let (p, q, a, b) = (&poly[i], &poly[j], vals[i], vals[j]);
        if a >= 0.0 {
            out.push(*p);
        }
        if (a >= 0.0) != (b >= 0.0) {
            let t = a / (a - b);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]);
        }
    }
    out
}

/// Floating-point estimate of the mass of the radial projection from `c`.
fn fprojected_mass(c: &F3, lo: &F3, hi: &F3, cell: &GridCell, pieces: &[Vec<F3>]) -> f64 {
    let mut fr: Vec<(usize, f64, f64)> = Vec::new();
    for axis in cell.axes.iter() {
        for b in [hi[axis], lo[axis]] {
            let alpha = 1.0 / (b - c[axis]);
            fr.push((axis, alpha, -c[axis] * alpha));
        }
    }
    let rho = |f: usize, x: &F3| fr[f].1 * x[fr[f].0] + fr[f].2;
    let mut total = 0.0;
    for p in pieces {
        for f in 0..fr.len() {
            let mut poly = p.clone();
            for g in 0..fr.len() {
                if g != f && !poly.is_empty() {
                    poly = fclip(&poly, |x| rho(f, x) - rho(g, x));
                }
            }
            if poly.len() < p.len() {
                continue;
            }
            let img: Vec<F3> = poly
                .iter()
                .map(|x| {
                    let r = rho(f, x);
                    [c[0] + (x[0] - c[0]) / r, c[1] + (x[1] - c[1]) / r, c[2] + (x[2] - c[2]) / r]
                })
                .collect();
            total += if img.len() == 2 {
                fdot(&fsub(&img[1], &img[0]), &fsub(&img[1], &img[0])).sqrt()
            } else {
                let mut n = [0.0; 3];
                for i in 1..img.len() - 1 {
                    let t = fcross(&fsub(&img[i], &img[0]), &fsub(&img[i + 1], &img[0]));
                    n = [n[0] + t[0], n[1] + t[1], n[2] + t[2]];
                }
                0.5 * fdot(&n, &n).sqrt()
            };
        }
    }
    total
}

struct Engine<'a> {
    grid: &'a GridSpec,
    cfg: &'a DeformConfig,
    rng: ChaCha8Rng,
    fallbacks: Vec<GridCell>,
}

impl Engine<'_> {
    /// Chooses a center for a cell holding `pieces` (from all chains).
    /// Candidates are ranked by a floating-point estimate of the projected
    /// mass; clearance of the chosen one is then checked exactly.
    fn choose_center(&mut self, cell: &GridCell, pieces: &[Simplex]) -> Result<Point> {
        let tau = &self.cfg.clearance * &self.grid.epsilon;
        let tau2 = &tau * &tau;
        let fpieces: Vec<Vec<[f64; 3]>> = pieces.iter().map(|s| s.vertices().iter().map(fpoint).collect()).collect();
        let (lo, hi) = cell_bounds(self.grid, cell);
        let (flo, fhi) = (fpoint(&lo), fpoint(&hi));
        let ftau2 = to_f64(&tau2);
        let mut ranked: Vec<(f64, Point)> = Vec::new();
        let mut tried = Vec::new();
        for _ in 0..self.cfg.candidate_centers {
            let c = random_center(self.grid, cell, &mut self.rng);
            let fc = fpoint(&c);
            let d2 = fpieces.iter().map(|p| fdist2(&fc, p)).fold(f64::INFINITY, f64::min);
            if d2 >= ftau2 * 0.999 {
                ranked.push((fprojected_mass(&fc, &flo, &fhi, cell, &fpieces), c.clone()));
            }
            tried.push(c);
        }
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, c) in ranked {
            if min_dist2(&c, pieces) >= tau2 {
                return Ok(c);
            }
        }
        self.fallbacks.push(*cell);
        let mut farthest: Option<(Rational, Point)> = None;
        for c in tried {
            let d2 = min_dist2(&c, pieces);
            if farthest.as_ref().is_none_or(|(fd, _)| &d2 > fd) {
                farthest = Some((d2, c));
            }
        }
        let mut extra = 0;
        while farthest.as_ref().is_none_or(|(d, _)| d.is_zero()) && extra < 256 {
            let c = random_center(self.grid, cell, &mut self.rng);
            let d2 = min_dist2(&c, pieces);
            if farthest.as_ref().is_none_or(|(fd, _)| &d2 > fd) {
                farthest = Some((d2, c));
            }
            extra += 1;
        }
        match farthest {
            Some((d, c)) if d.is_positive() => Ok(c),
            _ => Err(FilmError::Infeasible(format!("no usable projection center in cell {cell:?}"))),
        }
    }

    /// Pushes every chain into its k-skeleton. Returns the final pieces and
    /// the swept tracks per chain, indexed by the level of the projecting cell.
    fn run(&mut self, chains: &[SimplicialChain]) -> Result<Vec<(SimplicialChain, Vec<SimplicialChain>)>> {
        let mut current: Vec<SimplicialChain> = chains.iter().map(|c| clip_to_grid(c, self.grid)).collect();
        let mut tracks: Vec<Vec<SimplicialChain>> =
            chains.iter().map(|c| vec![SimplicialChain::empty(c.k() + 1); 4]).collect();
        for d in (1..=3usize).rev() {
            // cell -> per chain pieces
            let mut by_cell: BTreeMap<GridCell, Vec<Vec<Simplex>>> = BTreeMap::new();
            let mut keep: Vec<SimplicialChain> = current.iter().map(|c| SimplicialChain::empty(c.k())).collect();
            for (ci, ch) in current.iter().enumerate() {
                for s in ch.iter() {
                    let carrier = minimal_carrier(self.grid, s.vertices())
                        .ok_or_else(|| FilmError::Contract("piece not confined to a grid cell".into()))?;
                    if carrier.dim() == d && ch.k() < d {
                        by_cell.entry(carrier).or_insert_with(|| vec![Vec::new(); current.len()])[ci].push(s.clone());
                    } else {
                        keep[ci].toggle_nondegenerate(s.clone());
                    }
                }
            }
            for (cell, per_chain) in by_cell {
                let all: Vec<Simplex> = per_chain.iter().flatten().cloned().collect();
                let c = self.choose_center(&cell, &all)?;
                for (ci, pieces) in per_chain.iter().enumerate() {
                    if pieces.is_empty() {
                        continue;
                    }
                    let pr = project_cell(self.grid, &cell, &c, pieces)?;
                    for t in pr.tracks {
                        tracks[ci][d].toggle(t);
                    }
                    for im in pr.images {
                        keep[ci].toggle_nondegenerate(im);
                    }
                }
            }
            current = keep;
        }
        Ok(current.into_iter().zip(tracks).collect())
    }
}

fn generic_point(grid: &GridSpec, cell: &GridCell, rng: &mut ChaCha8Rng) -> Point {
    let (lo, _) = cell_bounds(grid, cell);
    let mut c = lo;
    for axis in cell.axes.iter() {
        let m: i64 = rng.gen_range(1..(1 << 20));
        c[axis] += &grid.epsilon * Rational::new(m.into(), (1i64 << 20).into());
    }
    c
}

/// Snaps a chain lying in the k-skeleton to whole k-faces by coverage
/// parity at a generic interior point of each face.
pub fn snap_parity(residue: &SimplicialChain, grid: &GridSpec, seed: u64) -> Result<GridChain> {
    let k = residue.k();
    let mut by_cell: BTreeMap<GridCell, Vec<&Simplex>> = BTreeMap::new();
    for s in residue.iter() {
        let c = minimal_carrier(grid, s.vertices())
            .filter(|c| c.dim() == k)
            .ok_or_else(|| FilmError::Precondition("residue is not supported in the k-skeleton".into()))?;
        by_cell.entry(c).or_default().push(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GridChain::empty(grid.clone(), k);
    for (cell, pieces) in by_cell {
        let free: Vec<usize> = cell.axes.iter().collect();
        let mut decided = None;
        for _ in 0..64 {
            let x = generic_point(grid, &cell, &mut rng);
            let mut parity = false;
            let mut on_edge = false;
            for s in &pieces {
                match locate_in_cell(s, &x, &free) {
                    Location::Outside => {}
                    Location::Boundary => {
                        on_edge = true;
                        break;
                    }
                    Location::Inside => parity = !parity,
                }
            }
            if !on_edge {
                decided = Some(parity);
                break;
            }
        }
        match decided {
            Some(true) => out.toggle(cell),
            Some(false) => {}
            None => return Err(FilmError::Contract(format!("no generic sample point found in {cell:?}"))),
        }
    }
    Ok(out)
}

enum Location {
    Outside,
    Boundary,
    Inside,
}

/// Locates `x` relative to a k-simplex lying in the same axis-aligned
/// k-plane, working in the free coordinates.
fn locate_in_cell(s: &Simplex, x: &Point, free: &[usize]) -> Location {
    let v = s.vertices();
    let sign = |r: &Rational| if r.is_positive() { 1 } else if r.is_negative() { -1 } else { 0 };
    let signs: Vec<i32> = match free {
        [a] => vec![sign(&(&x[*a] - &v[0][*a])) * sign(&(&v[1][*a] - &x[*a]))],
        [a, b] => {
            let orient = |p: &Point, q: &Point| {
                (&q[*a] - &p[*a]) * (&x[*b] - &p[*b]) - (&q[*b] - &p[*b]) * (&x[*a] - &p[*a])
            };
            let (p, q, r) = (&v[0], &v[1], &v[2]);
            let so = sign(&((&q[*a] - &p[*a]) * (&r[*b] - &p[*b]) - (&q[*b] - &p[*b]) * (&r[*a] - &p[*a])));
            [(0, 1), (1, 2), (2, 0)].iter().map(|&(i, j)| sign(&orient(&v[i], &v[j])) * so).collect()
        }
        _ => match s.barycentric(x) {
            Some(b) => b.iter().map(sign).collect(),
            None => vec![-1],
        },
    };
    if signs.iter().any(|&t| t < 0) {
        Location::Outside
    } else if signs.contains(&0) {
        Location::Boundary
    } else {
        Location::Inside
    }
}

/// Upper bound on `sup_{x∈|S|} dist(x, V)` over simplices S, where V is a
/// vertex set of pieces of diameter below the grid spacing; also checks
/// the bound against `limit` exactly.
fn distance_bound(items: &[&Simplex], targets: &[Point], limit2: &Rational) -> (f64, bool) {
    if items.is_empty() {
        return (0.0, true);
    }
    if targets.is_empty() {
        return (f64::INFINITY, false);
    }
    let tf: Vec<[f64; 3]> = targets.iter().map(|p| [to_f64(&p[0]), to_f64(&p[1]), to_f64(&p[2])]).collect();
    let mut worst = 0f64;
    let mut ok = true;
    for s in items {
        let vf: Vec<[f64; 3]> = s.vertices().iter().map(|p| [to_f64(&p[0]), to_f64(&p[1]), to_f64(&p[2])]).collect();
        let mut best = (f64::INFINITY, 0usize);
        for (ti, t) in tf.iter().enumerate() {
            let m = vf.iter().map(|v| (0..3).map(|a| (v[a] - t[a]).powi(2)).sum::<f64>()).fold(0f64, f64::max);
            if m < best.0 {
                best = (m, ti);
            }
        }
        worst = worst.max(best.0.sqrt());
        let t = &targets[best.1];
        if s.vertices().iter().any(|v| &norm2(&sub(v, t)) > limit2) {
            ok = false;
        }
    }
    (worst, ok)
}

/// Deforms one simplicial k-chain, `k ∈ {1, 2}`.
pub fn deform_chain(a: &SimplicialChain, grid: &GridSpec, cfg: &DeformConfig) -> Result<DeformationResult> {
    let mut res = deform_chains(std::slice::from_ref(a), grid, cfg)?;
    Ok(res.remove(0))
}

/// Deforms several chains with shared centers.
pub fn deform_chains(chains: &[SimplicialChain], grid: &GridSpec, cfg: &DeformConfig) -> Result<Vec<DeformationResult>> {
    cfg.validate()?;
    let bounds = grid.bounds();
    for c in chains {
        if !matches!(c.k(), 1 | 2) {
            return Err(FilmError::Unsupported(format!("deformation of {}-chains", c.k())));
        }
        if !c.is_inside(&bounds) {
            return Err(FilmError::Precondition("chain leaves the grid".into()));
        }
    }
    // The boundaries ride along with shared centers; their tracks through
    // the k-cells close up the projected chains before snapping.
    let mut all: Vec<SimplicialChain> = chains.to_vec();
    for c in chains {
        all.push(c.boundary()?);
    }
    let mut engine = Engine { grid, cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed), fallbacks: Vec::new() };
    let mut deformed = engine.run(&all)?;
    let boundaries = deformed.split_off(chains.len());
    let mut out = Vec::new();
    for (i, ((a, (skel, tracks)), (_, btracks))) in chains.iter().zip(deformed).zip(boundaries).enumerate() {
        let mut r = SimplicialChain::empty(a.k() + 1);
        for t in &tracks {
            r.add_assign(t)?;
        }
        let mut q_chain = SimplicialChain::empty(a.k());
        for t in &btracks {
            q_chain.add_assign(t)?;
        }
        let mut closed = skel;
        closed.add_assign(&btracks[a.k()])?;
        out.push(finish(a, closed, q_chain, r, grid, cfg, i as u64, &engine.fallbacks)?);
    }
    Ok(out)
}

fn finish(
    a: &SimplicialChain,
    skel: SimplicialChain,
    q_chain: SimplicialChain,
    r: SimplicialChain,
    grid: &GridSpec,
    cfg: &DeformConfig,
    index: u64,
    fallbacks: &[GridCell],
) -> Result<DeformationResult> {
    let eps = &grid.epsilon;
    let p = snap_parity(&skel, grid, cfg.seed.wrapping_add(index + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))?;
    let p_emb = p.to_simplicial();
    let clipped = clip_to_grid(a, grid);
    // Clipping is an exact subdivision, so the clipped chain stands in for A
    // and every piece has a grid carrier for bucketing.
    let lhs = clipped.add(&p_emb)?;
    let rhs = q_chain.add(&r.boundary()?)?;
    let identity = chains_equal_mod2_with(&lhs, &rhs, EqualityMode::Exact, ExactLimit::default(), Some(grid))?;
    let identity_verified = identity.equal && identity.certain;
    let skeleton_verified =
        chains_equal_mod2_with(&skel, &p_emb, EqualityMode::Exact, ExactLimit::default(), Some(grid))?.equal;

    let da = a.boundary()?;
    let m_a = a.mass();
    let m_da = crate::simplicial::geometric_mass(&da)?;
    let m_p = Measure::rational(p.mass());
    let m_dp = Measure::rational(p.boundary()?.mass());
    // Q and R carry thousands of pieces and only feed the float constants.
    let approx_mass = |c: &SimplicialChain| {
        Measure::rational(Rational::from_float(c.iter().map(fmass).sum::<f64>()).unwrap_or_default())
    };
    let m_q = approx_mass(&q_chain);
    let m_r = approx_mass(&r);
    let eps_m = Measure::rational(eps.clone());
    let constants = Constants {
        c_p: ratio_m(&m_p, &(&m_a + &m_da.mul(&eps_m))),
        c_dp: ratio_m(&m_dp, &m_da),
        c_q: ratio_m(&m_q, &m_da.mul(&eps_m)),
        c_r: ratio_m(&m_r, &m_a.mul(&eps_m)),
    };

    let six = q(6) * eps;
    let limit2 = &six * &six;
    let a_pts = clipped.vertices();
    let da_pts = if da.is_empty() { Vec::new() } else if da.k() == 0 { da.vertices() } else { clip_to_grid(&da, grid).vertices() };
    let pr: Vec<&Simplex> = p_emb.iter().chain(r.iter()).collect();
    let (d1, ok1) = distance_bound(&pr, &a_pts, &limit2);
    let dp_emb = p.boundary()?.to_simplicial();
    let dq: Vec<&Simplex> = dp_emb.iter().chain(q_chain.iter()).collect();
    let (d2, ok2) = distance_bound(&dq, &da_pts, &limit2);
    Ok(DeformationResult {
        p,
        q: q_chain,
        r,
        constants,
        support: SupportReport { pr_from_a: d1 / to_f64(eps), dpq_from_da: d2 / to_f64(eps), within_six_eps: ok1 && ok2 },
        fallbacks: fallbacks.to_vec(),
        identity_verified,
        skeleton_verified,
    })
}

/// Result of deforming `A = δB + μC` with `∂A = δγ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DipolyDeformation {
    /// `D = δP_B + μP_C` on the grid.
    pub d: Dipolyhedron,
    /// `Q = δ(Q_B + R_C) + μQ_C`.
    pub q: Dipolyhedron,
    /// `R = δR_B + μR_C`.
    pub r: Dipolyhedron,
    pub b: DeformationResult,
    pub c: DeformationResult,
    /// `A − D = Q + ∂R` checked at the dipolyhedron level.
    pub identity_verified: bool,
    pub energy_d: Measure,
    pub energy_boundary_d: Measure,
    pub energy_q: Measure,
    pub energy_r: Measure,
    /// `M(∂P_B + P_C) / M(γ)`.
    pub boundary_ratio: f64,
}

/// Deforms a simplicial 2-dipolyhedron onto the grid, sharing centers
/// between B and C.
pub fn deform_dipolyhedron(
    a: &Dipolyhedron,
    gamma: &SimplicialChain,
    grid: &GridSpec,
    cfg: &DeformConfig,
) -> Result<DipolyDeformation> {
    if a.k() != 2 {
        return Err(FilmError::Unsupported("dipolyhedron deformation needs k = 2".into()));
    }
    if !crate::spanning::has_boundary(a, gamma)? {
        return Err(FilmError::Precondition("need ∂C = 0 and ∂B + C = γ".into()));
    }
    let bs = a.b().to_simplicial();
    let cs = a.c().to_simplicial();
    let mut res = deform_chains(&[bs, cs], grid, cfg)?;
    let rc = res.pop().expect("two results");
    let rb = res.pop().expect("two results");
    let d = Dipolyhedron::new(Chain::Grid(rb.p.clone()), Chain::Grid(rc.p.clone()))?;
    let q_b = rb.q.add(&rc.r)?;
    let q = Dipolyhedron::new(Chain::Simplicial(q_b), Chain::Simplicial(rc.q.clone()))?;
    let r = Dipolyhedron::new(Chain::Simplicial(rb.r.clone()), Chain::Simplicial(rc.r.clone()))?;
    let lhs = a.to_simplicial().add(&d.to_simplicial())?;
    let rhs = q.add(&r.boundary()?)?;
    let identity_verified = lhs.equals_mod2(&rhs, EqualityMode::Exact)?;
    let dd = d.boundary()?;
    let boundary_mass = Measure::rational(dd.b().as_grid().map(|g| g.mass()).unwrap_or_else(Rational::zero));
    let m_gamma = crate::simplicial::geometric_mass(gamma)?;
    Ok(DipolyDeformation {
        energy_d: d.energy().e,
        energy_boundary_d: dd.energy().e,
        energy_q: q.energy().e,
        energy_r: r.energy().e,
        boundary_ratio: ratio_m(&boundary_mass, &m_gamma),
        d,
        q,
        r,
        b: rb,
        c: rc,
        identity_verified,
    })
}
