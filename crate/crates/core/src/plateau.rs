//! The discrete Plateau problem: minimize the weight `W(A) = M(B)` over grid
//! dipolyhedra `A = δB + μC` with `∂A = δγ`, `E(A) ≤ λ`, support in the cube
//! `Q_{λ′}` and spanning γ.

use std::collections::{BTreeMap, BTreeSet};

use num::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deform::{deform_dipolyhedron, DeformConfig};
use crate::dipoly::{make_dipole, Chain, Dipolyhedron};
use crate::error::{FilmError, Result};
use crate::flatnorm::Status;
use crate::grid::{GridCell, GridChain, GridSpec};
use crate::measure::{default_width, Measure};
use crate::planar::{self, Seg2};
use crate::rational::{cross, is_zero_vec, q, sub, sup_norm, zero_point, Point, Rational};
use crate::simplicial::{Simplex, SimplicialChain};
use crate::spanning::{admissibility, spanning_check, ProjectionDir, SpanningReport};

#[derive(Clone, Debug)]
pub struct PlateauProblem {
    gamma: GridChain,
    gamma_s: SimplicialChain,
    lambda: Rational,
    lambda_prime: Rational,
    dirs: Vec<ProjectionDir>,
}

fn check_jordan(gamma: &GridChain) -> Result<()> {
    if gamma.k() != 1 {
        return Err(FilmError::Dimension(format!("γ must be a 1-chain, got k = {}", gamma.k())));
    }
    if gamma.is_empty() {
        return Ok(());
    }
    let mut adj: BTreeMap<[i64; 3], Vec<[i64; 3]>> = BTreeMap::new();
    for e in gamma.cells() {
        let c = e.corners();
        adj.entry(c[0]).or_default().push(c[1]);
        adj.entry(c[1]).or_default().push(c[0]);
    }
    if adj.values().any(|n| n.len() != 2) {
        return Err(FilmError::Precondition("γ must be a simple closed curve: every vertex needs degree 2".into()));
    }
    let start = *adj.keys().next().expect("nonempty");
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for w in &adj[&v] {
            if seen.insert(*w) {
                stack.push(*w);
            }
        }
    }
    if seen.len() != adj.len() {
        return Err(FilmError::Precondition("γ must be connected".into()));
    }
    Ok(())
}

/// Upper rational bound of a certified measure.
fn upper(m: &Measure) -> Rational {
    m.as_rational().unwrap_or_else(|| m.enclosure(&default_width()).1)
}

fn within_cube(pts: impl IntoIterator<Item = Point>, radius: &Rational) -> bool {
    pts.into_iter().all(|p| sup_norm(&p) <= *radius)
}

impl PlateauProblem {
    /// `λ` defaults to twice the energy of the cone over γ from the origin.
    pub fn new(gamma: GridChain, lambda: Option<Rational>, dirs: Vec<ProjectionDir>) -> Result<Self> {
        check_jordan(&gamma)?;
        let gamma_s = gamma.to_simplicial();
        let lambda = match lambda {
            Some(l) if l.is_negative() => return Err(FilmError::Precondition("λ must be nonnegative".into())),
            Some(l) => l,
            None => q(2) * upper(&gamma_s.cone(&zero_point()).mass()),
        };
        let m = gamma.mass();
        let lambda_prime = if m.is_zero() { Rational::zero() } else { &lambda * q(3) / m };
        let p = PlateauProblem { gamma, gamma_s, lambda, lambda_prime, dirs };
        if !within_cube(p.gamma_s.vertices(), &p.radius()) {
            return Err(FilmError::Precondition(format!(
                "γ leaves Q_λ′ with λ′ = {}; choose a larger λ",
                p.lambda_prime
            )));
        }
        Ok(p)
    }

    pub fn gamma(&self) -> &GridChain {
        &self.gamma
    }

    pub fn gamma_simplicial(&self) -> &SimplicialChain {
        &self.gamma_s
    }

    pub fn grid(&self) -> &GridSpec {
        self.gamma.grid()
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn lambda_prime(&self) -> &Rational {
        &self.lambda_prime
    }

    pub fn dirs(&self) -> &[ProjectionDir] {
        &self.dirs
    }

    /// Half side of `Q_{λ′}`, which is also the clamp radius.
    pub fn radius(&self) -> Rational {
        &self.lambda_prime / q(2)
    }

    /// The largest enclosed area over admissible directions. Every spanning
    /// dipolyhedron has at least this weight.
    pub fn weight_lower_bound(&self) -> Measure {
        let mut best = Measure::zero();
        for d in &self.dirs {
            if let Ok(curve) = admissibility(&self.gamma_s, d) {
                let a = d.area_factor().scale(&planar::odd_area(&curve));
                if best.lt(&a) {
                    best = a;
                }
            }
        }
        best
    }

    fn dipoly(&self, b: GridChain) -> Result<Dipolyhedron> {
        let c = self.gamma.add(&b.boundary()?)?;
        Dipolyhedron::new(Chain::Grid(b), Chain::Grid(c))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipReport {
    pub energy: Measure,
    pub within_budget: bool,
    pub support_ok: bool,
    pub spanning: SpanningReport,
    /// γ and A are both zero, where no direction is admissible and the
    /// spanning condition holds vacuously.
    pub trivial: bool,
}

impl MembershipReport {
    /// `∂B + C = γ` and `∂C = 0`.
    pub fn boundary_ok(&self) -> bool {
        self.spanning.boundary_ok
    }

    pub fn is_member(&self) -> bool {
        self.trivial || (self.boundary_ok() && self.within_budget && self.support_ok && self.spanning.spans())
    }
}

/// Itemized check of `A ∈ Γ(λ)`.
pub fn gamma_membership(a: &Dipolyhedron, problem: &PlateauProblem) -> Result<MembershipReport> {
    let energy = a.energy().e;
    let within_budget = energy.le(&Measure::rational(problem.lambda.clone()));
    let s = a.to_simplicial();
    let mut pts = s.b().to_simplicial().vertices();
    pts.extend(s.c().to_simplicial().vertices());
    let support_ok = within_cube(pts, &problem.radius());
    let spanning = spanning_check(a, &problem.gamma_s, &problem.dirs)?;
    let trivial = problem.gamma.is_empty() && a.is_zero();
    Ok(MembershipReport { energy, within_budget, support_ok, spanning, trivial })
}

#[derive(Clone, Debug)]
pub struct ConeStart {
    /// `δ(0γ)`.
    pub cone: Dipolyhedron,
    pub energy: Measure,
    pub boundary_ok: bool,
    pub spanning: SpanningReport,
    /// The cone pushed onto the problem grid, when that lands in `Γ(λ)`.
    pub grid_start: Option<Dipolyhedron>,
    pub note: Option<String>,
}

/// Builds the cone over γ from the origin, checks that it lies in `Γ(λ)` and
/// deforms it onto the grid for a grid-feasible start.
pub fn initial_cone_solution(problem: &PlateauProblem, cfg: &DeformConfig) -> Result<ConeStart> {
    let grid = problem.grid();
    if problem.gamma.is_empty() {
        let zero = problem.dipoly(GridChain::empty(grid.clone(), 2))?;
        let spanning = spanning_check(&zero, &problem.gamma_s, &problem.dirs)?;
        return Ok(ConeStart {
            cone: zero.clone(),
            energy: Measure::zero(),
            boundary_ok: true,
            spanning,
            grid_start: Some(zero),
            note: None,
        });
    }
    let cone = make_dipole(Chain::Simplicial(problem.gamma_s.cone(&zero_point())));
    let energy = cone.energy().e;
    if !energy.le(&Measure::rational(problem.lambda.clone())) {
        return Err(FilmError::Infeasible(format!(
            "cone energy {} exceeds λ = {}; need λ ≥ {}",
            energy,
            problem.lambda,
            upper(&energy)
        )));
    }
    let spanning = spanning_check(&cone, &problem.gamma_s, &problem.dirs)?;
    let boundary_ok = spanning.boundary_ok;
    let (grid_start, note) = match deform_dipolyhedron(&cone, &problem.gamma_s, grid, cfg) {
        Err(e) => (None, Some(format!("deformation failed: {e}"))),
        Ok(d) => {
            let m = gamma_membership(&d.d, problem)?;
            if m.is_member() {
                (Some(d.d), None)
            } else {
                (None, Some("deformed cone is not a member of Γ(λ)".into()))
            }
        }
    };
    Ok(ConeStart { cone, energy, boundary_ok, spanning, grid_start, note })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Exhaustive,
    Bnb,
    Local,
}

#[derive(Clone, Debug)]
pub struct PlateauConfig {
    pub method: SearchMethod,
    /// Largest face count for exhaustive enumeration.
    pub exhaustive_limit: usize,
    pub node_budget: u64,
    pub seed: u64,
    pub deform: DeformConfig,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self { method: SearchMethod::Bnb, exhaustive_limit: 24, node_budget: 2_000_000, seed: 0, deform: DeformConfig::default() }
    }
}

#[derive(Clone, Debug)]
pub struct PlateauSolution {
    pub a: Dipolyhedron,
    pub w: Measure,
    pub e: Measure,
    pub membership: MembershipReport,
    pub status: Status,
    pub lower_bound: Measure,
    pub explored: u64,
}

/// Column parity constraint from one admissible axis: the faces orthogonal
/// to the axis must cover each enclosed unit square an odd number of times.
struct AxisFilter {
    /// Column of each candidate face, if the face is orthogonal to the axis.
    column: Vec<Option<usize>>,
    target: Vec<bool>,
    /// Some enclosed square lies outside the grid.
    impossible: bool,
}

fn inside(curve: &[Seg2], p: &[Rational; 2]) -> bool {
    let mut odd = false;
    for (a, b) in curve {
        if (a[0] < p[0]) != (b[0] < p[0]) {
            let t = (&p[0] - &a[0]) / (&b[0] - &a[0]);
            let y = &a[1] + t * (&b[1] - &a[1]);
            if y > p[1] {
                odd = !odd;
            }
        }
    }
    odd
}

fn axis_filters(problem: &PlateauProblem, faces: &[GridCell]) -> Vec<AxisFilter> {
    let g = problem.grid();
    let mut out = Vec::new();
    for d in &problem.dirs {
        let Some(axis) = d.as_axis() else { continue };
        let Ok(curve) = admissibility(&problem.gamma_s, d) else { continue };
        let o: Vec<usize> = (0..3).filter(|j| *j != axis).collect();
        let (nu, nv) = (g.dims[o[0]] as usize, g.dims[o[1]] as usize);
        let half = Rational::new(1.into(), 2.into());
        let mut target = vec![false; nu * nv];
        let mut count = 0usize;
        for u in 0..nu {
            for v in 0..nv {
                let c = [
                    &g.origin[o[0]] + &g.epsilon * (q(u as i64) + &half),
                    &g.origin[o[1]] + &g.epsilon * (q(v as i64) + &half),
                ];
                if inside(&curve, &c) {
                    target[u * nv + v] = true;
                    count += 1;
                }
            }
        }
        let enclosed = planar::odd_area(&curve);
        let impossible = q(count as i64) * g.cell_measure(2) != enclosed;
        let column = faces
            .iter()
            .map(|f| (!f.axes.contains(axis)).then(|| f.base[o[0]] as usize * nv + f.base[o[1]] as usize))
            .collect();
        out.push(AxisFilter { column, target, impossible });
    }
    out
}

struct Search<'a> {
    problem: &'a PlateauProblem,
    faces: Vec<GridCell>,
    filters: Vec<AxisFilter>,
    explored: u64,
}

impl<'a> Search<'a> {
    fn new(problem: &'a PlateauProblem) -> Self {
        let g = problem.grid();
        let r = problem.radius();
        let faces: Vec<GridCell> = g
            .cells_of_dim(2)
            .into_iter()
            .filter(|f| within_cube(f.corners().into_iter().map(|c| g.lattice_point(c)), &r))
            .collect();
        let filters = axis_filters(problem, &faces);
        Search { problem, faces, filters, explored: 0 }
    }

    fn chain(&self, chosen: &[usize]) -> GridChain {
        GridChain::from_set_unchecked(
            self.problem.grid().clone(),
            2,
            chosen.iter().map(|i| self.faces[*i]).collect(),
        )
    }

    fn passes_filters(&self, chosen: &[usize]) -> bool {
        self.filters.iter().all(|f| {
            let mut par = vec![false; f.target.len()];
            for i in chosen {
                if let Some(c) = f.column[*i] {
                    par[c] = !par[c];
                }
            }
            par == f.target
        })
    }

    /// Full membership check of the candidate.
    fn member(&mut self, chosen: &[usize]) -> Result<Option<(Dipolyhedron, MembershipReport)>> {
        self.explored += 1;
        let a = self.problem.dipoly(self.chain(chosen))?;
        let lambda = Measure::rational(self.problem.lambda.clone());
        if !a.energy().e.le(&lambda) {
            return Ok(None);
        }
        let m = gamma_membership(&a, self.problem)?;
        Ok(m.is_member().then_some((a, m)))
    }

    fn exhaustive(&mut self, limit: usize) -> Result<Option<(Dipolyhedron, MembershipReport)>> {
        let n = self.faces.len();
        if n > limit {
            return Err(FilmError::Unsupported(format!("{n} candidate faces exceed the exhaustive limit {limit}")));
        }
        if self.filters.iter().any(|f| f.impossible) {
            return Ok(None);
        }
        // Faces all weigh ε², so the first cardinality with a member is
        // optimal; combinations run in lexicographic order.
        for m in 0..=n {
            let mut idx: Vec<usize> = (0..m).collect();
            loop {
                if self.passes_filters(&idx) {
                    if let Some(hit) = self.member(&idx)? {
                        return Ok(Some(hit));
                    }
                }
                let mut i = m;
                while i > 0 && idx[i - 1] == n - m + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                idx[i - 1] += 1;
                for j in i..m {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
        Ok(None)
    }
}

struct Bnb<'s, 'a> {
    s: &'s mut Search<'a>,
    parity: Vec<Vec<bool>>,
    remaining: Vec<Vec<usize>>,
    chosen: Vec<usize>,
    best: Option<(usize, Option<Vec<usize>>, Dipolyhedron, MembershipReport)>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl<'s, 'a> Bnb<'s, 'a> {
    fn deficit(&self) -> Option<usize> {
        let mut lb = 0;
        for (fi, f) in self.s.filters.iter().enumerate() {
            let mut wrong = 0;
            for c in 0..f.target.len() {
                if self.parity[fi][c] != f.target[c] {
                    if self.remaining[fi][c] == 0 {
                        return None;
                    }
                    wrong += 1;
                }
            }
            lb = lb.max(wrong);
        }
        Some(lb)
    }

    fn beats(&self, count: usize) -> bool {
        match &self.best {
            None => true,
            Some((b, v, _, _)) => count < *b || (count == *b && v.as_ref().is_none_or(|v| self.chosen < *v)),
        }
    }

    fn decide(&mut self, i: usize, include: bool) {
        for (fi, f) in self.s.filters.iter().enumerate() {
            if let Some(c) = f.column[i] {
                self.remaining[fi][c] -= 1;
                if include {
                    self.parity[fi][c] = !self.parity[fi][c];
                }
            }
        }
        if include {
            self.chosen.push(i);
        }
    }

    fn undo(&mut self, i: usize, include: bool) {
        for (fi, f) in self.s.filters.iter().enumerate() {
            if let Some(c) = f.column[i] {
                self.remaining[fi][c] += 1;
                if include {
                    self.parity[fi][c] = !self.parity[fi][c];
                }
            }
        }
        if include {
            self.chosen.pop();
        }
    }

    fn dfs(&mut self, i: usize) -> Result<()> {
        if self.nodes >= self.budget {
            self.exhausted = true;
            return Ok(());
        }
        self.nodes += 1;
        let Some(lb) = self.deficit() else { return Ok(()) };
        let count = self.chosen.len();
        if let Some((b, _, _, _)) = &self.best {
            if count + lb > *b {
                return Ok(());
            }
        }
        if i == self.s.faces.len() {
            if self.beats(count) {
                let chosen = self.chosen.clone();
                if let Some((a, m)) = self.s.member(&chosen)? {
                    self.best = Some((count, Some(chosen), a, m));
                }
            }
            return Ok(());
        }
        for include in [true, false] {
            self.decide(i, include);
            self.dfs(i + 1)?;
            self.undo(i, include);
        }
        Ok(())
    }
}

fn face_indices(faces: &[GridCell], b: &GridChain) -> Option<Vec<usize>> {
    let pos: BTreeMap<&GridCell, usize> = faces.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let mut out: Vec<usize> = b.cells().iter().map(|c| pos.get(c).copied()).collect::<Option<_>>()?;
    out.sort_unstable();
    Some(out)
}

fn grid_start(problem: &PlateauProblem, cfg: &PlateauConfig) -> Result<Option<GridChain>> {
    match initial_cone_solution(problem, &cfg.deform) {
        Ok(s) => Ok(s.grid_start.and_then(|d| d.b().as_grid().cloned())),
        Err(FilmError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn infeasible(problem: &PlateauProblem) -> FilmError {
    let need = upper(&problem.gamma_s.cone(&zero_point()).mass());
    FilmError::Infeasible(format!(
        "no member of Γ(λ) on this grid at λ = {}; the cone needs λ ≥ {}",
        problem.lambda, need
    ))
}

/// Minimizes `W` over grid dipolyhedra in `Γ(λ)`. The mass chain is
/// eliminated through `C = γ + ∂B`, so the search runs over face sets B.
pub fn minimize_weight(problem: &PlateauProblem, cfg: &PlateauConfig) -> Result<PlateauSolution> {
    let mut search = Search::new(problem);
    let (a, membership, status) = match cfg.method {
        SearchMethod::Exhaustive => {
            let (a, m) = search.exhaustive(cfg.exhaustive_limit)?.ok_or_else(|| infeasible(problem))?;
            (a, m, Status::Exact)
        }
        SearchMethod::Bnb => {
            let nf = search.filters.len();
            let impossible = search.filters.iter().any(|f| f.impossible);
            let mut parity = Vec::with_capacity(nf);
            let mut remaining = Vec::with_capacity(nf);
            for f in &search.filters {
                parity.push(vec![false; f.target.len()]);
                let mut r = vec![0usize; f.target.len()];
                for c in f.column.iter().flatten() {
                    r[*c] += 1;
                }
                remaining.push(r);
            }
            let start = grid_start(problem, cfg)?;
            let mut best = None;
            if let Some(b) = start {
                let idx = face_indices(&search.faces, &b);
                let a = problem.dipoly(b.clone())?;
                let m = gamma_membership(&a, problem)?;
                if m.is_member() {
                    best = Some((b.len(), idx, a, m));
                }
            }
            let mut bnb = Bnb {
                s: &mut search,
                parity,
                remaining,
                chosen: Vec::new(),
                best,
                nodes: 0,
                budget: cfg.node_budget,
                exhausted: false,
            };
            if !impossible {
                bnb.dfs(0)?;
            }
            let exhausted = bnb.exhausted;
            let (_, _, a, m) = bnb.best.take().ok_or_else(|| infeasible(problem))?;
            (a, m, if exhausted { Status::UpperBound } else { Status::Exact })
        }
        SearchMethod::Local => {
            let b = grid_start(problem, cfg)?.ok_or_else(|| infeasible(problem))?;
            let mut cur = face_indices(&search.faces, &b).ok_or_else(|| infeasible(problem))?;
            let mut best = search.member(&cur)?.ok_or_else(|| infeasible(problem))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            loop {
                let mut order = cur.clone();
                order.shuffle(&mut rng);
                let mut improved = false;
                for f in order {
                    let trial: Vec<usize> = cur.iter().copied().filter(|i| *i != f).collect();
                    if let Some(hit) = search.member(&trial)? {
                        cur = trial;
                        best = hit;
                        improved = true;
                        break;
                    }
                }
                if !improved {
                    break;
                }
            }
            (best.0, best.1, Status::UpperBound)
        }
    };
    let en = a.energy();
    let lower_bound = problem.weight_lower_bound();
    if !lower_bound.le(&en.w) {
        return Err(FilmError::Contract(format!("weight {} below the spanning lower bound {}", en.w, lower_bound)));
    }
    Ok(PlateauSolution { a, w: en.w, e: en.e, membership, status, lower_bound, explored: search.explored })
}

#[derive(Clone, Debug)]
pub struct ClampReport {
    pub a: Dipolyhedron,
    pub changed: bool,
    pub w_before: Measure,
    pub w_after: Measure,
    pub e_before: Measure,
    pub e_after: Measure,
    pub non_increasing: bool,
    /// Spanning is re-checked rather than assumed.
    pub spanning_preserved: bool,
}

/// Clamps A into `Q_{λ′}`.
pub fn clamp_improvement(a: &Dipolyhedron, problem: &PlateauProblem) -> Result<ClampReport> {
    let r = problem.radius();
    let s = a.to_simplicial();
    let mut pts = s.b().to_simplicial().vertices();
    pts.extend(s.c().to_simplicial().vertices());
    let before = a.energy();
    if within_cube(pts, &r) {
        let spanning_preserved = spanning_check(a, &problem.gamma_s, &problem.dirs)?.spans();
        return Ok(ClampReport {
            a: a.clone(),
            changed: false,
            w_before: before.w.clone(),
            w_after: before.w,
            e_before: before.e.clone(),
            e_after: before.e,
            non_increasing: true,
            spanning_preserved,
        });
    }
    let clamped = a.clamp(&r)?;
    let w_after = crate::simplicial::geometric_mass(&clamped.b().to_simplicial())?;
    let m_after = crate::simplicial::geometric_mass(&clamped.c().to_simplicial())?;
    let e_after = &w_after + &m_after;
    let non_increasing = w_after.le(&before.w) && e_after.le(&before.e);
    let spanning_preserved = spanning_check(&clamped, &problem.gamma_s, &problem.dirs)?.spans();
    Ok(ClampReport {
        a: clamped,
        changed: true,
        w_before: before.w,
        w_after,
        e_before: before.e,
        e_after,
        non_increasing,
        spanning_preserved,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostics {
    /// Closed loops of C as vertex cycles; the first vertex is not repeated.
    pub loops: Vec<Vec<Point>>,
    pub loop_lengths: Vec<Measure>,
    pub total_length: Measure,
    /// Piece counts of the face-connected components of B.
    pub components: Vec<usize>,
    /// C is nonzero, i.e. the film carries singular curves.
    pub film_curves: bool,
}

type Edge = (Point, Point);

/// Segments of a 1-chain cut at every vertex lying inside another segment,
/// with coincident pieces cancelled.
fn subdivided_edges(c: &SimplicialChain) -> BTreeSet<Edge> {
    let verts = c.vertices();
    let mut out = BTreeSet::new();
    for s in c.iter() {
        let (a, b) = (&s.vertices()[0], &s.vertices()[1]);
        let d = sub(b, a);
        let len2 = crate::rational::dot(&d, &d);
        let mut ts: Vec<Rational> = verts
            .iter()
            .filter(|v| is_zero_vec(&cross(&d, &sub(v, a))))
            .map(|v| crate::rational::dot(&sub(v, a), &d) / &len2)
            .filter(|t| t.is_positive() && *t < Rational::one())
            .collect();
        ts.push(Rational::zero());
        ts.push(Rational::one());
        ts.sort();
        ts.dedup();
        for w in ts.windows(2) {
            let p = crate::rational::lerp(a, b, &w[0]);
            let r = crate::rational::lerp(a, b, &w[1]);
            let e = if p < r { (p, r) } else { (r, p) };
            if !out.remove(&e) {
                out.insert(e);
            }
        }
    }
    out
}

fn trace_loops(edges: BTreeSet<Edge>) -> Result<Vec<Vec<Point>>> {
    let mut adj: BTreeMap<Point, BTreeSet<Point>> = BTreeMap::new();
    for (a, b) in edges {
        adj.entry(a.clone()).or_default().insert(b.clone());
        adj.entry(b).or_default().insert(a);
    }
    if adj.values().any(|n| n.len() % 2 == 1) {
        return Err(FilmError::Precondition("C is not a cycle: a vertex has odd degree".into()));
    }
    let mut loops = Vec::new();
    while let Some(start) = adj.iter().find(|(_, n)| !n.is_empty()).map(|(v, _)| v.clone()) {
        let mut path = vec![start.clone()];
        let mut on_path: BTreeMap<Point, usize> = BTreeMap::from([(start, 0)]);
        loop {
            let cur = path.last().expect("nonempty").clone();
            let Some(next) = adj[&cur].iter().next().cloned() else { break };
            adj.get_mut(&cur).expect("vertex").remove(&next);
            adj.get_mut(&next).expect("vertex").remove(&cur);
            if let Some(&i) = on_path.get(&next) {
                let cyc: Vec<Point> = path.drain(i + 1..).collect();
                for v in &cyc {
                    on_path.remove(v);
                }
                let mut l = vec![path[i].clone()];
                l.extend(cyc);
                loops.push(l);
            } else {
                on_path.insert(next.clone(), path.len());
                path.push(next);
            }
        }
    }
    Ok(loops)
}

fn components<K: Ord + Clone>(keys: Vec<Vec<K>>) -> Vec<usize> {
    let n = keys.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut owner: BTreeMap<K, usize> = BTreeMap::new();
    for (i, ks) in keys.into_iter().enumerate() {
        for k in ks {
            match owner.get(&k) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
                None => {
                    owner.insert(k, i);
                }
            }
        }
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        *sizes.entry(find(&mut parent, i)).or_insert(0) += 1;
    }
    let mut out: Vec<usize> = sizes.into_values().collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// Loop decomposition of C and face components of B.
pub fn diagnostics(a: &Dipolyhedron) -> Result<Diagnostics> {
    if a.k() != 2 {
        return Err(FilmError::Dimension("diagnostics need a 2-dipolyhedron".into()));
    }
    let c = a.c().to_simplicial();
    let loops = trace_loops(subdivided_edges(&c))?;
    let loop_lengths: Vec<Measure> = loops
        .iter()
        .map(|l| (0..l.len()).map(|i| Simplex::segment(l[i].clone(), l[(i + 1) % l.len()].clone()).mass()).sum())
        .collect();
    let total_length = loop_lengths.iter().cloned().sum();
    let comps = match a.b() {
        Chain::Grid(g) => components(g.cells().iter().map(|f| f.facets()).collect()),
        Chain::Simplicial(s) => components(s.iter().map(|t| t.facets()).collect()),
    };
    Ok(Diagnostics { loops, loop_lengths, total_length, components: comps, film_curves: !c.is_empty() })
}
