//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line, also
//! under the default output capture.
//!
//! The criteria share one lock so their wall-clock limits are measured
//! without interference from each other.

use std::collections::BTreeSet;
use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use filmlab::deform::{deform_chain, DeformConfig};
use filmlab::dipoly::{cone_bound_holds, make_massive, Chain, Dipolyhedron, SupportPiece};
use filmlab::flatnorm::{energy_flat_norm, flat_norm, Method, SolverConfig, Status};
use filmlab::grid::{Axes, BoxRegion, GridCell, GridChain, GridSpec};
use filmlab::measure::Measure;
use filmlab::natural::natural_norm_upper;
use filmlab::plateau::{gamma_membership, initial_cone_solution, minimize_weight, PlateauConfig, PlateauProblem, SearchMethod};
use filmlab::rational::{pt, q, qf, Point, Rational};
use filmlab::spanning::default_directions;
use filmlab::simplicial::{geometric_mass, AffineMap, EqualityMode, PLMap, Simplex, SimplicialChain};
use num::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

/// Runs one criterion under the lock, prints its verdict line and fails the
/// test on a failed check or an exceeded time limit.
fn criterion(n: u32, name: &str, limit: Option<Duration>, body: impl FnOnce() -> Result<String, String>) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(body))
        .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
    let took = start.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(l)) if took > l => Err(format!("took {took:.2?}, limit {l:?}")),
        (o, _) => o,
    };
    let line = match &outcome {
        Ok(detail) => format!("criterion {n:>2} PASS  {name} ({took:.2?}) {detail}"),
        Err(why) => format!("criterion {n:>2} FAIL  {name} ({took:.2?}) {why}"),
    };
    // Written past the harness's capture so the verdict shows in plain runs.
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    if let Err(why) = outcome {
        panic!("criterion {n} failed: {why}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn subset<T: Copy>(items: &[T], mask: u64) -> Vec<T> {
    items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, c)| *c).collect()
}

fn random_subset<T: Copy>(items: &[T], rng: &mut ChaCha8Rng, p: f64) -> Vec<T> {
    items.iter().filter(|_| rng.gen_bool(p)).copied().collect()
}

fn chain(grid: &GridSpec, k: usize, cells: Vec<GridCell>) -> GridChain {
    GridChain::new(grid.clone(), k, cells).unwrap()
}

fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    qf(rng.gen_range(-12..=12), rng.gen_range(1..=4))
}

fn random_point(rng: &mut ChaCha8Rng) -> Point {
    [small_rational(rng), small_rational(rng), small_rational(rng)]
}

fn random_simplicial(rng: &mut ChaCha8Rng, k: usize, n: usize) -> SimplicialChain {
    let simplices = (0..n).map(|_| Simplex::new((0..=k).map(|_| random_point(rng)).collect()));
    SimplicialChain::new(k, simplices).unwrap()
}

fn exact_or_err(status: Status, what: &str) -> Result<(), String> {
    ensure(status == Status::Exact, || format!("{what}: solver did not prove optimality"))
}

/// Exhaustive for up to 24 variables, branch and bound beyond.
fn auto_method(vars: usize) -> Method {
    if vars <= 24 {
        Method::Exhaustive
    } else {
        Method::BranchAndBound
    }
}

fn energy_vars(grid: &GridSpec, k: usize) -> usize {
    let up = if k < 3 { grid.cells_of_dim(k + 1).len() } else { 0 };
    up + grid.cells_of_dim(k).len()
}

fn grid_dipoly(b: GridChain, c: GridChain) -> Dipolyhedron {
    Dipolyhedron::new(Chain::Grid(b), Chain::Grid(c)).unwrap()
}

#[test]
fn criterion_01_chain_algebra() {
    criterion(1, "boundary of boundary vanishes", Some(Duration::from_secs(5)), || {
        let g = GridSpec::unit([2, 2, 1]);
        let faces = g.cells_of_dim(2);
        let cubes = g.cells_of_dim(3);
        let edges = g.cells_of_dim(1);

        // Every 2-chain, walked in Gray-code order so each step toggles one face.
        let mut b = GridChain::empty(g.clone(), 2);
        let total = 1u64 << faces.len();
        for i in 1..total {
            b.toggle(faces[i.trailing_zeros() as usize]);
            let dd = b.boundary().and_then(|d| d.boundary()).map_err(|e| e.to_string())?;
            ensure(dd.is_empty(), || format!("∂∂ ≠ 0 on 2-chain {:?}", b.cells()))?;
        }
        for mask in 0..1u64 << cubes.len() {
            let c = chain(&g, 3, subset(&cubes, mask));
            let dd = c.boundary().and_then(|d| d.boundary()).map_err(|e| e.to_string())?;
            ensure(dd.is_empty(), || format!("∂∂ ≠ 0 on 3-chain {mask:b}"))?;
        }
        // A 1-chain's boundary has an even number of points, so its augmented
        // second boundary vanishes. The check is linear, so it is run on every
        // edge and on random 1-chains with ∂ compared against the sum of ∂e.
        let mut r = rng(1);
        for e in &edges {
            let d = chain(&g, 1, vec![*e]).boundary().unwrap();
            ensure(d.len().is_multiple_of(2), || format!("odd boundary of {e:?}"))?;
        }
        for _ in 0..2000 {
            let cells = random_subset(&edges, &mut r, 0.5);
            let c = chain(&g, 1, cells.clone());
            let d = c.boundary().unwrap();
            let mut sum = GridChain::empty(g.clone(), 0);
            for e in &cells {
                sum = sum.add(&chain(&g, 1, vec![*e]).boundary().unwrap()).unwrap();
            }
            ensure(d == sum && d.len().is_multiple_of(2), || "boundary of 1-chains is not linear".into())?;
        }

        let mut r = rng(2);
        for i in 0..1000 {
            let k = 1 + i % 3;
            let n = r.gen_range(1..=6);
            let c = random_simplicial(&mut r, k, n);
            let dd = if k == 1 {
                ensure(c.boundary().unwrap().len().is_multiple_of(2), || "odd boundary of a simplicial 1-chain".into())?;
                continue;
            } else {
                c.boundary().and_then(|d| d.boundary()).map_err(|e| e.to_string())?
            };
            ensure(dd.is_empty(), || format!("∂∂ ≠ 0 on simplicial chain #{i}"))?;
        }
        Ok(format!("{} 2-chains, {} 3-chains, 1000 simplicial chains", total, 1 << cubes.len()))
    });
}

#[test]
fn criterion_02_flat_norm_oracle_agreement() {
    criterion(2, "exhaustive and branch-and-bound flat norms agree", Some(Duration::from_secs(60)), || {
        let cfg = SolverConfig::default();
        let mut count = 0usize;
        let mut compare = |p: &GridChain| -> Result<(), String> {
            let ex = flat_norm(p, Method::Exhaustive, &cfg).map_err(|e| e.to_string())?;
            let bb = flat_norm(p, Method::BranchAndBound, &cfg).map_err(|e| e.to_string())?;
            exact_or_err(bb.status, "branch and bound")?;
            count += 1;
            ensure(ex.value == bb.value, || format!("{} vs {} on {:?}", ex.value, bb.value, p.cells()))
        };

        let mut r = rng(3);
        for dims in [[1, 1, 1], [2, 1, 1], [1, 2, 1], [2, 2, 1]] {
            let g = GridSpec::unit(dims);
            for k in [1, 2] {
                let cells = g.cells_of_dim(k);
                if cells.len() <= 12 {
                    for mask in 0..1u64 << cells.len() {
                        compare(&chain(&g, k, subset(&cells, mask)))?;
                    }
                } else {
                    let samples = if g.cells_of_dim(k + 1).len() > 12 { 150 } else { 1500 };
                    for _ in 0..samples {
                        let p = r.gen_range(0.1..0.9);
                        compare(&chain(&g, k, random_subset(&cells, &mut r, p)))?;
                    }
                    // Boundaries of random (k+1)-chains, where the two parts of
                    // the decomposition compete.
                    for _ in 0..samples / 3 {
                        let up = random_subset(&g.cells_of_dim(k + 1), &mut r, 0.4);
                        compare(&chain(&g, k + 1, up).boundary().unwrap())?;
                    }
                }
            }
        }

        let g = GridSpec::unit([2, 2, 1]);
        for f in g.cells_of_dim(2) {
            let p = chain(&g, 2, vec![f]).boundary().unwrap();
            for m in [Method::Exhaustive, Method::BranchAndBound] {
                let c = flat_norm(&p, m, &cfg).map_err(|e| e.to_string())?;
                ensure(c.value == q(1), || format!("M♭(∂{f:?}) = {}", c.value))?;
            }
        }
        Ok(format!("{count} instances, M♭(∂face) = 1 for all 20 faces"))
    });
}

/// Seeded `k = 2` instances `δB + μC` on the unit and double cube grids, a
/// third of them at ε = 1/2.
fn prop_instances() -> Vec<Dipolyhedron> {
    let mut r = rng(4);
    (0..200)
        .map(|i| {
            let g = match i % 3 {
                0 => GridSpec::unit([1, 1, 1]),
                1 => GridSpec::unit([2, 1, 1]),
                _ => GridSpec::new(qf(1, 2), pt(0, 0, 0), [1, 1, 1]).unwrap(),
            };
            let pb = r.gen_range(0.0..0.7);
            let pc = r.gen_range(0.0..0.5);
            let b = chain(&g, 2, random_subset(&g.cells_of_dim(2), &mut r, pb));
            let c = if r.gen_bool(0.5) {
                // A closed C, as for films spanning a curve.
                let faces = random_subset(&g.cells_of_dim(2), &mut r, 0.3);
                chain(&g, 2, faces).boundary().unwrap()
            } else {
                chain(&g, 1, random_subset(&g.cells_of_dim(1), &mut r, pc))
            };
            grid_dipoly(b, c)
        })
        .collect()
}

fn energy_flat(a: &Dipolyhedron) -> Result<Rational, String> {
    let Chain::Grid(b) = a.b() else { unreachable!() };
    let cfg = SolverConfig { node_budget: 20_000_000, ..SolverConfig::default() };
    let cert = energy_flat_norm(a, auto_method(energy_vars(b.grid(), a.k())), &cfg).map_err(|e| e.to_string())?;
    exact_or_err(cert.status, "energy flat norm")?;
    Ok(cert.value)
}

fn flat(p: &GridChain) -> Result<Rational, String> {
    let vars = if p.k() < 3 { p.grid().cells_of_dim(p.k() + 1).len() } else { 0 };
    let cfg = SolverConfig { node_budget: 20_000_000, ..SolverConfig::default() };
    let cert = flat_norm(p, auto_method(vars), &cfg).map_err(|e| e.to_string())?;
    exact_or_err(cert.status, "flat norm")?;
    Ok(cert.value)
}

#[test]
fn criterion_03_parts_are_flat_bounded() {
    criterion(3, "M♭(B), M♭(C) ≤ E♭(δB + μC)", Some(Duration::from_secs(120)), || {
        for (i, a) in prop_instances().iter().enumerate() {
            let (Chain::Grid(b), Chain::Grid(c)) = (a.b(), a.c()) else { unreachable!() };
            let e = energy_flat(a)?;
            let fb = flat(b)?;
            let fc = flat(c)?;
            ensure(fb <= e && fc <= e, || format!("instance {i}: M♭(B) = {fb}, M♭(C) = {fc}, E♭ = {e}"))?;
        }
        Ok("200 instances".into())
    });
}

#[test]
fn criterion_04_boundary_contraction() {
    criterion(4, "E♭(∂A) ≤ E♭(A)", Some(Duration::from_secs(120)), || {
        let mut strict = 0;
        for (i, a) in prop_instances().iter().enumerate() {
            let e = energy_flat(a)?;
            let da = a.boundary().map_err(|e| e.to_string())?;
            let ed = energy_flat(&da)?;
            ensure(ed <= e, || format!("instance {i}: E♭(∂A) = {ed} > E♭(A) = {e}"))?;
            strict += usize::from(ed < e);
        }
        Ok(format!("200 instances, {strict} strict"))
    });
}

#[test]
fn criterion_05_splitting_uniqueness() {
    criterion(5, "E♭(δB + μC) = 0 exactly when B = C = 0", None, || {
        let cfg = SolverConfig::default();
        let mut count = 0usize;
        let mut check = |a: &Dipolyhedron| -> Result<(), String> {
            let v = energy_flat_norm(a, Method::Exhaustive, &cfg).map_err(|e| e.to_string())?.value;
            count += 1;
            ensure((v == q(0)) == a.is_zero(), || format!("E♭ = {v} on B = {:?}, C = {:?}", a.b(), a.c()))
        };

        // Unit cube: every pair (B, C) with dim B = 2, 2^6 · 2^12 of them.
        let g = GridSpec::unit([1, 1, 1]);
        let faces = g.cells_of_dim(2);
        let edges = g.cells_of_dim(1);
        for fm in 0..1u64 << faces.len() {
            let b = chain(&g, 2, subset(&faces, fm));
            for em in 0..1u64 << edges.len() {
                check(&grid_dipoly(b.clone(), chain(&g, 1, subset(&edges, em))))?;
            }
        }

        // Double cube: every B with C = 0, every closed C against a few B,
        // and seeded pairs.
        let g = GridSpec::unit([2, 1, 1]);
        let faces = g.cells_of_dim(2);
        let edges = g.cells_of_dim(1);
        let empty_c = GridChain::empty(g.clone(), 1);
        for fm in 0..1u64 << faces.len() {
            check(&grid_dipoly(chain(&g, 2, subset(&faces, fm)), empty_c.clone()))?;
        }
        let mut cycles = std::collections::BTreeSet::new();
        for fm in 0..1u64 << faces.len() {
            cycles.insert(chain(&g, 2, subset(&faces, fm)).boundary().unwrap().cells().clone());
        }
        let mut r = rng(5);
        let bs: Vec<GridChain> = (0..4).map(|_| chain(&g, 2, random_subset(&faces, &mut r, 0.4))).collect();
        for cells in cycles {
            let c = &chain(&g, 1, cells.into_iter().collect());
            check(&grid_dipoly(GridChain::empty(g.clone(), 2), c.clone()))?;
            for b in &bs {
                check(&grid_dipoly(b.clone(), c.clone()))?;
            }
        }
        for _ in 0..5000 {
            let b = chain(&g, 2, random_subset(&faces, &mut r, 0.3));
            let c = chain(&g, 1, random_subset(&edges, &mut r, 0.2));
            check(&grid_dipoly(b, c))?;
        }
        Ok(format!("{count} instances"))
    });
}

fn random_point_in(rng: &mut ChaCha8Rng, center: &Point, half: i64, den: i64) -> Point {
    let mut p = center.clone();
    for x in &mut p {
        *x += qf(rng.gen_range(-half * den..=half * den), den);
    }
    p
}

/// A simplicial `k`-dipolyhedron with vertices in the cube of half side
/// `half` around `center`.
fn random_simplicial_dipoly(rng: &mut ChaCha8Rng, k: usize, center: &Point, half: i64) -> Dipolyhedron {
    let mut simplices = |dim: usize, n: usize| {
        let s: Vec<Simplex> =
            (0..n).map(|_| Simplex::new((0..=dim).map(|_| random_point_in(rng, center, half, 5)).collect())).collect();
        SimplicialChain::new(dim, s).unwrap()
    };
    let nb = if k == 1 { 3 } else { 2 };
    let b = simplices(k, nb);
    let c = simplices(k - 1, 2);
    Dipolyhedron::new(Chain::Simplicial(b), Chain::Simplicial(c)).unwrap()
}

fn sup_distance(a: &Dipolyhedron, p: &Point) -> Rational {
    let mut m = q(0);
    for ch in [a.b(), a.c()] {
        for v in ch.to_simplicial().vertices() {
            for i in 0..3 {
                let d = (&v[i] - &p[i]).abs();
                if d > m {
                    m = d;
                }
            }
        }
    }
    m
}

#[test]
fn criterion_06_cone_identity_and_bound() {
    criterion(6, "A = ∂(pA) + p(∂A), E(pA) ≤ r√3/(k+1)·E(A)", Some(Duration::from_secs(60)), || {
        let mut r = rng(6);
        for i in 0..100 {
            let k = 1 + i % 2;
            let center = random_point_in(&mut r, &pt(0, 0, 0), 3, 2);
            let a = random_simplicial_dipoly(&mut r, k, &center, 2);
            let p = random_point_in(&mut r, &center, 1, 3);
            let ok = a.cone_identity_holds(&p, EqualityMode::Exact).map_err(|e| e.to_string())?;
            ensure(ok, || format!("cone identity fails on instance {i}"))?;
            // Q(p, r) has side r, so the tightest cube around p has r = 2·sup|x − p|∞.
            let side = q(2) * sup_distance(&a, &p);
            ensure(cone_bound_holds(&a, &p, &side), || format!("cone energy bound fails on instance {i}"))?;
        }
        Ok("100 instances".into())
    });
}

/// `R·D` with `R` the rotation of an integer quaternion and `D` diagonal, so
/// `MᵀM = D²` and the operator norm is `max |d_i|`.
fn rotation_times_diagonal(rng: &mut ChaCha8Rng) -> (AffineMap, Rational) {
    let [a, b, c, d]: [i64; 4] = std::array::from_fn(|_| rng.gen_range(-4..=4));
    let (a, b, c, d) = if a * a + b * b + c * c + d * d == 0 { (1, 0, 0, 0) } else { (a, b, c, d) };
    let n = a * a + b * b + c * c + d * d;
    let rot = [
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
    ];
    let diag: [Rational; 3] = std::array::from_fn(|_| {
        let v = qf(rng.gen_range(1..=12), rng.gen_range(1..=6));
        if rng.gen_bool(0.3) {
            -v
        } else {
            v
        }
    });
    let matrix: [[Rational; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| qf(rot[i][j], n) * &diag[j]));
    let lip = diag.iter().map(|x| x.abs()).max().unwrap();
    let translation = random_point_in(rng, &pt(0, 0, 0), 2, 3);
    (AffineMap::new(matrix, translation), lip)
}

fn inside_cube(chain: &Chain, r: &Rational) -> bool {
    chain.to_simplicial().vertices().iter().all(|v| v.iter().all(|x| &x.abs() <= r))
}

#[test]
fn criterion_07_pushforward_and_clamp() {
    criterion(7, "pushforward mass bound, clamp properties", Some(Duration::from_secs(30)), || {
        let mut r = rng(7);
        for i in 0..50 {
            let (map, lip) = rotation_times_diagonal(&mut r);
            let norm = map.operator_norm();
            ensure(norm.exact && norm.sq_hi == &lip * &lip, || format!("map {i}: operator norm not exact"))?;
            let k = 1 + i % 2;
            let a = random_simplicial_dipoly(&mut r, k, &pt(0, 0, 0), 2);
            let f = PLMap::affine(map, lip);
            let fa = a.pushforward(&f).map_err(|e| e.to_string())?;
            let (w0, w1) = (a.b().mass(), fa.b().mass());
            let (m0, m1) = (a.c().mass(), fa.c().mass());
            ensure(w1.le(&norm.power_upper(k).mul(&w0)), || format!("map {i}: M(f_*B) > Lip^{k} M(B)"))?;
            ensure(m1.le(&norm.power_upper(k - 1).mul(&m0)), || format!("map {i}: M(f_*C) > Lip^{} M(C)", k - 1))?;
            let commutes = fa
                .boundary()
                .and_then(|d| d.equals_mod2(&a.boundary()?.pushforward(&f)?, EqualityMode::Exact))
                .map_err(|e| e.to_string())?;
            ensure(commutes, || format!("map {i}: ∂f_*A ≠ f_*∂A"))?;
        }

        for i in 0..50 {
            let k = 1 + i % 2;
            let a = random_simplicial_dipoly(&mut r, k, &pt(0, 0, 0), 3);
            let rad = qf(r.gen_range(4..=12), 4);
            let once = a.clamp(&rad).map_err(|e| e.to_string())?;
            let twice = once.clamp(&rad).map_err(|e| e.to_string())?;
            ensure(once.equals_mod2(&twice, EqualityMode::Exact).map_err(|e| e.to_string())?, || {
                format!("clamp {i}: not idempotent")
            })?;
            for (before, after) in [(a.b(), once.b()), (a.c(), once.c())] {
                let m0 = geometric_mass(&before.to_simplicial()).map_err(|e| e.to_string())?;
                let m1 = geometric_mass(&after.to_simplicial()).map_err(|e| e.to_string())?;
                ensure(m1.le(&m0), || format!("clamp {i}: mass grew from {m0} to {m1}"))?;
                ensure(inside_cube(after, &rad), || format!("clamp {i}: support leaves Q_r"))?;
            }
        }
        Ok("50 maps, 50 clamps".into())
    });
}

/// Seeded triangle chains in the open box (0, 2)³: triangles for `k = 2`,
/// triangle outlines for `k = 1`.
fn deformation_inputs() -> Vec<SimplicialChain> {
    let mut r = rng(8);
    let vertex = |r: &mut ChaCha8Rng| -> Point { std::array::from_fn(|_| qf(r.gen_range(2..=40), 21)) };
    (0..20)
        .map(|i| {
            let n = 1 + i % 2;
            let tris: Vec<Simplex> = (0..n)
                .map(|_| {
                    let p0 = vertex(&mut r);
                    Simplex::triangle(p0.clone(), vertex(&mut r), vertex(&mut r))
                })
                .collect();
            let a = SimplicialChain::new(2, tris).unwrap();
            if i < 10 {
                a
            } else {
                a.boundary().unwrap()
            }
        })
        .collect()
}

#[test]
fn criterion_08_deformation() {
    criterion(8, "deformation identity, supports and constants", Some(Duration::from_secs(600)), || {
        let inputs = deformation_inputs();
        let resolutions = [qf(1, 2), qf(1, 4), qf(1, 8)];
        let cfg = DeformConfig::default();
        // The grid must resolve the inputs: at ε = 1 a cell is as large as a
        // triangle and P vanishes for most of them.
        // sup over inputs of each constant, per (k, resolution)
        let mut sup = [[[0.0f64; 4]; 3]; 2];
        for (i, a) in inputs.iter().enumerate() {
            for (j, eps) in resolutions.iter().enumerate() {
                let n = (q(2) / eps).to_integer().try_into().unwrap();
                let g = GridSpec::new(eps.clone(), pt(0, 0, 0), [n, n, n]).unwrap();
                let res = deform_chain(a, &g, &cfg).map_err(|e| format!("input {i}, ε = {eps}: {e}"))?;
                ensure(res.identity_verified, || format!("input {i}, ε = {eps}: A − P ≠ Q + ∂R"))?;
                ensure(res.support.within_six_eps, || format!("input {i}, ε = {eps}: support beyond 6ε"))?;
                let c = res.constants.as_array();
                ensure(c.iter().all(|x| x.is_finite() && *x <= cfg.c_max), || {
                    format!("input {i}, ε = {eps}: constants {c:?} exceed {}", cfg.c_max)
                })?;
                for (s, x) in sup[a.k() - 1][j].iter_mut().zip(c) {
                    *s = s.max(x);
                }
            }
        }
        let names = ["cP", "cdP", "cQ", "cR"];
        for (k, per_res) in sup.iter().enumerate() {
            for j in 0..resolutions.len() - 1 {
                for (m, name) in names.iter().enumerate() {
                    let (a, b) = (per_res[j][m], per_res[j + 1][m]);
                    let stable = (a == 0.0 && b == 0.0) || (a > 0.0 && b > 0.0 && b <= 2.0 * a && a <= 2.0 * b);
                    ensure(stable, || {
                        format!("k = {}: {name} moves from {a:.3} to {b:.3} at ε = {}", k + 1, resolutions[j + 1])
                    })?;
                }
            }
        }
        let fmt = |k: usize| {
            sup[k].iter().map(|c| format!("[{:.2} {:.2} {:.2} {:.2}]", c[0], c[1], c[2], c[3])).collect::<Vec<_>>().join(" ")
        };
        Ok(format!("60 runs; sup (cP cdP cQ cR) k=1 {} k=2 {}", fmt(0), fmt(1)))
    });
}

/// Unit square in z = 0 on a 1×1×1 grid, or the boundary of the 2×2 patch.
fn plateau_problem(side: i64) -> PlateauProblem {
    let g = GridSpec::new(q(1), [qf(-side, 2), qf(-side, 2), q(0)], [side as u32, side as u32, 1]).unwrap();
    let faces = (0..side).flat_map(|x| (0..side).map(move |y| GridCell::new([x, y, 0], Axes::XY)));
    let b = GridChain::new(g, 2, faces).unwrap();
    PlateauProblem::new(b.boundary().unwrap(), None, default_directions()).unwrap()
}

#[test]
fn criterion_09_plateau() {
    criterion(9, "plateau optima at desk scale", Some(Duration::from_secs(300)), || {
        let mut notes = Vec::new();
        for (side, want) in [(1, q(1)), (2, q(4))] {
            let p = plateau_problem(side);
            let mut found = Vec::new();
            for m in [SearchMethod::Exhaustive, SearchMethod::Bnb] {
                let s = minimize_weight(&p, &PlateauConfig { method: m, ..PlateauConfig::default() })
                    .map_err(|e| e.to_string())?;
                ensure(s.status == Status::Exact, || format!("{side}×{side}, {m:?}: not proved optimal"))?;
                ensure(s.w.as_rational() == Some(want.clone()), || format!("{side}×{side}, {m:?}: W = {}", s.w))?;
                ensure(s.membership.is_member(), || format!("{side}×{side}, {m:?}: optimum is not in Γ(λ)"))?;
                let mut admissible = 0;
                for d in s.membership.spanning.directions.iter().filter(|d| d.admissible) {
                    let area = d.enclosed_area.as_ref().ok_or("admissible axis without an area")?;
                    ensure(area.le(&s.w), || format!("{side}×{side}: W = {} below shadow area {area}", s.w))?;
                    admissible += 1;
                }
                ensure(admissible > 0, || format!("{side}×{side}: no admissible axis"))?;
                ensure(p.weight_lower_bound().le(&s.w), || format!("{side}×{side}: W below the lower bound"))?;
                found.push(s.a);
            }
            ensure(found[0] == found[1], || format!("{side}×{side}: exhaustive and bnb optima differ"))?;

            let massive = make_massive(Chain::Grid(p.gamma().clone()));
            let m = gamma_membership(&massive, &p).map_err(|e| e.to_string())?;
            ensure(m.boundary_ok() && !m.spanning.spans() && !m.is_member(), || {
                format!("{side}×{side}: μγ is not rejected by the spanning check")
            })?;

            let cone = initial_cone_solution(&p, &DeformConfig::default()).map_err(|e| e.to_string())?;
            ensure(cone.boundary_ok && cone.spanning.spans(), || format!("{side}×{side}: cone start infeasible"))?;
            ensure(cone.energy.as_rational() == Some(want.clone()), || {
                format!("{side}×{side}: cone start has E = {}", cone.energy)
            })?;
            notes.push(format!("{side}×{side} W = E_cone = {want}"));
        }
        Ok(notes.join(", "))
    });
}

fn random_box(rng: &mut ChaCha8Rng, grid: &GridSpec) -> BoxRegion {
    let mut lo = pt(0, 0, 0);
    let mut hi = pt(0, 0, 0);
    for axis in 0..3 {
        let n = grid.dims[axis] as i64;
        let a = rng.gen_range(-1..=n + 1);
        let b = rng.gen_range(-1..=n + 1);
        let step = |i: i64| &grid.origin[axis] + &grid.epsilon * q(i);
        lo[axis] = step(a.min(b));
        hi[axis] = step(a.max(b));
    }
    BoxRegion::new(lo, hi).unwrap()
}

#[test]
fn criterion_10_restriction_additivity() {
    criterion(10, "restriction splits the energy", Some(Duration::from_secs(30)), || {
        let mut r = rng(10);
        let grids = [GridSpec::unit([3, 2, 2]), GridSpec::new(qf(1, 2), pt(-1, 0, 0), [4, 2, 2]).unwrap()];
        let mut simplicial = 0;
        for i in 0..100 {
            let g = &grids[i % 2];
            let k = 1 + i % 2;
            let a = if i % 4 < 2 {
                let b = chain(g, k, random_subset(&g.cells_of_dim(k), &mut r, 0.3));
                let c = if r.gen_bool(0.5) {
                    b.add(&chain(g, k, random_subset(&g.cells_of_dim(k), &mut r, 0.3))).unwrap().boundary().unwrap()
                } else {
                    chain(g, k - 1, random_subset(&g.cells_of_dim(k - 1), &mut r, 0.3))
                };
                let support: BTreeSet<SupportPiece> =
                    b.cells().iter().chain(c.cells().iter()).map(|c| SupportPiece::Cell(*c)).collect();
                let a = grid_dipoly(b, c);
                let got: BTreeSet<SupportPiece> = a.support().into_iter().collect();
                ensure(got == support, || format!("instance {i}: support differs from |B| ∪ |C|"))?;
                a
            } else {
                simplicial += 1;
                random_simplicial_dipoly(&mut r, k, &pt(1, 1, 1), 1)
            };
            let x = random_box(&mut r, g);
            let (inside, outside) = a.split(&x).map_err(|e| e.to_string())?;
            let (e_in, e_out, e) = (inside.energy().e, outside.energy().e, a.energy().e);
            ensure(&e_in + &e_out == e, || format!("instance {i}: {e_in} + {e_out} ≠ {e}"))?;
            let (restricted, report) = a.restrict(&x).map_err(|e| e.to_string())?;
            ensure(restricted == inside && report.nu == e_in, || format!("instance {i}: restrict disagrees with split"))?;
        }
        Ok(format!("100 pairs ({simplicial} simplicial)"))
    });
}

#[test]
fn criterion_11_natural_norm() {
    criterion(11, "natural norm estimator", Some(Duration::from_secs(30)), || {
        let g = GridSpec::unit([1, 1, 2]);
        let faces = chain(&g, 2, vec![GridCell::new([0, 0, 0], Axes::XY), GridCell::new([0, 0, 1], Axes::XY)]);
        let one = natural_norm_upper(&faces, 1, 1).map_err(|e| e.to_string())?;
        ensure(one.verify(&faces), || "two faces: decomposition does not reproduce P".into())?;
        ensure(one.cost.as_rational() == Some(q(1)) && faces.mass() == q(2), || {
            format!("two faces: r = 1 bound {} against M = {}", one.cost, faces.mass())
        })?;

        let mut r = rng(11);
        let grids = [GridSpec::unit([2, 2, 1]), GridSpec::new(qf(1, 2), pt(0, 0, 0), [2, 2, 2]).unwrap()];
        for i in 0..40 {
            let g = &grids[i % 2];
            let k = 1 + i % 2;
            let p = chain(g, k, random_subset(&g.cells_of_dim(k), &mut r, 0.35));
            let radius = 1 + (i % 3) as u32 / 2;
            let mut prev: Option<Measure> = None;
            for order in 0..=3 {
                let d = natural_norm_upper(&p, order, radius).map_err(|e| e.to_string())?;
                ensure(d.verify(&p), || format!("chain {i}, r = {order}: decomposition does not reproduce P"))?;
                if order == 0 {
                    ensure(d.cost == Measure::rational(p.mass()), || format!("chain {i}: order 0 is not the mass"))?;
                }
                if let Some(prev) = &prev {
                    ensure(d.cost.le(prev), || format!("chain {i}: bound grows from {prev} to {} at r = {order}", d.cost))?;
                }
                prev = Some(d.cost);
            }
        }
        Ok("fixture 1 < 2; 40 chains monotone over r = 0..3".into())
    });
}
