//! Flat norm and energy-flat norm of grid chains, with certificates.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::ToPrimitive;

use crate::dipoly::{Chain, Dipolyhedron};
use crate::error::{FilmError, Result};
use crate::gf2::{self, Output, Problem, Solution};
use crate::grid::{GridCell, GridChain, GridSpec};
use crate::rational::Rational;

pub use crate::gf2::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    BranchAndBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub exhaustive_limit: usize,
    pub node_budget: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { exhaustive_limit: 24, node_budget: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatNormCertificate {
    pub value: Rational,
    pub q: GridChain,
    pub r: GridChain,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnergyFlatCertificate {
    pub value: Rational,
    pub b_q: GridChain,
    pub c_q: GridChain,
    pub b_r: GridChain,
    pub c_r: GridChain,
    pub status: Status,
}

/// Integer cell weights: `ε^j · den(ε)^3`.
struct Weights {
    per_dim: [u128; 4],
    denom: BigInt,
}

impl Weights {
    fn new(grid: &GridSpec) -> Result<Self> {
        let p = grid.epsilon.numer().clone();
        let q = grid.epsilon.denom().clone();
        let mut per_dim = [0u128; 4];
        for (j, w) in per_dim.iter_mut().enumerate() {
            let v = num::pow(p.clone(), j) * num::pow(q.clone(), 3 - j);
            *w = v.to_u128().ok_or_else(|| FilmError::Unsupported("cell weights overflow 128 bits".into()))?;
        }
        Ok(Self { per_dim, denom: num::pow(q, 3) })
    }

    fn value(&self, cost: u128) -> Rational {
        Rational::new(BigInt::from(cost), self.denom.clone())
    }
}

fn index(cells: &[GridCell]) -> BTreeMap<GridCell, usize> {
    cells.iter().enumerate().map(|(i, c)| (*c, i)).collect()
}

fn solve(p: &Problem, method: Method, cfg: &SolverConfig) -> Result<Solution> {
    match method {
        Method::Exhaustive => gf2::solve_exhaustive(p, cfg.exhaustive_limit),
        Method::BranchAndBound => gf2::solve_bnb(p, cfg.node_budget),
    }
}

fn chain_from(grid: &GridSpec, k: usize, cells: &[GridCell], bits: &[bool]) -> GridChain {
    let set = cells.iter().zip(bits).filter(|(_, b)| **b).map(|(c, _)| *c).collect();
    GridChain::from_set_unchecked(grid.clone(), k, set)
}

/// `M_♭(P) = min { M(Q) + M(R) : P = Q + ∂R }` over grid chains.
pub fn flat_norm(p: &GridChain, method: Method, cfg: &SolverConfig) -> Result<FlatNormCertificate> {
    let grid = p.grid();
    let k = p.k();
    let w = Weights::new(grid)?;
    let vars: Vec<GridCell> = if k < 3 { grid.cells_of_dim(k + 1) } else { Vec::new() };
    let outs: Vec<GridCell> = grid.cells_of_dim(k);
    let out_idx = index(&outs);
    let mut outputs: Vec<Output> =
        outs.iter().map(|c| Output { base: p.contains(c), vars: Vec::new(), weight: w.per_dim[k] }).collect();
    for (v, c) in vars.iter().enumerate() {
        for f in c.facets() {
            outputs[out_idx[&f]].vars.push(v);
        }
    }
    let prob = Problem { var_weights: vec![if k < 3 { w.per_dim[k + 1] } else { 0 }; vars.len()], outputs };
    let sol = solve(&prob, method, cfg)?;
    let y = prob.evaluate(&sol.x);
    let cert = FlatNormCertificate {
        value: w.value(sol.cost),
        q: chain_from(grid, k, &outs, &y),
        r: chain_from(grid, (k + 1).min(3), &vars, &sol.x),
        status: sol.status,
    };
    debug_assert!(verify_flat(&cert, p));
    Ok(cert)
}

/// Replays `P = Q + ∂R` and the value.
pub fn verify_flat(cert: &FlatNormCertificate, p: &GridChain) -> bool {
    let Ok(sum) = (if p.k() < 3 { cert.r.boundary().and_then(|dr| cert.q.add(&dr)) } else { Ok(cert.q.clone()) })
    else {
        return false;
    };
    sum == *p && cert.value == cert.q.mass() + if p.k() < 3 { cert.r.mass() } else { Rational::from_integer(0.into()) }
}

/// `E_♭(A) = min { E(Q) + E(R) : A = Q + ∂R }` for a grid dipolyhedron with
/// `k ≥ 1`, solved over `R = δB_R + μC_R`:
/// `B = B_Q + ∂B_R + C_R`, `C = C_Q + ∂C_R`.
pub fn energy_flat_norm(a: &Dipolyhedron, method: Method, cfg: &SolverConfig) -> Result<EnergyFlatCertificate> {
    let (Chain::Grid(b), Chain::Grid(c)) = (a.b(), a.c()) else {
        return Err(FilmError::Precondition("energy flat norm needs a grid dipolyhedron".into()));
    };
    let k = a.k();
    if k == 0 {
        return Err(FilmError::Dimension("energy flat norm needs k ≥ 1".into()));
    }
    let grid = b.grid();
    let w = Weights::new(grid)?;
    let br_cells: Vec<GridCell> = if k < 3 { grid.cells_of_dim(k + 1) } else { Vec::new() };
    let cr_cells: Vec<GridCell> = grid.cells_of_dim(k);
    let bq_cells: Vec<GridCell> = grid.cells_of_dim(k);
    let cq_cells: Vec<GridCell> = grid.cells_of_dim(k - 1);
    let bq_idx = index(&bq_cells);
    let cq_idx = index(&cq_cells);
    let nb = bq_cells.len();

    let mut outputs: Vec<Output> = bq_cells
        .iter()
        .map(|s| Output { base: b.contains(s), vars: Vec::new(), weight: w.per_dim[k] })
        .chain(cq_cells.iter().map(|s| Output { base: c.contains(s), vars: Vec::new(), weight: w.per_dim[k - 1] }))
        .collect();
    let mut var_weights = Vec::new();
    for (v, cell) in br_cells.iter().enumerate() {
        var_weights.push(w.per_dim[k + 1]);
        for f in cell.facets() {
            outputs[bq_idx[&f]].vars.push(v);
        }
    }
    let off = br_cells.len();
    for (i, cell) in cr_cells.iter().enumerate() {
        let v = off + i;
        var_weights.push(w.per_dim[k]);
        outputs[bq_idx[cell]].vars.push(v);
        for f in cell.facets() {
            outputs[nb + cq_idx[&f]].vars.push(v);
        }
    }
    let prob = Problem { var_weights, outputs };
    let sol = solve(&prob, method, cfg)?;
    let y = prob.evaluate(&sol.x);
    let cert = EnergyFlatCertificate {
        value: w.value(sol.cost),
        b_q: chain_from(grid, k, &bq_cells, &y[..nb]),
        c_q: chain_from(grid, k - 1, &cq_cells, &y[nb..]),
        b_r: chain_from(grid, (k + 1).min(3), &br_cells, &sol.x[..off]),
        c_r: chain_from(grid, k, &cr_cells, &sol.x[off..]),
        status: sol.status,
    };
    debug_assert!(verify_energy(&cert, a));
    Ok(cert)
}

/// Replays both identities and the value.
pub fn verify_energy(cert: &EnergyFlatCertificate, a: &Dipolyhedron) -> bool {
    let (Chain::Grid(b), Chain::Grid(c)) = (a.b(), a.c()) else {
        return false;
    };
    let k = a.k();
    let db_r = if k < 3 { cert.b_r.boundary().ok() } else { Some(GridChain::empty(b.grid().clone(), k)) };
    let Some(db_r) = db_r else { return false };
    let Ok(dc_r) = cert.c_r.boundary() else { return false };
    let b_ok = cert.b_q.add(&db_r).and_then(|s| s.add(&cert.c_r)).map(|s| s == *b).unwrap_or(false);
    let c_ok = cert.c_q.add(&dc_r).map(|s| s == *c).unwrap_or(false);
    let br_mass = if k < 3 { cert.b_r.mass() } else { Rational::from_integer(0.into()) };
    let value = cert.b_q.mass() + cert.c_q.mass() + br_mass + cert.c_r.mass();
    b_ok && c_ok && value == cert.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipoly::{make_dipole, make_massive};
    use crate::grid::Axes;
    use crate::rational::{q, qf, pt};

    fn cube() -> GridSpec {
        GridSpec::unit([1, 1, 1])
    }

    fn face() -> GridCell {
        GridCell::new([0, 0, 0], Axes::XY)
    }

    #[test]
    fn empty_chain_has_zero_norm() {
        let p = GridChain::empty(cube(), 1);
        let c = flat_norm(&p, Method::Exhaustive, &SolverConfig::default()).unwrap();
        assert_eq!(c.value, q(0));
        assert!(c.q.is_empty() && c.r.is_empty());
    }

    #[test]
    fn face_boundary_has_norm_one() {
        let p = GridChain::new(cube(), 2, [face()]).unwrap().boundary().unwrap();
        for m in [Method::Exhaustive, Method::BranchAndBound] {
            let c = flat_norm(&p, m, &SolverConfig::default()).unwrap();
            assert_eq!(c.value, q(1));
            assert!(c.q.is_empty());
            assert_eq!(c.r.cells().iter().copied().collect::<Vec<_>>(), vec![face()]);
            assert!(verify_flat(&c, &p));
        }
    }

    #[test]
    fn single_edge_is_its_own_best() {
        let p = GridChain::new(cube(), 1, [GridCell::new([0, 0, 0], Axes::X)]).unwrap();
        let c = flat_norm(&p, Method::Exhaustive, &SolverConfig::default()).unwrap();
        assert_eq!(c.value, q(1));
        assert_eq!(c.q, p);
    }

    #[test]
    fn tampered_certificate_fails() {
        let p = GridChain::new(cube(), 2, [face()]).unwrap().boundary().unwrap();
        let mut c = flat_norm(&p, Method::Exhaustive, &SolverConfig::default()).unwrap();
        c.q.toggle(GridCell::new([0, 0, 0], Axes::X));
        assert!(!verify_flat(&c, &p));
    }

    #[test]
    fn energy_flat_of_dipole_and_mass_examples() {
        let gamma = GridChain::new(cube(), 2, [face()]).unwrap().boundary().unwrap();
        let d = make_dipole(Chain::Grid(gamma));
        let c = energy_flat_norm(&d, Method::Exhaustive, &SolverConfig::default()).unwrap();
        assert_eq!(c.value, q(1));
        assert!(verify_energy(&c, &d));
        let e = GridChain::new(cube(), 1, [GridCell::new([0, 0, 0], Axes::X)]).unwrap();
        let m = make_massive(Chain::Grid(e.clone()));
        let mc = energy_flat_norm(&m, Method::Exhaustive, &SolverConfig::default()).unwrap();
        let mf = flat_norm(&e, Method::Exhaustive, &SolverConfig::default()).unwrap();
        assert!(mc.value <= q(2) * mf.value);
        assert!(verify_energy(&mc, &m));
    }

    #[test]
    fn weights_follow_epsilon() {
        let g = GridSpec::new(qf(1, 2), pt(0, 0, 0), [1, 1, 1]).unwrap();
        let p = GridChain::new(g, 2, [face()]).unwrap().boundary().unwrap();
        let c = flat_norm(&p, Method::BranchAndBound, &SolverConfig::default()).unwrap();
        assert_eq!(c.value, qf(1, 4));
    }
}
