//! Upper estimates of the r-natural norm of grid chains.
//!
//! A decomposition writes `P = Σ_j S^j + ∂C` where each `S^j` is a sum of
//! multicells `σ^j` generated by a cell `σ⁰` and lattice translations
//! `v_1..v_j`, costing `M(σ⁰)|v_1|⋯|v_j|`, plus the `(r−1)`-natural norm of C.
//! Only lattice translations up to a radius and a small family of C are
//! searched, so the value is always an upper bound.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::flatnorm::{flat_norm, Method, SolverConfig};
use crate::grid::{GridCell, GridChain};
use crate::measure::Measure;
use crate::rational::Rational;

/// Largest residual handled by the subset search; larger residuals are
/// priced cell by cell.
const MAX_SUBSET_CELLS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multicell {
    pub base: GridCell,
    pub vectors: Vec<[i64; 3]>,
}

impl Multicell {
    /// The `2^j` cells `T_{Σ_{i∈I} v_i} σ⁰`.
    pub fn cells(&self) -> Vec<GridCell> {
        let j = self.vectors.len();
        (0..1u32 << j)
            .map(|mask| {
                let mut b = self.base.base;
                for (i, v) in self.vectors.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        for a in 0..3 {
                            b[a] += v[a];
                        }
                    }
                }
                GridCell::new(b, self.base.axes)
            })
            .collect()
    }

    pub fn norm(&self, cell_mass: &Rational, epsilon: &Rational) -> Measure {
        let mut m = Measure::rational(cell_mass.clone());
        for v in &self.vectors {
            let n2: i64 = v.iter().map(|x| x * x).sum();
            m = m.mul(&Measure::sqrt(&(Rational::from_integer(n2.into()) * epsilon * epsilon)));
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MulticellDecomposition {
    pub r: usize,
    pub pieces: Vec<Multicell>,
    pub c: GridChain,
    pub c_cost: Measure,
    pub cost: Measure,
}

impl MulticellDecomposition {
    /// Replays `P = Σ pieces + ∂C` mod 2.
    pub fn verify(&self, p: &GridChain) -> bool {
        let mut acc = p.clone();
        for m in &self.pieces {
            for c in m.cells() {
                acc.toggle(c);
            }
        }
        if self.c.k() == p.k() + 1 {
            match self.c.boundary() {
                Ok(dc) => acc = acc.add(&dc).unwrap_or(acc),
                Err(_) => return false,
            }
        }
        acc.is_empty()
    }
}

fn lattice_vectors(radius: u32) -> Vec<[i64; 3]> {
    let r = radius as i64;
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let v = [x, y, z];
                let first = v.iter().find(|c| **c != 0);
                if matches!(first, Some(c) if *c > 0) && x * x + y * y + z * z <= r * r {
                    out.push(v);
                }
            }
        }
    }
    out
}

fn singletons(p: &GridChain) -> Vec<Multicell> {
    p.cells().iter().map(|c| Multicell { base: *c, vectors: Vec::new() }).collect()
}

/// Cheapest partition of the cell set into multicells of order ≤ r.
fn best_partition(p: &GridChain, r: usize, radius: u32) -> (Vec<Multicell>, Measure) {
    let cells: Vec<GridCell> = p.cells().iter().copied().collect();
    let eps = &p.grid().epsilon;
    let cm = p.grid().cell_measure(p.k());
    if cells.len() > MAX_SUBSET_CELLS || cells.is_empty() {
        return (singletons(p), Measure::rational(p.mass()));
    }
    let idx: BTreeMap<GridCell, usize> = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let vecs = lattice_vectors(radius);
    // Candidate groups as (mask, multicell, approximate cost).
    let mut groups: Vec<(u32, Multicell, f64)> = Vec::new();
    let push = |m: Multicell, groups: &mut Vec<(u32, Multicell, f64)>| {
        let mut mask = 0u32;
        for c in m.cells() {
            match idx.get(&c) {
                Some(i) if mask >> i & 1 == 0 => mask |= 1 << i,
                _ => return,
            }
        }
        let cost = m.norm(&cm, eps).approx();
        groups.push((mask, m, cost));
    };
    for c in &cells {
        push(Multicell { base: *c, vectors: vec![] }, &mut groups);
        if r >= 1 {
            for (a, v1) in vecs.iter().enumerate() {
                push(Multicell { base: *c, vectors: vec![*v1] }, &mut groups);
                if r >= 2 {
                    for (b, v2) in vecs.iter().enumerate().skip(a + 1) {
                        push(Multicell { base: *c, vectors: vec![*v1, *v2] }, &mut groups);
                        if r >= 3 {
                            for v3 in vecs.iter().skip(b + 1) {
                                push(Multicell { base: *c, vectors: vec![*v1, *v2, *v3] }, &mut groups);
                            }
                        }
                    }
                }
            }
        }
    }
    let n = cells.len();
    let full = (1u32 << n) - 1;
    let mut by_low: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (g, (mask, _, _)) in groups.iter().enumerate() {
        by_low[mask.trailing_zeros() as usize].push(g);
    }
    let mut dp = vec![f64::INFINITY; 1 << n];
    let mut choice = vec![usize::MAX; 1 << n];
    dp[0] = 0.0;
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        for &g in &by_low[low] {
            let gm = groups[g].0;
            if gm & mask == gm {
                let c = dp[(mask ^ gm) as usize] + groups[g].2;
                if c < dp[mask as usize] {
                    dp[mask as usize] = c;
                    choice[mask as usize] = g;
                }
            }
        }
    }
    let mut pieces = Vec::new();
    let mut cost = Measure::zero();
    let mut mask = full;
    while mask != 0 {
        let g = choice[mask as usize];
        cost += &groups[g].1.norm(&cm, eps);
        pieces.push(groups[g].1.clone());
        mask ^= groups[g].0;
    }
    (pieces, cost)
}

/// Upper bound for `|P|^{♮_r}`; nonincreasing in r by construction.
pub fn natural_norm_upper(p: &GridChain, r: usize, radius: u32) -> Result<MulticellDecomposition> {
    let empty_c = GridChain::empty(p.grid().clone(), (p.k() + 1).min(3));
    if r == 0 {
        return Ok(MulticellDecomposition {
            r,
            pieces: singletons(p),
            c: empty_c,
            c_cost: Measure::zero(),
            cost: Measure::rational(p.mass()),
        });
    }
    let prev = natural_norm_upper(p, r - 1, radius)?;
    let mut candidates = vec![empty_c.clone()];
    if p.k() < 3 && !p.is_empty() {
        let mut adjacent: Vec<GridCell> = p
            .grid()
            .cells_of_dim(p.k() + 1)
            .into_iter()
            .filter(|c| c.facets().iter().any(|f| p.contains(f)))
            .collect();
        adjacent.sort();
        for c in adjacent {
            candidates.push(GridChain::new(p.grid().clone(), p.k() + 1, [c])?);
        }
        let cfg = SolverConfig::default();
        let method = if p.grid().cells_of_dim(p.k() + 1).len() <= cfg.exhaustive_limit {
            Method::Exhaustive
        } else {
            Method::BranchAndBound
        };
        let fr = flat_norm(p, method, &cfg)?.r;
        if !fr.is_empty() {
            candidates.push(fr);
        }
    }
    let mut best: Option<MulticellDecomposition> = None;
    for c in candidates {
        let residual = if c.is_empty() { p.clone() } else { p.add(&c.boundary()?)? };
        let c_cost = if c.is_empty() { Measure::zero() } else { natural_norm_upper(&c, r - 1, radius)?.cost };
        let (pieces, pc) = best_partition(&residual, r, radius);
        let cost = &pc + &c_cost;
        if best.as_ref().is_none_or(|b| cost.lt(&b.cost)) {
            best = Some(MulticellDecomposition { r, pieces, c, c_cost, cost });
        }
    }
    let best = best.expect("at least the empty C is tried");
    Ok(if prev.cost.le(&best.cost) { MulticellDecomposition { r, ..prev } } else { best })
}
