//! Minimum-weight solutions of affine GF(2) systems.
//!
//! Free variables `x` each cost `w_v` when set; the outputs are the affine
//! functions `y = b ⊕ Σ x_v` over a variable list, each costing `w_y` when
//! on. We minimize the total cost. Among optimal assignments the one whose
//! bit string (variable 0 first) is lexicographically least is returned, so
//! both solvers agree exactly.

use crate::error::{FilmError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub base: bool,
    pub vars: Vec<usize>,
    pub weight: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub var_weights: Vec<u128>,
    pub outputs: Vec<Output>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Exact,
    UpperBound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub x: Vec<bool>,
    pub cost: u128,
    pub status: Status,
    pub nodes: u64,
}

impl Problem {
    pub fn nvars(&self) -> usize {
        self.var_weights.len()
    }

    fn columns(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.nvars()];
        for (i, o) in self.outputs.iter().enumerate() {
            for &v in &o.vars {
                cols[v].push(i);
            }
        }
        cols
    }

    /// Output values under `x`.
    pub fn evaluate(&self, x: &[bool]) -> Vec<bool> {
        self.outputs.iter().map(|o| o.vars.iter().fold(o.base, |acc, &v| acc ^ x[v])).collect()
    }

    pub fn cost(&self, x: &[bool]) -> u128 {
        let vc: u128 = x.iter().zip(&self.var_weights).filter(|(b, _)| **b).map(|(_, w)| *w).sum();
        let oc: u128 = self.evaluate(x).iter().zip(&self.outputs).filter(|(b, _)| **b).map(|(_, o)| o.weight).sum();
        vc + oc
    }

    fn validate(&self) -> Result<()> {
        for o in &self.outputs {
            if let Some(v) = o.vars.iter().find(|v| **v >= self.nvars()) {
                return Err(FilmError::Precondition(format!("output references variable {v} of {}", self.nvars())));
            }
        }
        Ok(())
    }
}

/// Lexicographic key: variable 0 is the most significant bit.
fn lex_less(a: &[bool], b: &[bool]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return !*x;
        }
    }
    false
}

/// Enumerates all `2^n` assignments in Gray-code order.
pub fn solve_exhaustive(p: &Problem, limit: usize) -> Result<Solution> {
    p.validate()?;
    let n = p.nvars();
    if n > limit {
        return Err(FilmError::Precondition(format!("{n} variables exceed the exhaustive limit {limit}")));
    }
    let cols = p.columns();
    let mut state: Vec<bool> = p.outputs.iter().map(|o| o.base).collect();
    let mut cost: u128 = p.outputs.iter().filter(|o| o.base).map(|o| o.weight).sum();
    let mut x = vec![false; n];
    let mut best_x = x.clone();
    let mut best = cost;
    let total: u64 = 1u64 << n;
    for step in 1..total {
        let v = step.trailing_zeros() as usize;
        x[v] = !x[v];
        if x[v] {
            cost += p.var_weights[v];
        } else {
            cost -= p.var_weights[v];
        }
        for &o in &cols[v] {
            state[o] = !state[o];
            if state[o] {
                cost += p.outputs[o].weight;
            } else {
                cost -= p.outputs[o].weight;
            }
        }
        if cost < best || (cost == best && lex_less(&x, &best_x)) {
            best = cost;
            best_x.clone_from(&x);
        }
    }
    Ok(Solution { x: best_x, cost: best, status: Status::Exact, nodes: total })
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

struct Bnb<'a> {
    p: &'a Problem,
    cols: Vec<Vec<usize>>,
    /// Index of the last variable an output depends on, or None if constant.
    last_var: Vec<Option<usize>>,
    /// Per-output share of its cheapest variable, scaled by `scale`.
    share: Vec<u128>,
    scale: u128,
    budget: u64,
    nodes: u64,
    exhausted: bool,
    x: Vec<bool>,
    state: Vec<bool>,
    best: u128,
    best_x: Vec<bool>,
}

impl<'a> Bnb<'a> {
    fn lower_bound(&self, depth: usize, var_cost: u128) -> u128 {
        let mut lb = var_cost * self.scale;
        for (i, o) in self.p.outputs.iter().enumerate() {
            if !self.state[i] {
                continue;
            }
            let decided = match self.last_var[i] {
                None => true,
                Some(v) => v < depth,
            };
            lb += if decided { o.weight * self.scale } else { self.share[i] };
        }
        lb
    }

    fn leaf_cost(&self, var_cost: u128) -> u128 {
        var_cost + self.state.iter().zip(&self.p.outputs).filter(|(s, _)| **s).map(|(_, o)| o.weight).sum::<u128>()
    }

    fn dfs(&mut self, depth: usize, var_cost: u128) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if depth == self.x.len() {
            let c = self.leaf_cost(var_cost);
            if c < self.best || (c == self.best && lex_less(&self.x, &self.best_x)) {
                self.best = c;
                self.best_x.clone_from(&self.x);
            }
            return;
        }
        if self.lower_bound(depth, var_cost) >= self.best * self.scale {
            return;
        }
        self.dfs(depth + 1, var_cost);
        if self.exhausted {
            return;
        }
        self.flip(depth);
        let w = self.p.var_weights[depth];
        if self.lower_bound(depth + 1, var_cost + w) < self.best * self.scale {
            self.dfs(depth + 1, var_cost + w);
        }
        self.flip(depth);
    }

    fn flip(&mut self, v: usize) {
        self.x[v] = !self.x[v];
        for &o in &self.cols[v] {
            self.state[o] = !self.state[o];
        }
    }
}

/// Depth-first branch and bound, excluding each variable before including
/// it. Returns `UpperBound` status if the node budget runs out.
pub fn solve_bnb(p: &Problem, node_budget: u64) -> Result<Solution> {
    p.validate()?;
    let n = p.nvars();
    let cols = p.columns();
    let last_var: Vec<Option<usize>> = p.outputs.iter().map(|o| o.vars.iter().max().copied()).collect();
    let mut scale: u128 = 1;
    for c in &cols {
        let d = c.len().max(1) as u128;
        scale = scale / gcd(scale, d) * d;
    }
    let share: Vec<u128> = p
        .outputs
        .iter()
        .map(|o| {
            let cheapest = o
                .vars
                .iter()
                .map(|&v| p.var_weights[v] * (scale / cols[v].len().max(1) as u128))
                .min()
                .unwrap_or(u128::MAX);
            cheapest.min(o.weight * scale)
        })
        .collect();
    let x = vec![false; n];
    let state: Vec<bool> = p.outputs.iter().map(|o| o.base).collect();
    let best = p.cost(&x);
    let mut s = Bnb {
        p,
        cols,
        last_var,
        share,
        scale,
        budget: node_budget,
        nodes: 0,
        exhausted: false,
        x: x.clone(),
        state,
        best,
        best_x: x,
    };
    s.dfs(0, 0);
    let status = if s.exhausted { Status::UpperBound } else { Status::Exact };
    Ok(Solution { x: s.best_x, cost: s.best, status, nodes: s.nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Problem {
        Problem {
            var_weights: (0..n).map(|_| rng.gen_range(1..5)).collect(),
            outputs: (0..m)
                .map(|_| Output {
                    base: rng.gen_bool(0.5),
                    vars: (0..n).filter(|_| rng.gen_bool(0.3)).collect(),
                    weight: rng.gen_range(1..5),
                })
                .collect(),
        }
    }

    #[test]
    fn solvers_agree_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(0..10);
            let m = rng.gen_range(0..14);
            let p = random_problem(&mut rng, n, m);
            let a = solve_exhaustive(&p, 24).unwrap();
            let b = solve_bnb(&p, 1_000_000).unwrap();
            assert_eq!(a.cost, p.cost(&a.x));
            assert_eq!(b.status, Status::Exact);
            assert_eq!((a.cost, &a.x), (b.cost, &b.x));
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_problem(&mut rng, 30, 40);
        let s = solve_bnb(&p, 10).unwrap();
        assert_eq!(s.status, Status::UpperBound);
        assert_eq!(s.cost, p.cost(&s.x));
    }

    #[test]
    fn exhaustive_limit() {
        let p = Problem { var_weights: vec![1; 5], outputs: vec![] };
        assert!(solve_exhaustive(&p, 4).is_err());
    }
}
