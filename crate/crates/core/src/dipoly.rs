//! Dipolyhedra `A = δB + μC`: a k-chain B carrying weight and a
//! (k−1)-chain C carrying mass.

use std::fmt;

use crate::error::{FilmError, Result};
use crate::grid::{BoxRegion, GridChain, GridSpec};
use crate::measure::Measure;
use crate::rational::{Point, Rational};
use crate::simplicial::{
    chains_equal_mod2, clamp_to_cube, pushforward, EqualityMode, PLMap, Simplex, SimplicialChain,
};

/// A mod-2 chain in either representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Chain {
    Grid(GridChain),
    Simplicial(SimplicialChain),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    Grid,
    Simplicial,
}

impl fmt::Display for Rep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rep::Grid => "grid",
            Rep::Simplicial => "simplicial",
        })
    }
}

impl Chain {
    pub fn k(&self) -> usize {
        match self {
            Chain::Grid(c) => c.k(),
            Chain::Simplicial(c) => c.k(),
        }
    }

    pub fn rep(&self) -> Rep {
        match self {
            Chain::Grid(_) => Rep::Grid,
            Chain::Simplicial(_) => Rep::Simplicial,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Chain::Grid(c) => c.is_empty(),
            Chain::Simplicial(c) => c.is_empty(),
        }
    }

    /// Mass of the presentation.
    pub fn mass(&self) -> Measure {
        match self {
            Chain::Grid(c) => Measure::rational(c.mass()),
            Chain::Simplicial(c) => c.mass(),
        }
    }

    pub fn empty_like(&self, k: usize) -> Chain {
        match self {
            Chain::Grid(c) => Chain::Grid(GridChain::empty(c.grid().clone(), k)),
            Chain::Simplicial(_) => Chain::Simplicial(SimplicialChain::empty(k)),
        }
    }

    pub fn boundary(&self) -> Result<Chain> {
        Ok(match self {
            Chain::Grid(c) => Chain::Grid(c.boundary()?),
            Chain::Simplicial(c) => Chain::Simplicial(c.boundary()?),
        })
    }

    pub fn add(&self, other: &Chain) -> Result<Chain> {
        match (self, other) {
            (Chain::Grid(a), Chain::Grid(b)) => Ok(Chain::Grid(a.add(b)?)),
            (Chain::Simplicial(a), Chain::Simplicial(b)) => Ok(Chain::Simplicial(a.add(b)?)),
            _ => Err(FilmError::Precondition("cannot add grid and simplicial chains".into())),
        }
    }

    pub fn to_simplicial(&self) -> SimplicialChain {
        match self {
            Chain::Grid(c) => c.to_simplicial(),
            Chain::Simplicial(c) => c.clone(),
        }
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        match self {
            Chain::Grid(c) => Some(c.grid()),
            Chain::Simplicial(_) => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridChain> {
        match self {
            Chain::Grid(c) => Some(c),
            Chain::Simplicial(_) => None,
        }
    }

    fn split(&self, x: &BoxRegion) -> Result<(Chain, Chain)> {
        Ok(match self {
            Chain::Grid(c) => {
                let (a, b) = c.split(x)?;
                (Chain::Grid(a), Chain::Grid(b))
            }
            Chain::Simplicial(c) => {
                let (a, b) = c.split_by_box(x);
                (Chain::Simplicial(a), Chain::Simplicial(b))
            }
        })
    }
}

/// Piece of a chain's support: a closed grid cell or a closed simplex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SupportPiece {
    Cell(crate::grid::GridCell),
    Simplex(Simplex),
}

fn support_of(c: &Chain) -> Vec<SupportPiece> {
    match c {
        Chain::Grid(g) => g.support().into_iter().map(SupportPiece::Cell).collect(),
        Chain::Simplicial(s) => s.iter().cloned().map(SupportPiece::Simplex).collect(),
    }
}

/// `(E, W, massPart)` with `E = W + massPart`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Energy {
    pub e: Measure,
    pub w: Measure,
    pub mass_part: Measure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureReport {
    pub region: BoxRegion,
    pub omega: Measure,
    pub mu: Measure,
    pub nu: Measure,
}

/// `δB + μC` with `dim B = k`, `dim C = k − 1`.
///
/// For `k = 0` there is no mass part; `c` is then an empty placeholder
/// 0-chain and is ignored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dipolyhedron {
    k: usize,
    b: Chain,
    c: Chain,
}

impl Dipolyhedron {
    pub fn new(b: Chain, c: Chain) -> Result<Self> {
        if b.rep() != c.rep() {
            return Err(FilmError::Precondition("B and C must share one representation".into()));
        }
        if b.grid() != c.grid() {
            return Err(FilmError::Precondition("B and C must share one grid".into()));
        }
        let k = b.k();
        if k == 0 {
            if !c.is_empty() {
                return Err(FilmError::Dimension("a 0-dipolyhedron has no mass part".into()));
            }
        } else if c.k() + 1 != k {
            return Err(FilmError::Dimension(format!("C must have dimension {}, got {}", k - 1, c.k())));
        }
        Ok(Self { k, b, c })
    }

    pub fn zero_like(chain: &Chain, k: usize) -> Self {
        let b = chain.empty_like(k);
        let c = chain.empty_like(k.saturating_sub(1));
        Self { k, b, c }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> &Chain {
        &self.b
    }

    pub fn c(&self) -> &Chain {
        &self.c
    }

    pub fn rep(&self) -> Rep {
        self.b.rep()
    }

    pub fn is_zero(&self) -> bool {
        self.b.is_empty() && self.c.is_empty()
    }

    /// `∂A = δ(∂B + C) + μ(∂C)`.
    pub fn boundary(&self) -> Result<Dipolyhedron> {
        if self.k == 0 {
            return Err(FilmError::Dimension("boundary of a 0-dipolyhedron".into()));
        }
        let b = self.b.boundary()?.add(&self.c)?;
        let c = if self.k >= 2 { self.c.boundary()? } else { self.c.empty_like(0) };
        Ok(Dipolyhedron { k: self.k - 1, b, c })
    }

    pub fn energy(&self) -> Energy {
        let w = self.b.mass();
        let mass_part = if self.k == 0 { Measure::zero() } else { self.c.mass() };
        Energy { e: &w + &mass_part, w, mass_part }
    }

    pub fn add(&self, other: &Dipolyhedron) -> Result<Dipolyhedron> {
        Dipolyhedron::new(self.b.add(&other.b)?, self.c.add(&other.c)?)
    }

    pub fn to_simplicial(&self) -> Dipolyhedron {
        Dipolyhedron {
            k: self.k,
            b: Chain::Simplicial(self.b.to_simplicial()),
            c: Chain::Simplicial(self.c.to_simplicial()),
        }
    }

    fn simplicial_parts(&self) -> (SimplicialChain, SimplicialChain) {
        (self.b.to_simplicial(), self.c.to_simplicial())
    }

    /// `pA = δ(pB) + μ(pC)`; grid input is embedded first.
    pub fn cone(&self, p: &Point) -> Dipolyhedron {
        let (b, c) = self.simplicial_parts();
        let pc = if self.k == 0 { SimplicialChain::empty(0) } else { c.cone(p) };
        Dipolyhedron { k: self.k + 1, b: Chain::Simplicial(b.cone(p)), c: Chain::Simplicial(pc) }
    }

    pub fn pushforward(&self, f: &PLMap) -> Result<Dipolyhedron> {
        let (b, c) = self.simplicial_parts();
        Ok(Dipolyhedron {
            k: self.k,
            b: Chain::Simplicial(pushforward(f, &b)?),
            c: Chain::Simplicial(pushforward(f, &c)?),
        })
    }

    pub fn clamp(&self, r: &Rational) -> Result<Dipolyhedron> {
        let (b, c) = self.simplicial_parts();
        Ok(Dipolyhedron {
            k: self.k,
            b: Chain::Simplicial(clamp_to_cube(r, &b)?),
            c: Chain::Simplicial(clamp_to_cube(r, &c)?),
        })
    }

    /// `A ∩ X` together with the measures `ω_A(X)`, `μ_A(X)`, `ν_A(X)`.
    pub fn restrict(&self, x: &BoxRegion) -> Result<(Dipolyhedron, MeasureReport)> {
        let (inside, _) = self.split(x)?;
        let en = inside.energy();
        let report = MeasureReport { region: x.clone(), omega: en.w, mu: en.mass_part, nu: en.e };
        Ok((inside, report))
    }

    /// `(A ∩ X, A − A ∩ X)`.
    pub fn split(&self, x: &BoxRegion) -> Result<(Dipolyhedron, Dipolyhedron)> {
        let (bi, bo) = self.b.split(x)?;
        let (ci, co) = self.c.split(x)?;
        Ok((Dipolyhedron { k: self.k, b: bi, c: ci }, Dipolyhedron { k: self.k, b: bo, c: co }))
    }

    /// `|A| = |B| ∪ |C|`.
    pub fn support(&self) -> Vec<SupportPiece> {
        let mut out = support_of(&self.b);
        if self.k > 0 {
            out.extend(support_of(&self.c));
        }
        out.sort();
        out.dedup();
        out
    }

    /// Checks `A = ∂(pA) + p(∂A)` mod 2, componentwise.
    ///
    /// For `k = 1` the mass part is a 0-chain, whose boundary is taken with
    /// augmentation so that `p(∂C)` is the apex counted `|C|` times.
    pub fn cone_identity_holds(&self, p: &Point, mode: EqualityMode) -> Result<bool> {
        if self.k == 0 {
            return Err(FilmError::Dimension("cone identity needs k ≥ 1".into()));
        }
        let (b, c) = self.simplicial_parts();
        let pb = b.cone(p);
        let pc = c.cone(p);
        // δ part: ∂(pB) + pC + p(∂B + C) = ∂(pB) + p(∂B).
        let lhs_b = pb.boundary()?.add(&pc)?.add(&b.boundary()?.add(&c)?.cone(p))?;
        // μ part: ∂(pC) + p(∂C).
        let p_dc = if self.k >= 2 {
            c.boundary()?.cone(p)
        } else {
            let mut pt = SimplicialChain::empty(0);
            if c.len() % 2 == 1 {
                pt.toggle(Simplex::point(p.clone()));
            }
            pt
        };
        let lhs_c = pc.boundary()?.add(&p_dc)?;
        let ok_b = chains_equal_mod2(&lhs_b, &b, mode)?.equal;
        let ok_c = chains_equal_mod2(&lhs_c, &c, mode)?.equal;
        Ok(ok_b && ok_c)
    }

    /// Geometric equality of both parts.
    pub fn equals_mod2(&self, other: &Dipolyhedron, mode: EqualityMode) -> Result<bool> {
        if self.k != other.k {
            return Ok(false);
        }
        let (b1, c1) = self.simplicial_parts();
        let (b2, c2) = other.simplicial_parts();
        if !chains_equal_mod2(&b1, &b2, mode)?.equal {
            return Ok(false);
        }
        if self.k == 0 {
            return Ok(true);
        }
        Ok(chains_equal_mod2(&c1, &c2, mode)?.equal)
    }
}

/// `δB`.
pub fn make_dipole(b: Chain) -> Dipolyhedron {
    let k = b.k();
    let c = b.empty_like(k.saturating_sub(1));
    Dipolyhedron { k, b, c }
}

/// `μC`, of dimension `dim C + 1`.
pub fn make_massive(c: Chain) -> Dipolyhedron {
    let k = c.k() + 1;
    let b = c.empty_like(k);
    Dipolyhedron { k, b, c }
}

/// The cone bound factor `r√3/(k+1)` for supports in a cube of side r.
pub fn cone_factor(r: &Rational, k: usize) -> Measure {
    Measure::sqrt(&Rational::from_integer(3.into())).scale(&(r / Rational::from_integer((k as i64 + 1).into())))
}

/// `E(pA) ≤ r√3/(k+1) · E(A)`, compared with certified enclosures.
pub fn cone_bound_holds(a: &Dipolyhedron, p: &Point, r: &Rational) -> bool {
    let lhs = a.cone(p).energy().e;
    let rhs = cone_factor(r, a.k()).mul(&a.energy().e);
    lhs.le(&rhs)
}
