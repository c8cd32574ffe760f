//! ε-cubical grids in R³ and mod-2 chains on their skeleta.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive};

use crate::error::{FilmError, Result};
use crate::rational::{add, scale, Point, Rational};
use crate::simplicial::{Simplex, SimplicialChain};

/// Axis-aligned grid: `dims[i]` cells of side `epsilon` along axis `i`,
/// starting at `origin`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub epsilon: Rational,
    pub origin: Point,
    pub dims: [u32; 3],
}

/// Subset of {x, y, z} as a bitmask (x = 1, y = 2, z = 4).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Axes(pub u8);

impl Axes {
    pub const NONE: Axes = Axes(0);
    pub const X: Axes = Axes(1);
    pub const Y: Axes = Axes(2);
    pub const Z: Axes = Axes(4);
    pub const XY: Axes = Axes(3);
    pub const XZ: Axes = Axes(5);
    pub const YZ: Axes = Axes(6);
    pub const XYZ: Axes = Axes(7);

    pub fn dim(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, axis: usize) -> bool {
        self.0 & (1 << axis) != 0
    }

    pub fn without(self, axis: usize) -> Axes {
        Axes(self.0 & !(1 << axis))
    }

    pub fn with(self, axis: usize) -> Axes {
        Axes(self.0 | (1 << axis))
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..3).filter(move |a| self.contains(*a))
    }

    /// All axis subsets of the given size, in canonical order.
    pub fn of_dim(k: usize) -> Vec<Axes> {
        (0u8..8).map(Axes).filter(|a| a.dim() == k).collect()
    }

    pub fn parse(s: &str) -> Result<Axes> {
        let mut m = 0u8;
        for ch in s.chars() {
            let bit = match ch {
                'x' => 1,
                'y' => 2,
                'z' => 4,
                _ => return Err(FilmError::Parse(format!("bad axis letter {ch:?} in {s:?}"))),
            };
            if m & bit != 0 {
                return Err(FilmError::Parse(format!("repeated axis in {s:?}")));
            }
            m |= bit;
        }
        Ok(Axes(m))
    }
}

impl fmt::Display for Axes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in ['x', 'y', 'z'].iter().enumerate() {
            if self.contains(i) {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// A closed grid cell: lattice corner `base` extended by one step along
/// each axis in `axes`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridCell {
    pub base: [i64; 3],
    pub axes: Axes,
}

impl GridCell {
    pub fn new(base: [i64; 3], axes: Axes) -> Self {
        Self { base, axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.dim()
    }

    /// The 2k facets, each appearing once.
    pub fn facets(&self) -> Vec<GridCell> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for a in self.axes.iter() {
            let axes = self.axes.without(a);
            out.push(GridCell::new(self.base, axes));
            let mut b = self.base;
            b[a] += 1;
            out.push(GridCell::new(b, axes));
        }
        out
    }

    /// Lattice coordinates of the 2^k corners.
    pub fn corners(&self) -> Vec<[i64; 3]> {
        let axes: Vec<usize> = self.axes.iter().collect();
        (0..(1usize << axes.len()))
            .map(|mask| {
                let mut c = self.base;
                for (j, a) in axes.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        c[*a] += 1;
                    }
                }
                c
            })
            .collect()
    }

    /// Upper lattice corner.
    pub fn top(&self) -> [i64; 3] {
        let mut t = self.base;
        for a in self.axes.iter() {
            t[a] += 1;
        }
        t
    }

    /// Whether `other` is a face of this closed cell (including itself).
    pub fn has_face(&self, other: &GridCell) -> bool {
        let top = self.top();
        let otop = other.top();
        (0..3).all(|i| other.base[i] >= self.base[i] && otop[i] <= top[i])
            && other.axes.0 & !self.axes.0 == 0
    }
}

impl GridSpec {
    pub fn new(epsilon: Rational, origin: Point, dims: [u32; 3]) -> Result<Self> {
        if !epsilon.is_positive() {
            return Err(FilmError::Precondition("grid epsilon must be positive".into()));
        }
        if dims.contains(&0) {
            return Err(FilmError::Precondition("grid dims must be at least 1".into()));
        }
        Ok(Self { epsilon, origin, dims })
    }

    /// Unit grid at the origin.
    pub fn unit(dims: [u32; 3]) -> Self {
        Self::new(Rational::one(), crate::rational::zero_point(), dims).unwrap()
    }

    pub fn cell_measure(&self, k: usize) -> Rational {
        num::pow(self.epsilon.clone(), k)
    }

    pub fn lattice_point(&self, c: [i64; 3]) -> Point {
        let v = [
            Rational::from_integer(BigInt::from(c[0])),
            Rational::from_integer(BigInt::from(c[1])),
            Rational::from_integer(BigInt::from(c[2])),
        ];
        add(&self.origin, &scale(&v, &self.epsilon))
    }

    /// Lattice index of grid plane `axis` passing through coordinate `v`,
    /// if `v` is on one.
    pub fn plane_index(&self, axis: usize, v: &Rational) -> Option<i64> {
        let t = (v - &self.origin[axis]) / &self.epsilon;
        if t.is_integer() {
            t.to_integer().to_i64()
        } else {
            None
        }
    }

    /// Lattice coordinate of the grid interval containing `v` (floor).
    pub fn floor_index(&self, axis: usize, v: &Rational) -> i64 {
        let t = (v - &self.origin[axis]) / &self.epsilon;
        t.floor().to_integer().to_i64().expect("grid index overflow")
    }

    pub fn contains_cell(&self, c: &GridCell) -> bool {
        let top = c.top();
        (0..3).all(|i| c.base[i] >= 0 && top[i] <= self.dims[i] as i64)
    }

    /// All k-cells of the grid in canonical order.
    pub fn cells_of_dim(&self, k: usize) -> Vec<GridCell> {
        let mut out = Vec::new();
        for axes in Axes::of_dim(k) {
            let ext = |i: usize| -> i64 { self.dims[i] as i64 + if axes.contains(i) { 0 } else { 1 } };
            for i in 0..ext(0) {
                for j in 0..ext(1) {
                    for l in 0..ext(2) {
                        out.push(GridCell::new([i, j, l], axes));
                    }
                }
            }
        }
        out.sort();
        out
    }

    pub fn bounds(&self) -> BoxRegion {
        let hi = self.lattice_point([self.dims[0] as i64, self.dims[1] as i64, self.dims[2] as i64]);
        BoxRegion { lo: self.origin.clone(), hi }
    }

    /// The same region subdivided `factor` times finer.
    pub fn refined(&self, factor: u32) -> GridSpec {
        GridSpec {
            epsilon: &self.epsilon / Rational::from_integer(BigInt::from(factor)),
            origin: self.origin.clone(),
            dims: [self.dims[0] * factor, self.dims[1] * factor, self.dims[2] * factor],
        }
    }
}

/// Axis-aligned closed box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxRegion {
    pub lo: Point,
    pub hi: Point,
}

impl BoxRegion {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if (0..3).any(|i| lo[i] > hi[i]) {
            return Err(FilmError::Precondition("box corners must satisfy lo <= hi".into()));
        }
        Ok(Self { lo, hi })
    }

    /// Q(p, r): the cube centred at `p` with side length `side`.
    pub fn cube(center: &Point, side: &Rational) -> Self {
        let h = side / Rational::from_integer(BigInt::from(2));
        let lo = [&center[0] - &h, &center[1] - &h, &center[2] - &h];
        let hi = [&center[0] + &h, &center[1] + &h, &center[2] + &h];
        Self { lo, hi }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    pub fn is_grid_aligned(&self, grid: &GridSpec) -> bool {
        (0..3).all(|i| grid.plane_index(i, &self.lo[i]).is_some() && grid.plane_index(i, &self.hi[i]).is_some())
    }

    fn lattice_bounds(&self, grid: &GridSpec) -> Result<([i64; 3], [i64; 3])> {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for i in 0..3 {
            lo[i] = grid
                .plane_index(i, &self.lo[i])
                .ok_or_else(|| FilmError::Alignment(format!("lo[{i}] = {} is off the lattice", self.lo[i])))?;
            hi[i] = grid
                .plane_index(i, &self.hi[i])
                .ok_or_else(|| FilmError::Alignment(format!("hi[{i}] = {} is off the lattice", self.hi[i])))?;
        }
        Ok((lo, hi))
    }
}

const PACK_BITS: u32 = 20;
const PACK_OFFSET: i64 = 1 << (PACK_BITS - 1);

/// Order-preserving `u64` key, when every coordinate fits in 20 bits.
#[inline]
fn pack(c: &GridCell) -> Option<u64> {
    let [x, y, z] = c.base;
    let lim = PACK_OFFSET;
    if x < -lim || x >= lim || y < -lim || y >= lim || z < -lim || z >= lim {
        return None;
    }
    let f = |v: i64| (v + PACK_OFFSET) as u64;
    Some((f(x) << (2 * PACK_BITS) | f(y) << PACK_BITS | f(z)) << 3 | u64::from(c.axes.0))
}

fn unpack(key: u64) -> GridCell {
    let mask = (1u64 << PACK_BITS) - 1;
    let mut base = [0i64; 3];
    for (i, b) in base.iter_mut().enumerate() {
        *b = ((key >> (3 + PACK_BITS * (2 - i as u32))) & mask) as i64 - PACK_OFFSET;
    }
    GridCell::new(base, Axes((key & 7) as u8))
}

/// Drops equal neighbours in pairs, leaving one of each odd run.
fn cancel_pairs<T: PartialEq + Copy>(items: &mut Vec<T>) {
    let mut n = 0;
    for i in 0..items.len() {
        if n > 0 && items[n - 1] == items[i] {
            n -= 1;
        } else {
            items[n] = items[i];
            n += 1;
        }
    }
    items.truncate(n);
}

/// Parity of cells in a dense bitset laid out in `GridCell` order, for grids
/// small enough relative to the number of cells.
fn odd_cells_dense(dims: [u32; 3], cells: &[GridCell]) -> Option<BTreeSet<GridCell>> {
    let [nx, ny, nz] = dims.map(|d| d as i64 + 1);
    let bits = (nx * ny * nz * 8) as usize;
    if bits > 64 * (cells.len() + 16) {
        return None;
    }
    let mut words = vec![0u64; bits.div_ceil(64)];
    for c in cells {
        let [x, y, z] = c.base;
        if !(0..nx).contains(&x) || !(0..ny).contains(&y) || !(0..nz).contains(&z) {
            return None;
        }
        let i = (((x * ny + y) * nz + z) * 8) as usize + c.axes.0 as usize;
        words[i / 64] ^= 1 << (i % 64);
    }
    let mut out = Vec::new();
    for (w, &word) in words.iter().enumerate() {
        let mut word = word;
        while word != 0 {
            let i = (w * 64 + word.trailing_zeros() as usize) as i64;
            word &= word - 1;
            let (cell, axes) = (i / 8, (i % 8) as u8);
            let base = [cell / (ny * nz), cell / nz % ny, cell % nz];
            out.push(GridCell::new(base, Axes(axes)));
        }
    }
    Some(out.into_iter().collect())
}

/// Cells occurring an odd number of times.
fn odd_cells(grid: &GridSpec, mut cells: Vec<GridCell>) -> BTreeSet<GridCell> {
    if let Some(out) = odd_cells_dense(grid.dims, &cells) {
        return out;
    }
    let mut keys = Vec::with_capacity(cells.len());
    for c in &cells {
        match pack(c) {
            Some(k) => keys.push(k),
            None => break,
        }
    }
    if keys.len() == cells.len() {
        keys.sort_unstable();
        cancel_pairs(&mut keys);
        return keys.into_iter().map(unpack).collect();
    }
    cells.sort_unstable();
    cancel_pairs(&mut cells);
    cells.into_iter().collect()
}

/// A mod-2 k-chain on a grid: a set of k-cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridChain {
    grid: Arc<GridSpec>,
    k: usize,
    cells: BTreeSet<GridCell>,
}

impl GridChain {
    pub fn empty(grid: GridSpec, k: usize) -> Self {
        Self { grid: Arc::new(grid), k, cells: BTreeSet::new() }
    }

    /// Builds a chain, toggling repeated cells (mod 2).
    pub fn new(grid: GridSpec, k: usize, cells: impl IntoIterator<Item = GridCell>) -> Result<Self> {
        if k > 3 {
            return Err(FilmError::Dimension(format!("grid chains have dimension at most 3, got {k}")));
        }
        let mut chain = Self::empty(grid, k);
        for c in cells {
            if c.dim() != k {
                return Err(FilmError::Dimension(format!("cell {c:?} has dimension {} in a {k}-chain", c.dim())));
            }
            if !chain.grid.contains_cell(&c) {
                return Err(FilmError::Precondition(format!("cell {c:?} lies outside the grid")));
            }
            chain.toggle(c);
        }
        Ok(chain)
    }

    pub(crate) fn from_set_unchecked(grid: GridSpec, k: usize, cells: BTreeSet<GridCell>) -> Self {
        Self { grid: Arc::new(grid), k, cells }
    }

    /// A chain on the same grid, sharing its description.
    fn sibling(&self, k: usize, cells: BTreeSet<GridCell>) -> Self {
        Self { grid: Arc::clone(&self.grid), k, cells }
    }

    pub fn toggle(&mut self, c: GridCell) {
        if !self.cells.remove(&c) {
            self.cells.insert(c);
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cells(&self) -> &BTreeSet<GridCell> {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: &GridCell) -> bool {
        self.cells.contains(c)
    }

    fn check_compatible(&self, other: &GridChain) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && self.grid != other.grid {
            return Err(FilmError::Precondition("chains live on different grids".into()));
        }
        if self.k != other.k {
            return Err(FilmError::Dimension(format!("cannot add a {}-chain to a {}-chain", other.k, self.k)));
        }
        Ok(())
    }

    /// Mod-2 sum (symmetric difference).
    pub fn add(&self, other: &GridChain) -> Result<GridChain> {
        self.check_compatible(other)?;
        let cells = self.cells.symmetric_difference(&other.cells).copied().collect();
        Ok(self.sibling(self.k, cells))
    }

    pub fn boundary(&self) -> Result<GridChain> {
        if self.k == 0 {
            return Err(FilmError::Dimension("boundary of a 0-chain".into()));
        }
        let mut facets = Vec::with_capacity(2 * self.k * self.cells.len());
        for c in &self.cells {
            for a in c.axes.iter() {
                let axes = c.axes.without(a);
                facets.push(GridCell::new(c.base, axes));
                let mut b = c.base;
                b[a] += 1;
                facets.push(GridCell::new(b, axes));
            }
        }
        Ok(self.sibling(self.k - 1, odd_cells(&self.grid, facets)))
    }

    /// Number of cells times ε^k.
    pub fn mass(&self) -> Rational {
        self.grid.cell_measure(self.k) * Rational::from_integer(BigInt::from(self.cells.len()))
    }

    /// Closed cells carrying the chain; for a set of k-cells this is the
    /// cell list itself.
    pub fn support(&self) -> Vec<GridCell> {
        self.cells.iter().copied().collect()
    }

    /// Cells whose closure lies in the grid-aligned box `x`.
    pub fn restrict(&self, x: &BoxRegion) -> Result<GridChain> {
        let (lo, hi) = x.lattice_bounds(&self.grid)?;
        let cells = self
            .cells
            .iter()
            .filter(|c| {
                let top = c.top();
                (0..3).all(|i| c.base[i] >= lo[i] && top[i] <= hi[i])
            })
            .copied()
            .collect();
        Ok(self.sibling(self.k, cells))
    }

    /// Splits into the part in `x` and the rest.
    pub fn split(&self, x: &BoxRegion) -> Result<(GridChain, GridChain)> {
        let inside = self.restrict(x)?;
        let outside = self.add(&inside)?;
        Ok((inside, outside))
    }

    /// Simplicial presentation: squares split along the diagonal from the
    /// lower corner, cubes split into the six monotone-path tetrahedra.
    pub fn to_simplicial(&self) -> SimplicialChain {
        let mut out = SimplicialChain::empty(self.k);
        for c in &self.cells {
            for s in cell_simplices(&self.grid, c) {
                out.toggle(s);
            }
        }
        out
    }

    /// The grid 1-chain presented by `chain`, if every segment is exactly
    /// one grid edge.
    pub fn from_simplicial_edges(grid: &GridSpec, chain: &SimplicialChain) -> Option<GridChain> {
        if chain.k() != 1 {
            return None;
        }
        let mut out = GridChain::empty(grid.clone(), 1);
        for s in chain.iter() {
            let v = s.vertices();
            let mut idx = [[0i64; 3]; 2];
            for (e, p) in v.iter().enumerate() {
                for a in 0..3 {
                    idx[e][a] = grid.plane_index(a, &p[a])?;
                }
            }
            let diff: Vec<usize> = (0..3).filter(|&a| idx[0][a] != idx[1][a]).collect();
            if diff.len() != 1 || (idx[0][diff[0]] - idx[1][diff[0]]).abs() != 1 {
                return None;
            }
            let base = [0, 1, 2].map(|a| idx[0][a].min(idx[1][a]));
            let cell = GridCell::new(base, Axes::NONE.with(diff[0]));
            if !grid.contains_cell(&cell) {
                return None;
            }
            out.toggle(cell);
        }
        Some(out)
    }

    /// All vertices of cells in the chain (lattice coordinates).
    pub fn vertex_lattice_points(&self) -> BTreeSet<[i64; 3]> {
        self.cells.iter().flat_map(|c| c.corners()).collect()
    }
}

/// Kuhn subdivision of a grid cell; the diagonal of every square face runs
/// from its lower corner, so faces shared by adjacent cells subdivide alike.
pub fn cell_simplices(grid: &GridSpec, c: &GridCell) -> Vec<Simplex> {
    let axes: Vec<usize> = c.axes.iter().collect();
    let mut perms: Vec<Vec<usize>> = Vec::new();
    permutations(&axes, &mut Vec::new(), &mut perms);
    perms
        .into_iter()
        .map(|perm| {
            let mut v = c.base;
            let mut verts = vec![grid.lattice_point(v)];
            for a in perm {
                v[a] += 1;
                verts.push(grid.lattice_point(v));
            }
            Simplex::new(verts)
        })
        .collect()
}

fn permutations(items: &[usize], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == items.len() {
        out.push(prefix.clone());
        return;
    }
    for &it in items {
        if !prefix.contains(&it) {
            prefix.push(it);
            permutations(items, prefix, out);
            prefix.pop();
        }
    }
}

/// Exact lattice index if every vertex of the cell-level region lies on grid
/// plane `axis`; used to decide minimal carriers.
pub(crate) fn common_plane(grid: &GridSpec, pts: &[Point], axis: usize) -> Option<i64> {
    let first = &pts[0][axis];
    if pts.iter().all(|p| &p[axis] == first) {
        grid.plane_index(axis, first)
    } else {
        None
    }
}

/// The smallest closed grid cell containing all `pts`, if any.
pub fn minimal_carrier(grid: &GridSpec, pts: &[Point]) -> Option<GridCell> {
    let mut base = [0i64; 3];
    let mut axes = Axes::NONE;
    for axis in 0..3 {
        if let Some(ix) = common_plane(grid, pts, axis) {
            base[axis] = ix;
            continue;
        }
        let lo = pts.iter().map(|p| &p[axis]).min().unwrap();
        let hi = pts.iter().map(|p| &p[axis]).max().unwrap();
        let i = grid.floor_index(axis, lo);
        let upper = &grid.origin[axis] + &grid.epsilon * Rational::from_integer(BigInt::from(i + 1));
        if hi > &upper {
            return None;
        }
        base[axis] = i;
        axes = axes.with(axis);
    }
    let cell = GridCell::new(base, axes);
    if grid.contains_cell(&cell) {
        Some(cell)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    fn face(i: i64, j: i64, l: i64) -> GridCell {
        GridCell::new([i, j, l], Axes::XY)
    }

    #[test]
    fn single_face_boundary_is_four_edges() {
        let g = GridSpec::unit([1, 1, 1]);
        let c = GridChain::new(g, 2, [face(0, 0, 0)]).unwrap();
        assert_eq!(c.boundary().unwrap().len(), 4);
    }

    #[test]
    fn adjacent_faces_share_edge() {
        let g = GridSpec::unit([2, 1, 1]);
        let c = GridChain::new(g, 2, [face(0, 0, 0), face(1, 0, 0)]).unwrap();
        let b = c.boundary().unwrap();
        assert_eq!(b.len(), 6);
        assert!(!b.contains(&GridCell::new([1, 0, 0], Axes::Y)));
    }

    #[test]
    fn boundary_of_zero_chain_is_an_error() {
        let g = GridSpec::unit([1, 1, 1]);
        let c = GridChain::empty(g, 0);
        assert!(matches!(c.boundary(), Err(FilmError::Dimension(_))));
    }

    #[test]
    fn masses() {
        let g = GridSpec::unit([3, 2, 1]);
        assert_eq!(GridChain::empty(g.clone(), 2).mass(), q(0));
        let faces: Vec<_> = g.cells_of_dim(2).into_iter().filter(|c| c.axes == Axes::XY).take(5).collect();
        assert_eq!(GridChain::new(g, 2, faces).unwrap().mass(), q(5));
        let h = GridSpec::new(qf(1, 2), crate::rational::zero_point(), [3, 1, 1]).unwrap();
        let edges = (0..3).map(|i| GridCell::new([i, 0, 0], Axes::X));
        assert_eq!(GridChain::new(h, 1, edges).unwrap().mass(), qf(3, 2));
    }

    #[test]
    fn self_sum_is_empty() {
        let g = GridSpec::unit([1, 1, 1]);
        let c = GridChain::new(g, 2, [face(0, 0, 0)]).unwrap();
        assert!(c.add(&c).unwrap().support().is_empty());
        assert_eq!(c.support(), vec![face(0, 0, 0)]);
    }

    #[test]
    fn restriction_partitions_mass() {
        let g = GridSpec::unit([2, 1, 1]);
        let c = GridChain::new(g.clone(), 2, [face(0, 0, 0), face(1, 0, 0)]).unwrap();
        let left = BoxRegion::new(crate::rational::pt(0, 0, 0), crate::rational::pt(1, 1, 1)).unwrap();
        let (a, b) = c.split(&left).unwrap();
        assert_eq!(a.support(), vec![face(0, 0, 0)]);
        assert_eq!(a.mass() + b.mass(), c.mass());
        assert_eq!(c.restrict(&g.bounds()).unwrap(), c);
        let degenerate = BoxRegion::new(crate::rational::pt(2, 1, 1), crate::rational::pt(2, 1, 1)).unwrap();
        assert!(c.restrict(&degenerate).unwrap().is_empty());
        let off = BoxRegion::new(crate::rational::pt(0, 0, 0), [qf(1, 2), q(1), q(1)]).unwrap();
        assert!(matches!(c.restrict(&off), Err(FilmError::Alignment(_))));
    }

    #[test]
    fn embedding_preserves_mass_and_boundary() {
        let g = GridSpec::unit([1, 1, 1]);
        let c = GridChain::new(g, 2, [face(0, 0, 0)]).unwrap();
        let s = c.to_simplicial();
        assert_eq!(s.len(), 2);
        for t in s.iter() {
            assert_eq!(t.mass().as_rational(), Some(qf(1, 2)));
        }
        assert_eq!(s.boundary().unwrap(), c.boundary().unwrap().to_simplicial());
        assert!(GridChain::empty(c.grid().clone(), 2).to_simplicial().is_empty());
    }

    #[test]
    fn cube_subdivision_has_unit_volume_and_matching_faces() {
        let g = GridSpec::unit([1, 1, 1]);
        let cube = GridChain::new(g, 3, [GridCell::new([0, 0, 0], Axes::XYZ)]).unwrap();
        let s = cube.to_simplicial();
        assert_eq!(s.len(), 6);
        assert_eq!(s.mass().as_rational(), Some(q(1)));
        assert_eq!(s.boundary().unwrap(), cube.boundary().unwrap().to_simplicial());
    }

    #[test]
    fn minimal_carrier_detects_faces() {
        let g = GridSpec::unit([2, 2, 2]);
        let pts = [[qf(1, 2), qf(1, 3), q(1)], [qf(3, 4), qf(1, 2), q(1)]];
        assert_eq!(minimal_carrier(&g, &pts), Some(GridCell::new([0, 0, 1], Axes::XY)));
        let spanning = [[qf(1, 2), q(0), q(0)], [qf(3, 2), q(0), q(0)]];
        assert_eq!(minimal_carrier(&g, &spanning), None);
    }

    #[test]
    fn packed_keys_keep_cell_order() {
        let cells = [
            GridCell::new([-3, 0, 7], Axes::X),
            GridCell::new([-3, 0, 7], Axes::XY),
            GridCell::new([-3, 1, -7], Axes::NONE),
            GridCell::new([2, -1, 0], Axes::Z),
            GridCell::new([2, 0, 0], Axes::Y),
        ];
        for w in cells.windows(2) {
            assert!(pack(&w[0]) < pack(&w[1]));
        }
        for c in cells {
            assert_eq!(unpack(pack(&c).unwrap()), c);
        }
        assert_eq!(pack(&GridCell::new([1 << 40, 0, 0], Axes::X)), None);
        let g = GridSpec::unit([1, 1, 1]);
        let far = vec![GridCell::new([1 << 40, 0, 0], Axes::X); 3];
        assert_eq!(odd_cells(&g, far).len(), 1);
        let near = vec![GridCell::new([1, 0, 1], Axes::Y), GridCell::new([0, 1, 0], Axes::X), GridCell::new([1, 0, 1], Axes::Y)];
        assert_eq!(odd_cells(&g, near).into_iter().collect::<Vec<_>>(), vec![GridCell::new([0, 1, 0], Axes::X)]);
    }
}