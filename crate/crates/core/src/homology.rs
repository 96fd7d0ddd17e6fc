//! Betti numbers from connected components and the Euler identity, plus the
//! segmentation metrics built on them.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Connectivity};
use crate::pattern::chi;

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self { parent: (0..len as u32).collect(), size: vec![1; len] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Number of connected components of the set cells under `connectivity`.
pub fn component_count(grid: &BinaryGrid, connectivity: Connectivity) -> Result<usize> {
    if connectivity.ndim() != grid.ndim() {
        return Err(Error::InvalidParameter(format!("{connectivity:?} connectivity used on a {}D grid", grid.ndim())));
    }
    let dims = grid.dims();
    let offsets = connectivity.backward_offsets();
    let mut uf = UnionFind::new(grid.len());
    let mut coord = vec![0isize; dims.len()];
    let mut neighbour = vec![0isize; dims.len()];
    let mut count = 0usize;
    for n in grid.ones() {
        let mut r = n;
        for axis in (0..dims.len()).rev() {
            coord[axis] = (r % dims[axis]) as isize;
            r /= dims[axis];
        }
        count += 1;
        for off in &offsets {
            for axis in 0..dims.len() {
                neighbour[axis] = coord[axis] + off[axis];
            }
            if grid.get_or_background(&neighbour) {
                let m = neighbour.iter().zip(dims).fold(0usize, |acc, (&i, &d)| acc * d + i as usize);
                if uf.union(n, m) {
                    count -= 1;
                }
            }
        }
    }
    Ok(count)
}

/// Components of the background that do not reach the grid border.
fn bounded_background_components(grid: &BinaryGrid, connectivity: Connectivity) -> Result<usize> {
    // after padding, every unbounded background component merges into the
    // one containing the pad
    let padded = grid.pad_background(1).complement();
    let total = component_count(&padded, connectivity)?;
    Ok(total - 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize)]
pub struct BettiVector {
    pub betti: Vec<u64>,
}

impl BettiVector {
    pub fn new(betti: Vec<u64>) -> Self {
        Self { betti }
    }

    pub fn euler(&self) -> i64 {
        self.betti.iter().enumerate().map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) }).sum()
    }
}

impl std::fmt::Display for BettiVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.betti.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn nonnegative(value: i64, what: &str) -> Result<u64> {
    u64::try_from(value).map_err(|_| Error::InternalConsistency(format!("{what} came out negative ({value})")))
}

pub fn betti_2d(grid: &BinaryGrid) -> Result<BettiVector> {
    grid.require_ndim(2)?;
    let b0 = component_count(grid, Connectivity::Fg2d8)? as i64;
    let b1 = nonnegative(b0 - chi(grid)?, "beta_1")?;
    let holes = bounded_background_components(grid, Connectivity::Bg2d4)? as u64;
    if holes != b1 {
        return Err(Error::InternalConsistency(format!(
            "beta_1 from the Euler identity ({b1}) disagrees with the hole count ({holes})"
        )));
    }
    Ok(BettiVector::new(vec![b0 as u64, b1]))
}

pub fn betti_3d(grid: &BinaryGrid) -> Result<BettiVector> {
    grid.require_ndim(3)?;
    let b0 = component_count(grid, Connectivity::Fg3d26)? as i64;
    let b2 = bounded_background_components(grid, Connectivity::Bg3d6)? as i64;
    let b1 = nonnegative(b0 + b2 - chi(grid)?, "beta_1")?;
    Ok(BettiVector::new(vec![b0 as u64, b1, b2 as u64]))
}

pub fn betti(grid: &BinaryGrid) -> Result<BettiVector> {
    match grid.ndim() {
        2 => betti_2d(grid),
        _ => betti_3d(grid),
    }
}

/// Per-dimension absolute Betti differences, with their mean and sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiError {
    pub per_dim: Vec<u64>,
    pub sum: u64,
    pub mean: Ratio<u64>,
}

pub fn betti_error(a: &BettiVector, b: &BettiVector) -> Result<BettiError> {
    if a.betti.len() != b.betti.len() || a.betti.is_empty() {
        return Err(Error::ShapeMismatch { left: vec![a.betti.len()], right: vec![b.betti.len()] });
    }
    let per_dim: Vec<u64> = a.betti.iter().zip(&b.betti).map(|(&x, &y)| x.abs_diff(y)).collect();
    let sum = per_dim.iter().sum();
    Ok(BettiError { mean: Ratio::new(sum, per_dim.len() as u64), per_dim, sum })
}

/// Dice overlap `2|A∩B| / (|A| + |B|)`; two empty grids score 1.
pub fn dice(a: &BinaryGrid, b: &BinaryGrid) -> Result<Ratio<u64>> {
    let both = a.intersection_count(b)? as u64;
    let total = (a.count_ones() + b.count_ones()) as u64;
    if total == 0 {
        return Ok(Ratio::from_integer(1));
    }
    Ok(Ratio::new(2 * both, total))
}
