//! Bit-packed binary occupancy grids in two or three dimensions.

use crate::error::{Error, Result};

/// Upper bound on the number of cells a single grid may hold.
pub const MAX_CELLS: usize = 1 << 40;

/// A 2D or 3D binary grid stored one bit per cell.
///
/// Cells are laid out row-major with the last index varying fastest, so the
/// linear index of `(i, j, k)` in an `(h, w, d)` grid is `(i * w + j) * d + k`.
/// Bit `n` of the grid lives in word `n / 64` at bit position `n % 64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryGrid {
    dims: Vec<usize>,
    words: Vec<u64>,
}

impl std::fmt::Debug for BinaryGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryGrid").field("dims", &self.dims).field("ones", &self.count_ones()).finish()
    }
}

fn validate_dims(dims: &[usize]) -> Result<usize> {
    if dims.len() != 2 && dims.len() != 3 {
        return Err(Error::InvalidDimensions(format!("expected 2 or 3 extents, got {}", dims.len())));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidDimensions(format!("every extent must be at least 1, got {dims:?}")));
    }
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= MAX_CELLS)
        .ok_or_else(|| Error::InvalidDimensions(format!("extents {dims:?} overflow capacity")))?;
    Ok(total)
}

impl BinaryGrid {
    /// Creates a grid of the given extents with every cell set to `fill`.
    pub fn new(dims: &[usize], fill: bool) -> Result<Self> {
        let total = validate_dims(dims)?;
        let nwords = total.div_ceil(64);
        let mut words = vec![if fill { u64::MAX } else { 0 }; nwords];
        if fill {
            let tail = total % 64;
            if tail != 0 {
                words[nwords - 1] = (1u64 << tail) - 1;
            }
        }
        Ok(Self { dims: dims.to_vec(), words })
    }

    /// Builds a grid by evaluating `f` at every coordinate in row-major order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        let mut grid = Self::new(dims, false)?;
        let mut coord = vec![0usize; dims.len()];
        for n in 0..grid.len() {
            if f(&coord) {
                grid.words[n >> 6] |= 1 << (n & 63);
            }
            for axis in (0..dims.len()).rev() {
                coord[axis] += 1;
                if coord[axis] < dims[axis] {
                    break;
                }
                coord[axis] = 0;
            }
        }
        Ok(grid)
    }

    /// Builds a grid from one value per cell; nonzero values are foreground.
    pub fn from_cells(dims: &[usize], cells: &[u8]) -> Result<Self> {
        let mut grid = Self::new(dims, false)?;
        if cells.len() != grid.len() {
            return Err(Error::InvalidDimensions(format!("{} cell values supplied for extents {dims:?}", cells.len())));
        }
        for (n, &v) in cells.iter().enumerate() {
            if v != 0 {
                grid.words[n >> 6] |= 1 << (n & 63);
            }
        }
        Ok(grid)
    }

    /// Binarizes a row-major probability buffer at `p >= 0.5`.
    pub fn from_probabilities(dims: &[usize], probs: &[f32]) -> Result<Self> {
        let cells: Vec<u8> = probs.iter().map(|&p| (p as f64 >= crate::io::PROBABILITY_CUTOFF) as u8).collect();
        Self::from_cells(dims, &cells)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn linear_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dims.len() || index.iter().zip(&self.dims).any(|(&i, &d)| i >= d) {
            return Err(Error::Index { index: index.to_vec(), dims: self.dims.clone() });
        }
        Ok(index.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i))
    }

    pub fn coords(&self, mut linear: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for axis in (0..self.dims.len()).rev() {
            out[axis] = linear % self.dims[axis];
            linear /= self.dims[axis];
        }
        out
    }

    #[inline]
    pub fn get_linear(&self, n: usize) -> bool {
        (self.words[n >> 6] >> (n & 63)) & 1 == 1
    }

    /// Reads a cell; coordinates outside the grid (including negative ones)
    /// read as background.
    #[inline]
    pub fn get_or_background(&self, index: &[isize]) -> bool {
        let mut n = 0usize;
        for (&i, &d) in index.iter().zip(&self.dims) {
            if i < 0 || i as usize >= d {
                return false;
            }
            n = n * d + i as usize;
        }
        self.get_linear(n)
    }

    pub fn get(&self, index: &[usize]) -> Result<bool> {
        Ok(self.get_linear(self.linear_index(index)?))
    }

    /// Copies `out.len()` consecutive cells starting at linear index `start`
    /// into `out` as 0/1 bytes.
    pub fn unpack_run(&self, start: usize, out: &mut [u8]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.get_linear(start + k) as u8;
        }
    }

    /// Returns a copy with exactly one cell inverted.
    pub fn flip_cell(&self, index: &[usize]) -> Result<Self> {
        let n = self.linear_index(index)?;
        let mut out = self.clone();
        out.words[n >> 6] ^= 1 << (n & 63);
        Ok(out)
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        let tail = self.len() % 64;
        if tail != 0 {
            if let Some(last) = out.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        out
    }

    /// Surrounds the grid with `margin` layers of background on every side.
    pub fn pad_background(&self, margin: usize) -> Self {
        if margin == 0 {
            return self.clone();
        }
        let dims: Vec<usize> = self.dims.iter().map(|&d| d + 2 * margin).collect();
        let m = margin as isize;
        Self::from_fn(&dims, |c| {
            let shifted: Vec<isize> = c.iter().map(|&i| i as isize - m).collect();
            self.get_or_background(&shifted)
        })
        .expect("padded extents are valid whenever the source extents are")
    }

    /// Reorders axes: output axis `a` is input axis `perm[a]`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<Self> {
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..self.ndim()).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter(format!("{perm:?} is not an axis permutation")));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut src = vec![0usize; self.ndim()];
        Self::from_fn(&dims, |c| {
            for (a, &p) in perm.iter().enumerate() {
                src[p] = c[a];
            }
            self.get_linear(self.linear_index(&src).unwrap())
        })
    }

    /// Mirrors the grid along one axis.
    pub fn reverse_axis(&self, axis: usize) -> Result<Self> {
        if axis >= self.ndim() {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
        }
        let mut src = vec![0usize; self.ndim()];
        Self::from_fn(&self.dims, |c| {
            src.copy_from_slice(c);
            src[axis] = self.dims[axis] - 1 - c[axis];
            self.get_linear(self.linear_index(&src).unwrap())
        })
    }

    /// Number of cells set in both grids.
    pub fn intersection_count(&self, other: &Self) -> Result<usize> {
        self.require_same_shape(other)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum())
    }

    pub(crate) fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch { left: self.dims.clone(), right: other.dims.clone() });
        }
        Ok(())
    }

    pub(crate) fn require_ndim(&self, expected: usize) -> Result<()> {
        if self.ndim() != expected {
            return Err(Error::Dimensionality { expected, actual: self.ndim() });
        }
        Ok(())
    }

    /// Cells as 0/1 bytes in row-major order.
    pub fn to_cells(&self) -> Vec<u8> {
        (0..self.len()).map(|n| self.get_linear(n) as u8).collect()
    }

    /// Iterator over linear indices of foreground cells.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }
}

/// Adjacency used when grouping cells into connected components.
///
/// Foreground and background connectivities come in dual pairs (8 with 4 in
/// 2D, 26 with 6 in 3D); the foreground tags match the closed-cell complex
/// that the Euler characteristic is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Fg2d8,
    Bg2d4,
    Fg3d26,
    Bg3d6,
}

impl Connectivity {
    pub fn ndim(self) -> usize {
        match self {
            Connectivity::Fg2d8 | Connectivity::Bg2d4 => 2,
            Connectivity::Fg3d26 | Connectivity::Bg3d6 => 3,
        }
    }

    pub fn dual(self) -> Self {
        match self {
            Connectivity::Fg2d8 => Connectivity::Bg2d4,
            Connectivity::Bg2d4 => Connectivity::Fg2d8,
            Connectivity::Fg3d26 => Connectivity::Bg3d6,
            Connectivity::Bg3d6 => Connectivity::Fg3d26,
        }
    }

    /// Neighbour offsets that precede a cell in row-major order. Visiting
    /// only these during a raster scan still joins every adjacent pair once.
    pub fn backward_offsets(self) -> Vec<Vec<isize>> {
        let ndim = self.ndim();
        let max_nonzero = match self {
            Connectivity::Bg2d4 | Connectivity::Bg3d6 => 1,
            Connectivity::Fg2d8 | Connectivity::Fg3d26 => ndim,
        };
        let mut out = Vec::new();
        let mut off = vec![-1isize; ndim];
        loop {
            let nonzero = off.iter().filter(|&&o| o != 0).count();
            let first = off.iter().find(|&&o| o != 0);
            if nonzero >= 1 && nonzero <= max_nonzero && first == Some(&-1) {
                out.push(off.clone());
            }
            let mut axis = ndim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if off[axis] < 1 {
                    off[axis] += 1;
                    break;
                }
                off[axis] = -1;
            }
        }
    }
}
