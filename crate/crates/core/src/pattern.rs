//! Euler characteristic from local window patterns.
//!
//! The grid is padded with one layer of background and every 2×2 (2D) or
//! 2×2×2 (3D) window is read at unit stride. Window `(a, b[, c])` of the
//! pattern lattice covers grid cells `a-1..=a`, `b-1..=b` (and `c-1..=c`),
//! so the lattice has extents `h+1`, `w+1` (and `d+1`). Each pattern code
//! carries an integer weight scaled by 4 (2D) or 8 (3D); the Euler
//! characteristic is the weighted count divided by the scale.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::octet::{octet_bit, CoefficientVector, OctetClassTable, OCTET_CODES};

pub const QUAD_CODES: usize = 16;

/// Bit of a 2×2 window cell at offset `(x, y)`; row-major, first cell is the MSB.
#[inline]
pub(crate) fn quad_bit(x: usize, y: usize) -> u32 {
    3 - (2 * x + y) as u32
}

/// Occurrence counts of every window pattern over the padded grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternHistogram {
    pub ndim: usize,
    pub counts: Vec<u64>,
}

impl PatternHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Per-class totals (3D histograms only).
    pub fn class_counts(&self) -> Result<Vec<u64>> {
        if self.ndim != 3 {
            return Err(Error::Dimensionality { expected: 3, actual: self.ndim });
        }
        Ok(OctetClassTable::get().group_counts(&self.counts))
    }
}

/// Integer weight per pattern code together with its scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowWeights {
    pub ndim: usize,
    pub scale: i64,
    pub table: Vec<i64>,
}

impl WindowWeights {
    /// Gray's bit-quad weights: +1 for one foreground cell, −1 for three,
    /// −2 for the two diagonal pairs, 0 otherwise (all scaled by 4).
    pub fn gray() -> Self {
        let table = (0..QUAD_CODES as u8)
            .map(|code| match code.count_ones() {
                1 => 1,
                3 => -1,
                2 if is_diagonal_quad(code) => -2,
                _ => 0,
            })
            .collect();
        Self { ndim: 2, scale: 4, table }
    }

    pub fn octet(coeffs: &CoefficientVector) -> Self {
        let scale = coeffs.common_scale(8);
        Self { ndim: 3, scale, table: coeffs.per_code_scaled(scale).to_vec() }
    }

    /// Default weights for a grid's dimensionality.
    pub fn for_ndim(ndim: usize) -> &'static WindowWeights {
        use std::sync::OnceLock;
        static GRAY: OnceLock<WindowWeights> = OnceLock::new();
        static OCTET: OnceLock<WindowWeights> = OnceLock::new();
        if ndim == 2 {
            GRAY.get_or_init(WindowWeights::gray)
        } else {
            OCTET.get_or_init(|| WindowWeights::octet(&CoefficientVector::from_cell_shares()))
        }
    }

    #[inline]
    pub fn weight(&self, code: u8) -> i64 {
        self.table[code as usize]
    }

    /// Weighted sum of a histogram, still scaled.
    pub fn scaled_sum(&self, hist: &PatternHistogram) -> i64 {
        hist.counts.iter().zip(&self.table).map(|(&n, &w)| n as i64 * w).sum()
    }

    pub(crate) fn unscale(&self, scaled: i64) -> Result<i64> {
        if scaled % self.scale != 0 {
            return Err(Error::InternalConsistency(format!(
                "weighted pattern count {scaled} is not divisible by {}; coefficients are wrong",
                self.scale
            )));
        }
        Ok(scaled / self.scale)
    }
}

fn is_diagonal_quad(code: u8) -> bool {
    let main = (1 << quad_bit(0, 0)) | (1 << quad_bit(1, 1));
    let anti = (1 << quad_bit(0, 1)) | (1 << quad_bit(1, 0));
    code == main || code == anti
}

/// Extents of the pattern lattice of a grid.
pub fn lattice_dims(grid: &BinaryGrid) -> Vec<usize> {
    grid.dims().iter().map(|&d| d + 1).collect()
}

/// Calls `f(lattice_index, code)` for every window in row-major lattice order.
pub fn for_each_code(grid: &BinaryGrid, mut f: impl FnMut(usize, u8)) {
    match *grid.dims() {
        [h, w] => {
            let mut top = vec![0u8; w + 2];
            let mut bot = vec![0u8; w + 2];
            let mut n = 0;
            for a in 0..=h {
                std::mem::swap(&mut top, &mut bot);
                if a < h {
                    grid.unpack_run(a * w, &mut bot[1..=w]);
                } else {
                    bot.fill(0);
                }
                for b in 0..=w {
                    let code = (top[b] << 3) | (top[b + 1] << 2) | (bot[b] << 1) | bot[b + 1];
                    f(n, code);
                    n += 1;
                }
            }
        }
        [h, w, d] => {
            let stride = d + 2;
            let plane_len = (w + 2) * stride;
            let mut prev = vec![0u8; plane_len];
            let mut cur = vec![0u8; plane_len];
            let mut n = 0;
            for a in 0..=h {
                std::mem::swap(&mut prev, &mut cur);
                if a < h {
                    for j in 0..w {
                        let row = (j + 1) * stride + 1;
                        grid.unpack_run((a * w + j) * d, &mut cur[row..row + d]);
                    }
                } else {
                    cur.fill(0);
                }
                for b in 0..=w {
                    let r0 = b * stride;
                    let r1 = r0 + stride;
                    for c in 0..=d {
                        let code = (prev[r0 + c] << 7)
                            | (prev[r0 + c + 1] << 6)
                            | (prev[r1 + c] << 5)
                            | (prev[r1 + c + 1] << 4)
                            | (cur[r0 + c] << 3)
                            | (cur[r0 + c + 1] << 2)
                            | (cur[r1 + c] << 1)
                            | cur[r1 + c + 1];
                        f(n, code);
                        n += 1;
                    }
                }
            }
        }
        _ => unreachable!("grids are 2D or 3D"),
    }
}

/// Pattern code of the window at lattice position `pos`, reading cells
/// outside the grid as background.
pub fn window_code(grid: &BinaryGrid, pos: &[usize]) -> u8 {
    let mut code = 0u8;
    if grid.ndim() == 2 {
        for x in 0..2 {
            for y in 0..2 {
                let cell = [pos[0] as isize - 1 + x as isize, pos[1] as isize - 1 + y as isize];
                if grid.get_or_background(&cell) {
                    code |= 1 << quad_bit(x, y);
                }
            }
        }
    } else {
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let cell = [
                        pos[0] as isize - 1 + x as isize,
                        pos[1] as isize - 1 + y as isize,
                        pos[2] as isize - 1 + z as isize,
                    ];
                    if grid.get_or_background(&cell) {
                        code |= 1 << octet_bit(x, y, z);
                    }
                }
            }
        }
    }
    code
}

/// Windows that contain cell `index`: lattice positions and the bit the
/// cell occupies in each window's code.
pub fn windows_of_cell(index: &[usize]) -> Vec<(Vec<usize>, u8)> {
    let ndim = index.len();
    let mut out = Vec::with_capacity(1 << ndim);
    for corner in 0..(1usize << ndim) {
        let mut pos = index.to_vec();
        let mut offs = [0usize; 3];
        for axis in 0..ndim {
            let shift = (corner >> (ndim - 1 - axis)) & 1;
            pos[axis] += shift;
            // the cell sits at offset 1 in windows starting at its own coordinate
            offs[axis] = 1 - shift;
        }
        let bit = if ndim == 2 { quad_bit(offs[0], offs[1]) } else { octet_bit(offs[0], offs[1], offs[2]) };
        out.push((pos, 1u8 << bit));
    }
    out
}

fn histogram(grid: &BinaryGrid, ncodes: usize) -> PatternHistogram {
    let mut counts = vec![0u64; ncodes];
    for_each_code(grid, |_, code| counts[code as usize] += 1);
    PatternHistogram { ndim: grid.ndim(), counts }
}

pub fn quad_histogram(grid: &BinaryGrid) -> Result<PatternHistogram> {
    grid.require_ndim(2)?;
    Ok(histogram(grid, QUAD_CODES))
}

pub fn octet_histogram(grid: &BinaryGrid) -> Result<PatternHistogram> {
    grid.require_ndim(3)?;
    Ok(histogram(grid, OCTET_CODES))
}

/// Euler characteristic of a 2D grid by Gray's bit-quad formula.
pub fn chi_gray(grid: &BinaryGrid) -> Result<i64> {
    let hist = quad_histogram(grid)?;
    let weights = WindowWeights::for_ndim(2);
    weights.unscale(weights.scaled_sum(&hist))
}

/// Euler characteristic of a 3D grid from octet class counts and weights.
pub fn chi_octet(grid: &BinaryGrid, coeffs: &CoefficientVector) -> Result<i64> {
    let hist = octet_histogram(grid)?;
    let classes = hist.class_counts()?;
    let total: Ratio<i64> = classes.iter().zip(&coeffs.weights).map(|(&n, w)| w * n as i64).sum();
    if !total.is_integer() {
        return Err(Error::InternalConsistency(format!(
            "octet weights yield non-integer Euler characteristic {total}"
        )));
    }
    Ok(total.to_integer())
}

/// Euler characteristic of any grid via the pattern fast path.
pub fn chi(grid: &BinaryGrid) -> Result<i64> {
    let weights = WindowWeights::for_ndim(grid.ndim());
    let mut scaled = 0i64;
    for_each_code(grid, |_, code| scaled += weights.weight(code));
    weights.unscale(scaled)
}

/// Change in Euler characteristic caused by flipping one cell, evaluated
/// from the windows that contain it.
pub fn flip_delta_chi(grid: &BinaryGrid, index: &[usize]) -> Result<i64> {
    grid.linear_index(index)?;
    let weights = WindowWeights::for_ndim(grid.ndim());
    let delta: i64 = windows_of_cell(index)
        .into_iter()
        .map(|(pos, bit)| {
            let code = window_code(grid, &pos);
            weights.weight(code ^ bit) - weights.weight(code)
        })
        .sum();
    weights.unscale(delta)
}
