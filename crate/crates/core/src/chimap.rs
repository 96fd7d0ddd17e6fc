//! Patch-local Euler characteristics over the pattern lattice.
//!
//! Output cell `q` of a map with patch `Δ` and stride `s` sums the window
//! weights of lattice positions `q·s .. q·s + Δ` along every axis, clipped to
//! the lattice. Tiled maps (`s = Δ`) partition the lattice, so their cells
//! add up to the global characteristic. Dense maps (`s = 1`) have one cell
//! per lattice position; windows past the lattice edge count as empty.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::pattern::{for_each_code, lattice_dims, WindowWeights};

/// Patch size used when none is given.
pub const DEFAULT_PATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChiMapMode {
    Tiled,
    Dense,
}

impl std::fmt::Display for ChiMapMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChiMapMode::Tiled => "tiled",
            ChiMapMode::Dense => "dense",
        })
    }
}

impl std::str::FromStr for ChiMapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiled" => Ok(ChiMapMode::Tiled),
            "dense" => Ok(ChiMapMode::Dense),
            other => Err(Error::InvalidParameter(format!("unknown chi-map mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChiMapParams {
    pub patch: usize,
    pub stride: usize,
    pub mode: ChiMapMode,
}

impl ChiMapParams {
    pub fn tiled(patch: usize) -> Self {
        Self { patch, stride: patch, mode: ChiMapMode::Tiled }
    }

    pub fn dense(patch: usize) -> Self {
        Self { patch, stride: 1, mode: ChiMapMode::Dense }
    }

    /// Builds parameters for `mode`, defaulting the stride to the one the
    /// mode requires.
    pub fn new(patch: usize, stride: Option<usize>, mode: ChiMapMode) -> Result<Self> {
        let stride = stride.unwrap_or(match mode {
            ChiMapMode::Tiled => patch,
            ChiMapMode::Dense => 1,
        });
        let p = Self { patch, stride, mode };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch == 0 || self.stride == 0 {
            return Err(Error::InvalidParameter(format!(
                "patch and stride must be at least 1 (patch {}, stride {})",
                self.patch, self.stride
            )));
        }
        match self.mode {
            ChiMapMode::Tiled if self.stride != self.patch => Err(Error::InvalidParameter(format!(
                "tiled mode needs stride == patch, got stride {} with patch {}",
                self.stride, self.patch
            ))),
            ChiMapMode::Dense if self.stride != 1 => {
                Err(Error::InvalidParameter(format!("dense mode needs stride 1, got {}", self.stride)))
            }
            _ => Ok(()),
        }
    }

    /// Output extents for a pattern lattice of the given extents.
    pub fn output_dims(&self, lattice: &[usize]) -> Vec<usize> {
        lattice.iter().map(|&l| l.div_ceil(self.stride)).collect()
    }
}

impl Default for ChiMapParams {
    fn default() -> Self {
        Self::tiled(DEFAULT_PATCH)
    }
}

/// Grid of patch-local Euler characteristics, stored scaled by `scale`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChiMap {
    pub dims: Vec<usize>,
    pub lattice: Vec<usize>,
    pub params: ChiMapParams,
    pub scale: i64,
    pub scaled: Vec<i64>,
}

impl ChiMap {
    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    pub fn value(&self, n: usize) -> Ratio<i64> {
        Ratio::new(self.scaled[n], self.scale)
    }

    /// Cell values as integers, when every cell is integral.
    pub fn to_integers(&self) -> Option<Vec<i64>> {
        self.scaled.iter().map(|&v| (v % self.scale == 0).then_some(v / self.scale)).collect()
    }

    pub fn total(&self) -> Ratio<i64> {
        Ratio::new(self.scaled.iter().sum(), self.scale)
    }

    pub fn compatible_with(&self, other: &ChiMap) -> bool {
        self.dims == other.dims
            && self.lattice == other.lattice
            && self.params == other.params
            && self.scale == other.scale
    }

    /// Linear indices of output cells whose window range covers lattice
    /// position `pos`.
    pub fn cells_covering(&self, pos: &[usize], out: &mut Vec<usize>) {
        out.clear();
        let ndim = pos.len();
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for axis in 0..ndim {
            let p = pos[axis];
            match self.params.mode {
                ChiMapMode::Tiled => {
                    lo[axis] = p / self.params.patch;
                    hi[axis] = lo[axis];
                }
                ChiMapMode::Dense => {
                    lo[axis] = (p + 1).saturating_sub(self.params.patch);
                    hi[axis] = p.min(self.dims[axis] - 1);
                }
            }
        }
        if ndim == 2 {
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    out.push(i * self.dims[1] + j);
                }
            }
        } else {
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        out.push((i * self.dims[1] + j) * self.dims[2] + k);
                    }
                }
            }
        }
    }
}

/// Computes the χ-map of a grid with the default pattern weights.
pub fn chi_map(grid: &BinaryGrid, params: &ChiMapParams) -> Result<ChiMap> {
    chi_map_with(grid, params, WindowWeights::for_ndim(grid.ndim()))
}

pub fn chi_map_with(grid: &BinaryGrid, params: &ChiMapParams, weights: &WindowWeights) -> Result<ChiMap> {
    params.validate()?;
    grid.require_ndim(weights.ndim)?;
    let lattice = lattice_dims(grid);
    let dims = params.output_dims(&lattice);
    let scaled = match params.mode {
        ChiMapMode::Tiled => tiled(grid, &lattice, &dims, params.patch, weights),
        ChiMapMode::Dense => dense(grid, &lattice, params.patch, weights),
    };
    Ok(ChiMap { dims, lattice, params: *params, scale: weights.scale, scaled })
}

fn tiled(grid: &BinaryGrid, lattice: &[usize], dims: &[usize], patch: usize, weights: &WindowWeights) -> Vec<i64> {
    let mut out = vec![0i64; dims.iter().product()];
    // per-axis tile index of every lattice coordinate
    let tile_of: Vec<Vec<usize>> = lattice.iter().map(|&l| (0..l).map(|p| p / patch).collect()).collect();
    if lattice.len() == 2 {
        let lw = lattice[1];
        for_each_code(grid, |n, code| {
            let (a, b) = (n / lw, n % lw);
            out[tile_of[0][a] * dims[1] + tile_of[1][b]] += weights.weight(code);
        });
    } else {
        let (lw, ld) = (lattice[1], lattice[2]);
        for_each_code(grid, |n, code| {
            let (a, b, c) = (n / (lw * ld), (n / ld) % lw, n % ld);
            out[(tile_of[0][a] * dims[1] + tile_of[1][b]) * dims[2] + tile_of[2][c]] += weights.weight(code);
        });
    }
    out
}

/// Sliding-window sums via a summed-area table over the window weights.
fn dense(grid: &BinaryGrid, lattice: &[usize], patch: usize, weights: &WindowWeights) -> Vec<i64> {
    let ndim = lattice.len();
    // table extents are lattice + 1 with a leading zero row on each axis
    let ext: Vec<usize> = lattice.iter().map(|&l| l + 1).collect();
    let mut sat = vec![0i64; ext.iter().product()];
    let at = |c: &[usize]| -> usize {
        if ndim == 2 {
            c[0] * ext[1] + c[1]
        } else {
            (c[0] * ext[1] + c[1]) * ext[2] + c[2]
        }
    };
    {
        let lw = lattice[1];
        let ld = if ndim == 3 { lattice[2] } else { 1 };
        for_each_code(grid, |n, code| {
            let idx = if ndim == 2 {
                at(&[n / lw + 1, n % lw + 1])
            } else {
                at(&[n / (lw * ld) + 1, (n / ld) % lw + 1, n % ld + 1])
            };
            sat[idx] = weights.weight(code);
        });
    }
    // running sums along each axis in turn
    for axis in 0..ndim {
        let stride: usize = ext[axis + 1..].iter().product();
        let span = ext[axis];
        for n in 0..sat.len() {
            if !(n / stride).is_multiple_of(span) {
                sat[n] += sat[n - stride];
            }
        }
    }

    let mut out = vec![0i64; lattice.iter().product()];
    let clip = |q: usize, axis: usize| ((q).min(lattice[axis]), (q + patch).min(lattice[axis]));
    if ndim == 2 {
        for i in 0..lattice[0] {
            let (i0, i1) = clip(i, 0);
            for j in 0..lattice[1] {
                let (j0, j1) = clip(j, 1);
                out[i * lattice[1] + j] =
                    sat[at(&[i1, j1])] - sat[at(&[i0, j1])] - sat[at(&[i1, j0])] + sat[at(&[i0, j0])];
            }
        }
    } else {
        for i in 0..lattice[0] {
            let (i0, i1) = clip(i, 0);
            for j in 0..lattice[1] {
                let (j0, j1) = clip(j, 1);
                for k in 0..lattice[2] {
                    let (k0, k1) = clip(k, 2);
                    let v = sat[at(&[i1, j1, k1])]
                        - sat[at(&[i0, j1, k1])]
                        - sat[at(&[i1, j0, k1])]
                        - sat[at(&[i1, j1, k0])]
                        + sat[at(&[i0, j0, k1])]
                        + sat[at(&[i0, j1, k0])]
                        + sat[at(&[i1, j0, k0])]
                        - sat[at(&[i0, j0, k0])];
                    out[(i * lattice[1] + j) * lattice[2] + k] = v;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{chi, window_code};

    fn ring() -> BinaryGrid {
        BinaryGrid::from_fn(&[3, 3], |c| c != [1, 1]).unwrap()
    }

    /// Direct window-by-window sum for an output cell.
    fn brute_cell(grid: &BinaryGrid, params: &ChiMapParams, q: &[usize]) -> i64 {
        let lattice = lattice_dims(grid);
        let w = WindowWeights::for_ndim(grid.ndim());
        let ranges: Vec<std::ops::Range<usize>> = q
            .iter()
            .zip(&lattice)
            .map(|(&q, &l)| (q * params.stride).min(l)..(q * params.stride + params.patch).min(l))
            .collect();
        let mut total = 0;
        if grid.ndim() == 2 {
            for a in ranges[0].clone() {
                for b in ranges[1].clone() {
                    total += w.weight(window_code(grid, &[a, b]));
                }
            }
        } else {
            for a in ranges[0].clone() {
                for b in ranges[1].clone() {
                    for c in ranges[2].clone() {
                        total += w.weight(window_code(grid, &[a, b, c]));
                    }
                }
            }
        }
        total
    }

    fn check_against_brute(grid: &BinaryGrid, params: ChiMapParams) {
        let m = chi_map(grid, &params).unwrap();
        for n in 0..m.len() {
            let mut q = vec![0; m.dims.len()];
            let mut r = n;
            for axis in (0..q.len()).rev() {
                q[axis] = r % m.dims[axis];
                r /= m.dims[axis];
            }
            assert_eq!(m.scaled[n], brute_cell(grid, &params, &q), "cell {q:?} with {params:?}");
        }
    }

    #[test]
    fn whole_lattice_tile_is_global_chi() {
        let g = ring();
        let m = chi_map(&g, &ChiMapParams::tiled(32)).unwrap();
        assert_eq!(m.dims, vec![1, 1]);
        assert_eq!(m.to_integers().unwrap(), vec![chi(&g).unwrap()]);
    }

    #[test]
    fn ring_tiles_of_two() {
        let m = chi_map(&ring(), &ChiMapParams::tiled(2)).unwrap();
        assert_eq!(m.dims, vec![2, 2]);
        // frozen from explicit window enumeration of the padded ring
        assert_eq!(m.scaled, vec![0, 0, 0, 0]);
        assert_eq!(m.total(), Ratio::from_integer(0));
    }

    #[test]
    fn empty_grid_maps_to_zero() {
        let g = BinaryGrid::new(&[5, 6, 3], false).unwrap();
        for p in [ChiMapParams::tiled(2), ChiMapParams::dense(3)] {
            assert!(chi_map(&g, &p).unwrap().scaled.iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn rejects_inconsistent_params() {
        let g = ring();
        let bad = ChiMapParams { patch: 4, stride: 2, mode: ChiMapMode::Tiled };
        assert!(chi_map(&g, &bad).is_err());
        assert!(ChiMapParams::new(0, None, ChiMapMode::Dense).is_err());
        assert!(ChiMapParams::new(3, Some(2), ChiMapMode::Dense).is_err());
    }

    #[test]
    fn maps_match_window_enumeration() {
        let g2 = BinaryGrid::from_fn(&[7, 5], |c| (c[0] * 3 + c[1] * c[1]) % 5 < 2).unwrap();
        let g3 = BinaryGrid::from_fn(&[4, 3, 5], |c| (c[0] + 2 * c[1] + c[2] * c[0]) % 3 == 0).unwrap();
        for g in [&g2, &g3] {
            for patch in 1..5 {
                check_against_brute(g, ChiMapParams::tiled(patch));
                check_against_brute(g, ChiMapParams::dense(patch));
            }
        }
    }

    #[test]
    fn dense_dims_equal_lattice() {
        let g = BinaryGrid::new(&[4, 6], true).unwrap();
        let m = chi_map(&g, &ChiMapParams::dense(3)).unwrap();
        assert_eq!(m.dims, vec![5, 7]);
    }

    #[test]
    fn covering_cells() {
        let g = BinaryGrid::new(&[6, 6], false).unwrap();
        let m = chi_map(&g, &ChiMapParams::dense(3)).unwrap();
        let mut out = Vec::new();
        m.cells_covering(&[0, 0], &mut out);
        assert_eq!(out, vec![0]);
        m.cells_covering(&[3, 3], &mut out);
        assert_eq!(out.len(), 9);
        let t = chi_map(&g, &ChiMapParams::tiled(3)).unwrap();
        t.cells_covering(&[4, 2], &mut out);
        assert_eq!(out, vec![t.dims[1]]);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("dense".parse::<ChiMapMode>().unwrap(), ChiMapMode::Dense);
        assert!("strided".parse::<ChiMapMode>().is_err());
        assert_eq!(ChiMapMode::Tiled.to_string(), "tiled");
    }
}
