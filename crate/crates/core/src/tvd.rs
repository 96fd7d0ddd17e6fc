//! Topology-violation detection: χ-map error, per-cell violation map,
//! thresholding and noise masking of the prediction.

use num_rational::Ratio;

use crate::chimap::{chi_map, ChiMap, ChiMapParams};
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::pattern::{window_code, windows_of_cell, WindowWeights};
use crate::rng::SplitMix64;

/// Lower and upper bound of the sampled normalized threshold.
pub const THRESHOLD_RANGE: (f64, f64) = (0.2, 0.5);

/// L1 distance between two χ-maps, kept in scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChiError {
    pub scaled: u64,
    pub scale: i64,
}

impl ChiError {
    pub fn value(&self) -> Ratio<u64> {
        Ratio::new(self.scaled, self.scale as u64)
    }
}

pub fn chi_error(x: &ChiMap, y: &ChiMap) -> Result<ChiError> {
    if !x.compatible_with(y) {
        return Err(Error::InvalidParameter(format!(
            "chi-maps differ in shape or parameters: {:?}/{:?} vs {:?}/{:?}",
            x.dims, x.params, y.dims, y.params
        )));
    }
    let scaled = x.scaled.iter().zip(&y.scaled).map(|(a, b)| a.abs_diff(*b)).sum();
    Ok(ChiError { scaled, scale: x.scale })
}

/// Nonnegative per-cell map of how much flipping that cell would reduce
/// the local χ error, in scaled units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationMap {
    pub dims: Vec<usize>,
    pub scale: i64,
    pub scaled: Vec<u64>,
}

impl ViolationMap {
    pub fn value(&self, n: usize) -> Ratio<u64> {
        Ratio::new(self.scaled[n], self.scale as u64)
    }

    pub fn max_scaled(&self) -> u64 {
        self.scaled.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.scaled.iter().all(|&v| v == 0)
    }

    /// Values divided by the map maximum; an all-zero map stays zero.
    pub fn normalized(&self) -> Vec<f64> {
        let max = self.max_scaled();
        if max == 0 {
            return vec![0.0; self.scaled.len()];
        }
        self.scaled.iter().map(|&v| v as f64 / max as f64).collect()
    }
}

/// Violation map of `pred` against `gt`.
///
/// For each cell `i`, flipping it changes the prediction's χ-map by `δ_p`
/// on the output cells `p` whose window range holds one of the windows that
/// contain `i`. With `d_p` the current per-cell difference to the ground
/// truth, `V_i = Σ_p max(0, |d_p| − |d_p + δ_p|)`.
pub fn violation_map(pred: &BinaryGrid, gt: &BinaryGrid, params: &ChiMapParams) -> Result<ViolationMap> {
    pred.require_same_shape(gt)?;
    let pred_map = chi_map(pred, params)?;
    let gt_map = chi_map(gt, params)?;
    let diff: Vec<i64> = pred_map.scaled.iter().zip(&gt_map.scaled).map(|(a, b)| a - b).collect();
    let weights = WindowWeights::for_ndim(pred.ndim());

    let mut scaled = vec![0u64; pred.len()];
    let mut covering = Vec::new();
    let mut deltas: Vec<(usize, i64)> = Vec::new();
    for (n, slot) in scaled.iter_mut().enumerate() {
        let index = pred.coords(n);
        deltas.clear();
        for (pos, bit) in windows_of_cell(&index) {
            let code = window_code(pred, &pos);
            let delta = weights.weight(code ^ bit) - weights.weight(code);
            if delta == 0 {
                continue;
            }
            pred_map.cells_covering(&pos, &mut covering);
            deltas.extend(covering.iter().map(|&p| (p, delta)));
        }
        deltas.sort_unstable_by_key(|&(p, _)| p);
        let mut gain = 0u64;
        let mut k = 0;
        while k < deltas.len() {
            let p = deltas[k].0;
            let mut delta = 0;
            while k < deltas.len() && deltas[k].0 == p {
                delta += deltas[k].1;
                k += 1;
            }
            let before = diff[p].unsigned_abs();
            let after = (diff[p] + delta).unsigned_abs();
            gain += before.saturating_sub(after);
        }
        *slot = gain;
    }
    Ok(ViolationMap { dims: pred.dims().to_vec(), scale: pred_map.scale, scaled })
}

/// Cells whose violation value is at least `t` (in unscaled units).
pub fn threshold_mask(v: &ViolationMap, t: f64) -> Result<BinaryGrid> {
    let cut = t * v.scale as f64;
    let cells: Vec<u8> = v.scaled.iter().map(|&x| (x as f64 >= cut) as u8).collect();
    BinaryGrid::from_cells(&v.dims, &cells)
}

/// Cells whose max-normalized violation value is at least `t`. An all-zero
/// map yields an empty mask.
pub fn threshold_mask_normalized(v: &ViolationMap, t: f64) -> Result<BinaryGrid> {
    let max = v.max_scaled();
    let cells: Vec<u8> = if max == 0 {
        vec![0; v.scaled.len()]
    } else {
        let cut = t * max as f64;
        v.scaled.iter().map(|&x| (x as f64 >= cut) as u8).collect()
    };
    BinaryGrid::from_cells(&v.dims, &cells)
}

/// Seeded uniform draw from [`THRESHOLD_RANGE`].
pub fn sample_threshold(seed: u64) -> f64 {
    let (lo, hi) = THRESHOLD_RANGE;
    lo + (hi - lo) * SplitMix64::new(seed).next_f64()
}

/// Prediction with masked cells replaced by squashed Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGrid {
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

/// Replaces every masked cell by `sigmoid(ε)`, `ε ~ N(0, 1)`, drawing one
/// Gaussian per masked cell in row-major order; other cells keep the
/// prediction's 0/1 value.
pub fn noise_mask(pred: &BinaryGrid, mask: &BinaryGrid, seed: u64) -> Result<MaskedGrid> {
    pred.require_same_shape(mask)?;
    let mut rng = SplitMix64::new(seed);
    let values = (0..pred.len())
        .map(|n| {
            if mask.get_linear(n) {
                let eps = rng.next_gaussian();
                (1.0 / (1.0 + (-eps).exp())) as f32
            } else if pred.get_linear(n) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(MaskedGrid { dims: pred.dims().to_vec(), values })
}
