//! Size sweeps timing the χ fast paths, for checking linear scaling.

use std::hint::black_box;
use std::time::Instant;

use crate::chimap::{chi_map, ChiMapParams};
use crate::error::Result;
use crate::grid::BinaryGrid;
use crate::pattern::chi;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub op: &'static str,
    pub extent: usize,
    pub cells: usize,
    pub ns_median: u128,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub extents_2d: Vec<usize>,
    pub extents_3d: Vec<usize>,
    pub warmup: usize,
    pub repeats: usize,
    pub density: f64,
    pub patch: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            extents_2d: vec![64, 128, 256, 512, 1024, 2048, 4096],
            extents_3d: vec![16, 32, 64, 128],
            warmup: 1,
            repeats: 5,
            density: 0.3,
            patch: crate::chimap::DEFAULT_PATCH,
            seed: 0,
        }
    }
}

/// Random grid with i.i.d. cells drawn from the pinned stream.
pub fn noise_grid(dims: &[usize], density: f64, seed: u64) -> Result<BinaryGrid> {
    let mut rng = SplitMix64::new(seed);
    let n: usize = dims.iter().product();
    let cells: Vec<u8> = (0..n).map(|_| (rng.next_f64() < density) as u8).collect();
    BinaryGrid::from_cells(dims, &cells)
}

/// Median wall time of `repeats` runs after `warmup` discarded runs.
pub fn time_median(warmup: usize, repeats: usize, mut f: impl FnMut()) -> u128 {
    for _ in 0..warmup {
        f();
    }
    let mut samples: Vec<u128> = (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_nanos()
        })
        .collect();
    samples.sort_unstable();
    samples[samples.len() / 2]
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRow>> {
    let params = ChiMapParams::tiled(cfg.patch);
    let mut rows = Vec::new();
    let plans: [(&[usize], usize, &'static str, &'static str); 2] =
        [(&cfg.extents_2d, 2, "chi2d", "chi_map2d"), (&cfg.extents_3d, 3, "chi3d", "chi_map3d")];
    for (extents, ndim, chi_op, map_op) in plans {
        for &extent in extents {
            let dims = vec![extent; ndim];
            let grid = noise_grid(&dims, cfg.density, cfg.seed ^ extent as u64)?;
            let cells = grid.len();
            let ns = time_median(cfg.warmup, cfg.repeats, || {
                black_box(chi(black_box(&grid)).unwrap());
            });
            rows.push(BenchRow { op: chi_op, extent, cells, ns_median: ns });
            let ns = time_median(cfg.warmup, cfg.repeats, || {
                black_box(chi_map(black_box(&grid), &params).unwrap());
            });
            rows.push(BenchRow { op: map_op, extent, cells, ns_median: ns });
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("op,extent,cells,ns_median\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.op, r.extent, r.cells, r.ns_median));
    }
    out
}

/// Least-squares slope of `log(ns)` against `log(cells)` for one op.
pub fn loglog_slope(rows: &[BenchRow], op: &str) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.op == op).map(|r| ((r.cells as f64).ln(), (r.ns_median.max(1) as f64).ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let rows: Vec<BenchRow> = [10usize, 100, 1000]
            .iter()
            .map(|&c| BenchRow { op: "x", extent: c, cells: c, ns_median: (c * c) as u128 })
            .collect();
        assert!((loglog_slope(&rows, "x").unwrap() - 2.0).abs() < 1e-9);
        assert!(loglog_slope(&rows, "y").is_none());
    }

    #[test]
    fn tiny_sweep_and_csv() {
        let cfg = SweepConfig {
            extents_2d: vec![8, 16],
            extents_3d: vec![4],
            warmup: 0,
            repeats: 1,
            ..SweepConfig::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        let csv = to_csv(&rows);
        assert!(csv.starts_with("op,extent,cells,ns_median\nchi2d,8,64,"));
        assert_eq!(csv.lines().count(), 7);
    }
}
