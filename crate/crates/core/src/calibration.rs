//! Recovering the octet class weights from sampled volumes.
//!
//! Each sample pairs the per-class window counts of a volume with its
//! reference Euler characteristic. Stacking many samples gives an
//! overdetermined integer system `counts · ω = χ`, solved here by exact
//! rational elimination.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cubical::chi_exact;
use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::octet::{CoefficientVector, OCTET_CLASSES};
use crate::pattern::octet_histogram;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibrationSample {
    pub class_counts: Vec<u64>,
    pub chi: i64,
}

impl CalibrationSample {
    pub fn from_volume(volume: &BinaryGrid) -> Result<Self> {
        let class_counts = octet_histogram(volume)?.class_counts()?;
        Ok(Self { class_counts, chi: chi_exact(volume) })
    }
}

const DENSITIES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Generates a deterministic mix of volumes with per-axis extents in
/// `[2, extent]`: i.i.d. noise, solid and hollow boxes, balls and shells,
/// and square rings extruded into prisms.
pub fn sample_volume_grids(count: usize, extent: usize, seed: u64) -> Result<Vec<BinaryGrid>> {
    if extent < 2 {
        return Err(Error::InvalidParameter(format!("sample extent must be at least 2, got {extent}")));
    }
    let mut rng = SplitMix64::new(seed);
    (0..count).map(|i| sample_one(i, extent, &mut rng)).collect()
}

pub fn sample_volumes(count: usize, extent: usize, seed: u64) -> Result<Vec<CalibrationSample>> {
    sample_volume_grids(count, extent, seed)?.iter().map(CalibrationSample::from_volume).collect()
}

fn sample_one(i: usize, extent: usize, rng: &mut SplitMix64) -> Result<BinaryGrid> {
    let dims: Vec<usize> = (0..3).map(|_| rng.range_inclusive(2, extent)).collect();
    let pick = |rng: &mut SplitMix64, d: usize| rng.below(d as u64) as usize;
    match i % 6 {
        // i.i.d. noise fills two of every six slots
        0 | 3 => {
            let p = DENSITIES[rng.below(DENSITIES.len() as u64) as usize];
            let cells: Vec<u8> = (0..dims.iter().product::<usize>()).map(|_| (rng.next_f64() < p) as u8).collect();
            BinaryGrid::from_cells(&dims, &cells)
        }
        1 => {
            let lo: Vec<usize> = dims.iter().map(|&d| pick(rng, d)).collect();
            let hi: Vec<usize> = dims.iter().zip(&lo).map(|(&d, &l)| l + pick(rng, d - l)).collect();
            let hollow = rng.below(2) == 1;
            BinaryGrid::from_fn(&dims, |c| {
                let inside = (0..3).all(|a| c[a] >= lo[a] && c[a] <= hi[a]);
                let interior = (0..3).all(|a| c[a] > lo[a] && c[a] < hi[a]);
                inside && !(hollow && interior)
            })
        }
        2 => {
            let centre: Vec<f64> = dims.iter().map(|&d| rng.next_f64() * d as f64).collect();
            let outer = 0.5 + rng.next_f64() * extent as f64 / 2.0;
            let inner2 = if rng.below(2) == 1 { (outer * rng.next_f64()).powi(2) } else { -1.0 };
            BinaryGrid::from_fn(&dims, |c| {
                let r2: f64 = (0..3).map(|a| (c[a] as f64 + 0.5 - centre[a]).powi(2)).sum();
                r2 <= outer * outer && r2 > inner2
            })
        }
        4 => {
            // square ring in the plane of two axes, extruded along the third
            let axis = pick(rng, 3);
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let (u0, v0) = (pick(rng, dims[u]), pick(rng, dims[v]));
            let (u1, v1) = (u0 + pick(rng, dims[u] - u0), v0 + pick(rng, dims[v] - v0));
            let z0 = pick(rng, dims[axis]);
            let z1 = z0 + pick(rng, dims[axis] - z0);
            BinaryGrid::from_fn(&dims, |c| {
                let in_box = c[u] >= u0 && c[u] <= u1 && c[v] >= v0 && c[v] <= v1;
                let on_rim = c[u] == u0 || c[u] == u1 || c[v] == v0 || c[v] == v1;
                in_box && on_rim && c[axis] >= z0 && c[axis] <= z1
            })
        }
        _ => {
            // a handful of scattered voxels
            let mut g = BinaryGrid::new(&dims, false)?;
            let marks = 1 + pick(rng, 6);
            for _ in 0..marks {
                let at: Vec<usize> = dims.iter().map(|&d| pick(rng, d)).collect();
                if !g.get(&at)? {
                    g = g.flip_cell(&at)?;
                }
            }
            Ok(g)
        }
    }
}

/// Solved weights and the rank of the sample system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Calibration {
    pub coefficients: CoefficientVector,
    pub rank: usize,
    /// True when the system has full column rank, so the weights are unique.
    pub unique: bool,
}

/// Solves `class_counts · ω = χ` exactly over the rationals.
///
/// Rows are reduced one at a time against a basis kept in reduced row
/// echelon form, so at most 22 rows are ever stored. When the rank is below
/// 22 the free weights are set to zero, giving a basic solution whose
/// support is at most the rank.
pub fn solve_coefficients(samples: &[CalibrationSample]) -> Result<Calibration> {
    if samples.len() < OCTET_CLASSES {
        return Err(Error::InvalidParameter(format!("need at least {OCTET_CLASSES} samples, got {}", samples.len())));
    }
    let cols = OCTET_CLASSES;
    // basis rows: (pivot column, row of cols + 1 entries)
    let mut basis: Vec<(usize, Vec<BigRational>)> = Vec::new();
    for (s_idx, sample) in samples.iter().enumerate() {
        if sample.class_counts.len() != cols {
            return Err(Error::InvalidParameter(format!(
                "sample {s_idx} has {} class counts",
                sample.class_counts.len()
            )));
        }
        let mut row: Vec<BigRational> = sample
            .class_counts
            .iter()
            .map(|&n| BigRational::from_integer(BigInt::from(n)))
            .chain(std::iter::once(BigRational::from_integer(BigInt::from(sample.chi))))
            .collect();
        for (pivot, brow) in &basis {
            if !row[*pivot].is_zero() {
                let f = row[*pivot].clone();
                for (x, b) in row.iter_mut().zip(brow) {
                    *x -= &f * b;
                }
            }
        }
        let Some(pivot) = (0..cols).find(|&c| !row[c].is_zero()) else {
            if !row[cols].is_zero() {
                return Err(Error::Calibration(format!(
                    "sample {s_idx} contradicts the earlier samples (residual {})",
                    row[cols]
                )));
            }
            continue;
        };
        let inv = BigRational::one() / &row[pivot];
        for x in row.iter_mut() {
            *x *= &inv;
        }
        for (_, brow) in basis.iter_mut() {
            if !brow[pivot].is_zero() {
                let f = brow[pivot].clone();
                for (x, r) in brow.iter_mut().zip(&row) {
                    *x -= &f * r;
                }
            }
        }
        basis.push((pivot, row));
    }

    let mut weights = vec![Ratio::<i64>::zero(); cols];
    for (pivot, row) in &basis {
        weights[*pivot] = to_small_ratio(&row[cols])?;
    }
    let coefficients = CoefficientVector::new(weights)?;
    let residual = verify_coefficients(&coefficients, samples);
    if !residual.max_abs_error.is_zero() {
        return Err(Error::Calibration(format!(
            "solution leaves residual {} on the training samples",
            residual.max_abs_error
        )));
    }
    Ok(Calibration { coefficients, rank: basis.len(), unique: basis.len() == cols })
}

fn to_small_ratio(r: &BigRational) -> Result<Ratio<i64>> {
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Ratio::new(n, d)),
        _ => Err(Error::Calibration(format!("weight {r} does not fit in 64 bits"))),
    }
}

/// Worst-case disagreement between predicted and reference χ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub samples: usize,
    pub max_abs_error: Ratio<i128>,
    pub mismatches: usize,
}

pub fn verify_coefficients(coeffs: &CoefficientVector, samples: &[CalibrationSample]) -> VerificationReport {
    let mut max_abs_error = Ratio::<i128>::zero();
    let mut mismatches = 0;
    for s in samples {
        let predicted: Ratio<i128> = s
            .class_counts
            .iter()
            .zip(&coeffs.weights)
            .map(|(&n, w)| Ratio::new(*w.numer() as i128, *w.denom() as i128) * n as i128)
            .sum();
        let err = (predicted - Ratio::from_integer(s.chi as i128)).abs();
        if !err.is_zero() {
            mismatches += 1;
        }
        if err > max_abs_error {
            max_abs_error = err;
        }
    }
    VerificationReport { samples: samples.len(), max_abs_error, mismatches }
}
