//! Fixtures shared by the criterion benchmarks.

use eulerseg::perf::noise_grid;
use eulerseg::BinaryGrid;

/// Square (or cubic) noise grid of the given extent at 30% density.
pub fn fixture(ndim: usize, extent: usize) -> BinaryGrid {
    noise_grid(&vec![extent; ndim], 0.3, extent as u64).expect("bench extents are valid")
}
