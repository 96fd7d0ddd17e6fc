//! Exact Euler characteristics, Betti numbers and topology-violation maps
//! for binary 2D and 3D segmentation grids.
//!
//! The fast path counts 2×2 bit-quads (2D) or 2×2×2 bit-octets (3D) over
//! the background-padded grid and applies per-pattern integer weights. An
//! explicit cubical-complex cell count ([`cubical::chi_exact`]) serves as
//! the reference every fast path is checked against.

pub mod calibration;
pub mod chimap;
pub mod cubical;
pub mod error;
pub mod grid;
pub mod homology;
pub mod io;
pub mod octet;
pub mod pattern;
pub mod perf;
pub mod report;
pub mod rng;
pub mod tvd;

pub use chimap::{chi_map, ChiMap, ChiMapMode, DEFAULT_PATCH};
pub use cubical::{cell_counts, chi_exact, CellCounts};
pub use error::{Error, Result};
pub use grid::{BinaryGrid, Connectivity};
pub use homology::{betti, betti_2d, betti_3d, betti_error, component_count, dice, BettiError, BettiVector};
pub use octet::{enumerate_classes, CoefficientVector, OctetClassTable};
pub use pattern::{chi, chi_gray, chi_octet, flip_delta_chi, octet_histogram, quad_histogram, PatternHistogram};
pub use tvd::{chi_error, noise_mask, sample_threshold, threshold_mask, violation_map, MaskedGrid, ViolationMap};
