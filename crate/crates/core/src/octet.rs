//! Symmetry classes of 2×2×2 window patterns and the per-class weights
//! that turn pattern counts into an Euler characteristic.
//!
//! A window cell at offset `(x, y, z)` has row-major rank `r = 4x + 2y + z`
//! and occupies bit `7 - r` of the pattern code, so the code reads the
//! window cells left to right as a binary number.

use std::sync::OnceLock;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub const OCTET_CODES: usize = 256;
pub const OCTET_CLASSES: usize = 22;

#[inline]
pub(crate) fn octet_bit(x: usize, y: usize, z: usize) -> u32 {
    7 - (4 * x + 2 * y + z) as u32
}

/// The 48 rigid symmetries of the cube (axis permutations combined with
/// axis reflections), each given as a permutation of the 8 code bits.
pub fn cube_symmetries() -> Vec<[u32; 8]> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(48);
    for perm in PERMS {
        for flips in 0..8usize {
            let mut map = [0u32; 8];
            for x in 0..2 {
                for y in 0..2 {
                    for z in 0..2 {
                        let src = [x, y, z];
                        let mut dst = [0usize; 3];
                        for axis in 0..3 {
                            dst[axis] = src[perm[axis]] ^ ((flips >> axis) & 1);
                        }
                        map[octet_bit(x, y, z) as usize] = octet_bit(dst[0], dst[1], dst[2]);
                    }
                }
            }
            out.push(map);
        }
    }
    out
}

pub fn apply_symmetry(map: &[u32; 8], code: u8) -> u8 {
    let mut out = 0u8;
    for (bit, &target) in map.iter().enumerate() {
        if code >> bit & 1 == 1 {
            out |= 1 << target;
        }
    }
    out
}

/// Partition of the 256 octet codes into orbits of the cube symmetry group.
///
/// Class ids are assigned in increasing order of each orbit's smallest code,
/// so id 0 is the empty pattern and id 21 the full one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OctetClassTable {
    pub class_of: [u8; OCTET_CODES],
    pub representative: Vec<u8>,
    pub orbit_size: Vec<usize>,
}

impl OctetClassTable {
    /// Shared instance; construction is deterministic.
    pub fn get() -> &'static OctetClassTable {
        static TABLE: OnceLock<OctetClassTable> = OnceLock::new();
        TABLE.get_or_init(enumerate_classes)
    }

    pub fn len(&self) -> usize {
        self.representative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representative.is_empty()
    }

    /// Groups a 256-entry code histogram into per-class totals.
    pub fn group_counts(&self, code_counts: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; self.len()];
        for (code, &n) in code_counts.iter().enumerate() {
            out[self.class_of[code] as usize] += n;
        }
        out
    }
}

pub fn enumerate_classes() -> OctetClassTable {
    let syms = cube_symmetries();
    let mut canonical = [0u8; OCTET_CODES];
    for (code, slot) in canonical.iter_mut().enumerate() {
        *slot = syms.iter().map(|m| apply_symmetry(m, code as u8)).min().expect("symmetry group is nonempty");
    }
    let mut representative: Vec<u8> = canonical.to_vec();
    representative.sort_unstable();
    representative.dedup();

    let mut class_of = [0u8; OCTET_CODES];
    let mut orbit_size = vec![0usize; representative.len()];
    for code in 0..OCTET_CODES {
        let id = representative.binary_search(&canonical[code]).expect("every canonical code is a representative");
        class_of[code] = id as u8;
        orbit_size[id] += 1;
    }
    OctetClassTable { class_of, representative, orbit_size }
}

/// Weight of each octet symmetry class, as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientVector {
    pub weights: Vec<Ratio<i64>>,
}

impl CoefficientVector {
    pub fn new(weights: Vec<Ratio<i64>>) -> Result<Self> {
        if weights.len() != OCTET_CLASSES {
            return Err(Error::InvalidParameter(format!(
                "coefficient vector needs {OCTET_CLASSES} entries, got {}",
                weights.len()
            )));
        }
        Ok(Self { weights })
    }

    pub fn zeros() -> Self {
        Self { weights: vec![Ratio::zero(); OCTET_CLASSES] }
    }

    /// Weights obtained by splitting every cell of the closed cube complex
    /// evenly among the windows that contain it: a lattice vertex belongs to
    /// one window, an edge to two, a face to four and a voxel to eight.
    /// This construction is independent of any sampled calibration.
    pub fn from_cell_shares() -> Self {
        let table = OctetClassTable::get();
        let weights = table.representative.iter().map(|&code| Ratio::new(share_weight_x8(code), 8)).collect();
        Self { weights }
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|w| !w.is_zero()).count()
    }

    /// Least common multiple of the weight denominators and `base`.
    pub fn common_scale(&self, base: i64) -> i64 {
        self.weights.iter().fold(base, |acc, w| acc.lcm(w.denom()))
    }

    /// Per-code integer weights scaled by `scale`, which must be a multiple
    /// of every denominator.
    pub fn per_code_scaled(&self, scale: i64) -> [i64; OCTET_CODES] {
        let table = OctetClassTable::get();
        let mut out = [0i64; OCTET_CODES];
        for (code, slot) in out.iter_mut().enumerate() {
            let w = self.weights[table.class_of[code] as usize];
            *slot = w.numer() * (scale / w.denom());
        }
        out
    }

    /// Weights rendered as reduced `p/q` strings.
    pub fn as_fraction_strings(&self) -> Vec<String> {
        self.weights.iter().map(fraction_string).collect()
    }

    pub fn max_abs(&self) -> Ratio<i64> {
        self.weights.iter().map(|w| w.abs()).max().unwrap_or_else(Ratio::zero)
    }
}

pub fn fraction_string(r: &Ratio<i64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `8 ·` the Euler contribution of one window under the cell-share rule.
pub(crate) fn share_weight_x8(code: u8) -> i64 {
    if code == 0 {
        return 0;
    }
    let set = |x: usize, y: usize, z: usize| code >> octet_bit(x, y, z) & 1 == 1;
    let voxels = code.count_ones() as i64;
    // half-edges through the centre vertex: one per (axis, side)
    let mut halves = 0;
    for axis in 0..3 {
        for side in 0..2 {
            let mut any = false;
            for p in 0..2 {
                for q in 0..2 {
                    let c = match axis {
                        0 => (side, p, q),
                        1 => (p, side, q),
                        _ => (p, q, side),
                    };
                    any |= set(c.0, c.1, c.2);
                }
            }
            halves += any as i64;
        }
    }
    // quarter-faces through the centre vertex: one per face-adjacent voxel pair
    let mut pairs = 0;
    for axis in 0..3 {
        for p in 0..2 {
            for q in 0..2 {
                let (a, b) = match axis {
                    0 => ((0, p, q), (1, p, q)),
                    1 => ((p, 0, q), (p, 1, q)),
                    _ => ((p, q, 0), (p, q, 1)),
                };
                pairs += (set(a.0, a.1, a.2) || set(b.0, b.1, b.2)) as i64;
            }
        }
    }
    8 - 4 * halves + 2 * pairs - voxels
}
