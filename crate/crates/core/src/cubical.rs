//! Reference Euler characteristic by explicit cell counting.
//!
//! Every foreground cell contributes its closed unit square (or cube): the
//! cell itself plus all of its faces, edges and vertices. Shared faces are
//! counted once. Cells are addressed on the doubled lattice, where a k-cell
//! of the complex is a lattice point with exactly k odd coordinates.

use crate::grid::BinaryGrid;

/// Number of distinct k-cells in the closed cubical complex of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellCounts {
    pub n0: u64,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
}

impl CellCounts {
    pub fn euler(&self) -> i64 {
        self.n0 as i64 - self.n1 as i64 + self.n2 as i64 - self.n3 as i64
    }
}

pub fn cell_counts(grid: &BinaryGrid) -> CellCounts {
    let ndim = grid.ndim();
    // Treat 2D grids as a single slab so one code path covers both.
    let (h, w, d) = match *grid.dims() {
        [h, w] => (h, w, 1),
        [h, w, d] => (h, w, d),
        _ => unreachable!("grids are 2D or 3D"),
    };
    let (lh, lw) = (2 * h + 1, 2 * w + 1);
    let ld = if ndim == 2 { 1 } else { 2 * d + 1 };
    let mut present = vec![false; lh * lw * ld];
    let depth_span: &[usize] = if ndim == 2 { &[0] } else { &[0, 1, 2] };

    for n in grid.ones() {
        let (i, j, k) = (n / (w * d), (n / d) % w, n % d);
        for di in 0..3 {
            for dj in 0..3 {
                for &dk in depth_span {
                    let (a, b) = (2 * i + di, 2 * j + dj);
                    let c = if ndim == 2 { 0 } else { 2 * k + dk };
                    present[(a * lw + b) * ld + c] = true;
                }
            }
        }
    }

    let mut by_dim = [0u64; 4];
    for a in 0..lh {
        for b in 0..lw {
            let base = (a * lw + b) * ld;
            for c in 0..ld {
                if present[base + c] {
                    by_dim[(a & 1) + (b & 1) + (c & 1)] += 1;
                }
            }
        }
    }
    CellCounts { n0: by_dim[0], n1: by_dim[1], n2: by_dim[2], n3: by_dim[3] }
}

/// Euler characteristic as the alternating sum of the cell counts.
pub fn chi_exact(grid: &BinaryGrid) -> i64 {
    cell_counts(grid).euler()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixel() -> BinaryGrid {
        BinaryGrid::new(&[1, 1], true).unwrap()
    }

    pub(crate) fn ring() -> BinaryGrid {
        BinaryGrid::from_fn(&[3, 3], |c| c != [1, 1]).unwrap()
    }

    #[test]
    fn single_pixel() {
        let c = cell_counts(&pixel());
        assert_eq!(c, CellCounts { n0: 4, n1: 4, n2: 1, n3: 0 });
        assert_eq!(chi_exact(&pixel()), 1);
    }

    #[test]
    fn empty() {
        let g = BinaryGrid::new(&[4, 5, 2], false).unwrap();
        assert_eq!(cell_counts(&g), CellCounts::default());
    }

    #[test]
    fn solid_cube_matches_lattice_formula() {
        let n = 3u64;
        let g = BinaryGrid::new(&[3, 3, 3], true).unwrap();
        let expected =
            CellCounts { n0: (n + 1).pow(3), n1: 3 * n * (n + 1).pow(2), n2: 3 * n * n * (n + 1), n3: n.pow(3) };
        assert_eq!(expected, CellCounts { n0: 64, n1: 144, n2: 108, n3: 27 });
        assert_eq!(cell_counts(&g), expected);
    }

    #[test]
    fn ring_and_shell() {
        let c = cell_counts(&ring());
        assert_eq!((c.n0, c.n1, c.n2), (16, 24, 8));
        assert_eq!(chi_exact(&ring()), 0);
        let shell = BinaryGrid::from_fn(&[3, 3, 3], |c| c != [1, 1, 1]).unwrap();
        assert_eq!(chi_exact(&shell), 2);
    }

    #[test]
    fn padding_and_disjoint_union() {
        let r = ring();
        assert_eq!(chi_exact(&r.pad_background(3)), chi_exact(&r));
        // ring at the left, a lone pixel far to the right
        let g = BinaryGrid::from_fn(&[3, 9], |c| (c[1] < 3 && [c[0], c[1]] != [1, 1]) || c == [1, 7]).unwrap();
        assert_eq!(chi_exact(&g), chi_exact(&r) + chi_exact(&pixel()));
    }
}
