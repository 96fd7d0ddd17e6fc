//! File codecs: binary PGM for 2D masks and the BVOL container for volumes
//! and signed or floating-point maps.
//!
//! BVOL layout (all integers little-endian):
//!
//! | offset | size       | field                                        |
//! |--------|------------|----------------------------------------------|
//! | 0      | 4          | magic `BVL1`                                 |
//! | 4      | 1          | dtype: 0 = u8 binary, 1 = i32, 2 = f32, 3 = f64 |
//! | 5      | 1          | ndim (2 or 3)                                |
//! | 6      | 2          | reserved, zero                               |
//! | 8      | 4 · ndim   | extents as u32, `(h, w[, d])`                |
//! | …      | n · size   | payload, row-major, last index fastest       |

use crate::error::{Error, Result};
use crate::grid::BinaryGrid;

/// Grey level at or above which a PGM pixel counts as foreground.
pub const PGM_FOREGROUND_LEVEL: u8 = 128;
/// Probability at or above which a floating-point cell counts as foreground.
pub const PROBABILITY_CUTOFF: f64 = 0.5;

const BVOL_MAGIC: &[u8; 4] = b"BVL1";

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_header_number(bytes: &[u8], pos: &mut usize, field: &'static str) -> Result<usize> {
    *pos = skip_whitespace_and_comments(bytes, *pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format(field, start, "expected a decimal number"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(field, start, "number out of range"))
}

/// Decodes a binary (`P5`) PGM, thresholding pixels at
/// [`PGM_FOREGROUND_LEVEL`].
pub fn read_pgm(bytes: &[u8]) -> Result<BinaryGrid> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format("magic", 0, "expected P5"));
    }
    let mut pos = 2;
    let width = read_header_number(bytes, &mut pos, "width")?;
    let height = read_header_number(bytes, &mut pos, "height")?;
    let maxval_at = skip_whitespace_and_comments(bytes, pos);
    let maxval = read_header_number(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format("maxval", maxval_at, format!("maxval {maxval} not in 1..=255")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format("header", pos, "missing whitespace before pixel data"));
    }
    pos += 1;
    let need = width.checked_mul(height).ok_or_else(|| Error::format("width", 2, "image too large"))?;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(Error::format(
            "payload",
            bytes.len(),
            format!("truncated: {} of {need} pixel bytes", payload.len()),
        ));
    }
    let cells: Vec<u8> = payload[..need].iter().map(|&v| (v >= PGM_FOREGROUND_LEVEL) as u8).collect();
    BinaryGrid::from_cells(&[height, width], &cells).map_err(|e| Error::format("dims", 2, e.to_string()))
}

/// Encodes a 2D grid as `P5` with foreground stored as 255.
pub fn write_pgm(grid: &BinaryGrid) -> Result<Vec<u8>> {
    grid.require_ndim(2)?;
    let levels: Vec<u8> = grid.to_cells().into_iter().map(|v| v * 255).collect();
    Ok(encode_pgm(grid.dims()[0], grid.dims()[1], &levels))
}

/// Encodes raw 8-bit grey levels as `P5`.
pub fn encode_pgm(height: usize, width: usize, levels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(levels);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum BvolPayload {
    U8(Vec<u8>),
    I32(Vec<i32>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl BvolPayload {
    pub fn dtype(&self) -> u8 {
        match self {
            BvolPayload::U8(_) => 0,
            BvolPayload::I32(_) => 1,
            BvolPayload::F32(_) => 2,
            BvolPayload::F64(_) => 3,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            BvolPayload::U8(v) => v.len(),
            BvolPayload::I32(v) => v.len(),
            BvolPayload::F32(v) => v.len(),
            BvolPayload::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn dtype_size(dtype: u8) -> Option<usize> {
    match dtype {
        0 => Some(1),
        1 | 2 => Some(4),
        3 => Some(8),
        _ => None,
    }
}

/// Decoded BVOL container.
#[derive(Debug, Clone, PartialEq)]
pub struct Bvol {
    pub dims: Vec<usize>,
    pub payload: BvolPayload,
}

impl Bvol {
    pub fn new(dims: Vec<usize>, payload: BvolPayload) -> Result<Self> {
        if dims.len() != 2 && dims.len() != 3 {
            return Err(Error::InvalidDimensions(format!("BVOL holds 2 or 3 extents, got {}", dims.len())));
        }
        if dims.iter().any(|&d| d == 0 || d > u32::MAX as usize) {
            return Err(Error::InvalidDimensions(format!("BVOL extents {dims:?} out of range")));
        }
        if dims.iter().product::<usize>() != payload.len() {
            return Err(Error::InvalidDimensions(format!("{} payload values for extents {dims:?}", payload.len())));
        }
        Ok(Self { dims, payload })
    }

    pub fn from_grid(grid: &BinaryGrid) -> Self {
        Self { dims: grid.dims().to_vec(), payload: BvolPayload::U8(grid.to_cells()) }
    }

    /// Interprets the container as a binary grid: u8 payloads directly,
    /// floating payloads as probabilities cut at [`PROBABILITY_CUTOFF`].
    pub fn to_grid(&self) -> Result<BinaryGrid> {
        let cells: Vec<u8> = match &self.payload {
            BvolPayload::U8(v) => v.clone(),
            BvolPayload::F32(v) => return BinaryGrid::from_probabilities(&self.dims, v),
            BvolPayload::F64(v) => v.iter().map(|&p| (p >= PROBABILITY_CUTOFF) as u8).collect(),
            BvolPayload::I32(_) => {
                return Err(Error::format("dtype", 4, "i32 payload is a map, not a grid"));
            }
        };
        BinaryGrid::from_cells(&self.dims, &cells)
    }
}

pub fn read_bvol(bytes: &[u8]) -> Result<Bvol> {
    if bytes.len() < 8 {
        return Err(Error::format("header", bytes.len(), "shorter than the 8-byte header"));
    }
    if &bytes[..4] != BVOL_MAGIC {
        return Err(Error::format("magic", 0, format!("expected BVL1, found {:?}", &bytes[..4])));
    }
    let dtype = bytes[4];
    let size = dtype_size(dtype).ok_or_else(|| Error::format("dtype", 4, format!("unknown dtype {dtype}")))?;
    let ndim = bytes[5] as usize;
    if ndim != 2 && ndim != 3 {
        return Err(Error::format("ndim", 5, format!("ndim {ndim} not 2 or 3")));
    }
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(Error::format("reserved", 6, "reserved bytes must be zero"));
    }
    let dims_end = 8 + 4 * ndim;
    if bytes.len() < dims_end {
        return Err(Error::format("dims", bytes.len(), "truncated extents"));
    }
    let dims: Vec<usize> =
        bytes[8..dims_end].chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize).collect();
    if let Some(axis) = dims.iter().position(|&d| d == 0) {
        return Err(Error::format("dims", 8 + 4 * axis, "zero extent"));
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::format("dims", 8, "extents overflow"))?;
    let body = &bytes[dims_end..];
    if Some(body.len()) != count.checked_mul(size) {
        return Err(Error::format(
            "payload",
            dims_end,
            format!("expected {count} values of {size} bytes, found {} bytes", body.len()),
        ));
    }
    let payload = match dtype {
        0 => {
            if let Some(k) = body.iter().position(|&b| b > 1) {
                return Err(Error::format("payload", dims_end + k, format!("binary payload byte {}", body[k])));
            }
            BvolPayload::U8(body.to_vec())
        }
        1 => BvolPayload::I32(body.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect()),
        2 => BvolPayload::F32(body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect()),
        _ => BvolPayload::F64(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()),
    };
    Ok(Bvol { dims, payload })
}

pub fn write_bvol(vol: &Bvol) -> Vec<u8> {
    let size = dtype_size(vol.payload.dtype()).unwrap();
    let mut out = Vec::with_capacity(8 + 4 * vol.dims.len() + vol.payload.len() * size);
    out.extend_from_slice(BVOL_MAGIC);
    out.push(vol.payload.dtype());
    out.push(vol.dims.len() as u8);
    out.extend_from_slice(&[0, 0]);
    for &d in &vol.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    match &vol.payload {
        BvolPayload::U8(v) => out.extend_from_slice(v),
        BvolPayload::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        BvolPayload::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        BvolPayload::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

/// Converts scaled 64-bit map values to the i32 payload, failing on overflow.
pub fn i32_payload(values: impl IntoIterator<Item = i64>) -> Result<BvolPayload> {
    values
        .into_iter()
        .map(|v| i32::try_from(v).map_err(|_| Error::InvalidParameter(format!("map value {v} exceeds i32"))))
        .collect::<Result<Vec<i32>>>()
        .map(BvolPayload::I32)
}

/// 8-bit raster of a nonnegative map scaled so the maximum is 255.
pub fn max_normalized_levels(values: &[u64]) -> Vec<u8> {
    let max = values.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0; values.len()];
    }
    values.iter().map(|&v| ((v as u128 * 255 + max as u128 / 2) / max as u128) as u8).collect()
}
