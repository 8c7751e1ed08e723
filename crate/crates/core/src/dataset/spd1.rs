//! SPD1: a flat little-endian container for `T×n` float32 matrices.
//!
//! ```text
//! 0..4    magic "SPD1"
//! 4..8    T (u32 LE)
//! 8..12   n (u32 LE)
//! 12      flags, bit 0 = rows are L2-normalized
//! 13..16  zero padding
//! 16..    T·n f32 LE, row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use super::{first_non_unit_row, DescriptorSequence};
use crate::error::{argument, Error, Result};

pub const MAGIC: &[u8; 4] = b"SPD1";
pub const HEADER_LEN: usize = 16;
const FLAG_NORMALIZED: u8 = 1;

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Serializes a matrix. Rejects empty matrices and non-finite entries.
pub fn write_matrix<W: Write>(
    mut out: W,
    data: ArrayView2<'_, f32>,
    normalized: bool,
) -> Result<()> {
    let (rows, cols) = data.dim();
    if rows == 0 || cols == 0 {
        return Err(argument("SPD1 requires at least one row and one column"));
    }
    let rows32 = u32::try_from(rows).map_err(|_| argument("row count exceeds u32"))?;
    let cols32 = u32::try_from(cols).map_err(|_| argument("column count exceeds u32"))?;
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("SPD1 cannot store non-finite values".into()));
    }
    if normalized {
        if let Some(row) = first_non_unit_row(data) {
            return Err(Error::Data(format!(
                "row {row} is not unit-norm but the normalized flag is set"
            )));
        }
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + rows * cols * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&rows32.to_le_bytes());
    buf.extend_from_slice(&cols32.to_le_bytes());
    buf.push(if normalized { FLAG_NORMALIZED } else { 0 });
    buf.extend_from_slice(&[0; 3]);
    for v in data.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn write_matrix_file(
    path: impl AsRef<Path>,
    data: ArrayView2<'_, f32>,
    normalized: bool,
) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix(&mut buf, data, normalized)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parses an SPD1 byte buffer into the matrix and its normalized flag.
pub fn read_matrix(bytes: &[u8]) -> Result<(Array2<f32>, bool)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(format_err(0, "bad magic, expected \"SPD1\""));
    }
    if bytes.len() < HEADER_LEN {
        return Err(format_err(bytes.len(), "truncated header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let rows = word(4);
    let cols = word(8);
    if rows == 0 {
        return Err(format_err(4, "row count is zero"));
    }
    if cols == 0 {
        return Err(format_err(8, "column count is zero"));
    }
    let flags = bytes[12];
    if flags & !FLAG_NORMALIZED != 0 {
        return Err(format_err(12, format!("unknown flag bits {flags:#04x}")));
    }
    if let Some(i) = bytes[13..16].iter().position(|&b| b != 0) {
        return Err(format_err(13 + i, "nonzero header padding"));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err(4, "matrix size overflows"))?;
    if bytes.len() < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload, expected {expected} bytes"),
        ));
    }
    if bytes.len() > expected {
        return Err(format_err(expected, "trailing bytes after payload"));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(format_err(HEADER_LEN + 4 * i, "non-finite value"));
        }
        values.push(v);
    }
    let data =
        Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Internal(e.to_string()))?;
    let normalized = flags & FLAG_NORMALIZED != 0;
    if normalized {
        if let Some(row) = first_non_unit_row(data.view()) {
            return Err(format_err(
                HEADER_LEN + 4 * row * cols,
                format!("row {row} is not unit-norm but the normalized flag is set"),
            ));
        }
    }
    Ok((data, normalized))
}

pub fn load_descriptor_file(path: impl AsRef<Path>) -> Result<DescriptorSequence> {
    let bytes = fs::read(path)?;
    let (data, normalized) = read_matrix(&bytes)?;
    DescriptorSequence::new(data, normalized)
}

pub fn save_descriptor_file(seq: &DescriptorSequence, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_file(path, seq.data(), seq.is_normalized())
}
