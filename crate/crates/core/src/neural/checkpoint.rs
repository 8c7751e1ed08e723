//! SPM1 model checkpoints.
//!
//! ```text
//! 0..4    magic "SPM1"
//! 4..20   m, H, N, d_s (u32 LE each)
//! 20..    parameters as f32 LE: W_i{i,f,g,o}, W_h{i,f,g,o}, b_{i,f,g,o},
//!         head weight (N×H, row-major), head bias
//! ```
//!
//! Parameters are trained in f64 and stored as f32, so loading returns the
//! f32-rounded model; a loaded model saves back to identical bytes.

use std::fs;
use std::path::Path;

use super::SequenceModel;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SPM1";
pub const HEADER_LEN: usize = 20;

pub fn encode_checkpoint(model: &SequenceModel) -> Result<Vec<u8>> {
    let dims = [
        model.input_dim(),
        model.hidden_dim(),
        model.classes(),
        model.d_s,
    ];
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * model.param_count());
    buf.extend_from_slice(MAGIC);
    for d in dims {
        let d =
            u32::try_from(d).map_err(|_| Error::Argument(format!("dimension {d} exceeds u32")))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for tensor in model.param_slices() {
        for &v in tensor {
            let v = v as f32;
            if !v.is_finite() {
                return Err(Error::Data(
                    "cannot checkpoint a non-finite parameter".into(),
                ));
            }
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<SequenceModel> {
    let format_err = |offset: usize, message: &str| Error::Format {
        offset: offset as u64,
        message: message.to_string(),
    };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(format_err(0, "bad magic, expected \"SPM1\""));
    }
    if bytes.len() < HEADER_LEN {
        return Err(format_err(bytes.len(), "truncated header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (m, hidden, classes, d_s) = (word(4), word(8), word(12), word(16));
    if m < 3 {
        return Err(format_err(
            4,
            "input dimension must be at least 3 (descriptor + 2-d position)",
        ));
    }
    for (at, v) in [(8, hidden), (12, classes), (16, d_s)] {
        if v == 0 {
            return Err(format_err(at, "dimension is zero"));
        }
    }
    let mut model = SequenceModel::zeros(m - 2, hidden, classes, d_s);
    let expected = HEADER_LEN + 4 * model.param_count();
    if bytes.len() < expected {
        return Err(format_err(bytes.len(), "truncated parameters"));
    }
    if bytes.len() > expected {
        return Err(format_err(expected, "trailing bytes after parameters"));
    }
    let mut offset = HEADER_LEN;
    for tensor in model.param_slices_mut() {
        for v in tensor.iter_mut() {
            let x = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            if !x.is_finite() {
                return Err(format_err(offset, "non-finite parameter"));
            }
            *v = f64::from(x);
            offset += 4;
        }
    }
    Ok(model)
}

pub fn save_checkpoint(model: &SequenceModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(model)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SequenceModel> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_order() {
        let mut model = SequenceModel::zeros(2, 1, 2, 3);
        model.lstm.w_input[[0, 0]] = 1.5;
        model.head.bias[1] = -2.0;
        let bytes = encode_checkpoint(&model).unwrap();
        assert_eq!(&bytes[..4], b"SPM1");
        assert_eq!(&bytes[4..8], &4u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &3u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &1.5f32.to_le_bytes());
        assert_eq!(&bytes[bytes.len() - 4..], &(-2.0f32).to_le_bytes());
        // 4H×m + 4H×H + 4H + N×H + N
        assert_eq!(bytes.len(), 20 + 4 * (16 + 4 + 4 + 2 + 2));
        assert_eq!(decode_checkpoint(&bytes).unwrap(), model);
    }

    #[test]
    fn loaded_model_saves_identically() {
        let model = SequenceModel::init(5, 4, 6, 2, 42);
        let bytes = encode_checkpoint(&model).unwrap();
        let again = encode_checkpoint(&decode_checkpoint(&bytes).unwrap()).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn corrupt_files() {
        let bytes = encode_checkpoint(&SequenceModel::zeros(2, 2, 2, 1)).unwrap();
        assert!(matches!(
            decode_checkpoint(b"SPD1...."),
            Err(Error::Format { offset: 0, .. })
        ));
        assert!(matches!(
            decode_checkpoint(&bytes[..bytes.len() - 1]),
            Err(Error::Format { .. })
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            decode_checkpoint(&extra),
            Err(Error::Format { .. })
        ));
    }
}
