//! Plain-text positions: one `x,y` line per frame.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub fn read_positions(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut fields = line.split(',');
        let (Some(x), Some(y), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(
                i + 1,
                format!("expected two comma-separated fields, got {line:?}"),
            ));
        };
        for field in [x, y] {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(i + 1, "non-finite coordinate".into()));
            }
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(parse_err(1, "no positions".into()));
    }
    Ok(Array2::from_shape_vec((values.len() / 2, 2), values).expect("two values per line"))
}

pub fn write_positions(path: impl AsRef<Path>, positions: ArrayView2<'_, f64>) -> Result<()> {
    let mut out = String::with_capacity(positions.nrows() * 24);
    for row in positions.axis_iter(Axis(0)) {
        writeln!(out, "{},{}", row[0], row[1]).expect("writing to a String");
    }
    fs::write(path, out)?;
    Ok(())
}
