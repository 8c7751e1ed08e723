//! Traversals, position normalization, training windows and file formats.

mod positions;
mod spd1;

use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{argument, Error, Result};

pub use positions::{read_positions, write_positions};
pub use spd1::{
    load_descriptor_file, read_matrix, save_descriptor_file, write_matrix, write_matrix_file,
    HEADER_LEN, MAGIC,
};

/// Tolerance on row norms for sequences flagged as L2-normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

/// Per-frame global descriptors, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSequence {
    data: Array2<f32>,
    normalized: bool,
}

impl DescriptorSequence {
    /// Wraps a `T×n` matrix, checking that every entry is finite and, when
    /// `normalized` is set, that every row has unit Euclidean norm.
    pub fn new(data: Array2<f32>, normalized: bool) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(argument("descriptor dimension must be positive"));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite descriptor entry at row {}, column {}",
                pos / data.ncols(),
                pos % data.ncols()
            )));
        }
        if normalized {
            if let Some(row) = first_non_unit_row(data.view()) {
                return Err(Error::Data(format!(
                    "row {row} is flagged normalized but its norm is not 1"
                )));
            }
        }
        Ok(Self { data, normalized })
    }

    pub fn from_rows(rows: &[Vec<f32>], normalized: bool) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(argument("descriptor rows have unequal lengths"));
        }
        let flat: Vec<f32> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), n), flat)
            .map_err(|e| Error::Internal(e.to_string()))?;
        Self::new(data, normalized)
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> ArrayView2<'_, f32> {
        self.data.view()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f32> {
        self.data.row(t)
    }

    pub fn into_inner(self) -> Array2<f32> {
        self.data
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.data.mapv(f64::from)
    }
}

pub(crate) fn first_non_unit_row(data: ArrayView2<'_, f32>) -> Option<usize> {
    data.axis_iter(Axis(0)).position(|row| {
        let norm = row
            .iter()
            .map(|&v| f64::from(v).powi(2))
            .sum::<f64>()
            .sqrt();
        (norm - 1.0).abs() > UNIT_NORM_TOLERANCE
    })
}

/// Planar per-frame positions, `T×2`, normalized to `[-1, 1]` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionTrack {
    data: Array2<f64>,
}

impl PositionTrack {
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn data(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn row(&self, t: usize) -> [f64; 2] {
        [self.data[[t, 0]], self.data[[t, 1]]]
    }
}

/// Per-axis affine map onto `[-1, 1]`, fitted on one traversal and
/// reusable on another so both share a coordinate frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionNormalizer {
    min: [f64; 2],
    max: [f64; 2],
}

impl PositionNormalizer {
    pub fn fit(raw: ArrayView2<'_, f64>) -> Result<Self> {
        check_raw_positions(raw)?;
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for row in raw.axis_iter(Axis(0)) {
            for axis in 0..2 {
                min[axis] = min[axis].min(row[axis]);
                max[axis] = max[axis].max(row[axis]);
            }
        }
        Ok(Self { min, max })
    }

    /// Maps `raw` into the fitted frame. Values outside the fitted extent are
    /// clamped to `[-1, 1]`; a zero-range axis maps to 0.
    pub fn apply(&self, raw: ArrayView2<'_, f64>) -> Result<PositionTrack> {
        check_raw_positions(raw)?;
        let mut data = Array2::zeros(raw.raw_dim());
        for (t, row) in raw.axis_iter(Axis(0)).enumerate() {
            for axis in 0..2 {
                let range = self.max[axis] - self.min[axis];
                data[[t, axis]] = if range > 0.0 {
                    (2.0 * (row[axis] - self.min[axis]) / range - 1.0).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
            }
        }
        Ok(PositionTrack { data })
    }
}

fn check_raw_positions(raw: ArrayView2<'_, f64>) -> Result<()> {
    if raw.ncols() != 2 {
        return Err(argument(format!(
            "positions must have 2 columns, got {}",
            raw.ncols()
        )));
    }
    if raw.nrows() == 0 {
        return Err(argument("positions must have at least one frame"));
    }
    if let Some(pos) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite position at frame {}",
            pos / 2
        )));
    }
    Ok(())
}

/// Normalizes each axis of `raw` to `[-1, 1]` with
/// `x ↦ 2(x − min)/(max − min) − 1`.
pub fn normalize_positions(raw: ArrayView2<'_, f64>) -> Result<PositionTrack> {
    PositionNormalizer::fit(raw)?.apply(raw)
}

/// One pass through a route: descriptors paired with positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Traversal {
    pub name: String,
    descriptors: DescriptorSequence,
    positions: PositionTrack,
}

impl Traversal {
    pub fn new(
        name: impl Into<String>,
        descriptors: DescriptorSequence,
        positions: PositionTrack,
    ) -> Result<Self> {
        if descriptors.is_empty() {
            return Err(argument("a traversal needs at least one frame"));
        }
        if descriptors.len() != positions.len() {
            return Err(argument(format!(
                "descriptor rows ({}) and position rows ({}) differ",
                descriptors.len(),
                positions.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            descriptors,
            positions,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.descriptors.len()
    }

    pub fn descriptors(&self) -> &DescriptorSequence {
        &self.descriptors
    }

    pub fn positions(&self) -> &PositionTrack {
        &self.positions
    }

    /// Replaces the descriptors, keeping positions and name.
    pub fn with_descriptors(&self, descriptors: DescriptorSequence) -> Result<Self> {
        Self::new(self.name.clone(), descriptors, self.positions.clone())
    }
}

/// Loads `<stem>.spd1` and `<stem>.pos` from `dir`, mapping positions
/// through `normalizer`.
pub fn load_traversal(
    dir: &Path,
    stem: &str,
    normalizer: &PositionNormalizer,
) -> Result<Traversal> {
    let descriptors = load_descriptor_file(dir.join(format!("{stem}.spd1")))?;
    let raw = read_positions(dir.join(format!("{stem}.pos")))?;
    Traversal::new(stem, descriptors, normalizer.apply(raw.view())?)
}

/// Loads the `reference` and `query` traversals of a dataset directory.
/// Both are normalized in the reference traversal's coordinate frame.
pub fn load_pair(dir: impl AsRef<Path>) -> Result<(Traversal, Traversal)> {
    let dir = dir.as_ref();
    let normalizer = PositionNormalizer::fit(read_positions(dir.join("reference.pos"))?.view())?;
    let reference = load_traversal(dir, "reference", &normalizer)?;
    let query = load_traversal(dir, "query", &normalizer)?;
    Ok((reference, query))
}

/// A run of `len` consecutive frames labelled with the place of its last frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceWindow {
    pub start: usize,
    pub len: usize,
    pub label: usize,
}

/// Stride-1 overlapping windows of `d_s` frames over `frame_count` frames.
pub fn windows_over(frame_count: usize, d_s: usize) -> Result<Vec<SequenceWindow>> {
    if d_s == 0 {
        return Err(argument("sequence length must be at least 1"));
    }
    if d_s > frame_count {
        return Err(argument(format!(
            "sequence length {d_s} exceeds frame count {frame_count}"
        )));
    }
    Ok((0..=frame_count - d_s)
        .map(|start| SequenceWindow {
            start,
            len: d_s,
            label: start + d_s - 1,
        })
        .collect())
}

pub fn make_windows(traversal: &Traversal, d_s: usize) -> Result<Vec<SequenceWindow>> {
    windows_over(traversal.frame_count(), d_s)
}
