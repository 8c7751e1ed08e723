//! SeqSLAM: local contrast enhancement plus a constant-velocity line search.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use super::{difference_matrix, DifferenceMatrix, MatchEntry, MatchReport, Metric, Polarity};
use crate::dataset::DescriptorSequence;
use crate::error::{argument, Result};

/// Contrast-enhanced entries with a local std below this become 0.
pub const CONTRAST_STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqSlamConfig {
    pub d_s: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub v_step: f64,
    /// Half-width of the contrast-enhancement window, in query frames.
    pub r_window: usize,
    pub metric: Metric,
}

impl Default for SeqSlamConfig {
    fn default() -> Self {
        Self {
            d_s: 10,
            v_min: 0.8,
            v_max: 1.2,
            v_step: 0.04,
            r_window: 10,
            metric: Metric::Cosine,
        }
    }
}

impl SeqSlamConfig {
    pub fn with_sequence_length(d_s: usize) -> Self {
        Self {
            d_s,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_s == 0 {
            return Err(argument("sequence length must be at least 1"));
        }
        if !(self.v_min > 0.0 && self.v_min <= self.v_max && self.v_step > 0.0) {
            return Err(argument(format!(
                "invalid velocity sweep {}..{} step {}",
                self.v_min, self.v_max, self.v_step
            )));
        }
        if self.r_window == 0 {
            return Err(argument("contrast window must be at least 1"));
        }
        Ok(())
    }

    /// Velocities `v_min + i·v_step` for every `i` that stays within `v_max`
    /// (with a small allowance for accumulated rounding).
    pub fn velocities(&self) -> Vec<f64> {
        let steps = ((self.v_max - self.v_min) / self.v_step + 1e-9).floor() as usize;
        (0..=steps)
            .map(|i| self.v_min + i as f64 * self.v_step)
            .collect()
    }
}

/// Standardizes every entry against the entries of its column in the rows
/// `q − r_window ..= q + r_window` (clamped to the matrix).
pub fn contrast_enhance(m: &DifferenceMatrix, r_window: usize) -> Result<DifferenceMatrix> {
    if r_window == 0 {
        return Err(argument("contrast window must be at least 1"));
    }
    let (rows, cols) = m.data.dim();
    let columns: Vec<Vec<f64>> = (0..cols)
        .into_par_iter()
        .map(|r| {
            let column: Vec<f64> = m.data.column(r).to_vec();
            (0..rows)
                .map(|q| {
                    let lo = q.saturating_sub(r_window);
                    let hi = (q + r_window).min(rows - 1);
                    let window = &column[lo..=hi];
                    let n = window.len() as f64;
                    let mean = window.iter().sum::<f64>() / n;
                    let var = window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    let std = var.sqrt();
                    if std < CONTRAST_STD_FLOOR {
                        0.0
                    } else {
                        (column[q] - mean) / std
                    }
                })
                .collect()
        })
        .collect();
    let mut data = Array2::zeros((rows, cols));
    for (r, column) in columns.into_iter().enumerate() {
        data.column_mut(r).assign(&ndarray::Array1::from(column));
    }
    Ok(DifferenceMatrix {
        data,
        metric: m.metric,
    })
}

/// Mean cost of the straight line ending at `(q, r)` with slope `v` reference
/// frames per query frame, over `len` query frames. Reference indices that
/// fall outside the matrix cost the maximum of their row.
pub fn trajectory_score(
    m: ArrayView2<'_, f64>,
    row_max: &[f64],
    q: usize,
    r: usize,
    v: f64,
    len: usize,
) -> f64 {
    let refs = m.ncols() as i64;
    let mut sum = 0.0;
    for k in 0..len {
        let row = q - k;
        let col = (r as f64 - v * k as f64).round() as i64;
        sum += if (0..refs).contains(&col) {
            m[[row, col as usize]]
        } else {
            row_max[row]
        };
    }
    sum / len as f64
}

/// Best-scoring line for every query frame. Queries earlier than `d_s − 1`
/// use the longest prefix available. Ties go to the lowest reference index.
pub fn seqslam_search(enhanced: &DifferenceMatrix, cfg: &SeqSlamConfig) -> Result<MatchReport> {
    cfg.validate()?;
    let (rows, cols) = enhanced.data.dim();
    if rows == 0 || cols == 0 {
        return Err(argument("empty difference matrix"));
    }
    if rows < cfg.d_s {
        return Err(argument(format!(
            "{rows} query frames is fewer than sequence length {}",
            cfg.d_s
        )));
    }
    let m = enhanced.data.view();
    let row_max: Vec<f64> = m
        .axis_iter(Axis(0))
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let velocities = cfg.velocities();
    let entries = (0..rows)
        .into_par_iter()
        .map(|q| {
            let len = cfg.d_s.min(q + 1);
            let mut best = MatchEntry {
                query: q,
                best_ref: 0,
                score: f64::INFINITY,
            };
            for r in 0..cols {
                for &v in &velocities {
                    let s = trajectory_score(m, &row_max, q, r, v, len);
                    if s < best.score {
                        best.best_ref = r;
                        best.score = s;
                    }
                }
            }
            best
        })
        .collect();
    Ok(MatchReport::new(entries, Polarity::LowerIsBetter))
}

/// Per-row minimum with lowest-index tie-breaking.
pub fn row_argmin(m: &DifferenceMatrix) -> MatchReport {
    let entries = m
        .data
        .axis_iter(Axis(0))
        .enumerate()
        .map(|(q, row)| {
            let (best_ref, score) =
                row.iter()
                    .enumerate()
                    .fold(
                        (0, f64::INFINITY),
                        |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
                    );
            MatchEntry {
                query: q,
                best_ref,
                score,
            }
        })
        .collect();
    MatchReport::new(entries, Polarity::LowerIsBetter)
}

/// Full SeqSLAM pipeline. Also returns the raw difference matrix.
pub fn seqslam_match(
    query: &DescriptorSequence,
    reference: &DescriptorSequence,
    cfg: &SeqSlamConfig,
) -> Result<(MatchReport, DifferenceMatrix)> {
    cfg.validate()?;
    let raw = difference_matrix(query, reference, cfg.metric)?;
    let enhanced = contrast_enhance(&raw, cfg.r_window)?;
    let report = seqslam_search(&enhanced, cfg)?;
    Ok((report, raw))
}
