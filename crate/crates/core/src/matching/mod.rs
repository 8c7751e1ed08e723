//! Pairwise difference matrices and the two heuristic baselines.

mod delta;
mod report;
mod seqslam;

use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::dataset::DescriptorSequence;
use crate::error::{argument, Error, Result};

pub use delta::{delta_match, delta_match_with_matrix};
pub use report::{read_match_csv, write_match_csv, MatchEntry, MatchReport, Polarity};
pub use seqslam::{
    contrast_enhance, row_argmin, seqslam_match, seqslam_search, trajectory_score, SeqSlamConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Cosine,
    Euclidean,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "euclidean" => Ok(Self::Euclidean),
            other => Err(argument(format!("unknown metric {other:?}"))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cosine => "cosine",
            Self::Euclidean => "euclidean",
        })
    }
}

/// `Q×R` distances: rows are query frames, columns reference frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMatrix {
    pub data: Array2<f64>,
    pub metric: Metric,
}

impl DifferenceMatrix {
    pub fn queries(&self) -> usize {
        self.data.nrows()
    }

    pub fn references(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }
}

/// Distance between every query row and every reference row.
///
/// Cosine distance is `1 − a·b / (‖a‖‖b‖)`, clamped to `[0, 2]`, with any
/// pair involving a zero vector assigned 1.
pub fn difference_matrix(
    query: &DescriptorSequence,
    reference: &DescriptorSequence,
    metric: Metric,
) -> Result<DifferenceMatrix> {
    if query.dim() != reference.dim() {
        return Err(argument(format!(
            "descriptor dimensions differ: query {} vs reference {}",
            query.dim(),
            reference.dim()
        )));
    }
    let q = query.to_f64();
    let r = reference.to_f64();
    Ok(DifferenceMatrix {
        data: distances(q.view(), r.view(), metric),
        metric,
    })
}

pub(crate) fn distances(
    q: ArrayView2<'_, f64>,
    r: ArrayView2<'_, f64>,
    metric: Metric,
) -> Array2<f64> {
    let sq_norm = |m: ArrayView2<'_, f64>| -> Array1<f64> {
        m.axis_iter(Axis(0)).map(|row| row.dot(&row)).collect()
    };
    let qn = sq_norm(q);
    let rn = sq_norm(r);
    let mut out = q.dot(&r.t());
    match metric {
        Metric::Cosine => {
            Zip::indexed(&mut out).for_each(|(i, j), v| {
                let denom = (qn[i] * rn[j]).sqrt();
                *v = if denom > 0.0 {
                    (1.0 - *v / denom).clamp(0.0, 2.0)
                } else {
                    1.0
                };
            });
        }
        Metric::Euclidean => {
            Zip::indexed(&mut out).for_each(|(i, j), v| {
                *v = (qn[i] + rn[j] - 2.0 * *v).max(0.0).sqrt();
            });
        }
    }
    out
}
