use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::is_correct;
use crate::error::{Error, Result};
use crate::matching::{MatchReport, Polarity};

/// Ground-truth reference frame for each query frame.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum GroundTruth {
    /// Query frame `q` corresponds to reference frame `q`.
    #[default]
    Identity,
    /// Explicit pairs; queries without an entry are left out of evaluation.
    Pairs(HashMap<usize, usize>),
}

impl GroundTruth {
    pub fn reference_for(&self, query: usize) -> Option<usize> {
        match self {
            Self::Identity => Some(query),
            Self::Pairs(map) => map.get(&query).copied(),
        }
    }
}

/// Reads `query_index,reference_index` lines.
pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(q, r)| Some((q.trim().parse().ok()?, r.trim().parse().ok()?)));
        let Some((q, r)) = parsed else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected \"query_index,reference_index\", got {line:?}"),
            });
        };
        map.insert(q, r);
    }
    Ok(GroundTruth::Pairs(map))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// From strictest to loosest threshold. The first point retrieves
    /// nothing (precision 1, recall 0).
    pub points: Vec<PrPoint>,
    /// Trapezoidal area under precision as a function of recall.
    pub auc: f64,
}

impl PrCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,precision,recall\n");
        for p in &self.points {
            writeln!(out, "{},{},{}", p.threshold, p.precision, p.recall)
                .expect("writing to a String");
        }
        out
    }
}

pub fn pr_curve(report: &MatchReport, delta: usize) -> PrCurve {
    pr_curve_with_truth(report, delta, &GroundTruth::Identity)
}

/// Sweeps an acceptance threshold over every distinct score. At each
/// threshold, precision is correct/accepted (1 when nothing is accepted) and
/// recall is correct/evaluated queries.
pub fn pr_curve_with_truth(report: &MatchReport, delta: usize, truth: &GroundTruth) -> PrCurve {
    let mut scored: Vec<(f64, bool)> = report
        .entries
        .iter()
        .filter_map(|e| {
            truth
                .reference_for(e.query)
                .map(|t| (e.score, is_correct(e.best_ref, t, delta)))
        })
        .collect();
    let polarity = report.polarity;
    scored.sort_by(|a, b| match polarity {
        Polarity::LowerIsBetter => a.0.total_cmp(&b.0),
        Polarity::HigherIsBetter => b.0.total_cmp(&a.0),
    });
    let total = scored.len();
    let strictest = match polarity {
        Polarity::LowerIsBetter => f64::NEG_INFINITY,
        Polarity::HigherIsBetter => f64::INFINITY,
    };
    let mut points = vec![PrPoint {
        threshold: strictest,
        precision: 1.0,
        recall: 0.0,
    }];
    let (mut accepted, mut correct) = (0usize, 0usize);
    let mut i = 0;
    while i < total {
        let threshold = scored[i].0;
        // Every entry tied at this score is accepted together.
        while i < total && scored[i].0 == threshold {
            accepted += 1;
            correct += usize::from(scored[i].1);
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: correct as f64 / accepted as f64,
            recall: correct as f64 / total as f64,
        });
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].recall - w[0].recall) * (w[1].precision + w[0].precision) / 2.0)
        .sum();
    PrCurve { points, auc }
}
