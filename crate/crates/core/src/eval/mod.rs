//! Evaluation protocol: tolerance rule, precision-recall, sequence-length
//! sweeps and deployment-time benchmarks.

mod bench;
mod pr;
mod sweep;

use std::str::FromStr;

use crate::dataset::Traversal;
use crate::descriptors::DeltaConfig;
use crate::error::{argument, Error, Result};
use crate::matching::{delta_match, seqslam_match, MatchReport, SeqSlamConfig};
use crate::neural::{infer, SequenceModel};

pub use bench::{bench_csv, benchmark, write_bench_csv, BenchResult};
pub use pr::{pr_curve, pr_curve_with_truth, read_ground_truth, GroundTruth, PrCurve, PrPoint};
pub use sweep::{ds_sweep, sweep_csv, write_sweep_csv, NamedPair, SweepConfig, SweepRow};

/// Frames of slack added to the sequence length to get the tolerance.
pub const TOLERANCE_MARGIN: usize = 10;

/// Retrievals within `delta` frames of the ground truth count as correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToleranceRule {
    pub delta: usize,
}

impl ToleranceRule {
    /// `δ = d_s + 10`.
    pub fn for_sequence_length(d_s: usize) -> Self {
        Self {
            delta: d_s + TOLERANCE_MARGIN,
        }
    }

    pub fn is_correct(&self, retrieved: usize, truth: usize) -> bool {
        is_correct(retrieved, truth, self.delta)
    }
}

pub fn is_correct(retrieved: usize, truth: usize, delta: usize) -> bool {
    retrieved.abs_diff(truth) <= delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    SeqSlam,
    Delta,
    Deep,
}

impl MethodKind {
    pub const ALL: [MethodKind; 3] = [MethodKind::SeqSlam, MethodKind::Delta, MethodKind::Deep];

    pub fn name(self) -> &'static str {
        match self {
            Self::SeqSlam => "seqslam",
            Self::Delta => "delta",
            Self::Deep => "deep",
        }
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seqslam" => Ok(Self::SeqSlam),
            "delta" => Ok(Self::Delta),
            "deep" => Ok(Self::Deep),
            other => Err(argument(format!(
                "unknown method {other:?} (expected seqslam, delta or deep)"
            ))),
        }
    }
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A ready-to-run matcher.
#[derive(Debug, Clone)]
pub enum Method {
    SeqSlam(SeqSlamConfig),
    Delta(DeltaConfig),
    Deep(Box<SequenceModel>),
}

impl Method {
    pub fn kind(&self) -> MethodKind {
        match self {
            Self::SeqSlam(_) => MethodKind::SeqSlam,
            Self::Delta(_) => MethodKind::Delta,
            Self::Deep(_) => MethodKind::Deep,
        }
    }

    /// Deployment-stage matching of `query` against `reference`. The learned
    /// matcher ignores `reference`: its head already encodes the places.
    pub fn run(&self, reference: &Traversal, query: &Traversal) -> Result<MatchReport> {
        match self {
            Self::SeqSlam(cfg) => {
                Ok(seqslam_match(query.descriptors(), reference.descriptors(), cfg)?.0)
            }
            Self::Delta(cfg) => delta_match(query.descriptors(), reference.descriptors(), cfg),
            Self::Deep(model) => Ok(infer(model, query, model.d_s)?.1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_rule() {
        let rule = ToleranceRule::for_sequence_length(2);
        assert_eq!(rule.delta, 12);
        assert!(rule.is_correct(100, 112));
        assert!(!rule.is_correct(100, 113));
        assert!(is_correct(7, 7, 0));
        assert!(!is_correct(8, 7, 0));
        for (d_s, delta) in [(1, 11), (2, 12), (10, 20), (24, 34)] {
            assert_eq!(ToleranceRule::for_sequence_length(d_s).delta, delta);
        }
    }

    #[test]
    fn correctness_is_symmetric() {
        for a in 0..40 {
            for b in 0..40 {
                for delta in [0, 1, 5, 12] {
                    assert_eq!(is_correct(a, b, delta), is_correct(b, a, delta));
                }
            }
        }
    }

    #[test]
    fn method_names_round_trip() {
        for kind in MethodKind::ALL {
            assert_eq!(kind.name().parse::<MethodKind>().unwrap(), kind);
        }
        assert!("netvlad".parse::<MethodKind>().is_err());
    }
}
