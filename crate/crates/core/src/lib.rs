//! Sequence-based visual place recognition.
//!
//! The crate provides three matchers that share one evaluation protocol:
//!
//! - a learned matcher: an LSTM over windows of `[descriptor ‖ position]`
//!   frames followed by a linear head with one unit per reference frame,
//!   trained from scratch with backpropagation through time and Adam;
//! - SeqSLAM: pairwise difference matrix, local contrast enhancement and a
//!   constant-velocity line search;
//! - Delta Descriptors: differences of windowed descriptor means, matched by
//!   cosine distance.
//!
//! Evaluation follows the usual VPR protocol: a retrieval is correct when it
//! lands within `δ = d_s + 10` frames of the ground truth, and methods are
//! summarized by the area under the precision-recall curve.

pub mod dataset;
pub mod descriptors;
pub mod error;
pub mod eval;
pub mod matching;
pub mod neural;
pub mod rng;
pub mod synthetic;

pub use dataset::{
    load_pair, make_windows, normalize_positions, DescriptorSequence, PositionNormalizer,
    PositionTrack, SequenceWindow, Traversal,
};
pub use descriptors::{
    delta_transform, l2_normalize, thumbnail_descriptor, DeltaConfig, ThumbnailConfig,
};
pub use error::{Error, Result};
pub use eval::{Method, MethodKind, PrCurve, ToleranceRule};
pub use matching::{
    difference_matrix, DifferenceMatrix, MatchEntry, MatchReport, Metric, Polarity, SeqSlamConfig,
};
pub use neural::{SequenceModel, TrainConfig, TrainingCurves};
pub use synthetic::{PathKind, SynthConfig, SynthPair};
