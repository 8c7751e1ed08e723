//! Delta Descriptors matching.

use super::{difference_matrix, DifferenceMatrix, MatchEntry, MatchReport, Metric};
use crate::dataset::DescriptorSequence;
use crate::descriptors::{delta_transform, DeltaConfig};
use crate::error::Result;
use crate::matching::row_argmin;

/// Cosine nearest neighbour in delta-descriptor space, reported in original
/// frame indices. Only frames with full delta support are reported.
pub fn delta_match(
    query: &DescriptorSequence,
    reference: &DescriptorSequence,
    cfg: &DeltaConfig,
) -> Result<MatchReport> {
    Ok(delta_match_with_matrix(query, reference, cfg)?.0)
}

/// As [`delta_match`], also returning the delta-space difference matrix
/// (rows and columns indexed by output row, not original frame).
pub fn delta_match_with_matrix(
    query: &DescriptorSequence,
    reference: &DescriptorSequence,
    cfg: &DeltaConfig,
) -> Result<(MatchReport, DifferenceMatrix)> {
    let q = delta_transform(query, cfg)?;
    let r = delta_transform(reference, cfg)?;
    let m = difference_matrix(&q.descriptors, &r.descriptors, Metric::Cosine)?;
    let mut report = row_argmin(&m);
    report.entries = report
        .entries
        .into_iter()
        .map(|e| MatchEntry {
            query: q.frames[e.query],
            best_ref: r.frames[e.best_ref],
            score: e.score,
        })
        .collect();
    Ok((report, m))
}
