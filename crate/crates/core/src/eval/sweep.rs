use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::pr::{pr_curve_with_truth, GroundTruth};
use super::{Method, MethodKind, ToleranceRule};
use crate::dataset::Traversal;
use crate::descriptors::DeltaConfig;
use crate::error::Result;
use crate::matching::SeqSlamConfig;
use crate::neural::{train, TrainConfig};

/// A reference/query pair; `name` identifies the query condition.
#[derive(Debug, Clone)]
pub struct NamedPair {
    pub name: String,
    pub reference: Traversal,
    pub query: Traversal,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub methods: Vec<MethodKind>,
    pub lengths: Vec<usize>,
    /// Template for the learned matcher; `d_s` is overridden per cell.
    pub train: TrainConfig,
    /// Template for SeqSLAM; `d_s` is overridden per cell.
    pub seqslam: SeqSlamConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            methods: MethodKind::ALL.to_vec(),
            lengths: vec![1, 2, 4, 8],
            train: TrainConfig::default(),
            seqslam: SeqSlamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: MethodKind,
    pub d_s: usize,
    pub query_name: String,
    /// `None` when the cell failed.
    pub auc: Option<f64>,
    pub error: Option<String>,
}

impl SweepConfig {
    /// Builds the matcher for one cell, training if needed.
    pub fn method(&self, kind: MethodKind, d_s: usize, reference: &Traversal) -> Result<Method> {
        Ok(match kind {
            MethodKind::SeqSlam => {
                let cfg = SeqSlamConfig {
                    d_s,
                    ..self.seqslam
                };
                cfg.validate()?;
                Method::SeqSlam(cfg)
            }
            MethodKind::Delta => Method::Delta(DeltaConfig::for_sequence_length(d_s)),
            MethodKind::Deep => {
                let cfg = TrainConfig {
                    d_s,
                    ..self.train.clone()
                };
                Method::Deep(Box::new(train(reference, &cfg)?.0))
            }
        })
    }
}

fn run_cell(cfg: &SweepConfig, kind: MethodKind, d_s: usize, pair: &NamedPair) -> Result<f64> {
    let method = cfg.method(kind, d_s, &pair.reference)?;
    let report = method.run(&pair.reference, &pair.query)?;
    let delta = ToleranceRule::for_sequence_length(d_s).delta;
    Ok(pr_curve_with_truth(&report, delta, &pair.truth).auc)
}

/// AUC for every (method, d_s, pair) cell, sorted by that key. Cells run
/// concurrently; a failing cell yields a row with `auc = None`.
pub fn ds_sweep(cfg: &SweepConfig, pairs: &[NamedPair]) -> Vec<SweepRow> {
    let mut cells = Vec::new();
    for &kind in &cfg.methods {
        for &d_s in &cfg.lengths {
            for pair in pairs {
                cells.push((kind, d_s, pair));
            }
        }
    }
    let mut rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(kind, d_s, pair)| {
            let outcome = run_cell(cfg, kind, d_s, pair);
            SweepRow {
                method: kind,
                d_s,
                query_name: pair.name.clone(),
                auc: outcome.as_ref().ok().copied(),
                error: outcome.err().map(|e| e.to_string()),
            }
        })
        .collect();
    rows.sort_by(|a, b| (a.method, a.d_s, &a.query_name).cmp(&(b.method, b.d_s, &b.query_name)));
    rows
}

/// `method,d_s,query_name,auc`; failed cells leave `auc` empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("method,d_s,query_name,auc\n");
    for r in rows {
        let auc = r.auc.map(|a| a.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.method, r.d_s, r.query_name, auc)
            .expect("writing to a String");
    }
    out
}

pub fn write_sweep_csv(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    fs::write(path, sweep_csv(rows))?;
    Ok(())
}
