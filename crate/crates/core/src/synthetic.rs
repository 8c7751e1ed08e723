//! Deterministic reference/query traversal pairs.
//!
//! Reference descriptors follow a first-order autoregressive walk
//! `d_{t+1} = ρ·d_t + √(1−ρ²)·ε_t`, rows L2-normalized. The query is the
//! reference plus per-dimension Gaussian "condition" noise and an optional
//! constant drift, re-normalized. Both traversals share the same path, so the
//! ground truth is the identity alignment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};

use crate::dataset::{
    normalize_positions, save_descriptor_file, write_positions, DescriptorSequence, Traversal,
};
use crate::descriptors::l2_normalize_rows;
use crate::error::{argument, Error, Result};
use crate::rng::{NormalStream, PRNG_ID};

/// Seed offset for the aliasing noise stream of [`generate_revisit`].
const ALIAS_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
/// Noise scale applied to copied descriptors in an aliased segment.
pub const ALIAS_NOISE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    /// Closed circular route.
    Loop,
    /// Straight route with both axes varying.
    Line,
}

impl FromStr for PathKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loop" => Ok(Self::Loop),
            "line" => Ok(Self::Line),
            other => Err(argument(format!(
                "unknown path type {other:?} (expected loop or line)"
            ))),
        }
    }
}

impl std::fmt::Display for PathKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Loop => "loop",
            Self::Line => "line",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub frames: usize,
    pub dim: usize,
    /// Temporal correlation ρ of the descriptor walk, in `[0, 1)`.
    pub smoothness: f64,
    /// Std of the per-dimension Gaussian noise added to the query.
    pub condition_noise: f64,
    /// Constant offset added to every query frame before re-normalization.
    pub drift: Option<Vec<f64>>,
    pub path: PathKind,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 500,
            dim: 64,
            smoothness: 0.9,
            condition_noise: 0.0,
            drift: None,
            path: PathKind::Loop,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(argument("synthetic traversals need at least 2 frames"));
        }
        if self.dim < 2 {
            return Err(argument("descriptor dimension must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.smoothness) {
            return Err(argument("smoothness must lie in [0, 1)"));
        }
        if !(self.condition_noise >= 0.0 && self.condition_noise.is_finite()) {
            return Err(argument(
                "condition noise must be a finite non-negative number",
            ));
        }
        if let Some(drift) = &self.drift {
            if drift.len() != self.dim {
                return Err(argument(format!(
                    "drift has {} entries, descriptor dimension is {}",
                    drift.len(),
                    self.dim
                )));
            }
            if drift.iter().any(|v| !v.is_finite()) {
                return Err(argument("drift must be finite"));
            }
        }
        Ok(())
    }

    /// Key-value manifest recording every setting.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        let drift = match &self.drift {
            Some(d) => d
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
            None => "none".into(),
        };
        for (k, v) in [
            ("frames", self.frames.to_string()),
            ("dim", self.dim.to_string()),
            ("smoothness", self.smoothness.to_string()),
            ("condition_noise", self.condition_noise.to_string()),
            ("drift", drift),
            ("path", self.path.to_string()),
            ("seed", self.seed.to_string()),
            ("prng", PRNG_ID.to_string()),
        ] {
            writeln!(out, "{k} = {v}").expect("writing to a String");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPair {
    pub reference: Traversal,
    pub query: Traversal,
}

impl SynthPair {
    /// Writes `reference.spd1`, `reference.pos`, `query.spd1`, `query.pos`
    /// and `manifest.txt` into `dir`, returning the manifest path.
    pub fn write_dataset(
        &self,
        dir: impl AsRef<Path>,
        cfg: &SynthConfig,
    ) -> Result<std::path::PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (t, stem) in [(&self.reference, "reference"), (&self.query, "query")] {
            save_descriptor_file(t.descriptors(), dir.join(format!("{stem}.spd1")))?;
            write_positions(dir.join(format!("{stem}.pos")), t.positions().data())?;
        }
        let manifest = dir.join("manifest.txt");
        fs::write(&manifest, cfg.manifest())?;
        Ok(manifest)
    }
}

fn path_positions(cfg: &SynthConfig) -> Result<crate::dataset::PositionTrack> {
    use PathKind::{Line, Loop};
    let t_len = cfg.frames;
    let raw = Array2::from_shape_fn((t_len, 2), |(t, axis)| {
        let s = t as f64 / t_len as f64;
        match cfg.path {
            Loop => {
                let theta = std::f64::consts::TAU * s;
                if axis == 0 {
                    500_000.0 + 400.0 * theta.cos()
                } else {
                    6_000_000.0 + 400.0 * theta.sin()
                }
            }
            Line => {
                if axis == 0 {
                    500_000.0 + 2_000.0 * s
                } else {
                    6_000_000.0 + 1_000.0 * s
                }
            }
        }
    });
    normalize_positions(raw.view())
}

fn reference_walk(cfg: &SynthConfig, normal: &mut NormalStream) -> Array2<f64> {
    let rho = cfg.smoothness;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut walk = Array2::<f64>::zeros((cfg.frames, cfg.dim));
    for j in 0..cfg.dim {
        walk[[0, j]] = normal.next_normal();
    }
    for t in 1..cfg.frames {
        for j in 0..cfg.dim {
            walk[[t, j]] = rho * walk[[t - 1, j]] + innovation * normal.next_normal();
        }
    }
    walk
}

fn to_descriptors(data: Array2<f64>) -> Result<DescriptorSequence> {
    let (data, all_nonzero) = l2_normalize_rows(data);
    DescriptorSequence::new(data.mapv(|v| v as f32), all_nonzero)
}

fn build_query(
    reference: &DescriptorSequence,
    cfg: &SynthConfig,
    normal: &mut NormalStream,
) -> Result<DescriptorSequence> {
    let drift = cfg.drift.as_ref().filter(|d| d.iter().any(|&v| v != 0.0));
    if cfg.condition_noise == 0.0 && drift.is_none() {
        return Ok(reference.clone());
    }
    let mut q = reference.to_f64();
    if cfg.condition_noise > 0.0 {
        q.mapv_inplace(|v| v + cfg.condition_noise * normal.next_normal());
    }
    if let Some(drift) = drift {
        for mut row in q.axis_iter_mut(Axis(0)) {
            for (v, d) in row.iter_mut().zip(drift) {
                *v += d;
            }
        }
    }
    to_descriptors(q)
}

/// Generates a pair with identity ground truth, fully determined by `cfg.seed`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthPair> {
    generate_revisit(cfg, 0, 0)
}

/// Like [`generate`], but frames `revisit_at .. revisit_at + segment_len` of
/// the reference repeat the appearance of frames `0 .. segment_len` (plus
/// noise of scale [`ALIAS_NOISE`]) while keeping their own positions.
pub fn generate_revisit(
    cfg: &SynthConfig,
    revisit_at: usize,
    segment_len: usize,
) -> Result<SynthPair> {
    cfg.validate()?;
    if segment_len > 0 && (revisit_at < segment_len || revisit_at + segment_len > cfg.frames) {
        return Err(argument(format!(
            "revisit segment {revisit_at}..{} must lie after frame {segment_len} and within {} frames",
            revisit_at + segment_len,
            cfg.frames
        )));
    }
    let mut normal = NormalStream::new(cfg.seed);
    let mut walk = reference_walk(cfg, &mut normal);
    if segment_len > 0 {
        let mut alias = NormalStream::new(cfg.seed ^ ALIAS_STREAM);
        let (l2, _) = l2_normalize_rows(walk.clone());
        for i in 0..segment_len {
            for j in 0..cfg.dim {
                walk[[revisit_at + i, j]] = l2[[i, j]] + ALIAS_NOISE * alias.next_normal();
            }
        }
    }
    let reference_desc = to_descriptors(walk)?;
    let query_desc = build_query(&reference_desc, cfg, &mut normal)?;
    let positions = path_positions(cfg)?;
    Ok(SynthPair {
        reference: Traversal::new("reference", reference_desc, positions.clone())?,
        query: Traversal::new("query", query_desc, positions)?,
    })
}
