use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use seqplace::dataset::{
    load_descriptor_file, read_positions, save_descriptor_file, write_matrix_file,
};
use seqplace::descriptors::{crop_region, read_pgm};
use seqplace::eval::{
    benchmark, ds_sweep, pr_curve_with_truth, read_ground_truth, write_bench_csv, write_sweep_csv,
    GroundTruth, Method, MethodKind, NamedPair, SweepConfig, ToleranceRule,
};
use seqplace::matching::{delta_match_with_matrix, seqslam_match, write_match_csv, Polarity};
use seqplace::neural::{
    infer, load_checkpoint, save_checkpoint, train as train_model, TrainConfig,
};
use seqplace::synthetic::generate_revisit;
use seqplace::{
    l2_normalize, thumbnail_descriptor, DeltaConfig, DescriptorSequence, PositionNormalizer,
    SeqSlamConfig, SynthConfig, ThumbnailConfig, Traversal,
};

use crate::{
    usage, BenchArgs, DataArgs, EvalArgs, ExtractArgs, MatchArgs, SeqSlamArgs, SweepArgs,
    SynthArgs, TrainArgs, TrainingArgs,
};

fn parse_drift(spec: &str, dim: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("--drift expects numbers, got {spec:?}")))?;
    Ok(if values.len() == 1 {
        vec![values[0]; dim]
    } else {
        values
    })
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        frames: a.frames,
        dim: a.dim,
        smoothness: a.smoothness,
        condition_noise: a.noise,
        drift: a
            .drift
            .as_deref()
            .map(|d| parse_drift(d, a.dim))
            .transpose()?,
        path: a.path,
        seed: a.seed,
    };
    let revisit_at = a.revisit_at.unwrap_or(0);
    let pair = generate_revisit(&cfg, revisit_at, a.segment)?;
    let manifest = pair.write_dataset(&a.out, &cfg)?;
    if a.segment > 0 {
        let mut text = fs::read_to_string(&manifest)?;
        text.push_str(&format!(
            "revisit_at = {revisit_at}\nsegment = {}\n",
            a.segment
        ));
        fs::write(&manifest, text)?;
    }
    println!("{}", manifest.display());
    Ok(())
}

fn pgm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(usage(format!("{} is not a directory", dir.display())));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")));
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("no .pgm images in {}", dir.display())));
    }
    Ok(files)
}

pub fn extract(a: ExtractArgs) -> Result<()> {
    let cfg = ThumbnailConfig::new(a.width, a.height, a.patch)?;
    let files = pgm_files(&a.images)?;
    let rows: Vec<(Vec<f32>, Option<String>)> = files
        .par_iter()
        .map(|path| {
            let image = read_pgm(path).map_err(|e| anyhow!("{e}"))?;
            let (h, w) = image.dim();
            let fail = |e: seqplace::Error| anyhow!("{}: {e}", path.display());
            let crop = crop_region(h, w, &cfg).map_err(fail)?;
            let warning = crop.cropped.then(|| {
                format!(
                    "warning: {}: cropped {w}x{h} to centered {}x{}",
                    path.display(),
                    crop.width,
                    crop.height
                )
            });
            Ok((
                thumbnail_descriptor(image.view(), &cfg).map_err(fail)?,
                warning,
            ))
        })
        .collect::<Result<_>>()?;
    let mut descriptors = Vec::with_capacity(rows.len());
    for (row, warning) in rows {
        if let Some(w) = warning {
            eprintln!("{w}");
        }
        descriptors.push(row);
    }
    let mut seq = DescriptorSequence::from_rows(&descriptors, false)?;
    if !a.no_normalize {
        seq = l2_normalize(&seq);
    }
    save_descriptor_file(&seq, &a.out)?;
    println!(
        "{} frames x {} dims -> {}",
        seq.len(),
        seq.dim(),
        a.out.display()
    );
    Ok(())
}

fn existing(path: Option<PathBuf>, fallback: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let path = path
        .or(fallback)
        .ok_or_else(|| usage(format!("missing {what}: pass --data or --{what}")))?;
    if !path.is_file() {
        return Err(usage(format!(
            "{what} file {} does not exist",
            path.display()
        )));
    }
    Ok(path)
}

impl DataArgs {
    fn in_dir(&self, file: &str) -> Option<PathBuf> {
        self.data.as_ref().map(|d| d.join(file))
    }

    fn reference_paths(&self) -> Result<(PathBuf, PathBuf)> {
        Ok((
            existing(
                self.reference.clone(),
                self.in_dir("reference.spd1"),
                "reference",
            )?,
            existing(
                self.reference_positions.clone(),
                self.in_dir("reference.pos"),
                "reference-positions",
            )?,
        ))
    }

    fn query_paths(&self) -> Result<(PathBuf, PathBuf)> {
        Ok((
            existing(self.query.clone(), self.in_dir("query.spd1"), "query")?,
            existing(
                self.query_positions.clone(),
                self.in_dir("query.pos"),
                "query-positions",
            )?,
        ))
    }

    /// Reference traversal and the normalizer fitted on its positions.
    fn load_reference(&self) -> Result<(Traversal, PositionNormalizer)> {
        let (desc, pos) = self.reference_paths()?;
        let raw = read_positions(pos)?;
        let normalizer = PositionNormalizer::fit(raw.view())?;
        let traversal = Traversal::new(
            "reference",
            load_descriptor_file(desc)?,
            normalizer.apply(raw.view())?,
        )?;
        Ok((traversal, normalizer))
    }

    fn load_pair(&self) -> Result<(Traversal, Traversal)> {
        let (query_desc, query_pos) = self.query_paths()?;
        let (reference, normalizer) = self.load_reference()?;
        let raw = read_positions(query_pos)?;
        let query = Traversal::new(
            "query",
            load_descriptor_file(query_desc)?,
            normalizer.apply(raw.view())?,
        )?;
        Ok((reference, query))
    }
}

impl TrainingArgs {
    fn config(&self, d_s: usize) -> TrainConfig {
        TrainConfig {
            d_s,
            epochs: self.epochs,
            learning_rate: self.lr,
            hidden: self.hidden,
            batch_size: self.batch,
            seed: self.seed,
            clip_norm: self.clip_norm,
        }
    }
}

impl SeqSlamArgs {
    fn config(&self, d_s: usize) -> Result<SeqSlamConfig> {
        let cfg = SeqSlamConfig {
            d_s,
            v_min: self.v_min,
            v_max: self.v_max,
            v_step: self.v_step,
            r_window: self.r_window,
            metric: self.metric,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn train(a: TrainArgs) -> Result<()> {
    let (reference, _) = a.data.load_reference()?;
    let (model, curves) = train_model(&reference, &a.training.config(a.ds))?;
    fs::create_dir_all(&a.out)?;
    save_checkpoint(&model, a.out.join("model.spm1"))?;
    curves.write_csv(a.out.join("curves.csv"))?;
    match curves.last() {
        Some(r) => println!(
            "epochs {}, final loss {:.6}, accuracy {:.4}",
            curves.epochs.len(),
            r.loss,
            r.accuracy
        ),
        None => println!("epochs 0, wrote the seeded initialization"),
    }
    Ok(())
}

fn load_model(path: Option<&PathBuf>) -> Result<seqplace::SequenceModel> {
    let path = path.ok_or_else(|| usage("the deep method needs --model"))?;
    if !path.is_file() {
        return Err(usage(format!(
            "model file {} does not exist",
            path.display()
        )));
    }
    Ok(load_checkpoint(path)?)
}

pub fn run_match(a: MatchArgs) -> Result<()> {
    let (reference, query) = a.data.load_pair()?;
    let (report, matrix) = match a.method {
        MethodKind::Deep => {
            let model = load_model(a.model.as_ref())?;
            let d_s = a.ds.unwrap_or(model.d_s);
            let (activity, report) = infer(&model, &query, d_s)?;
            (report, activity)
        }
        MethodKind::SeqSlam => {
            let cfg = a.seqslam.config(a.ds.unwrap_or(10))?;
            let (report, raw) = seqslam_match(query.descriptors(), reference.descriptors(), &cfg)?;
            (report, raw.data)
        }
        MethodKind::Delta => {
            let cfg = DeltaConfig::for_sequence_length(a.ds.unwrap_or(10));
            let (report, m) =
                delta_match_with_matrix(query.descriptors(), reference.descriptors(), &cfg)?;
            (report, m.data)
        }
    };
    write_match_csv(&a.out, &report)?;
    if let Some(path) = &a.export_matrix {
        write_matrix_file(path, matrix.mapv(|v| v as f32).view(), false)?;
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let delta = match (a.delta, a.ds) {
        (Some(delta), _) => delta,
        (None, Some(d_s)) => ToleranceRule::for_sequence_length(d_s).delta,
        (None, None) => return Err(usage("pass --ds or --delta")),
    };
    let polarity = if a.higher_is_better || a.method == Some(MethodKind::Deep) {
        Polarity::HigherIsBetter
    } else {
        Polarity::LowerIsBetter
    };
    let report = seqplace::matching::read_match_csv(&a.matches, polarity)?;
    if report.is_empty() {
        return Err(usage(format!("{} has no matches", a.matches.display())));
    }
    let truth = match &a.truth {
        Some(path) => read_ground_truth(path)?,
        None => GroundTruth::Identity,
    };
    let curve = pr_curve_with_truth(&report, delta, &truth);
    if let Some(out) = &a.out {
        fs::write(out, curve.to_csv())?;
    }
    println!("delta,{delta}");
    println!("auc,{:?}", curve.auc);
    Ok(())
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let mut pairs = Vec::with_capacity(a.data.len());
    for dir in &a.data {
        let data = DataArgs {
            data: Some(dir.clone()),
            reference: None,
            reference_positions: None,
            query: None,
            query_positions: None,
        };
        let (reference, query) = data.load_pair()?;
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        pairs.push(NamedPair {
            name,
            reference,
            query,
            truth: GroundTruth::Identity,
        });
    }
    let cfg = SweepConfig {
        methods: a.methods,
        lengths: a.lengths,
        train: a.training.config(1),
        seqslam: a.seqslam.config(1)?,
    };
    let rows = ds_sweep(&cfg, &pairs);
    for row in rows.iter().filter(|r| r.auc.is_none()) {
        eprintln!(
            "warning: {} d_s={} {}: {}",
            row.method,
            row.d_s,
            row.query_name,
            row.error.as_deref().unwrap_or("failed")
        );
    }
    write_sweep_csv(&a.out, &rows)?;
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let (reference, query) = a.data.load_pair()?;
    let mut results = Vec::with_capacity(a.methods.len());
    for kind in &a.methods {
        let method = match kind {
            MethodKind::SeqSlam => Method::SeqSlam(a.seqslam.config(a.ds)?),
            MethodKind::Delta => Method::Delta(DeltaConfig::for_sequence_length(a.ds)),
            MethodKind::Deep => {
                let mut model = load_model(a.model.as_ref())?;
                model.d_s = a.ds;
                Method::Deep(Box::new(model))
            }
        };
        let result = benchmark(&method, &reference, &query, a.reps)?;
        println!(
            "{},{:.6}s,{} frames",
            result.method, result.seconds, result.frames
        );
        results.push(result);
    }
    write_bench_csv(&a.out, &results)?;
    Ok(())
}
