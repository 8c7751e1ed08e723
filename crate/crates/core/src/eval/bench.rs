use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use super::{Method, MethodKind};
use crate::dataset::Traversal;
use crate::error::{argument, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub method: MethodKind,
    /// Median wall time of the matching stage over all repetitions.
    pub seconds: f64,
    pub frames: usize,
    pub device: String,
}

fn device() -> String {
    format!(
        "cpu {}-{} threads={}",
        std::env::consts::ARCH,
        std::env::consts::OS,
        rayon::current_num_threads()
    )
}

/// Times `method.run` only; models and configs are built by the caller.
pub fn benchmark(
    method: &Method,
    reference: &Traversal,
    query: &Traversal,
    repetitions: usize,
) -> Result<BenchResult> {
    if repetitions == 0 {
        return Err(argument("repetitions must be at least 1"));
    }
    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let started = Instant::now();
        let report = method.run(reference, query)?;
        // Clock resolution can report zero for tiny inputs.
        times.push(started.elapsed().as_secs_f64().max(1e-9));
        drop(report);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let seconds = if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    };
    Ok(BenchResult {
        method: method.kind(),
        seconds,
        frames: query.frame_count(),
        device: device(),
    })
}

pub fn bench_csv(results: &[BenchResult]) -> String {
    let mut out = String::from("method,seconds,frames,device\n");
    for r in results {
        writeln!(out, "{},{},{},{}", r.method, r.seconds, r.frames, r.device)
            .expect("writing to a String");
    }
    out
}

pub fn write_bench_csv(path: impl AsRef<Path>, results: &[BenchResult]) -> Result<()> {
    fs::write(path, bench_csv(results))?;
    Ok(())
}
