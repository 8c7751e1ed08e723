use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Which direction of the score means a stronger match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Distances: classic matchers.
    LowerIsBetter,
    /// Probabilities: the learned matcher.
    HigherIsBetter,
}

impl Polarity {
    /// True when `a` is a strictly stronger score than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Self::LowerIsBetter => a < b,
            Self::HigherIsBetter => a > b,
        }
    }

    /// True when `score` is accepted at `threshold`.
    pub fn passes(self, score: f64, threshold: f64) -> bool {
        match self {
            Self::LowerIsBetter => score <= threshold,
            Self::HigherIsBetter => score >= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchEntry {
    pub query: usize,
    pub best_ref: usize,
    pub score: f64,
}

/// Per-query best reference match.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub entries: Vec<MatchEntry>,
    pub polarity: Polarity,
}

impl MatchReport {
    pub fn new(entries: Vec<MatchEntry>, polarity: Polarity) -> Self {
        Self { entries, polarity }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best_refs(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.best_ref).collect()
    }
}

pub const MATCH_CSV_HEADER: &str = "query_index,best_ref,score";

pub fn write_match_csv(path: impl AsRef<Path>, report: &MatchReport) -> Result<()> {
    let mut out = String::from(MATCH_CSV_HEADER);
    out.push('\n');
    for e in &report.entries {
        writeln!(out, "{},{},{}", e.query, e.best_ref, e.score).expect("writing to a String");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a match CSV. The polarity is not stored in the file, so the caller
/// supplies it.
pub fn read_match_csv(path: impl AsRef<Path>, polarity: Polarity) -> Result<MatchReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == MATCH_CSV_HEADER => {}
        _ => {
            return Err(parse_err(
                1,
                format!("expected header {MATCH_CSV_HEADER:?}"),
            ))
        }
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(
                i + 1,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        }
        let query = fields[0]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad query index {:?}", fields[0])))?;
        let best_ref = fields[1]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad reference index {:?}", fields[1])))?;
        let score: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad score {:?}", fields[2])))?;
        if score.is_nan() {
            return Err(parse_err(i + 1, "score is NaN".into()));
        }
        entries.push(MatchEntry {
            query,
            best_ref,
            score,
        });
    }
    Ok(MatchReport::new(entries, polarity))
}
