//! `key = value` config files. Each key names a long flag of the chosen
//! subcommand. A key also given on the command line is dropped, so the
//! command line wins, including for list-valued flags.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Converts config lines into flags. `true`/`false` values toggle switches.
pub fn config_flags(text: &str, path: &Path) -> Result<Vec<OsString>> {
    let mut flags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected `key = value`, got {raw:?}",
                path.display(),
                i + 1
            );
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        if key.is_empty() || key == "config" {
            bail!("{}:{}: invalid key {key:?}", path.display(), i + 1);
        }
        match value {
            "true" => flags.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                flags.push(format!("--{key}").into());
                flags.push(value.into());
            }
        }
    }
    Ok(flags)
}

/// Returns `args` with the contents of any `--config FILE` inserted right
/// after the subcommand name.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            config = Some(iter.next().context("--config needs a file argument")?);
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(path.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let path = Path::new(&path);
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let given: Vec<String> = rest
        .iter()
        .filter_map(|a| {
            let s = a.to_string_lossy();
            s.strip_prefix("--")
                .map(|f| f.split('=').next().unwrap_or(f).to_string())
        })
        .collect();
    let mut flags = Vec::new();
    let mut keep = false;
    for flag in config_flags(&text, path)? {
        if let Some(name) = flag.to_string_lossy().strip_prefix("--") {
            keep = !given.iter().any(|g| g == name);
        }
        if keep {
            flags.push(flag);
        }
    }
    // The subcommand is the first argument after the program name.
    let at = rest.len().min(2);
    rest.splice(at..at, flags);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: Vec<OsString>) -> Vec<String> {
        v.into_iter().map(|s| s.into_string().unwrap()).collect()
    }

    #[test]
    fn lines_become_flags() {
        let flags = config_flags(
            "# comment\nepochs = 5\n\nhigher_is_better = true\nquiet = false\n",
            Path::new("c"),
        )
        .unwrap();
        assert_eq!(strings(flags), ["--epochs", "5", "--higher-is-better"]);
        assert!(config_flags("epochs 5\n", Path::new("c")).is_err());
    }

    #[test]
    fn command_line_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "ds = 4\nseed = 1\n").unwrap();
        let args = [
            "seqplace",
            "train",
            "--seed=9",
            "--config",
            path.to_str().unwrap(),
        ];
        let expanded = strings(expand(args.iter().map(OsString::from).collect()).unwrap());
        assert_eq!(expanded, ["seqplace", "train", "--ds", "4", "--seed=9"]);
        let args = [
            "seqplace",
            "train",
            "--seed",
            "9",
            "--config",
            path.to_str().unwrap(),
        ];
        let expanded = strings(expand(args.iter().map(OsString::from).collect()).unwrap());
        assert_eq!(expanded, ["seqplace", "train", "--ds", "4", "--seed", "9"]);
    }
}
