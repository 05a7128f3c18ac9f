use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use invpat::io::{load_model, load_table, ColumnSchema, ModelFile};
use invpat::vision::TrainingArea;
use invpat::{BitPattern, FeatureVector};
use serde::Deserialize;

use crate::{DataError, RadiusArgs, UsageError};

pub fn radius(args: &RadiusArgs, range: u32, default: u32) -> Result<u32> {
    let r = match (args.r, args.r_pct) {
        (Some(r), _) => r,
        (None, Some(p)) if p.is_finite() && p >= 0.0 => invpat::radius_from_percent(p, range),
        (None, Some(p)) => {
            return Err(
                UsageError(format!("--r-pct must be a non-negative number, got {p}")).into(),
            )
        }
        (None, None) => default,
    };
    if r >= range {
        return Err(UsageError(format!(
            "radius {r} must be below the feature range {range}"
        ))
        .into());
    }
    Ok(r)
}

pub fn model_file(path: Option<&Path>) -> Result<ModelFile> {
    let path = path.ok_or_else(|| UsageError("no model file given (use --model PATH)".into()))?;
    if !path.is_file() {
        return Err(UsageError(format!("model file {} does not exist", path.display())).into());
    }
    load_model(path).with_context(|| format!("loading {}", path.display()))
}

pub fn rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    Ok(load_table(path)?.rows)
}

/// Rows taken as raw integer features.
pub fn integer_vectors(rows: &[Vec<f64>], origin: &Path) -> Result<Vec<FeatureVector>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .map(|&v| {
                    if v.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&v) {
                        Ok(v as u32)
                    } else {
                        Err(DataError(format!(
                            "{} row {}: {v} is not a non-negative integer (pass --schema to normalize)",
                            origin.display(),
                            i + 1
                        )))
                    }
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(FeatureVector::new)
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(Into::into)
}

pub fn schema(path: Option<&Path>) -> Result<Option<ColumnSchema>> {
    path.map(|p| ColumnSchema::load(p).with_context(|| format!("reading schema {}", p.display())))
        .transpose()
}

/// One pattern per non-blank line: category indices separated by spaces or commas.
pub fn patterns(path: &Path) -> Result<Vec<BitPattern>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let cats = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| match t.parse::<u32>() {
                Ok(c) if c >= 1 => Ok(c),
                _ => Err(DataError(format!(
                    "{}:{}: category {t:?} is not a positive integer",
                    path.display(),
                    n + 1
                ))),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        out.push(BitPattern::new(cats));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct AreaFile {
    area: Vec<AreaEntry>,
}

#[derive(Deserialize)]
struct AreaEntry {
    x: u32,
    y: u32,
    width: u32,
    height: u32,
    label: String,
}

pub fn areas(path: &Path) -> Result<Vec<TrainingArea>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: AreaFile =
        toml::from_str(&text).map_err(|e| DataError(format!("{}: {e}", path.display())))?;
    Ok(file
        .area
        .into_iter()
        .map(|a| TrainingArea {
            x: a.x,
            y: a.y,
            width: a.width,
            height: a.height,
            label: a.label,
        })
        .collect())
}

/// Splits `PATH=LABEL` at the last `=`.
pub fn labeled_path(arg: &str) -> Result<(PathBuf, String)> {
    match arg.rsplit_once('=') {
        Some((p, l)) if !p.is_empty() && !l.is_empty() => Ok((PathBuf::from(p), l.to_owned())),
        _ => Err(UsageError(format!("expected PATH=LABEL, got {arg:?}")).into()),
    }
}
