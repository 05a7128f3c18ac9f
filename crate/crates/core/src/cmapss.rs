//! Remaining-useful-life prediction on the NASA turbofan degradation files
//! (`train_FD00x.txt`, `test_FD00x.txt`, `RUL_FD00x.txt`).
//!
//! Rows are `unit cycle setting1..3 sensor1..21`. The unit number is an id;
//! the other 25 columns are min-max normalized features. Training rows are
//! labelled with their remaining cycles, `last_cycle(unit) - cycle`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::io::{load_table, ColumnRole, ColumnSchema, ColumnSpec};
use crate::predictor::ParamIndex;

pub const DATA_DIR_ENV: &str = "INVPAT_DATA_DIR";
pub const COLUMNS: usize = 26;

#[derive(Clone, Debug)]
pub struct CmapssPaths {
    pub train: PathBuf,
    pub test: PathBuf,
    pub rul: PathBuf,
}

impl CmapssPaths {
    pub fn in_dir(dir: &Path, subset: &str) -> Option<Self> {
        [dir.to_path_buf(), dir.join("CMAPSSData")]
            .into_iter()
            .map(|d| CmapssPaths {
                train: d.join(format!("train_{subset}.txt")),
                test: d.join(format!("test_{subset}.txt")),
                rul: d.join(format!("RUL_{subset}.txt")),
            })
            .find(|p| p.train.is_file() && p.test.is_file() && p.rul.is_file())
    }

    /// Looks under `$INVPAT_DATA_DIR`.
    pub fn from_env(subset: &str) -> Option<Self> {
        let dir = std::env::var_os(DATA_DIR_ENV)?;
        Self::in_dir(Path::new(&dir), subset)
    }
}

pub fn schema() -> ColumnSchema {
    let mut cols = vec![
        ColumnSpec::new("unit", ColumnRole::Id),
        ColumnSpec::new("cycle", ColumnRole::Feature),
    ];
    cols.extend((1..=3).map(|i| ColumnSpec::new(format!("setting{i}"), ColumnRole::Feature)));
    cols.extend((1..=21).map(|i| ColumnSpec::new(format!("sensor{i}"), ColumnRole::Feature)));
    ColumnSchema::new(cols)
}

fn last_cycles(rows: &[Vec<f64>]) -> BTreeMap<i64, i64> {
    let mut last = BTreeMap::new();
    for r in rows {
        let e = last.entry(r[0] as i64).or_insert(i64::MIN);
        *e = (*e).max(r[1] as i64);
    }
    last
}

/// Remaining cycles for every training row.
pub fn remaining_cycles(rows: &[Vec<f64>]) -> Vec<i64> {
    let last = last_cycles(rows);
    rows.iter()
        .map(|r| last[&(r[0] as i64)] - r[1] as i64)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnginePrediction {
    pub unit: i64,
    /// Predicted remaining life at the unit's last test cycle.
    pub prul: Option<i64>,
    pub rul: i64,
}

#[derive(Clone, Debug)]
pub struct CmapssReport {
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_secs: f64,
    pub predict_secs: f64,
    pub engines: Vec<EnginePrediction>,
}

impl CmapssReport {
    /// `prul - rul` per engine with a prediction.
    pub fn errors(&self) -> Vec<i64> {
        self.engines
            .iter()
            .filter_map(|e| e.prul.map(|p| p - e.rul))
            .collect()
    }

    /// Engines whose predicted life exceeds the actual one.
    pub fn late_predictions(&self) -> usize {
        self.errors().iter().filter(|&&e| e > 0).count()
    }
}

pub fn run(paths: &CmapssPaths, range: u32) -> Result<CmapssReport> {
    let train = load_table(&paths.train)?.rows;
    let test = load_table(&paths.test)?.rows;
    let truth: Vec<i64> = load_table(&paths.rul)?
        .rows
        .iter()
        .map(|r| r[0] as i64)
        .collect();
    for (name, rows) in [("train", &train), ("test", &test)] {
        if rows.iter().any(|r| r.len() != COLUMNS) {
            return Err(Error::Schema(format!(
                "{name} file must have {COLUMNS} columns"
            )));
        }
    }

    let started = Instant::now();
    let mut schema = schema();
    schema.fit_bounds(&train)?;
    let features = schema.normalize(&train, range)?;
    let targets = remaining_cycles(&train);
    let index = ParamIndex::build(
        schema.feature_count(),
        range,
        features.iter().zip(targets.iter().copied()),
    )?;
    let train_secs = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let queries = schema.normalize(&test, range)?;
    let predictions: Vec<Option<i64>> = queries
        .iter()
        .map(|q| index.predict_value(q).ok())
        .collect();
    let predict_secs = started.elapsed().as_secs_f64();

    let last = last_cycles(&test);
    let mut engines = Vec::new();
    for (i, (row, prul)) in test.iter().zip(&predictions).enumerate() {
        let unit = row[0] as i64;
        if last.get(&unit) != Some(&(row[1] as i64)) {
            continue;
        }
        let rul = *truth
            .get(usize::try_from(unit - 1).unwrap_or(usize::MAX))
            .ok_or_else(|| Error::Schema(format!("no true RUL for unit {unit} (test row {i})")))?;
        engines.push(EnginePrediction {
            unit,
            prul: *prul,
            rul,
        });
    }
    Ok(CmapssReport {
        train_rows: train.len(),
        test_rows: test.len(),
        train_secs,
        predict_secs,
        engines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remaining_cycles_per_unit() {
        let rows = vec![
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 3.0],
            vec![2.0, 1.0],
            vec![2.0, 2.0],
        ];
        assert_eq!(remaining_cycles(&rows), vec![2, 1, 0, 1, 0]);
    }

    #[test]
    fn schema_shape() {
        let s = schema();
        assert_eq!(s.width(), COLUMNS);
        assert_eq!(s.feature_count(), 25);
        assert_eq!(s.id_column().unwrap(), Some(0));
    }

    #[test]
    fn synthetic_files_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let mut train = String::new();
        let mut test = String::new();
        for unit in 1..=3 {
            let life = 20 + unit * 5;
            for cycle in 1..=life {
                let wear = cycle as f64 / life as f64;
                let mut cols = vec![unit as f64, cycle as f64, 0.0, 0.0, 100.0];
                cols.extend((0..21).map(|s| 500.0 + s as f64 + 10.0 * wear));
                let line: Vec<String> = cols.iter().map(|v| v.to_string()).collect();
                train.push_str(&line.join(" "));
                train.push('\n');
                if cycle <= life - 4 {
                    test.push_str(&line.join(" "));
                    test.push('\n');
                }
            }
        }
        std::fs::write(dir.path().join("train_FD001.txt"), train).unwrap();
        std::fs::write(dir.path().join("test_FD001.txt"), test).unwrap();
        std::fs::write(dir.path().join("RUL_FD001.txt"), "4\n4\n4\n").unwrap();

        let paths = CmapssPaths::in_dir(dir.path(), "FD001").unwrap();
        let report = run(&paths, 256).unwrap();
        assert_eq!(report.engines.len(), 3);
        assert!(report
            .engines
            .iter()
            .all(|e| e.prul.is_some() && e.rul == 4));
        assert_eq!(report.errors().len(), 3);
        assert!(CmapssPaths::in_dir(dir.path(), "FD002").is_none());
    }
}
