//! Column roles and integer normalization of raw decimal features.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::FeatureVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Feature,
    /// The predicted parameter `t`.
    Parameter,
    Id,
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, role: ColumnRole) -> Self {
        ColumnSpec {
            name: name.into(),
            role,
            min: None,
            max: None,
        }
    }
}

/// Per-column roles plus the normalization bounds recorded on the training split.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    #[serde(rename = "column")]
    pub columns: Vec<ColumnSpec>,
}

/// Maps a raw value onto `[0, range)`: `floor((raw - min) / (max - min) * range)`,
/// clamped. A degenerate column (`min == max`) maps to 0.
pub fn normalize_value(raw: f64, min: f64, max: f64, range: u32) -> u32 {
    if max <= min {
        return 0;
    }
    let scaled = ((raw - min) / (max - min) * range as f64).floor();
    scaled.clamp(0.0, (range - 1) as f64) as u32
}

impl ColumnSchema {
    pub fn new(columns: Vec<ColumnSpec>) -> Self {
        ColumnSchema { columns }
    }

    /// Every column is a feature, named `c1`, `c2`, ….
    pub fn all_features(width: usize) -> Self {
        ColumnSchema::new(
            (1..=width)
                .map(|i| ColumnSpec::new(format!("c{i}"), ColumnRole::Feature))
                .collect(),
        )
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: ColumnSchema =
            toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.check_bounds()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    fn check_bounds(&self) -> Result<()> {
        for c in &self.columns {
            match (c.min, c.max) {
                (Some(lo), Some(hi)) if !(lo.is_finite() && hi.is_finite()) || lo > hi => {
                    return Err(Error::Schema(format!(
                        "column {}: bad bounds [{lo}, {hi}]",
                        c.name
                    )))
                }
                (Some(_), None) | (None, Some(_)) => {
                    return Err(Error::Schema(format!(
                        "column {}: min and max go together",
                        c.name
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_columns(&self) -> impl Iterator<Item = (usize, &ColumnSpec)> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == ColumnRole::Feature)
    }

    pub fn feature_count(&self) -> usize {
        self.feature_columns().count()
    }

    fn single(&self, role: ColumnRole) -> Result<Option<usize>> {
        let mut hits = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == role);
        let first = hits.next().map(|(i, _)| i);
        if hits.next().is_some() {
            return Err(Error::Schema(format!("more than one {role:?} column")));
        }
        Ok(first)
    }

    pub fn parameter_column(&self) -> Result<Option<usize>> {
        self.single(ColumnRole::Parameter)
    }

    pub fn id_column(&self) -> Result<Option<usize>> {
        self.single(ColumnRole::Id)
    }

    /// Checks the column roles; prediction datasets need exactly one parameter column.
    pub fn validate(&self, needs_parameter: bool) -> Result<()> {
        self.check_bounds()?;
        if self.feature_count() == 0 {
            return Err(Error::Schema("no feature columns".into()));
        }
        let param = self.parameter_column()?;
        if needs_parameter && param.is_none() {
            return Err(Error::Schema("no parameter column".into()));
        }
        self.id_column()?;
        Ok(())
    }

    fn check_width(&self, rows: &[Vec<f64>]) -> Result<()> {
        match rows.iter().find(|r| r.len() != self.width()) {
            Some(r) => Err(Error::Schema(format!(
                "schema has {} columns, data row has {}",
                self.width(),
                r.len()
            ))),
            None => Ok(()),
        }
    }

    /// Records min/max for feature columns that have no bounds yet.
    pub fn fit_bounds(&mut self, rows: &[Vec<f64>]) -> Result<()> {
        self.check_width(rows)?;
        for (i, col) in self.columns.iter_mut().enumerate() {
            if col.role != ColumnRole::Feature || col.min.is_some() {
                continue;
            }
            let (lo, hi) = rows
                .iter()
                .map(|r| r[i])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if lo.is_finite() {
                col.min = Some(lo);
                col.max = Some(hi);
            }
        }
        Ok(())
    }

    pub fn has_bounds(&self) -> bool {
        self.feature_columns().all(|(_, c)| c.min.is_some())
    }

    /// Integer feature vectors over `[0, range)` using the recorded bounds.
    pub fn normalize(&self, rows: &[Vec<f64>], range: u32) -> Result<Vec<FeatureVector>> {
        self.check_width(rows)?;
        let cols: Vec<(usize, f64, f64)> = self
            .feature_columns()
            .map(|(i, c)| match (c.min, c.max) {
                (Some(lo), Some(hi)) => Ok((i, lo, hi)),
                _ => Err(Error::Schema(format!("column {} has no bounds", c.name))),
            })
            .collect::<Result<_>>()?;
        for &(i, lo, hi) in &cols {
            if lo == hi {
                log::warn!(
                    "column {} is constant; it normalizes to 0",
                    self.columns[i].name
                );
            }
        }
        Ok(rows
            .iter()
            .map(|r| {
                FeatureVector::new(
                    cols.iter()
                        .map(|&(i, lo, hi)| normalize_value(r[i], lo, hi, range))
                        .collect(),
                )
            })
            .collect())
    }

    /// Integer parameter values; fractional values are rejected.
    pub fn parameters(&self, rows: &[Vec<f64>]) -> Result<Vec<i64>> {
        self.check_width(rows)?;
        let i = self
            .parameter_column()?
            .ok_or_else(|| Error::Schema("no parameter column".into()))?;
        rows.iter()
            .map(|r| {
                let v = r[i];
                if v.fract() != 0.0 || v.abs() > i64::MAX as f64 / 2.0 {
                    Err(Error::Schema(format!(
                        "parameter value {v} is not an integer; quantize it first"
                    )))
                } else {
                    Ok(v as i64)
                }
            })
            .collect()
    }

    pub fn ids(&self, rows: &[Vec<f64>]) -> Result<Option<Vec<i64>>> {
        self.check_width(rows)?;
        Ok(self
            .id_column()?
            .map(|i| rows.iter().map(|r| r[i] as i64).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_mapping() {
        assert_eq!(normalize_value(2.0, 2.0, 6.0, 256), 0);
        assert_eq!(normalize_value(6.0, 2.0, 6.0, 256), 255);
        assert_eq!(normalize_value(4.0, 2.0, 6.0, 256), 128);
        assert_eq!(normalize_value(-10.0, 2.0, 6.0, 256), 0);
        assert_eq!(normalize_value(99.0, 2.0, 6.0, 256), 255);
        assert_eq!(normalize_value(3.0, 3.0, 3.0, 256), 0);
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            [[column]]
            name = "unit"
            role = "id"

            [[column]]
            name = "s1"
            role = "feature"
            min = 0.5
            max = 1.5

            [[column]]
            name = "rul"
            role = "parameter"
        "#;
        let s = ColumnSchema::from_toml_str(text).unwrap();
        assert_eq!(s.feature_count(), 1);
        assert_eq!(s.parameter_column().unwrap(), Some(2));
        s.validate(true).unwrap();
        assert_eq!(ColumnSchema::from_toml_str(&s.to_toml_string()).unwrap(), s);
    }

    #[test]
    fn bad_schemas() {
        assert!(ColumnSchema::from_toml_str(
            "[[column]]\nname='a'\nrole='feature'\nmin=2.0\nmax=1.0\n"
        )
        .is_err());
        assert!(ColumnSchema::from_toml_str("[[column]]\nname='a'\nrole='color'\n").is_err());
        let only_ids = ColumnSchema::new(vec![ColumnSpec::new("u", ColumnRole::Id)]);
        assert!(only_ids.validate(false).is_err());
        assert!(ColumnSchema::all_features(2).validate(true).is_err());
        let two_params = ColumnSchema::new(vec![
            ColumnSpec::new("a", ColumnRole::Feature),
            ColumnSpec::new("t1", ColumnRole::Parameter),
            ColumnSpec::new("t2", ColumnRole::Parameter),
        ]);
        assert!(two_params.validate(true).is_err());
    }

    #[test]
    fn fitted_bounds_are_reused() {
        let train = vec![vec![1.0, 10.0], vec![3.0, 10.0], vec![2.0, 10.0]];
        let mut s = ColumnSchema::all_features(2);
        assert!(s.normalize(&train, 256).is_err());
        s.fit_bounds(&train).unwrap();
        assert!(s.has_bounds());
        let v = s.normalize(&train, 256).unwrap();
        assert_eq!(v[0].values(), &[0, 0]);
        assert_eq!(v[1].values(), &[255, 0]);
        assert_eq!(v[2].values(), &[128, 0]);
        // test rows outside the training bounds clamp
        let test = s.normalize(&[vec![5.0, 11.0]], 256).unwrap();
        assert_eq!(test[0].values(), &[255, 0]);
    }

    #[test]
    fn parameters_must_be_integral() {
        let mut s = ColumnSchema::all_features(1);
        s.columns.push(ColumnSpec::new("t", ColumnRole::Parameter));
        assert_eq!(s.parameters(&[vec![0.0, 7.0]]).unwrap(), vec![7]);
        assert!(s.parameters(&[vec![0.0, 7.5]]).is_err());
    }
}
