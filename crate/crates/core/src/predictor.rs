//! Parameter prediction by histogram accumulation.
//!
//! Each `(dimension, feature value)` slot remembers how often every parameter
//! value `t` was observed together with that feature value. A query adds up
//! the slots it hits, and the histogram's mode is the prediction.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::FeatureVector;

/// Spans wider than this fall back to a sparse accumulator.
const DENSE_SPAN_LIMIT: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamIndex {
    dims: usize,
    range: u32,
    // indexed by dim * range + value; (t, count) sorted by t
    tables: Vec<Vec<(i64, u32)>>,
    t_min: i64,
    t_max: i64,
    rows: u64,
}

impl ParamIndex {
    pub fn build<'a, I>(dims: usize, range: u32, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a FeatureVector, i64)>,
    {
        if dims < 1 || range < 2 {
            return Err(Error::Config(format!(
                "invalid parameter index shape: {dims} dims, range {range}"
            )));
        }
        let mut acc: Vec<BTreeMap<i64, u32>> = vec![BTreeMap::new(); dims * range as usize];
        let (mut t_min, mut t_max, mut count) = (i64::MAX, i64::MIN, 0u64);
        for (x, t) in rows {
            if x.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: x.len(),
                });
            }
            for (dim, &value) in x.values().iter().enumerate() {
                if value >= range {
                    return Err(Error::ValueOutOfRange { dim, value, range });
                }
            }
            for (k, &v) in x.values().iter().enumerate() {
                *acc[k * range as usize + v as usize].entry(t).or_default() += 1;
            }
            t_min = t_min.min(t);
            t_max = t_max.max(t);
            count += 1;
        }
        if count == 0 {
            t_min = 0;
            t_max = 0;
        }
        Ok(ParamIndex {
            dims,
            range,
            tables: acc.into_iter().map(|m| m.into_iter().collect()).collect(),
            t_min,
            t_max,
            rows: count,
        })
    }

    pub(crate) fn from_parts(
        dims: usize,
        range: u32,
        tables: Vec<Vec<(i64, u32)>>,
        t_min: i64,
        t_max: i64,
        rows: u64,
    ) -> Self {
        ParamIndex {
            dims,
            range,
            tables,
            t_min,
            t_max,
            rows,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    /// Observed parameter bounds, `None` when built from no rows.
    pub fn t_bounds(&self) -> Option<(i64, i64)> {
        (self.rows > 0).then_some((self.t_min, self.t_max))
    }

    /// `(t, count)` pairs seen with `value` in dimension `dim` (0-based).
    pub fn table(&self, dim: usize, value: u32) -> &[(i64, u32)] {
        if dim >= self.dims || value >= self.range {
            return &[];
        }
        &self.tables[dim * self.range as usize + value as usize]
    }

    pub(crate) fn tables(&self) -> &[Vec<(i64, u32)>] {
        &self.tables
    }

    fn validate(&self, x: &FeatureVector) -> Result<()> {
        if x.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: x.len(),
            });
        }
        if let Some((dim, &value)) = x
            .values()
            .iter()
            .enumerate()
            .find(|(_, &v)| v >= self.range)
        {
            return Err(Error::ValueOutOfRange {
                dim,
                value,
                range: self.range,
            });
        }
        Ok(())
    }

    pub fn predict_histogram(&self, x: &FeatureVector) -> Result<ParamHistogram> {
        self.validate(x)?;
        let slots = x
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| &self.tables[k * self.range as usize + v as usize]);

        let span = (self.t_max as i128 - self.t_min as i128 + 1) as u64;
        if self.rows == 0 {
            return Ok(ParamHistogram::default());
        }
        if span <= DENSE_SPAN_LIMIT {
            let mut dense = vec![0u64; span as usize];
            for slot in slots {
                for &(t, c) in slot {
                    dense[(t - self.t_min) as usize] += c as u64;
                }
            }
            let counts = dense
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(i, c)| (self.t_min + i as i64, c))
                .collect();
            Ok(ParamHistogram { counts })
        } else {
            let mut sparse: BTreeMap<i64, u64> = BTreeMap::new();
            for slot in slots {
                for &(t, c) in slot {
                    *sparse.entry(t).or_default() += c as u64;
                }
            }
            Ok(ParamHistogram {
                counts: sparse.into_iter().collect(),
            })
        }
    }

    /// Most probable parameter value for `x`.
    pub fn predict_value(&self, x: &FeatureVector) -> Result<i64> {
        self.predict_histogram(x)?
            .argmax_t()
            .ok_or(Error::NoEvidence)
    }
}

/// Vote counts over parameter values, sorted by `t`, zero counts omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamHistogram {
    counts: Vec<(i64, u64)>,
}

impl ParamHistogram {
    pub fn from_counts<I: IntoIterator<Item = (i64, u64)>>(pairs: I) -> Self {
        let mut acc: BTreeMap<i64, u64> = BTreeMap::new();
        for (t, c) in pairs {
            if c > 0 {
                *acc.entry(t).or_default() += c;
            }
        }
        ParamHistogram {
            counts: acc.into_iter().collect(),
        }
    }

    pub fn as_slice(&self) -> &[(i64, u64)] {
        &self.counts
    }

    pub fn get(&self, t: i64) -> u64 {
        self.counts
            .binary_search_by_key(&t, |&(v, _)| v)
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    /// Mode of the histogram; ties go to the smaller `t` so that a predicted
    /// lifetime never picks the longer of two equally likely values.
    pub fn argmax_t(&self) -> Option<i64> {
        let mut best: Option<(i64, u64)> = None;
        for &(t, c) in &self.counts {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((t, c));
            }
        }
        best.map(|(t, _)| t)
    }

    pub fn spread(&self) -> Result<Spread> {
        let mode = self.argmax_t().ok_or(Error::NoEvidence)?;
        let total = self.total() as i128;
        let weighted: i128 = self
            .counts
            .iter()
            .map(|&(t, c)| t as i128 * c as i128)
            .sum();
        Ok(Spread {
            mode,
            mean: weighted as f64 / total as f64,
            skew: weighted.cmp(&(mode as i128 * total)),
        })
    }
}

/// Shape summary of a parameter histogram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spread {
    pub mode: i64,
    pub mean: f64,
    /// Sign of `mean - mode`. A non-equal value flags an asymmetric histogram.
    pub skew: Ordering,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv<const N: usize>(v: [u32; N]) -> FeatureVector {
        FeatureVector::from(v)
    }

    #[test]
    fn single_row_index() {
        let x = fv([0, 0]);
        let idx = ParamIndex::build(2, 4, [(&x, 7)]).unwrap();
        assert_eq!(idx.table(0, 0), &[(7, 1)]);
        assert_eq!(idx.table(1, 0), &[(7, 1)]);
        let h = idx.predict_histogram(&x).unwrap();
        assert_eq!(h.as_slice(), &[(7, 2)]);
        assert_eq!(idx.predict_value(&x).unwrap(), 7);
        assert!(idx.predict_histogram(&fv([1, 1])).unwrap().is_empty());
        assert!(matches!(
            idx.predict_value(&fv([1, 1])),
            Err(Error::NoEvidence)
        ));
    }

    #[test]
    fn duplicates_accumulate() {
        let x = fv([0, 0]);
        let idx = ParamIndex::build(2, 4, [(&x, 7), (&x, 7)]).unwrap();
        assert_eq!(idx.table(0, 0), &[(7, 2)]);
        assert_eq!(idx.t_bounds(), Some((7, 7)));
    }

    #[test]
    fn build_rejects_bad_rows() {
        let a = fv([0, 0]);
        let b = fv([0]);
        assert!(ParamIndex::build(2, 4, [(&a, 1), (&b, 2)]).is_err());
        let c = fv([0, 4]);
        assert!(ParamIndex::build(2, 4, [(&c, 1)]).is_err());
        let idx = ParamIndex::build(2, 4, [(&a, 1)]).unwrap();
        assert!(idx.predict_histogram(&b).is_err());
    }

    #[test]
    fn conservative_tie_break() {
        let h = ParamHistogram::from_counts([(40, 5), (21, 5)]);
        assert_eq!(h.argmax_t(), Some(21));
        assert_eq!(ParamHistogram::from_counts([(7, 2)]).argmax_t(), Some(7));
    }

    #[test]
    fn wide_parameter_span_uses_sparse_path() {
        let a = fv([1]);
        let b = fv([1]);
        let idx = ParamIndex::build(1, 2, [(&a, -5_000_000), (&b, 9_000_000)]).unwrap();
        let h = idx.predict_histogram(&a).unwrap();
        assert_eq!(h.as_slice(), &[(-5_000_000, 1), (9_000_000, 1)]);
        assert_eq!(h.argmax_t(), Some(-5_000_000));
    }

    #[test]
    fn spread_examples() {
        let s = ParamHistogram::from_counts([(5, 1), (6, 2), (7, 1)])
            .spread()
            .unwrap();
        assert_eq!((s.mode, s.mean, s.skew), (6, 6.0, Ordering::Equal));

        let s = ParamHistogram::from_counts([(5, 3), (6, 2), (7, 1)])
            .spread()
            .unwrap();
        assert_eq!((s.mode, s.skew), (5, Ordering::Greater));
        assert!((s.mean - 17.0 / 3.0).abs() < 1e-12);

        let s = ParamHistogram::from_counts([(3, 1), (6, 2)])
            .spread()
            .unwrap();
        assert_eq!((s.mode, s.mean, s.skew), (6, 5.0, Ordering::Less));

        assert!(ParamHistogram::default().spread().is_err());
    }
}
