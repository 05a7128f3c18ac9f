use std::cell::RefCell;

use super::{ClassHistogram, ClassId};
use crate::error::{Error, Result};

/// K integer features, each in `[0, X)` for the model it is used with.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureVector(Vec<u32>);

impl FeatureVector {
    pub fn new(values: Vec<u32>) -> Self {
        FeatureVector(values)
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for FeatureVector {
    fn from(v: Vec<u32>) -> Self {
        FeatureVector(v)
    }
}

impl<const N: usize> From<[u32; N]> for FeatureVector {
    fn from(v: [u32; N]) -> Self {
        FeatureVector(v.to_vec())
    }
}

/// Mean size of the non-empty posting lists, kept as an exact ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AverageHeight {
    pub entries: u64,
    pub lists: u64,
}

impl AverageHeight {
    pub fn value(&self) -> f64 {
        self.entries as f64 / self.lists as f64
    }
}

#[derive(Default)]
struct Scratch {
    counts: Vec<u32>,
    touched: Vec<ClassId>,
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

/// Numeric inverse-pattern index.
///
/// For every dimension `k` and feature value `x` the model keeps the sorted
/// list of classes whose prototype has exactly `x` in dimension `k`. Each
/// class therefore appears exactly once per dimension, and lists of one
/// dimension never intersect. The generalization radius is applied only when
/// querying, by sweeping the window `x - R ..= x + R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    dims: usize,
    range: u32,
    radius: u32,
    // indexed by dim * range + value
    postings: Vec<Vec<ClassId>>,
    // row-major, class id n occupies row n - 1
    prototypes: Vec<u32>,
}

impl Model {
    pub fn new(dims: usize, range: u32, radius: u32) -> Result<Self> {
        if dims < 1 {
            return Err(Error::Config("need at least one dimension".into()));
        }
        if range < 2 {
            return Err(Error::Config(format!(
                "feature range {range} must be at least 2"
            )));
        }
        if radius >= range {
            return Err(Error::Config(format!(
                "radius {radius} must be smaller than the feature range {range}"
            )));
        }
        let slots = dims
            .checked_mul(range as usize)
            .ok_or_else(|| Error::Config("dims * range overflows".into()))?;
        Ok(Model {
            dims,
            range,
            radius,
            postings: vec![Vec::new(); slots],
            prototypes: Vec::new(),
        })
    }

    /// Rebuilds a model from its stored prototypes, in class-id order.
    pub fn from_prototypes<I>(dims: usize, range: u32, radius: u32, prototypes: I) -> Result<Self>
    where
        I: IntoIterator<Item = FeatureVector>,
    {
        let mut m = Model::new(dims, range, radius)?;
        for p in prototypes {
            m.insert_class(&p)?;
        }
        Ok(m)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Number of classes N.
    pub fn len(&self) -> usize {
        self.prototypes.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.is_empty()
    }

    pub fn prototype(&self, id: ClassId) -> Option<&[u32]> {
        if id == 0 || id as usize > self.len() {
            return None;
        }
        let start = (id as usize - 1) * self.dims;
        Some(&self.prototypes[start..start + self.dims])
    }

    pub fn prototypes(&self) -> impl Iterator<Item = &[u32]> {
        self.prototypes.chunks_exact(self.dims)
    }

    /// Posting list for `value` in dimension `dim` (0-based). Empty when out of range.
    pub fn postings(&self, dim: usize, value: u32) -> &[ClassId] {
        if dim >= self.dims || value >= self.range {
            return &[];
        }
        &self.postings[dim * self.range as usize + value as usize]
    }

    /// Non-empty posting lists of one dimension as `(value, classes)`.
    pub fn lists(&self, dim: usize) -> impl Iterator<Item = (u32, &[ClassId])> {
        let r = self.range as usize;
        self.postings[dim * r..(dim + 1) * r]
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(x, l)| (x as u32, l.as_slice()))
    }

    pub fn validate(&self, x: &FeatureVector) -> Result<()> {
        if x.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: x.len(),
            });
        }
        for (dim, &value) in x.values().iter().enumerate() {
            if value >= self.range {
                return Err(Error::ValueOutOfRange {
                    dim,
                    value,
                    range: self.range,
                });
            }
        }
        Ok(())
    }

    /// Appends `x` as a new class and returns its id (the new N).
    pub fn insert_class(&mut self, x: &FeatureVector) -> Result<ClassId> {
        self.validate(x)?;
        let id = ClassId::try_from(self.len() + 1)
            .map_err(|_| Error::Config("class id space exhausted".into()))?;
        let r = self.range as usize;
        for (k, &v) in x.values().iter().enumerate() {
            // ids grow monotonically, so a push keeps the list sorted
            self.postings[k * r + v as usize].push(id);
        }
        self.prototypes.extend_from_slice(x.values());
        Ok(id)
    }

    fn window(&self, value: u32, radius: u32) -> std::ops::RangeInclusive<u32> {
        let lo = value.saturating_sub(radius);
        let hi = (value as u64 + radius as u64).min(self.range as u64 - 1) as u32;
        lo..=hi
    }

    fn accumulate(&self, x: &[u32], radius: u32, scratch: &mut Scratch) -> u64 {
        let n = self.len() + 1;
        if scratch.counts.len() < n {
            scratch.counts.resize(n, 0);
        }
        let r = self.range as usize;
        let mut visited = 0u64;
        for (k, &v) in x.iter().enumerate() {
            let base = k * r;
            for value in self.window(v, radius) {
                let list = &self.postings[base + value as usize];
                visited += list.len() as u64;
                for &id in list {
                    let c = &mut scratch.counts[id as usize];
                    if *c == 0 {
                        scratch.touched.push(id);
                    }
                    *c += 1;
                }
            }
        }
        visited
    }

    fn drain(scratch: &mut Scratch) -> ClassHistogram {
        scratch.touched.sort_unstable();
        let counts = scratch
            .touched
            .drain(..)
            .map(|id| {
                let c = std::mem::take(&mut scratch.counts[id as usize]);
                (id, c)
            })
            .collect();
        ClassHistogram::from_sorted(counts)
    }

    /// Class histogram of `x` under the model's own radius.
    pub fn classify(&self, x: &FeatureVector) -> Result<ClassHistogram> {
        self.classify_with_radius(x, self.radius)
    }

    /// Class histogram of `x` with the query window widened to `radius`.
    pub fn classify_with_radius(&self, x: &FeatureVector, radius: u32) -> Result<ClassHistogram> {
        Ok(self.classify_instrumented(x, radius)?.0)
    }

    /// Like [`classify_with_radius`](Self::classify_with_radius) but also
    /// returns the number of posting entries visited.
    pub fn classify_instrumented(
        &self,
        x: &FeatureVector,
        radius: u32,
    ) -> Result<(ClassHistogram, u64)> {
        self.validate(x)?;
        Ok(SCRATCH.with(|s| {
            let mut s = s.borrow_mut();
            let visited = self.accumulate(x.values(), radius, &mut s);
            (Self::drain(&mut s), visited)
        }))
    }

    /// True when every feature of `x` lies within the radius of some class.
    pub fn is_full_match(&self, h: &ClassHistogram) -> bool {
        h.max_count() as usize == self.dims
    }

    /// One instant-learning step: returns the matching class, or creates one.
    pub fn train_step(&mut self, x: &FeatureVector) -> Result<(ClassId, bool)> {
        let h = self.classify(x)?;
        match h.argmax() {
            Some(id) if self.is_full_match(&h) => Ok((id, false)),
            _ => Ok((self.insert_class(x)?, true)),
        }
    }

    /// Finds the smallest class within the radius of `x` in every dimension by
    /// narrowing a candidate set one dimension at a time, without building
    /// the full histogram.
    pub fn classify_exact_fast(&self, x: &FeatureVector) -> Result<Option<ClassId>> {
        self.validate(x)?;
        let v = x.values();
        let mut candidates: Vec<ClassId> = Vec::new();
        for value in self.window(v[0], self.radius) {
            candidates.extend_from_slice(self.postings(0, value));
        }
        candidates.sort_unstable();

        let mut next = Vec::new();
        for (k, &value) in v.iter().enumerate().skip(1) {
            if candidates.is_empty() {
                break;
            }
            next.clear();
            for w in self.window(value, self.radius) {
                intersect_into(&candidates, self.postings(k, w), &mut next);
            }
            next.sort_unstable();
            std::mem::swap(&mut candidates, &mut next);
        }
        Ok(candidates.first().copied())
    }

    /// Mean size of the non-empty posting lists over all dimensions.
    pub fn avg_height(&self) -> Result<AverageHeight> {
        let lists = self.postings.iter().filter(|l| !l.is_empty()).count() as u64;
        if lists == 0 {
            return Err(Error::EmptyModel);
        }
        let entries = self.postings.iter().map(|l| l.len() as u64).sum();
        Ok(AverageHeight { entries, lists })
    }

    /// Number of posting entries a classification of `x` walks through.
    pub fn touched_mass(&self, x: &FeatureVector) -> Result<u64> {
        self.touched_mass_with_radius(x, self.radius)
    }

    pub fn touched_mass_with_radius(&self, x: &FeatureVector, radius: u32) -> Result<u64> {
        self.validate(x)?;
        Ok(x.values()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                self.window(v, radius)
                    .map(|w| self.postings(k, w).len() as u64)
                    .sum::<u64>()
            })
            .sum())
    }
}

/// Appends `a ∩ b` to `out`; both inputs sorted ascending.
fn intersect_into(a: &[ClassId], b: &[ClassId], out: &mut Vec<ClassId>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}
