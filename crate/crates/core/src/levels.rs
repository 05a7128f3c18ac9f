//! Multilevel stacking.
//!
//! Level 1 sees raw patterns. It classifies every input of a sequence and
//! counts one vote per winning class. Thresholding that vote histogram yields
//! a binary meta-pattern whose categories are level-1 class ids, and the next
//! level classifies it like any other categorical pattern.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::{BitPattern, CategoricalModel, ClassHistogram, ClassId, FeatureVector, Model};

pub const UNLABELED: &str = "unlabeled";

/// Default vote threshold for turning a histogram into a meta-pattern.
pub const DEFAULT_META_THRESHOLD: u32 = 2;

/// Teacher table mapping inner classes to external labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelTable {
    labels: BTreeMap<ClassId, String>,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn attach(&mut self, inner: ClassId, label: impl Into<String>) {
        self.labels.insert(inner, label.into());
    }

    pub fn lookup(&self, inner: ClassId) -> &str {
        self.labels
            .get(&inner)
            .map(String::as_str)
            .unwrap_or(UNLABELED)
    }

    pub fn get(&self, inner: ClassId) -> Option<&str> {
        self.labels.get(&inner).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &str)> {
        self.labels.iter().map(|(&id, l)| (id, l.as_str()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distinct labels in sorted order.
    pub fn distinct_labels(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.labels.values().map(String::as_str).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Categories whose vote count reaches `threshold`.
pub fn histogram_to_metapattern(h: &ClassHistogram, threshold: u32) -> BitPattern {
    h.above(threshold).collect()
}

/// Number of classes above threshold in both signature histograms.
pub fn signature_common(h1: &ClassHistogram, h2: &ClassHistogram, th1: u32, th2: u32) -> usize {
    let a = histogram_to_metapattern(h1, th1);
    let b = histogram_to_metapattern(h2, th2);
    let (mut i, mut j, mut n) = (0, 0, 0);
    let (a, b) = (a.present(), b.present());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LevelModel {
    Numeric(Model),
    Categorical(CategoricalModel),
}

impl LevelModel {
    pub fn len(&self) -> usize {
        match self {
            LevelModel::Numeric(m) => m.len(),
            LevelModel::Categorical(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    pub model: LevelModel,
    /// Vote threshold applied to this level's output before it feeds the next level.
    pub output_threshold: u32,
    pub labels: Option<LabelTable>,
}

impl Level {
    pub fn numeric(model: Model) -> Self {
        Level {
            model: LevelModel::Numeric(model),
            output_threshold: DEFAULT_META_THRESHOLD,
            labels: None,
        }
    }

    pub fn categorical(model: CategoricalModel) -> Self {
        Level {
            model: LevelModel::Categorical(model),
            output_threshold: DEFAULT_META_THRESHOLD,
            labels: None,
        }
    }

    pub fn with_output_threshold(mut self, threshold: u32) -> Self {
        self.output_threshold = threshold;
        self
    }

    pub fn with_labels(mut self, labels: LabelTable) -> Self {
        self.labels = Some(labels);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LevelInput {
    Features(FeatureVector),
    Pattern(BitPattern),
}

impl From<FeatureVector> for LevelInput {
    fn from(x: FeatureVector) -> Self {
        LevelInput::Features(x)
    }
}

impl From<BitPattern> for LevelInput {
    fn from(p: BitPattern) -> Self {
        LevelInput::Pattern(p)
    }
}

/// Outcome of pushing one input sequence through a stack.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StackRun {
    /// Level-1 class per input; `None` when the input was not recognized.
    pub winners: Vec<Option<ClassId>>,
    /// Per level: the winner histogram for level 1, the class histogram of
    /// the meta-pattern for every level above.
    pub histograms: Vec<ClassHistogram>,
}

impl StackRun {
    /// The final level's histogram.
    pub fn output(&self) -> &ClassHistogram {
        self.histograms
            .last()
            .expect("a stack has at least one level")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelStack {
    levels: Vec<Level>,
}

impl LevelStack {
    pub fn new(first: Level) -> Self {
        LevelStack {
            levels: vec![first],
        }
    }

    /// Adds a level on top. Levels above the first must be categorical.
    pub fn push(&mut self, level: Level) -> Result<()> {
        if matches!(level.model, LevelModel::Numeric(_)) {
            return Err(Error::Config(
                "levels above the first take meta-patterns and must be categorical".into(),
            ));
        }
        self.levels.push(level);
        Ok(())
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> Option<&Level> {
        self.levels.get(i)
    }

    pub fn level_mut(&mut self, i: usize) -> Option<&mut Level> {
        self.levels.get_mut(i)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn run(&mut self, inputs: &[LevelInput], train: bool) -> Result<StackRun> {
        if train {
            self.train(inputs)
        } else {
            self.classify(inputs)
        }
    }

    pub fn classify(&self, inputs: &[LevelInput]) -> Result<StackRun> {
        let first = &self.levels[0];
        let mut winners = Vec::with_capacity(inputs.len());
        for input in inputs {
            let winner = classify_first(&first.model, input).map_err(|e| e.at_level(1))?;
            winners.push(winner);
        }
        let mut histograms = vec![ClassHistogram::from_votes(
            winners.iter().flatten().copied(),
        )];

        for (i, pair) in self.levels.windows(2).enumerate() {
            let (below, level) = (&pair[0], &pair[1]);
            let LevelModel::Categorical(model) = &level.model else {
                unreachable!("push() only admits categorical upper levels");
            };
            let meta = histogram_to_metapattern(&histograms[i], below.output_threshold);
            // categories this level never saw while training cannot vote
            let meta: BitPattern = meta
                .present()
                .iter()
                .copied()
                .filter(|&c| c <= model.categories())
                .collect();
            let h = model.classify(&meta).map_err(|e| e.at_level(i + 2))?;
            histograms.push(h);
        }
        Ok(StackRun {
            winners,
            histograms,
        })
    }

    pub fn train(&mut self, inputs: &[LevelInput]) -> Result<StackRun> {
        let mut winners = Vec::with_capacity(inputs.len());
        for input in inputs {
            let id = train_first(&mut self.levels[0].model, input).map_err(|e| e.at_level(1))?;
            winners.push(Some(id));
        }
        let mut histograms = vec![ClassHistogram::from_votes(
            winners.iter().flatten().copied(),
        )];

        for i in 1..self.levels.len() {
            let below_classes = self.levels[i - 1].model.len() as u32;
            let threshold = self.levels[i - 1].output_threshold;
            let meta = histogram_to_metapattern(&histograms[i - 1], threshold);
            let LevelModel::Categorical(model) = &mut self.levels[i].model else {
                unreachable!("push() only admits categorical upper levels");
            };
            model.grow_categories(below_classes);
            let h = model
                .train(&meta)
                .and_then(|_| model.classify(&meta))
                .map_err(|e| e.at_level(i + 1))?;
            histograms.push(h);
        }
        Ok(StackRun {
            winners,
            histograms,
        })
    }
}

fn classify_first(model: &LevelModel, input: &LevelInput) -> Result<Option<ClassId>> {
    match (model, input) {
        (LevelModel::Numeric(m), LevelInput::Features(x)) => {
            let h = m.classify(x)?;
            Ok(h.argmax().filter(|_| m.is_full_match(&h)))
        }
        (LevelModel::Categorical(m), LevelInput::Pattern(p)) => {
            let h = m.classify(p)?;
            Ok(h.argmax().filter(|_| m.is_recognized(&h)))
        }
        _ => Err(input_kind_mismatch()),
    }
}

fn train_first(model: &mut LevelModel, input: &LevelInput) -> Result<ClassId> {
    match (model, input) {
        (LevelModel::Numeric(m), LevelInput::Features(x)) => Ok(m.train_step(x)?.0),
        (LevelModel::Categorical(m), LevelInput::Pattern(p)) => Ok(m.train(p)?.0),
        _ => Err(input_kind_mismatch()),
    }
}

fn input_kind_mismatch() -> Error {
    Error::Config("input kind does not match the first level's model".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metapattern_threshold() {
        let h = ClassHistogram::from_counts([(3, 2), (4, 1)]);
        assert_eq!(histogram_to_metapattern(&h, 2).present(), &[3]);
        assert_eq!(histogram_to_metapattern(&h, 1).present(), &[3, 4]);
        assert!(histogram_to_metapattern(&ClassHistogram::new(), 1).is_empty());
    }

    #[test]
    fn label_table() {
        let mut t = LabelTable::new();
        t.attach(5, "water");
        assert_eq!(t.lookup(5), "water");
        assert_eq!(t.lookup(6), UNLABELED);
        t.attach(5, "vegetation");
        assert_eq!(t.lookup(5), "vegetation");
    }

    #[test]
    fn signature_counts() {
        let h = ClassHistogram::from_counts([(1, 5), (2, 1), (3, 4)]);
        assert_eq!(signature_common(&h, &h, 2, 2), 2);
        let g = ClassHistogram::from_counts([(7, 5), (8, 9)]);
        assert_eq!(signature_common(&h, &g, 1, 1), 0);
        let k = ClassHistogram::from_counts([(3, 9), (1, 1)]);
        assert_eq!(signature_common(&h, &k, 2, 2), 1);
        assert_eq!(signature_common(&k, &h, 2, 2), 1);
    }

    #[test]
    fn numeric_upper_level_rejected() {
        let mut s = LevelStack::new(Level::numeric(Model::new(2, 8, 0).unwrap()));
        assert!(s
            .push(Level::numeric(Model::new(2, 8, 0).unwrap()))
            .is_err());
        assert_eq!(s.depth(), 1);
    }

    #[test]
    fn input_kind_mismatch_carries_level() {
        let mut s = LevelStack::new(Level::numeric(Model::new(2, 8, 0).unwrap()));
        let err = s
            .train(&[LevelInput::Pattern(BitPattern::new([1]))])
            .unwrap_err();
        assert!(matches!(err, Error::Level { level: 1, .. }));
    }

    #[test]
    fn two_level_stack_separates_sequences() {
        let mut stack = LevelStack::new(Level::numeric(Model::new(2, 16, 0).unwrap()));
        stack
            .push(Level::categorical(CategoricalModel::new(0, 2).unwrap()))
            .unwrap();

        let seq = |vals: &[[u32; 2]]| -> Vec<LevelInput> {
            vals.iter()
                .map(|&v| FeatureVector::from(v).into())
                .collect()
        };
        let a = seq(&[[1, 1], [2, 2], [1, 1], [2, 2], [1, 1]]);
        let b = seq(&[[9, 9], [9, 9], [12, 3], [12, 3]]);

        let ra = stack.train(&a).unwrap();
        assert_eq!(
            ra.winners,
            vec![Some(1), Some(2), Some(1), Some(2), Some(1)]
        );
        let rb = stack.train(&b).unwrap();
        assert_eq!(rb.winners, vec![Some(3), Some(3), Some(4), Some(4)]);

        let LevelModel::Categorical(top) = &stack.levels()[1].model else {
            panic!()
        };
        assert_eq!(top.len(), 2);
        assert_eq!(top.stored(1).unwrap().present(), &[1, 2]);
        assert_eq!(top.stored(2).unwrap().present(), &[3, 4]);

        let before = stack.clone();
        assert_eq!(stack.classify(&a).unwrap().output().argmax(), Some(1));
        assert_eq!(stack.classify(&b).unwrap().output().argmax(), Some(2));
        assert_eq!(stack, before);
    }
}
