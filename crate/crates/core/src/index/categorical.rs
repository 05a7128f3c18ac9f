use super::{ClassHistogram, ClassId};
use crate::error::{Error, Result};

/// Set of categories present in a binary pattern. Categories are numbered from 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitPattern {
    present: Vec<u32>,
}

impl BitPattern {
    pub fn new<I: IntoIterator<Item = u32>>(categories: I) -> Self {
        let mut present: Vec<u32> = categories.into_iter().collect();
        present.sort_unstable();
        present.dedup();
        BitPattern { present }
    }

    pub fn present(&self) -> &[u32] {
        &self.present
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn contains(&self, category: u32) -> bool {
        self.present.binary_search(&category).is_ok()
    }
}

impl FromIterator<u32> for BitPattern {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        BitPattern::new(iter)
    }
}

/// Inverse-pattern index over categorical (feature-set) patterns.
///
/// Only present categories are indexed and only present categories vote, so
/// the maximum vote is bounded by the size of the query, not by the number of
/// categories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoricalModel {
    categories: u32,
    recognition_threshold: u32,
    postings: Vec<Vec<ClassId>>,
    stored: Vec<BitPattern>,
}

impl CategoricalModel {
    pub fn new(categories: u32, recognition_threshold: u32) -> Result<Self> {
        if recognition_threshold < 1 {
            return Err(Error::Config(
                "recognition threshold must be at least 1".into(),
            ));
        }
        Ok(CategoricalModel {
            categories,
            recognition_threshold,
            postings: vec![Vec::new(); categories as usize],
            stored: Vec::new(),
        })
    }

    pub fn categories(&self) -> u32 {
        self.categories
    }

    /// Widens the category universe. Used when the categories are the classes
    /// of a lower level that keeps learning.
    pub fn grow_categories(&mut self, categories: u32) {
        if categories > self.categories {
            self.categories = categories;
            self.postings.resize(categories as usize, Vec::new());
        }
    }

    pub fn recognition_threshold(&self) -> u32 {
        self.recognition_threshold
    }

    pub fn len(&self) -> usize {
        self.stored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }

    pub fn stored(&self, id: ClassId) -> Option<&BitPattern> {
        self.stored.get((id as usize).checked_sub(1)?)
    }

    pub fn stored_patterns(&self) -> &[BitPattern] {
        &self.stored
    }

    /// Classes whose stored pattern contains `category`.
    pub fn postings(&self, category: u32) -> &[ClassId] {
        match category.checked_sub(1) {
            Some(i) if (i as usize) < self.postings.len() => &self.postings[i as usize],
            _ => &[],
        }
    }

    pub fn validate(&self, p: &BitPattern) -> Result<()> {
        match p.present().iter().find(|&&c| c == 0 || c > self.categories) {
            Some(&category) => Err(Error::CategoryOutOfRange {
                category,
                categories: self.categories,
            }),
            None => Ok(()),
        }
    }

    /// Stores `p` as a new class unconditionally.
    pub fn insert_class(&mut self, p: &BitPattern) -> Result<ClassId> {
        self.validate(p)?;
        if p.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let id = ClassId::try_from(self.stored.len() + 1)
            .map_err(|_| Error::Config("class id space exhausted".into()))?;
        for &c in p.present() {
            self.postings[c as usize - 1].push(id);
        }
        self.stored.push(p.clone());
        Ok(id)
    }

    pub fn classify(&self, p: &BitPattern) -> Result<ClassHistogram> {
        self.validate(p)?;
        let mut counts = vec![0u32; self.stored.len() + 1];
        let mut touched = Vec::new();
        for &c in p.present() {
            for &id in &self.postings[c as usize - 1] {
                if counts[id as usize] == 0 {
                    touched.push(id);
                }
                counts[id as usize] += 1;
            }
        }
        touched.sort_unstable();
        Ok(ClassHistogram::from_sorted(
            touched
                .into_iter()
                .map(|id| (id, counts[id as usize]))
                .collect(),
        ))
    }

    /// True when the histogram's maximum reaches the recognition threshold.
    pub fn is_recognized(&self, h: &ClassHistogram) -> bool {
        h.max_count() >= self.recognition_threshold
    }

    pub fn train(&mut self, p: &BitPattern) -> Result<(ClassId, bool)> {
        let h = self.classify(p)?;
        match h.argmax() {
            Some(id) if self.is_recognized(&h) => Ok((id, false)),
            _ => Ok((self.insert_class(p)?, true)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // letters a..g map to categories 1..7
    const B: u32 = 2;
    const G: u32 = 7;

    fn toy() -> CategoricalModel {
        let mut m = CategoricalModel::new(7, 1).unwrap();
        m.insert_class(&BitPattern::new([G])).unwrap();
        m.insert_class(&BitPattern::new([G])).unwrap();
        m.insert_class(&BitPattern::new([B, G])).unwrap();
        m.insert_class(&BitPattern::new([B])).unwrap();
        m
    }

    #[test]
    fn connectivity_diagram_votes() {
        let m = toy();
        assert_eq!(m.postings(B), &[3, 4]);
        assert_eq!(m.postings(G), &[1, 2, 3]);
        let h = m.classify(&BitPattern::new([B, G])).unwrap();
        assert_eq!(h.as_slice(), &[(1, 1), (2, 1), (3, 2), (4, 1)]);
        assert_eq!(h.argmax(), Some(3));
    }

    #[test]
    fn empty_pattern_has_no_votes() {
        let h = toy().classify(&BitPattern::default()).unwrap();
        assert!(h.is_empty());
        assert_eq!(h.max_count(), 0);
    }

    #[test]
    fn out_of_range_category() {
        let m = toy();
        assert!(matches!(
            m.classify(&BitPattern::new([8])),
            Err(Error::CategoryOutOfRange {
                category: 8,
                categories: 7
            })
        ));
        assert!(m.classify(&BitPattern::new([0])).is_err());
    }

    #[test]
    fn training_rule() {
        let mut m = CategoricalModel::new(10, 2).unwrap();
        assert_eq!(m.train(&BitPattern::new([1, 4, 9])).unwrap(), (1, true));
        assert_eq!(m.train(&BitPattern::new([1, 4])).unwrap(), (1, false));
        assert_eq!(m.train(&BitPattern::new([9])).unwrap(), (2, true));
        assert!(matches!(
            m.train(&BitPattern::default()),
            Err(Error::EmptyPattern)
        ));
        assert!(CategoricalModel::new(3, 0).is_err());
    }

    #[test]
    fn growing_the_universe() {
        let mut m = CategoricalModel::new(2, 1).unwrap();
        assert!(m.insert_class(&BitPattern::new([5])).is_err());
        m.grow_categories(5);
        assert_eq!(m.insert_class(&BitPattern::new([5])).unwrap(), 1);
        m.grow_categories(3);
        assert_eq!(m.categories(), 5);
    }
}
