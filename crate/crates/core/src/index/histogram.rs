use std::collections::BTreeMap;

use super::ClassId;

/// Vote counts per class for one query.
///
/// Entries are kept sorted by class id with zero counts omitted. The argmax is
/// the smallest class id attaining the maximum, so ties resolve the same way
/// regardless of how the votes were accumulated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassHistogram {
    counts: Vec<(ClassId, u32)>,
    max_count: u32,
    argmax: Option<ClassId>,
}

impl ClassHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a histogram from `(class, count)` pairs. Repeated classes accumulate.
    pub fn from_counts<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (ClassId, u32)>,
    {
        let mut acc: BTreeMap<ClassId, u32> = BTreeMap::new();
        for (id, c) in pairs {
            if c > 0 {
                *acc.entry(id).or_default() += c;
            }
        }
        Self::from_sorted(acc.into_iter().collect())
    }

    /// Builds a histogram that counts one vote per occurrence of each class.
    pub fn from_votes<I>(votes: I) -> Self
    where
        I: IntoIterator<Item = ClassId>,
    {
        Self::from_counts(votes.into_iter().map(|id| (id, 1)))
    }

    /// `counts` must be sorted by id, unique, and nonzero.
    pub(crate) fn from_sorted(counts: Vec<(ClassId, u32)>) -> Self {
        debug_assert!(counts.windows(2).all(|w| w[0].0 < w[1].0));
        let mut max_count = 0;
        let mut argmax = None;
        for &(id, c) in &counts {
            if c > max_count {
                max_count = c;
                argmax = Some(id);
            }
        }
        Self {
            counts,
            max_count,
            argmax,
        }
    }

    pub fn get(&self, id: ClassId) -> u32 {
        self.counts
            .binary_search_by_key(&id, |&(n, _)| n)
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    pub fn max_count(&self) -> u32 {
        self.max_count
    }

    /// Smallest class id attaining [`max_count`](Self::max_count), `None` when empty.
    pub fn argmax(&self) -> Option<ClassId> {
        self.argmax
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Number of classes with a nonzero count.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, u32)> + '_ {
        self.counts.iter().copied()
    }

    pub fn as_slice(&self) -> &[(ClassId, u32)] {
        &self.counts
    }

    /// Classes whose count reaches `threshold`, in increasing id order.
    pub fn above(&self, threshold: u32) -> impl Iterator<Item = ClassId> + '_ {
        self.counts
            .iter()
            .filter(move |&&(_, c)| c >= threshold)
            .map(|&(id, _)| id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_smallest_id_on_ties() {
        let h = ClassHistogram::from_counts([(7, 3), (2, 3), (4, 1)]);
        assert_eq!(h.max_count(), 3);
        assert_eq!(h.argmax(), Some(2));
        assert_eq!(h.get(4), 1);
        assert_eq!(h.get(5), 0);
        assert_eq!(h.total(), 7);
    }

    #[test]
    fn empty_histogram() {
        let h = ClassHistogram::from_votes([]);
        assert!(h.is_empty());
        assert_eq!(h.max_count(), 0);
        assert_eq!(h.argmax(), None);
    }

    #[test]
    fn votes_accumulate() {
        let h = ClassHistogram::from_votes([3, 1, 3, 3, 1]);
        assert_eq!(h.as_slice(), &[(1, 2), (3, 3)]);
        assert_eq!(h.argmax(), Some(3));
    }
}
