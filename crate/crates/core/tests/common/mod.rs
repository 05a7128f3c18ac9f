//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use invpat::vision::LabeledPixel;
use invpat::{ClassId, FeatureVector, Model};
use rand::Rng;

/// Per-class count of dimensions within `radius`, straight from the prototypes.
pub fn brute_classify(model: &Model, x: &[u32], radius: u32) -> Vec<(ClassId, u32)> {
    model
        .prototypes()
        .enumerate()
        .filter_map(|(i, p)| {
            let n = p
                .iter()
                .zip(x)
                .filter(|(a, b)| a.abs_diff(**b) <= radius)
                .count() as u32;
            (n > 0).then_some((i as ClassId + 1, n))
        })
        .collect()
}

/// Smallest class matching in every dimension, by linear scan.
pub fn brute_full_match(model: &Model, x: &[u32], radius: u32) -> Option<ClassId> {
    model
        .prototypes()
        .position(|p| p.iter().zip(x).all(|(a, b)| a.abs_diff(*b) <= radius))
        .map(|i| i as ClassId + 1)
}

/// Posting entries inside the query window, counted from the prototypes.
pub fn brute_touched(model: &Model, x: &[u32], radius: u32) -> u64 {
    model
        .prototypes()
        .map(|p| {
            p.iter()
                .zip(x)
                .filter(|(a, b)| a.abs_diff(**b) <= radius)
                .count() as u64
        })
        .sum()
}

/// Parameter histogram by scanning every training row.
pub fn brute_param_histogram(rows: &[(FeatureVector, i64)], x: &[u32]) -> Vec<(i64, u64)> {
    let mut acc: BTreeMap<i64, u64> = BTreeMap::new();
    for (v, t) in rows {
        let n = v.values().iter().zip(x).filter(|(a, b)| a == b).count() as u64;
        if n > 0 {
            *acc.entry(*t).or_default() += n;
        }
    }
    acc.into_iter().collect()
}

pub fn random_vector<R: Rng>(rng: &mut R, dims: usize, range: u32) -> FeatureVector {
    FeatureVector::new((0..dims).map(|_| rng.random_range(0..range)).collect())
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components under Chebyshev distance `d`, by all-pairs union-find.
/// Each component is returned as its sorted set of coordinates; duplicate
/// coordinates count once.
pub fn union_find_components(pixels: &[LabeledPixel], d: u32) -> BTreeSet<Vec<(u32, u32)>> {
    let coords: Vec<(u32, u32)> = pixels
        .iter()
        .map(|p| (p.y, p.x))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut uf = UnionFind((0..coords.len()).collect());
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            let (a, b) = (coords[i], coords[j]);
            if a.0.abs_diff(b.0) <= d && a.1.abs_diff(b.1) <= d {
                uf.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<(u32, u32)>> = BTreeMap::new();
    for (i, &c) in coords.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().push(c);
    }
    groups.into_values().collect()
}
