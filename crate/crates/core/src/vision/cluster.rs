use std::collections::{HashMap, VecDeque};

use super::LabeledPixel;
use crate::index::ClassHistogram;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_x: u32,
    pub min_y: u32,
    pub max_x: u32,
    pub max_y: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelCluster {
    /// Members in row-major order.
    pub members: Vec<LabeledPixel>,
    pub bbox: BoundingBox,
    /// Member count per pixel class.
    pub histogram: ClassHistogram,
}

impl PixelCluster {
    fn from_members(mut members: Vec<LabeledPixel>) -> Self {
        members.sort_unstable();
        let mut bbox = BoundingBox {
            min_x: u32::MAX,
            min_y: u32::MAX,
            max_x: 0,
            max_y: 0,
        };
        for p in &members {
            bbox.min_x = bbox.min_x.min(p.x);
            bbox.min_y = bbox.min_y.min(p.y);
            bbox.max_x = bbox.max_x.max(p.x);
            bbox.max_y = bbox.max_y.max(p.y);
        }
        let histogram = ClassHistogram::from_votes(members.iter().map(|p| p.class));
        PixelCluster {
            members,
            bbox,
            histogram,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Groups pixels into connected components, two pixels being adjacent when
/// their Chebyshev distance is at most `d`. Components grow breadth-first
/// from their topmost-leftmost pixel and are returned in that order.
/// Duplicate coordinates keep their first occurrence.
pub fn cluster_pixels(pixels: &[LabeledPixel], d: u32) -> Vec<PixelCluster> {
    let mut sorted: Vec<LabeledPixel> = pixels.to_vec();
    sorted.sort_by_key(|p| (p.y, p.x));
    sorted.dedup_by_key(|p| (p.y, p.x));
    if sorted.is_empty() {
        return Vec::new();
    }

    let at: HashMap<(u32, u32), usize> = sorted
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.x, p.y), i))
        .collect();
    let d = d.max(1) as i64;
    let neighborhood = (2 * d + 1) * (2 * d + 1);
    let scan_all = neighborhood as usize > sorted.len();

    let mut seen = vec![false; sorted.len()];
    let mut clusters = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..sorted.len() {
        if seen[seed] {
            continue;
        }
        seen[seed] = true;
        queue.push_back(seed);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            let p = sorted[i];
            members.push(p);
            if scan_all {
                for (j, q) in sorted.iter().enumerate() {
                    if !seen[j]
                        && (p.x as i64 - q.x as i64).abs() <= d
                        && (p.y as i64 - q.y as i64).abs() <= d
                    {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            } else {
                for dy in -d..=d {
                    for dx in -d..=d {
                        let (nx, ny) = (p.x as i64 + dx, p.y as i64 + dy);
                        if nx < 0 || ny < 0 || nx > u32::MAX as i64 || ny > u32::MAX as i64 {
                            continue;
                        }
                        if let Some(&j) = at.get(&(nx as u32, ny as u32)) {
                            if !seen[j] {
                                seen[j] = true;
                                queue.push_back(j);
                            }
                        }
                    }
                }
            }
        }
        clusters.push(PixelCluster::from_members(members));
    }
    clusters
}
