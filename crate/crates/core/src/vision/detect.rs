use std::collections::BTreeMap;

use super::{
    build_class_mask, cluster_pixels, diff_mask, select_pixels, train_pixels, ClassMaskSet,
    MaskThreshold, PixelCluster, RasterImage,
};
use crate::error::Result;
use crate::index::{BitPattern, CategoricalModel, ClassId, Model};
use crate::levels::{histogram_to_metapattern, LabelTable, DEFAULT_META_THRESHOLD};

/// Winning object class and its accumulated cluster activity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Detection {
    pub class: ClassId,
    pub activity: u32,
}

fn cluster_pattern(
    objects: &CategoricalModel,
    cluster: &PixelCluster,
    threshold: u32,
) -> BitPattern {
    histogram_to_metapattern(&cluster.histogram, threshold)
        .present()
        .iter()
        .copied()
        .filter(|&c| c <= objects.categories())
        .collect()
}

/// Recognizes each cluster at the object level and sums the winning vote
/// counts per object class. Clusters below the object model's recognition
/// threshold contribute nothing.
pub fn recognize_clusters(
    objects: &CategoricalModel,
    clusters: &[PixelCluster],
    threshold: u32,
) -> Result<Option<Detection>> {
    let mut activity: BTreeMap<ClassId, u32> = BTreeMap::new();
    for cluster in clusters {
        let h = objects.classify(&cluster_pattern(objects, cluster, threshold))?;
        if let Some(id) = h.argmax().filter(|_| objects.is_recognized(&h)) {
            *activity.entry(id).or_default() += h.max_count();
        }
    }
    let mut best: Option<Detection> = None;
    for (class, a) in activity {
        if best.is_none_or(|b| a > b.activity) {
            best = Some(Detection { class, activity: a });
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    pub radius: u32,
    pub window: u32,
    pub diff_threshold: u32,
    pub mask_threshold: MaskThreshold,
    pub cluster_distance: u32,
    pub meta_threshold: u32,
    pub recognition_threshold: u32,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            // 5% of the 8-bit range
            radius: 13,
            window: 3,
            diff_threshold: 12,
            mask_threshold: MaskThreshold::default(),
            cluster_distance: 1,
            meta_threshold: DEFAULT_META_THRESHOLD,
            recognition_threshold: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObjectTraining {
    pub changed_pixels: usize,
    pub new_pixel_classes: usize,
    pub masked_classes: usize,
    pub object_classes: Vec<ClassId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DetectionReport {
    pub selected_pixels: usize,
    pub clusters: usize,
    pub detection: Option<Detection>,
    pub label: Option<String>,
}

/// Two-level object detector: pixel classes below, object classes above.
#[derive(Clone, Debug)]
pub struct Detector {
    config: DetectorConfig,
    pixels: Model,
    masked: ClassMaskSet,
    objects: CategoricalModel,
    labels: LabelTable,
}

impl Detector {
    pub fn new(config: DetectorConfig, channels: usize) -> Result<Self> {
        Ok(Detector {
            pixels: Model::new(channels, 256, config.radius)?,
            objects: CategoricalModel::new(0, config.recognition_threshold)?,
            masked: ClassMaskSet::new(),
            labels: LabelTable::new(),
            config,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn pixel_model(&self) -> &Model {
        &self.pixels
    }

    pub fn object_model(&self) -> &CategoricalModel {
        &self.objects
    }

    pub fn masked(&self) -> &ClassMaskSet {
        &self.masked
    }

    pub fn labels(&self) -> &LabelTable {
        &self.labels
    }

    /// Learns the object that differs between `background` and `frame`.
    ///
    /// Pixel classes are trained on the difference region. If the background
    /// alone then yields any selectable pixels, the classes that win there
    /// too often are masked. The surviving object pixels are clustered and
    /// every cluster's meta-pattern is trained at the object level under
    /// `label`.
    pub fn train_object(
        &mut self,
        background: &RasterImage,
        frame: &RasterImage,
        label: &str,
    ) -> Result<ObjectTraining> {
        let changed = diff_mask(
            background,
            frame,
            self.config.window,
            self.config.diff_threshold,
        )?;
        let new_pixel_classes = train_pixels(&mut self.pixels, frame, &changed)?;

        if !select_pixels(&self.pixels, background, &self.masked)?.is_empty() {
            let more = build_class_mask(&self.pixels, background, self.config.mask_threshold)?;
            self.masked.extend(&more);
        }

        let object_pixels: Vec<_> = select_pixels(&self.pixels, frame, &self.masked)?
            .into_iter()
            .filter(|p| changed.get(p.x, p.y))
            .collect();
        self.objects.grow_categories(self.pixels.len() as u32);
        let mut object_classes = Vec::new();
        for cluster in cluster_pixels(&object_pixels, self.config.cluster_distance) {
            let pattern = cluster_pattern(&self.objects, &cluster, self.config.meta_threshold);
            if pattern.is_empty() {
                continue;
            }
            let (id, _) = self.objects.train(&pattern)?;
            self.labels.attach(id, label);
            object_classes.push(id);
        }
        object_classes.sort_unstable();
        object_classes.dedup();
        Ok(ObjectTraining {
            changed_pixels: changed.count(),
            new_pixel_classes,
            masked_classes: self.masked.len(),
            object_classes,
        })
    }

    pub fn clusters(&self, frame: &RasterImage) -> Result<Vec<PixelCluster>> {
        let selected = select_pixels(&self.pixels, frame, &self.masked)?;
        Ok(cluster_pixels(&selected, self.config.cluster_distance))
    }

    pub fn detect(&self, frame: &RasterImage) -> Result<DetectionReport> {
        let clusters = self.clusters(frame)?;
        let detection = recognize_clusters(&self.objects, &clusters, self.config.meta_threshold)?;
        Ok(DetectionReport {
            selected_pixels: clusters.iter().map(PixelCluster::len).sum(),
            clusters: clusters.len(),
            label: detection.map(|d| self.labels.lookup(d.class).to_owned()),
            detection,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ClassHistogram;
    use crate::vision::{BoundingBox, LabeledPixel};

    fn cluster_with(counts: &[(ClassId, u32)]) -> PixelCluster {
        PixelCluster {
            members: vec![LabeledPixel {
                y: 0,
                x: 0,
                class: 1,
            }],
            bbox: BoundingBox {
                min_x: 0,
                min_y: 0,
                max_x: 0,
                max_y: 0,
            },
            histogram: ClassHistogram::from_counts(counts.iter().copied()),
        }
    }

    fn objects() -> CategoricalModel {
        let mut m = CategoricalModel::new(10, 2).unwrap();
        m.insert_class(&BitPattern::new([1, 2, 3])).unwrap();
        m.insert_class(&BitPattern::new([7, 8])).unwrap();
        m
    }

    #[test]
    fn exact_cluster_match() {
        let d = recognize_clusters(&objects(), &[cluster_with(&[(1, 5), (2, 4), (3, 9)])], 2)
            .unwrap()
            .unwrap();
        assert_eq!(
            d,
            Detection {
                class: 1,
                activity: 3
            }
        );
    }

    #[test]
    fn rejected_clusters_give_nothing() {
        let clusters = [cluster_with(&[(1, 5), (7, 1)]), cluster_with(&[(9, 8)])];
        assert_eq!(recognize_clusters(&objects(), &clusters, 2).unwrap(), None);
        assert_eq!(recognize_clusters(&objects(), &[], 2).unwrap(), None);
    }

    #[test]
    fn more_matching_clusters_win() {
        let a = cluster_with(&[(7, 3), (8, 3)]);
        let b = cluster_with(&[(1, 3), (2, 3), (3, 3)]);
        let d = recognize_clusters(&objects(), &[a.clone(), b, a], 2)
            .unwrap()
            .unwrap();
        assert_eq!(
            d,
            Detection {
                class: 2,
                activity: 4
            }
        );
    }
}
