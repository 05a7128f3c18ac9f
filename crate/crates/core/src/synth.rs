//! Seeded synthetic data: uniform class sets, a three-region segmentation
//! scene, and textured detection scenes with colored shapes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::index::{FeatureVector, Model};
use crate::vision::{RasterImage, TrainingArea};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vector<R: Rng>(rng: &mut R, dims: usize, range: u32) -> FeatureVector {
    FeatureVector::new((0..dims).map(|_| rng.random_range(0..range)).collect())
}

/// Model holding `n` uniformly drawn classes, inserted without deduplication.
pub fn uniform_model<R: Rng>(rng: &mut R, n: usize, dims: usize, range: u32, radius: u32) -> Model {
    let mut m = Model::new(dims, range, radius).expect("valid synthetic shape");
    for _ in 0..n {
        m.insert_class(&uniform_vector(rng, dims, range))
            .expect("in range");
    }
    m
}

/// Model whose `n ≤ range` classes take pairwise-distinct values in every dimension.
pub fn spread_model(n: u32, dims: usize, range: u32) -> Model {
    assert!(n <= range);
    let mut m = Model::new(dims, range, 0).expect("valid synthetic shape");
    for i in 0..n {
        let v = (0..dims as u32).map(|k| (i + k * 7) % n).collect();
        m.insert_class(&FeatureVector::new(v)).expect("in range");
    }
    m
}

pub const REGION_LABELS: [&str; 3] = ["water", "buildings", "vegetation"];
pub const REGION_COLORS: [[u8; 3]; 3] = [[30, 60, 170], [165, 160, 150], [60, 150, 50]];

#[derive(Clone, Debug)]
pub struct SegmentationScene {
    pub image: RasterImage,
    /// Region index into [`REGION_LABELS`] per pixel, row-major.
    pub truth: Vec<u8>,
    pub areas: Vec<TrainingArea>,
}

impl SegmentationScene {
    pub fn truth_label(&self, x: u32, y: u32) -> &'static str {
        REGION_LABELS[self.truth[(y * self.image.width() + x) as usize] as usize]
    }

    pub fn in_training_area(&self, x: u32, y: u32) -> bool {
        self.areas.iter().any(|a| a.contains(x, y))
    }
}

/// A disk of "buildings" in the middle, "water" to its left, "vegetation" to
/// its right, with Gaussian noise of standard deviation `sigma` per channel.
/// One `area`×`area` teacher square sits inside each region.
pub fn three_region_scene(size: u32, sigma: f64, area: u32, seed: u64) -> SegmentationScene {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    let c = size as f64 / 2.0;
    let disk = size as f64 * 0.3;
    let mut truth = Vec::with_capacity((size * size) as usize);
    let mut samples = Vec::with_capacity((size * size * 3) as usize);
    for y in 0..size {
        for x in 0..size {
            let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
            let region = if dx * dx + dy * dy <= disk * disk {
                1
            } else if dx < 0.0 {
                0
            } else {
                2
            };
            truth.push(region as u8);
            for &base in &REGION_COLORS[region] {
                let v = base as f64 + noise.sample(&mut rng).round();
                samples.push(v.clamp(0.0, 255.0) as u8);
            }
        }
    }
    let mid = size / 2 - area / 2;
    let margin = size / 32;
    let areas = vec![
        TrainingArea {
            x: margin,
            y: mid,
            width: area,
            height: area,
            label: REGION_LABELS[0].into(),
        },
        TrainingArea {
            x: mid,
            y: mid,
            width: area,
            height: area,
            label: REGION_LABELS[1].into(),
        },
        TrainingArea {
            x: size - margin - area,
            y: mid,
            width: area,
            height: area,
            label: REGION_LABELS[2].into(),
        },
    ];
    SegmentationScene {
        image: RasterImage::new(size, size, 3, samples).expect("consistent shape"),
        truth,
        areas,
    }
}

const GROUND: [[u8; 3]; 4] = [[70, 110, 60], [110, 90, 60], [90, 130, 80], [120, 115, 105]];
const NOISE: i32 = 6;

fn jitter<R: Rng>(rng: &mut R, color: [u8; 3]) -> [u8; 3] {
    color.map(|c| (c as i32 + rng.random_range(-NOISE..=NOISE)).clamp(0, 255) as u8)
}

/// Blocky ground texture: 4×4 tiles drawn from a small earth-tone palette,
/// each pixel jittered.
pub fn textured_background(width: u32, height: u32, seed: u64) -> RasterImage {
    let mut rng = rng(seed);
    let tiles_x = width.div_ceil(4);
    let tiles: Vec<usize> = (0..tiles_x * height.div_ceil(4))
        .map(|_| rng.random_range(0..GROUND.len()))
        .collect();
    let mut img = RasterImage::filled(width, height, &[0, 0, 0]).expect("3 channels");
    for y in 0..height {
        for x in 0..width {
            let tile = tiles[((y / 4) * tiles_x + x / 4) as usize];
            img.set_pixel(x, y, &jitter(&mut rng, GROUND[tile]));
        }
    }
    img
}

/// Shapes used by the detection scenes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeKind {
    /// Red disk resting on a blue bar.
    Cart,
    /// Yellow triangle over a magenta square.
    Kite,
}

impl ShapeKind {
    pub fn label(self) -> &'static str {
        match self {
            ShapeKind::Cart => "cart",
            ShapeKind::Kite => "kite",
        }
    }

    /// Footprint of the shape anchored at its top-left corner.
    pub fn size(self) -> (u32, u32) {
        match self {
            ShapeKind::Cart => (24, 30),
            ShapeKind::Kite => (24, 36),
        }
    }

    fn color_at(self, x: i32, y: i32) -> Option<[u8; 3]> {
        match self {
            ShapeKind::Cart => {
                let (dx, dy) = (x - 12, y - 11);
                if dx * dx + dy * dy <= 100 {
                    Some([210, 35, 40])
                } else if (20..30).contains(&y) && (0..24).contains(&x) {
                    Some([35, 50, 205])
                } else {
                    None
                }
            }
            ShapeKind::Kite => {
                if (0..18).contains(&y) && (x - 12).abs() <= y * 2 / 3 {
                    Some([230, 215, 40])
                } else if (18..36).contains(&y) && (3..21).contains(&x) {
                    Some([200, 40, 190])
                } else {
                    None
                }
            }
        }
    }
}

/// Paints a jittered shape onto `img` with its top-left corner at `(left, top)`.
pub fn paint_shape(img: &mut RasterImage, kind: ShapeKind, left: u32, top: u32, seed: u64) {
    let mut rng = rng(seed);
    let (w, h) = kind.size();
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (left + x, top + y);
            if px >= img.width() || py >= img.height() {
                continue;
            }
            if let Some(c) = kind.color_at(x as i32, y as i32) {
                img.set_pixel(px, py, &jitter(&mut rng, c));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic() {
        let a = three_region_scene(64, 8.0, 8, 3);
        let b = three_region_scene(64, 8.0, 8, 3);
        assert_eq!(a.image, b.image);
        assert_eq!(
            textured_background(20, 20, 1),
            textured_background(20, 20, 1)
        );
    }

    #[test]
    fn training_areas_lie_inside_their_regions() {
        let s = three_region_scene(512, 8.0, 40, 1);
        for a in &s.areas {
            for y in a.y..a.y + a.height {
                for x in a.x..a.x + a.width {
                    assert_eq!(s.truth_label(x, y), a.label);
                }
            }
        }
    }

    #[test]
    fn spread_model_has_unit_height() {
        let m = spread_model(50, 4, 64);
        assert_eq!(m.avg_height().unwrap().value(), 1.0);
    }
}
