use std::collections::{BTreeMap, BTreeSet};

use super::{PixelMask, RasterImage};
use crate::error::{Error, Result};
use crate::index::{ClassId, Model};

/// Pixels where the mean absolute per-channel difference over a square
/// window exceeds `threshold`. Window coordinates are clamped to the image,
/// so border pixels repeat.
pub fn diff_mask(
    a: &RasterImage,
    b: &RasterImage,
    window: u32,
    threshold: u32,
) -> Result<PixelMask> {
    a.check_same_shape(b)?;
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "window {window} must be odd and positive"
        )));
    }
    let (w, h) = (a.width(), a.height());
    let mut mask = PixelMask::empty(w, h);
    if w == 0 || h == 0 {
        return Ok(mask);
    }

    let c = a.channels() as usize;
    let per_pixel: Vec<u32> = a
        .samples()
        .chunks_exact(c)
        .zip(b.samples().chunks_exact(c))
        .map(|(p, q)| p.iter().zip(q).map(|(&s, &t)| s.abs_diff(t) as u32).sum())
        .collect();

    let half = (window / 2) as i64;
    // mean > threshold  <=>  sum > threshold * samples_in_window
    let limit = threshold as u64 * (window as u64 * window as u64) * c as u64;
    let clamp = |v: i64, n: u32| v.clamp(0, n as i64 - 1) as usize;
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0u64;
            for dy in -half..=half {
                let row = clamp(y as i64 + dy, h) * w as usize;
                for dx in -half..=half {
                    sum += per_pixel[row + clamp(x as i64 + dx, w)] as u64;
                }
            }
            if sum > limit {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

fn check_pixel_model(model: &Model, img: &RasterImage) -> Result<()> {
    if model.dims() != img.channels() as usize {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            got: img.channels() as usize,
        });
    }
    if model.range() != 256 {
        return Err(Error::Config(format!(
            "pixel models need a feature range of 256, got {}",
            model.range()
        )));
    }
    Ok(())
}

/// Class of a pixel when some class matches it in every channel.
pub fn pixel_winner(model: &Model, img: &RasterImage, x: u32, y: u32) -> Result<Option<ClassId>> {
    pixel_winner_with_radius(model, img, x, y, model.radius())
}

pub fn pixel_winner_with_radius(
    model: &Model,
    img: &RasterImage,
    x: u32,
    y: u32,
    radius: u32,
) -> Result<Option<ClassId>> {
    let h = model.classify_with_radius(&img.pixel_features(x, y), radius)?;
    Ok(h.argmax().filter(|_| model.is_full_match(&h)))
}

/// Trains on every masked pixel in row-major order; returns the number of new classes.
pub fn train_pixels(model: &mut Model, img: &RasterImage, mask: &PixelMask) -> Result<usize> {
    check_pixel_model(model, img)?;
    mask.check_fits(img)?;
    let mut created = 0;
    for (x, y) in mask.iter_set() {
        if model.train_step(&img.pixel_features(x, y))?.1 {
            created += 1;
        }
    }
    Ok(created)
}

/// Pixel classes suppressed during detection.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassMaskSet {
    classes: BTreeSet<ClassId>,
}

impl ClassMaskSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.classes.contains(&id)
    }

    pub fn insert(&mut self, id: ClassId) -> bool {
        self.classes.insert(id)
    }

    pub fn extend(&mut self, other: &ClassMaskSet) {
        self.classes.extend(other.classes.iter().copied());
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.classes.iter().copied()
    }
}

impl FromIterator<ClassId> for ClassMaskSet {
    fn from_iter<I: IntoIterator<Item = ClassId>>(iter: I) -> Self {
        ClassMaskSet {
            classes: iter.into_iter().collect(),
        }
    }
}

/// How often a class must win on the background before it is masked.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskThreshold {
    /// Mask classes winning on more than this many pixels.
    Count(u64),
    /// Mask classes winning on more than this fraction of all pixels.
    Fraction(f64),
}

impl Default for MaskThreshold {
    fn default() -> Self {
        MaskThreshold::Count(5)
    }
}

/// Number of background pixels each class wins with a full match.
pub fn win_counts(model: &Model, img: &RasterImage) -> Result<BTreeMap<ClassId, u64>> {
    check_pixel_model(model, img)?;
    let mut freq: BTreeMap<ClassId, u64> = BTreeMap::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if let Some(id) = pixel_winner(model, img, x, y)? {
                *freq.entry(id).or_default() += 1;
            }
        }
    }
    Ok(freq)
}

pub fn build_class_mask(
    model: &Model,
    background: &RasterImage,
    threshold: MaskThreshold,
) -> Result<ClassMaskSet> {
    let freq = win_counts(model, background)?;
    let total = background.pixel_count() as f64;
    Ok(freq
        .into_iter()
        .filter(|&(_, n)| match threshold {
            MaskThreshold::Count(limit) => n > limit,
            MaskThreshold::Fraction(f) => n as f64 > f * total,
        })
        .map(|(id, _)| id)
        .collect())
}

/// A selected pixel together with the class it was recognized as.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledPixel {
    pub y: u32,
    pub x: u32,
    pub class: ClassId,
}

/// Pixels whose winning class fully matches and is not masked, row-major.
pub fn select_pixels(
    model: &Model,
    img: &RasterImage,
    masked: &ClassMaskSet,
) -> Result<Vec<LabeledPixel>> {
    check_pixel_model(model, img)?;
    let mut out = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if let Some(class) = pixel_winner(model, img, x, y)? {
                if !masked.contains(class) {
                    out.push(LabeledPixel { y, x, class });
                }
            }
        }
    }
    Ok(out)
}
