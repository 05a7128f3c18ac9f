use crate::error::{Error, Result};
use crate::index::FeatureVector;

/// 8-bit raster, 1 or 3 channels, row-major interleaved samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, channels: u8, samples: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::ImageMismatch(format!(
                "unsupported channel count {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(Error::ImageMismatch(format!(
                "{width}x{height}x{channels} needs {expected} samples, got {}",
                samples.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            samples,
        })
    }

    /// Image filled with one color; `color.len()` sets the channel count.
    pub fn filled(width: u32, height: u32, color: &[u8]) -> Result<Self> {
        let samples = color
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * color.len())
            .collect();
        RasterImage::new(width, height, color.len() as u8, samples)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.samples[o..o + self.channels as usize]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, value: &[u8]) {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        self.samples[o..o + c].copy_from_slice(&value[..c]);
    }

    /// The pixel's channel tuple as a feature vector over `[0, 256)`.
    pub fn pixel_features(&self, x: u32, y: u32) -> FeatureVector {
        FeatureVector::new(self.pixel(x, y).iter().map(|&s| s as u32).collect())
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &RasterImage) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ImageMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }
}

/// One flag per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn empty(width: u32, height: u32) -> Self {
        PixelMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        PixelMask {
            width,
            height,
            bits: vec![true; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    pub(crate) fn check_fits(&self, img: &RasterImage) -> Result<()> {
        if self.width == img.width() && self.height == img.height() {
            Ok(())
        } else {
            Err(Error::ImageMismatch(format!(
                "mask {}x{} vs image {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )))
        }
    }
}
