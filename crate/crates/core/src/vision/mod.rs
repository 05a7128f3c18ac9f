//! Image applications of the pixel-level index: teacher-labelled
//! segmentation and background-robust object detection.
//!
//! Every pixel is a pattern of its channel values over `[0, 256)`.

mod cluster;
mod detect;
mod image;
mod pixels;
mod segment;

pub use cluster::{cluster_pixels, BoundingBox, PixelCluster};
pub use detect::{
    recognize_clusters, Detection, DetectionReport, Detector, DetectorConfig, ObjectTraining,
};
pub use image::{PixelMask, RasterImage};
pub use pixels::{
    build_class_mask, diff_mask, pixel_winner, pixel_winner_with_radius, select_pixels,
    train_pixels, win_counts, ClassMaskSet, LabeledPixel, MaskThreshold,
};
pub use segment::{segment_image, segment_image_with_radius, train_areas, LabelMap, TrainingArea};
