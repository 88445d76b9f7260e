//! Scale-invariant keypoints and 128-dimensional gradient descriptors.
//!
//! The construction is the classic one: a 2x upsampled Gaussian pyramid with
//! three scales per octave, DoG extrema refined to subpixel accuracy, contrast
//! and edge rejection, 36-bin orientation histograms and 4x4x8 descriptors
//! clamped at 0.2. Descriptors stay as unit `f32` vectors (no byte
//! quantization).
//!
//! Output order is canonical (octave, level, y, x, orientation) so results do
//! not depend on how work was scheduled.

mod descriptor;
mod detect;
mod scale_space;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imageio::Frame;

pub use descriptor::compute_descriptors;
pub use detect::detect_keypoints;
pub use scale_space::{build_scale_space, octave_count, Octave, Plane, ScaleSpace};

pub const DESCRIPTOR_LEN: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SiftError {
    #[error("image {width}x{height} is too small for the scale space")]
    ImageTooSmall { width: usize, height: usize },
    #[error("invalid SIFT parameter: {0}")]
    InvalidParams(String),
}

/// Detector and descriptor parameters. Defaults are the classic published
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiftParams {
    /// Scales sampled per octave.
    pub octave_layers: usize,
    /// Blur of the first level of every octave.
    pub sigma: f64,
    /// Blur already present in the input image.
    pub assumed_blur: f64,
    /// DoG contrast threshold, divided by `octave_layers` before use.
    pub contrast_threshold: f64,
    /// Principal-curvature ratio limit.
    pub edge_threshold: f64,
    /// Double the image before building the first octave.
    pub upsample: bool,
    /// Smallest side length an octave may have.
    pub min_octave_size: usize,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            octave_layers: 3,
            sigma: 1.6,
            assumed_blur: 0.5,
            contrast_threshold: 0.04,
            edge_threshold: 10.0,
            upsample: true,
            min_octave_size: 16,
        }
    }
}

impl SiftParams {
    pub fn validate(&self) -> Result<(), SiftError> {
        let bad = |m: &str| Err(SiftError::InvalidParams(m.to_string()));
        if self.octave_layers == 0 {
            return bad("octave_layers must be >= 1");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad("sigma must be > 0");
        }
        if !(self.assumed_blur.is_finite() && self.assumed_blur >= 0.0) {
            return bad("assumed_blur must be >= 0");
        }
        if !(self.contrast_threshold.is_finite() && self.contrast_threshold >= 0.0) {
            return bad("contrast_threshold must be >= 0");
        }
        if !(self.edge_threshold.is_finite() && self.edge_threshold > 0.0) {
            return bad("edge_threshold must be > 0");
        }
        if self.min_octave_size < 2 * detect::IMAGE_BORDER + 3 {
            return bad("min_octave_size too small for the detection border");
        }
        Ok(())
    }

    /// Contrast a surviving keypoint's response must exceed.
    pub fn response_threshold(&self) -> f64 {
        self.contrast_threshold / self.octave_layers as f64
    }
}

/// An oriented scale-space feature in input-image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Absolute scale in input pixels.
    pub sigma: f64,
    /// Radians in `[0, 2π)`, image coordinates (y down).
    pub orientation: f64,
    pub octave: usize,
    pub level: usize,
    /// Absolute interpolated DoG contrast.
    pub response: f64,
}

/// Unit-norm, non-negative 128-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptor(pub [f32; DESCRIPTOR_LEN]);

impl Descriptor {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|v| (*v as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Keypoints and their descriptors for one frame, index-aligned.
#[derive(Debug, Clone, Default)]
pub struct Features {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

impl Features {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

pub(crate) fn sort_canonical(kps: &mut [Keypoint]) {
    kps.sort_by(|a, b| {
        a.octave
            .cmp(&b.octave)
            .then(a.level.cmp(&b.level))
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
            .then(a.orientation.total_cmp(&b.orientation))
    });
}

/// Full pipeline for one frame: scale space, keypoints, descriptors.
pub fn extract(frame: &Frame, params: &SiftParams) -> Result<Features, SiftError> {
    let space = build_scale_space(frame, params)?;
    let keypoints = detect_keypoints(&space);
    let (keypoints, descriptors) = compute_descriptors(&space, &keypoints).into_iter().unzip();
    Ok(Features {
        keypoints,
        descriptors,
    })
}
