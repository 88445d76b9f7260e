//! Frame loading and frame-pair sampling.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, Luma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest width/height accepted for a frame.
pub const MIN_FRAME_DIM: usize = 16;

/// Default file pattern for [`load_frame_dir`].
pub const DEFAULT_PATTERN: &str = "*.png";

const REC601: [f32; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("no files matching `{pattern}` in {}", dir.display())]
    EmptyDirectory { dir: PathBuf, pattern: String },
    #[error("cannot decode {}: {reason}", path.display())]
    DecodeError { path: PathBuf, reason: String },
    #[error("{} is {found_w}x{found_h}, expected {expected_w}x{expected_h}", path.display())]
    MixedDimensions {
        path: PathBuf,
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },
    #[error("frame is {width}x{height}, both sides must be at least {MIN_FRAME_DIM}")]
    FrameTooSmall { width: usize, height: usize },
    #[error("pixel buffer has {len} values, expected {expected}")]
    BadBufferLength { len: usize, expected: usize },
    #[error("pixel value {value} at offset {offset} is outside [0, 1]")]
    PixelOutOfRange { offset: usize, value: f32 },
    #[error("invalid glob pattern `{0}`")]
    BadPattern(String),
    #[error("{} frames cannot form a pair at interval {interval}", frame_count)]
    InsufficientFrames { frame_count: usize, interval: usize },
    #[error("interval must be at least 1")]
    ZeroInterval,
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A decoded grayscale frame with luminance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    width: usize,
    height: usize,
    pixels: Vec<f32>,
    pub source_path: String,
}

impl Frame {
    pub fn new(
        index: usize,
        width: usize,
        height: usize,
        pixels: Vec<f32>,
        source_path: impl Into<String>,
    ) -> Result<Self, ImageIoError> {
        if width < MIN_FRAME_DIM || height < MIN_FRAME_DIM {
            return Err(ImageIoError::FrameTooSmall { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImageIoError::BadBufferLength {
                len: pixels.len(),
                expected: width * height,
            });
        }
        if let Some((offset, &value)) = pixels
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ImageIoError::PixelOutOfRange { offset, value });
        }
        Ok(Self {
            index,
            width,
            height,
            pixels,
            source_path: source_path.into(),
        })
    }

    /// Build from an arbitrary buffer, clamping values into `[0, 1]`.
    pub(crate) fn from_clamped(
        index: usize,
        width: usize,
        height: usize,
        mut pixels: Vec<f32>,
        source_path: impl Into<String>,
    ) -> Result<Self, ImageIoError> {
        for p in &mut pixels {
            *p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
        }
        Self::new(index, width, height, pixels, source_path)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    /// Same pixels, new ordinal.
    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    /// Quantize to an 8-bit grayscale image.
    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([(self.get(x as usize, y as usize) * 255.0).round() as u8])
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageIoError> {
        self.to_gray_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| ImageIoError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e),
            })
    }
}

/// Two frame ordinals, `b_index > a_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FramePair {
    pub a_index: usize,
    pub b_index: usize,
}

impl FramePair {
    pub fn new(a_index: usize, b_index: usize) -> Option<Self> {
        (b_index > a_index).then_some(Self { a_index, b_index })
    }

    pub fn interval(&self) -> usize {
        self.b_index - self.a_index
    }
}

/// Convert a decoded image to `[0, 1]` luminance (Rec.601 for color input).
pub fn luminance(img: &DynamicImage) -> Vec<f32> {
    match img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        DynamicImage::ImageLumaA8(g) => g.pixels().map(|p| p[0] as f32 / 255.0).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let y = REC601[0] * p[0] as f32 + REC601[1] * p[1] as f32 + REC601[2] * p[2] as f32;
                (y / 255.0).clamp(0.0, 1.0)
            })
            .collect(),
    }
}

/// Decode a single image file into a frame.
pub fn load_frame(path: &Path, index: usize) -> Result<Frame, ImageIoError> {
    let img = image::ImageReader::open(path)
        .map_err(|source| ImageIoError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| ImageIoError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(|e| ImageIoError::DecodeError {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    Frame::new(index, w, h, luminance(&img), path.display().to_string())
}

fn natural_cmp(a: &Path, b: &Path) -> Ordering {
    let name = |p: &Path| {
        p.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    natord::compare(&name(a), &name(b)).then_with(|| a.cmp(b))
}

/// List files in `dir` (non-recursive) whose file name matches `pattern`,
/// in natural order.
pub fn list_frame_files(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>, ImageIoError> {
    let glob = glob::Pattern::new(pattern).map_err(|_| ImageIoError::BadPattern(pattern.into()))?;
    let entries = fs::read_dir(dir).map_err(|source| ImageIoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ImageIoError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            if glob.matches(name) {
                files.push(path);
            }
        }
    }
    files.sort_by(|a, b| natural_cmp(a, b));
    Ok(files)
}

/// Load every frame in `dir` matching `pattern`, ordered naturally
/// (`frame_2` before `frame_10`), with indices `0..n`.
pub fn load_frame_dir(dir: &Path, pattern: &str) -> Result<Vec<Frame>, ImageIoError> {
    let files = list_frame_files(dir, pattern)?;
    if files.is_empty() {
        return Err(ImageIoError::EmptyDirectory {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    let mut frames: Vec<Frame> = Vec::with_capacity(files.len());
    for (index, path) in files.iter().enumerate() {
        let frame = load_frame(path, index)?;
        if let Some(first) = frames.first() {
            if (first.width, first.height) != (frame.width, frame.height) {
                return Err(ImageIoError::MixedDimensions {
                    path: path.clone(),
                    expected_w: first.width,
                    expected_h: first.height,
                    found_w: frame.width,
                    found_h: frame.height,
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Chained pairs `(0,k), (k,2k), ...` up to the last frame.
pub fn sample_pairs(frame_count: usize, interval: usize) -> Result<Vec<FramePair>, ImageIoError> {
    if interval == 0 {
        return Err(ImageIoError::ZeroInterval);
    }
    if frame_count <= interval {
        return Err(ImageIoError::InsufficientFrames {
            frame_count,
            interval,
        });
    }
    let last = frame_count - 1;
    Ok((0..)
        .map(|i| (i * interval, (i + 1) * interval))
        .take_while(|&(_, b)| b <= last)
        .map(|(a_index, b_index)| FramePair { a_index, b_index })
        .collect())
}
