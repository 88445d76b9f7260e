use std::path::Path;

use image::{Rgb, RgbImage};
use imageproc::drawing::{draw_hollow_circle_mut, draw_line_segment_mut};

use super::ReportError;
use crate::imageio::Frame;
use crate::matching::Correspondence;

pub const INLIER_COLOR: Rgb<u8> = Rgb([0, 255, 0]);
pub const OUTLIER_COLOR: Rgb<u8> = Rgb([255, 0, 0]);
const ENDPOINT_RADIUS: i32 = 2;

/// How many lines of each color were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OverlaySummary {
    pub inliers: usize,
    pub outliers: usize,
}

/// Side-by-side montage (A left, B right) with one line per correspondence:
/// green for RANSAC inliers, red for discarded matches.
pub fn render_matches(
    frame_a: &Frame,
    frame_b: &Frame,
    correspondences: &[Correspondence],
    inlier_ids: &[usize],
) -> Result<(RgbImage, OverlaySummary), ReportError> {
    if frame_a.height() != frame_b.height() {
        return Err(ReportError::HeightMismatch(
            frame_a.height(),
            frame_b.height(),
        ));
    }
    let (wa, h) = (frame_a.width() as u32, frame_a.height() as u32);
    let wb = frame_b.width() as u32;
    let mut img = RgbImage::new(wa + wb, h);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let v = if x < wa {
            frame_a.get(x as usize, y as usize)
        } else {
            frame_b.get((x - wa) as usize, y as usize)
        };
        let g = (v * 255.0).round() as u8;
        *px = Rgb([g, g, g]);
    }

    let mut is_inlier = vec![false; correspondences.len()];
    for &i in inlier_ids {
        if let Some(slot) = is_inlier.get_mut(i) {
            *slot = true;
        }
    }
    let mut summary = OverlaySummary::default();
    // red first so green lines stay visible on top
    for pass_inliers in [false, true] {
        let color = if pass_inliers {
            INLIER_COLOR
        } else {
            OUTLIER_COLOR
        };
        for (c, &inl) in correspondences.iter().zip(&is_inlier) {
            if inl != pass_inliers {
                continue;
            }
            let a = (c.a_xy[0] as f32, c.a_xy[1] as f32);
            let b = (c.b_xy[0] as f32 + wa as f32, c.b_xy[1] as f32);
            draw_line_segment_mut(&mut img, a, b, color);
            for p in [a, b] {
                draw_hollow_circle_mut(
                    &mut img,
                    (p.0.round() as i32, p.1.round() as i32),
                    ENDPOINT_RADIUS,
                    color,
                );
            }
            if inl {
                summary.inliers += 1;
            } else {
                summary.outliers += 1;
            }
        }
    }
    Ok((img, summary))
}

/// Write the match overlay as an 8-bit RGB PNG.
pub fn draw_matches(
    frame_a: &Frame,
    frame_b: &Frame,
    correspondences: &[Correspondence],
    inlier_ids: &[usize],
    path: &Path,
) -> Result<OverlaySummary, ReportError> {
    let (img, summary) = render_matches(frame_a, frame_b, correspondences, inlier_ids)?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| ReportError::io(path, std::io::Error::other(e)))?;
    Ok(summary)
}
