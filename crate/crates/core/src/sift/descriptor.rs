//! 4x4x8 gradient-orientation descriptors.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::scale_space::ScaleSpace;
use super::{Descriptor, Keypoint, DESCRIPTOR_LEN};

const SPATIAL_BINS: usize = 4;
const ORI_BINS: usize = 8;
/// Width of one spatial bin in units of keypoint scale.
const BIN_WIDTH_FACTOR: f64 = 3.0;
const MAG_CLAMP: f32 = 0.2;

/// Sampling radius in octave pixels for a keypoint of octave-local scale `sigma_oct`.
fn window_radius(sigma_oct: f64) -> i64 {
    let hist_width = BIN_WIDTH_FACTOR * sigma_oct;
    (hist_width * std::f64::consts::SQRT_2 * (SPATIAL_BINS as f64 + 1.0) * 0.5).round() as i64
}

fn describe(space: &ScaleSpace, kp: &Keypoint) -> Option<Descriptor> {
    let px = space.octave_pixel(kp.octave);
    let gauss = &space.octaves[kp.octave].gaussians[kp.level];
    let (w, h) = (gauss.width as i64, gauss.height as i64);
    let x = kp.x / px;
    let y = kp.y / px;
    let sigma_oct = kp.sigma / px;
    let (cx, cy) = (x.round() as i64, y.round() as i64);
    let radius = window_radius(sigma_oct);
    // the whole window plus the one-pixel gradient stencil must be inside
    if cx - radius < 1 || cy - radius < 1 || cx + radius > w - 2 || cy + radius > h - 2 {
        return None;
    }

    let d = SPATIAL_BINS as f64;
    let hist_width = BIN_WIDTH_FACTOR * sigma_oct;
    let (sin_t, cos_t) = kp.orientation.sin_cos();
    let (sin_t, cos_t) = (sin_t / hist_width, cos_t / hist_width);
    let weight_scale = -1.0 / (d * d * 0.5);
    let bins_per_rad = ORI_BINS as f64 / TAU;

    // (d+2) x (d+2) x (n+2) accumulator with guard cells
    const S: usize = SPATIAL_BINS + 2;
    const N: usize = ORI_BINS + 2;
    let mut hist = [0.0f64; S * S * N];

    for i in -radius..=radius {
        for j in -radius..=radius {
            // rotate the offset into the keypoint frame
            let c_rot = j as f64 * cos_t + i as f64 * sin_t;
            let r_rot = -(j as f64) * sin_t + i as f64 * cos_t;
            let rbin = r_rot + d / 2.0 - 0.5;
            let cbin = c_rot + d / 2.0 - 0.5;
            if rbin <= -1.0 || rbin >= d || cbin <= -1.0 || cbin >= d {
                continue;
            }
            let (xx, yy) = ((cx + j) as usize, (cy + i) as usize);
            let gx = (gauss.at(xx + 1, yy) - gauss.at(xx - 1, yy)) as f64;
            let gy = (gauss.at(xx, yy + 1) - gauss.at(xx, yy - 1)) as f64;
            let mag = gx.hypot(gy) * ((c_rot * c_rot + r_rot * r_rot) * weight_scale).exp();
            let ori = (gy.atan2(gx) - kp.orientation).rem_euclid(TAU);
            let obin = ori * bins_per_rad;

            let r0 = rbin.floor();
            let c0 = cbin.floor();
            let o0 = obin.floor();
            let (dr, dc, dobin) = (rbin - r0, cbin - c0, obin - o0);
            let (r0, c0) = (r0 as i64, c0 as i64);
            let o0 = (o0 as i64).rem_euclid(ORI_BINS as i64) as usize;

            for (ri, wr) in [(0i64, 1.0 - dr), (1, dr)] {
                for (ci, wc) in [(0i64, 1.0 - dc), (1, dc)] {
                    for (oi, wo) in [(0usize, 1.0 - dobin), (1, dobin)] {
                        let r = (r0 + ri + 1) as usize;
                        let c = (c0 + ci + 1) as usize;
                        let o = o0 + oi;
                        hist[(r * S + c) * N + o] += mag * wr * wc * wo;
                    }
                }
            }
        }
    }

    let mut values = [0.0f32; DESCRIPTOR_LEN];
    for r in 0..SPATIAL_BINS {
        for c in 0..SPATIAL_BINS {
            let base = ((r + 1) * S + c + 1) * N;
            // fold the wrapped orientation guard bin back
            let wrap = hist[base + ORI_BINS];
            for o in 0..ORI_BINS {
                let extra = if o == 0 { wrap } else { 0.0 };
                values[(r * SPATIAL_BINS + c) * ORI_BINS + o] = (hist[base + o] + extra) as f32;
            }
        }
    }
    normalize_clamp(&mut values)?;
    Some(Descriptor(values))
}

/// Unit-normalize, clamp every entry at 0.2, renormalize.
fn normalize_clamp(v: &mut [f32; DESCRIPTOR_LEN]) -> Option<()> {
    let norm = |v: &[f32]| v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let n = norm(v);
    if !(n.is_finite() && n > 0.0) {
        return None;
    }
    for x in v.iter_mut() {
        *x = ((*x as f64 / n) as f32).min(MAG_CLAMP);
    }
    let n = norm(v);
    if n.is_nan() || n <= 0.0 {
        return None;
    }
    for x in v.iter_mut() {
        *x = (*x as f64 / n) as f32;
    }
    Some(())
}

/// Describe each keypoint; keypoints whose window leaves the image are dropped.
pub fn compute_descriptors(
    space: &ScaleSpace,
    keypoints: &[Keypoint],
) -> Vec<(Keypoint, Descriptor)> {
    keypoints
        .par_iter()
        .filter_map(|kp| describe(space, kp).map(|d| (*kp, d)))
        .collect()
}
