//! DoG extrema detection, subpixel refinement and orientation assignment.

use std::f64::consts::TAU;

use super::scale_space::{Plane, ScaleSpace};
use super::Keypoint;

/// Pixels kept clear of the octave border during detection.
pub(crate) const IMAGE_BORDER: usize = 5;
const MAX_REFINE_STEPS: usize = 5;
const ORI_BINS: usize = 36;
const ORI_RADIUS_FACTOR: f64 = 3.0 * ORI_SIGMA_FACTOR;
const ORI_SIGMA_FACTOR: f64 = 1.5;
const ORI_PEAK_RATIO: f64 = 0.8;

/// A refined extremum before orientation assignment.
#[derive(Debug, Clone, Copy)]
struct Extremum {
    octave: usize,
    layer: usize,
    /// octave-local subpixel position
    x: f64,
    y: f64,
    /// fractional layer
    layer_f: f64,
    response: f64,
}

fn is_local_extremum(dogs: &[Plane], layer: usize, x: usize, y: usize) -> bool {
    let v = dogs[layer].at(x, y);
    let w = dogs[layer].width;
    if v > 0.0 {
        for d in &dogs[layer - 1..=layer + 1] {
            for yy in y - 1..=y + 1 {
                let row = &d.data[yy * w + x - 1..yy * w + x + 2];
                if row.iter().any(|&n| n > v) {
                    return false;
                }
            }
        }
        true
    } else if v < 0.0 {
        for d in &dogs[layer - 1..=layer + 1] {
            for yy in y - 1..=y + 1 {
                let row = &d.data[yy * w + x - 1..yy * w + x + 2];
                if row.iter().any(|&n| n < v) {
                    return false;
                }
            }
        }
        true
    } else {
        false
    }
}

/// Gradient and Hessian of the DoG at an integer sample.
fn derivatives(dogs: &[Plane], l: usize, x: usize, y: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let at = |ll: usize, xx: usize, yy: usize| dogs[ll].at(xx, yy) as f64;
    let v = at(l, x, y);
    let dx = (at(l, x + 1, y) - at(l, x - 1, y)) * 0.5;
    let dy = (at(l, x, y + 1) - at(l, x, y - 1)) * 0.5;
    let ds = (at(l + 1, x, y) - at(l - 1, x, y)) * 0.5;
    let dxx = at(l, x + 1, y) + at(l, x - 1, y) - 2.0 * v;
    let dyy = at(l, x, y + 1) + at(l, x, y - 1) - 2.0 * v;
    let dss = at(l + 1, x, y) + at(l - 1, x, y) - 2.0 * v;
    let dxy = (at(l, x + 1, y + 1) - at(l, x - 1, y + 1) - at(l, x + 1, y - 1)
        + at(l, x - 1, y - 1))
        * 0.25;
    let dxs = (at(l + 1, x + 1, y) - at(l + 1, x - 1, y) - at(l - 1, x + 1, y)
        + at(l - 1, x - 1, y))
        * 0.25;
    let dys = (at(l + 1, x, y + 1) - at(l + 1, x, y - 1) - at(l - 1, x, y + 1)
        + at(l - 1, x, y - 1))
        * 0.25;
    (
        [dx, dy, ds],
        [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]],
    )
}

/// Solve `h * x = b` for a 3x3 system by Cramer's rule.
fn solve3(h: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(h);
    if d.abs() < 1e-30 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut m = *h;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *slot = det(&m) / d;
    }
    Some(out)
}

fn refine(
    space: &ScaleSpace,
    octave: usize,
    mut layer: usize,
    mut x: usize,
    mut y: usize,
) -> Option<Extremum> {
    let params = &space.params;
    let layers = params.octave_layers;
    let dogs = &space.octaves[octave].dogs;
    let (w, h) = (dogs[0].width, dogs[0].height);

    let mut step = 0;
    let offset = loop {
        let (grad, hess) = derivatives(dogs, layer, x, y);
        let off = solve3(&hess, &grad.map(|g| -g))?;
        if off.iter().all(|o| o.abs() < 0.5) {
            break off;
        }
        if off.iter().any(|o| o.abs() > (i32::MAX / 3) as f64) {
            return None;
        }
        let nx = x as i64 + off[0].round() as i64;
        let ny = y as i64 + off[1].round() as i64;
        let nl = layer as i64 + off[2].round() as i64;
        if nl < 1
            || nl > layers as i64
            || nx < IMAGE_BORDER as i64
            || nx >= (w - IMAGE_BORDER) as i64
            || ny < IMAGE_BORDER as i64
            || ny >= (h - IMAGE_BORDER) as i64
        {
            return None;
        }
        x = nx as usize;
        y = ny as usize;
        layer = nl as usize;
        step += 1;
        if step >= MAX_REFINE_STEPS {
            return None;
        }
    };

    let (grad, hess) = derivatives(dogs, layer, x, y);
    let value = dogs[layer].at(x, y) as f64;
    let contrast = value + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
    if contrast.abs() < params.contrast_threshold / layers as f64 {
        return None;
    }
    let tr = hess[0][0] + hess[1][1];
    let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[0][1];
    let r = params.edge_threshold;
    if det <= 0.0 || tr * tr / det > (r + 1.0) * (r + 1.0) / r {
        return None;
    }
    Some(Extremum {
        octave,
        layer,
        x: x as f64 + offset[0],
        y: y as f64 + offset[1],
        layer_f: layer as f64 + offset[2],
        response: contrast.abs(),
    })
}

/// Dominant gradient orientations around an extremum (radians, `[0, 2π)`).
fn orientations(gauss: &Plane, x: f64, y: f64, sigma_oct: f64) -> Vec<f64> {
    let radius = (ORI_RADIUS_FACTOR * sigma_oct).round() as i64;
    let weight_scale = -1.0 / (2.0 * (ORI_SIGMA_FACTOR * sigma_oct).powi(2));
    let (cx, cy) = (x.round() as i64, y.round() as i64);
    let mut raw = [0.0f64; ORI_BINS];
    for dy in -radius..=radius {
        let yy = cy + dy;
        if yy <= 0 || yy >= gauss.height as i64 - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let xx = cx + dx;
            if xx <= 0 || xx >= gauss.width as i64 - 1 {
                continue;
            }
            let (xu, yu) = (xx as usize, yy as usize);
            let gx = (gauss.at(xu + 1, yu) - gauss.at(xu - 1, yu)) as f64;
            let gy = (gauss.at(xu, yu + 1) - gauss.at(xu, yu - 1)) as f64;
            let mag = gx.hypot(gy);
            let angle = gy.atan2(gx).rem_euclid(TAU);
            let weight = (((dx * dx + dy * dy) as f64) * weight_scale).exp();
            let bin = ((ORI_BINS as f64 * angle / TAU).round() as usize) % ORI_BINS;
            raw[bin] += weight * mag;
        }
    }

    let n = ORI_BINS;
    let hist: Vec<f64> = (0..n)
        .map(|i| {
            let t = |k: isize| raw[(i as isize + k).rem_euclid(n as isize) as usize];
            (t(-2) + t(2)) / 16.0 + (t(-1) + t(1)) * 4.0 / 16.0 + t(0) * 6.0 / 16.0
        })
        .collect();
    let max = hist.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for j in 0..n {
        let l = hist[(j + n - 1) % n];
        let r = hist[(j + 1) % n];
        let c = hist[j];
        if c > l && c > r && c >= ORI_PEAK_RATIO * max {
            let bin = j as f64 + 0.5 * (l - r) / (l - 2.0 * c + r);
            let angle = (TAU * bin / n as f64).rem_euclid(TAU);
            // rem_euclid can round up to exactly TAU
            out.push(if angle >= TAU { 0.0 } else { angle });
        }
    }
    out
}

/// Find oriented keypoints in a scale space. Output is in canonical order.
pub fn detect_keypoints(space: &ScaleSpace) -> Vec<Keypoint> {
    let params = &space.params;
    let layers = params.octave_layers;
    let prefilter = (0.5 * params.contrast_threshold / layers as f64) as f32;
    let mut keypoints = Vec::new();
    for (o, octave) in space.octaves.iter().enumerate() {
        let dogs = &octave.dogs;
        let (w, h) = (dogs[0].width, dogs[0].height);
        if w <= 2 * IMAGE_BORDER || h <= 2 * IMAGE_BORDER {
            continue;
        }
        let px = space.octave_pixel(o);
        for layer in 1..=layers {
            for y in IMAGE_BORDER..h - IMAGE_BORDER {
                for x in IMAGE_BORDER..w - IMAGE_BORDER {
                    let v = dogs[layer].at(x, y);
                    if v.abs() <= prefilter || !is_local_extremum(dogs, layer, x, y) {
                        continue;
                    }
                    let Some(ext) = refine(space, o, layer, x, y) else {
                        continue;
                    };
                    let abs_x = ext.x * px;
                    let abs_y = ext.y * px;
                    if !(0.0..space.frame_width as f64).contains(&abs_x)
                        || !(0.0..space.frame_height as f64).contains(&abs_y)
                    {
                        continue;
                    }
                    let sigma_oct = space.layer_sigma(ext.layer_f);
                    let gauss = &octave.gaussians[ext.layer];
                    for orientation in orientations(gauss, ext.x, ext.y, sigma_oct) {
                        keypoints.push(Keypoint {
                            x: abs_x,
                            y: abs_y,
                            sigma: sigma_oct * px,
                            orientation,
                            octave: ext.octave,
                            level: ext.layer,
                            response: ext.response,
                        });
                    }
                }
            }
        }
    }
    super::sort_canonical(&mut keypoints);
    keypoints
}
