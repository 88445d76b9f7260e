//! Gaussian and difference-of-Gaussians pyramids.

use crate::imageio::Frame;

use super::{SiftError, SiftParams};

/// Row-major single-channel float image.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_frame(frame: &Frame) -> Self {
        Self {
            width: frame.width(),
            height: frame.height(),
            data: frame.pixels().to_vec(),
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// 2x bilinear upsampling, corner aligned (`dst(2x, 2y) = src(x, y)`).
    pub fn upsample2(&self) -> Plane {
        let (w, h) = (self.width * 2, self.height * 2);
        let mut out = Plane::new(w, h);
        for y in 0..h {
            let sy = y as f32 * 0.5;
            let y0 = (sy as usize).min(self.height - 1);
            let y1 = (y0 + 1).min(self.height - 1);
            let fy = sy - y0 as f32;
            for x in 0..w {
                let sx = x as f32 * 0.5;
                let x0 = (sx as usize).min(self.width - 1);
                let x1 = (x0 + 1).min(self.width - 1);
                let fx = sx - x0 as f32;
                let top = self.at(x0, y0) * (1.0 - fx) + self.at(x1, y0) * fx;
                let bot = self.at(x0, y1) * (1.0 - fx) + self.at(x1, y1) * fx;
                out.data[y * w + x] = top * (1.0 - fy) + bot * fy;
            }
        }
        out
    }

    /// Keep every other pixel.
    pub fn downsample2(&self) -> Plane {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut out = Plane::new(w, h);
        for y in 0..h {
            for x in 0..w {
                out.data[y * w + x] = self.at(2 * x, 2 * y);
            }
        }
        out
    }

    /// Separable Gaussian blur with reflect-101 borders.
    pub fn blur(&self, sigma: f64) -> Plane {
        let kernel = gaussian_kernel(sigma);
        let tmp = convolve_rows(self, &kernel);
        convolve_cols(&tmp, &kernel)
    }

    pub fn sub(&self, other: &Plane) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = ((4.0 * sigma).ceil() as usize).max(1);
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

#[inline]
fn reflect101(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

// Both passes accumulate in f64 and round once, so a constant input comes
// back unchanged.
fn convolve_rows(src: &Plane, kernel: &[f64]) -> Plane {
    let r = (kernel.len() / 2) as isize;
    let mut out = Plane::new(src.width, src.height);
    let w = src.width;
    for y in 0..src.height {
        let row = &src.data[y * w..(y + 1) * w];
        let dst = &mut out.data[y * w..(y + 1) * w];
        for (x, d) in dst.iter_mut().enumerate() {
            let xi = x as isize;
            let mut acc = 0.0f64;
            if xi >= r && xi + r < w as isize {
                let start = (xi - r) as usize;
                for (k, v) in kernel.iter().zip(&row[start..start + kernel.len()]) {
                    acc += k * *v as f64;
                }
            } else {
                for (j, k) in kernel.iter().enumerate() {
                    acc += k * row[reflect101(xi + j as isize - r, w)] as f64;
                }
            }
            *d = acc as f32;
        }
    }
    out
}

fn convolve_cols(src: &Plane, kernel: &[f64]) -> Plane {
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (src.width, src.height);
    let mut out = Plane::new(w, h);
    let mut acc = vec![0.0f64; w];
    for y in 0..h {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (j, k) in kernel.iter().enumerate() {
            let sy = reflect101(y as isize + j as isize - r, h);
            let row = &src.data[sy * w..(sy + 1) * w];
            for (a, s) in acc.iter_mut().zip(row) {
                *a += k * *s as f64;
            }
        }
        for (d, a) in out.data[y * w..(y + 1) * w].iter_mut().zip(&acc) {
            *d = *a as f32;
        }
    }
    out
}

/// One octave: `layers + 3` Gaussian images and `layers + 2` DoG images.
#[derive(Debug, Clone)]
pub struct Octave {
    pub gaussians: Vec<Plane>,
    pub dogs: Vec<Plane>,
}

/// Gaussian/DoG pyramid of one frame.
#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    /// Size of an octave-0 pixel in input pixels (0.5 with upsampling).
    pub base_pixel: f64,
    pub params: SiftParams,
    pub frame_width: usize,
    pub frame_height: usize,
}

/// `floor(log2(base_min_dim / min_octave_size)) + 1`.
pub fn octave_count(width: usize, height: usize, params: &SiftParams) -> usize {
    let factor = if params.upsample { 2 } else { 1 };
    let base = width.min(height) * factor;
    if base < params.min_octave_size {
        return 0;
    }
    let mut n = 1;
    let mut size = base / 2;
    while size >= params.min_octave_size {
        n += 1;
        size /= 2;
    }
    n
}

pub fn build_scale_space(frame: &Frame, params: &SiftParams) -> Result<ScaleSpace, SiftError> {
    params.validate()?;
    let n_octaves = octave_count(frame.width(), frame.height(), params);
    if n_octaves == 0 {
        return Err(SiftError::ImageTooSmall {
            width: frame.width(),
            height: frame.height(),
        });
    }
    let layers = params.octave_layers;
    let mut base = Plane::from_frame(frame);
    let mut input_blur = params.assumed_blur;
    if params.upsample {
        base = base.upsample2();
        input_blur *= 2.0;
    }
    let base_sigma = (params.sigma * params.sigma - input_blur * input_blur)
        .max(0.01)
        .sqrt();
    let base = base.blur(base_sigma);

    let k = 2f64.powf(1.0 / layers as f64);
    let increments: Vec<f64> = (1..layers + 3)
        .map(|i| {
            let prev = params.sigma * k.powi(i as i32 - 1);
            let total = prev * k;
            (total * total - prev * prev).sqrt()
        })
        .collect();

    let mut octaves: Vec<Octave> = Vec::with_capacity(n_octaves);
    for o in 0..n_octaves {
        let first = if o == 0 {
            base.clone()
        } else {
            octaves[o - 1].gaussians[layers].downsample2()
        };
        let mut gaussians = Vec::with_capacity(layers + 3);
        gaussians.push(first);
        for inc in &increments {
            let next = gaussians.last().expect("non-empty").blur(*inc);
            gaussians.push(next);
        }
        let dogs = gaussians.windows(2).map(|w| w[1].sub(&w[0])).collect();
        octaves.push(Octave { gaussians, dogs });
    }
    Ok(ScaleSpace {
        octaves,
        base_pixel: if params.upsample { 0.5 } else { 1.0 },
        params: params.clone(),
        frame_width: frame.width(),
        frame_height: frame.height(),
    })
}

impl ScaleSpace {
    /// Blur of Gaussian image `layer` in octave-local pixels.
    pub fn layer_sigma(&self, layer: f64) -> f64 {
        self.params.sigma * 2f64.powf(layer / self.params.octave_layers as f64)
    }

    /// Size of one pixel of octave `o` in input pixels.
    pub fn octave_pixel(&self, octave: usize) -> f64 {
        self.base_pixel * (1u64 << octave) as f64
    }
}
