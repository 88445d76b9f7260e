//! Ground-truth scenes: a value-noise textured ground plane plus Gaussian
//! feature dots at known 3D points, seen by pinhole cameras along orbit or
//! dolly trajectories. Rendering also records the exact projection of every
//! dot so tests can check matching and epipolar estimation against truth.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epipolar::FundamentalMatrix;
use crate::imageio::{Frame, ImageIoError};
use crate::matching::Correspondence;
use crate::rng::{derive_seed, rng_from_seed, splitmix64};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("point is behind the camera (depth {0})")]
    BehindCamera(f64),
    #[error("cameras share a center; no baseline")]
    NoBaseline,
    #[error("rotation is not orthonormal with determinant +1")]
    NotARotation,
    #[error("focal lengths must be positive")]
    BadIntrinsics,
    #[error("invalid scene configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Frame(#[from] ImageIoError),
}

/// Pinhole camera with world-to-camera extrinsics: `X_cam = R X_world + t`.
/// Camera axes are x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl PinholeCamera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, SynthError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(SynthError::BadIntrinsics);
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        if ortho > 1e-10 || (rotation.determinant() - 1.0).abs() > 1e-10 {
            return Err(SynthError::NotARotation);
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
        })
    }

    /// Camera at `eye` looking at `target`, world up `+z`.
    pub fn look_at(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        eye: Vector3<f64>,
        target: Vector3<f64>,
    ) -> Result<Self, SynthError> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&Vector3::z());
        if right.norm() < 1e-9 {
            return Err(SynthError::InvalidConfig(
                "view direction parallel to up".into(),
            ));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation =
            Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        Self::new(fx, fy, cx, cy, rotation, -(rotation * eye))
    }

    pub fn intrinsics(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// World-space direction of the ray through pixel `(u, v)`.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        let d = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        self.rotation.transpose() * d
    }
}

/// Pinhole projection `u = fx X/Z + cx`, `v = fy Y/Z + cy` of a world point.
pub fn project(camera: &PinholeCamera, point: &Vector3<f64>) -> Result<[f64; 2], SynthError> {
    let p = camera.rotation * point + camera.translation;
    if p.z <= 0.0 {
        return Err(SynthError::BehindCamera(p.z));
    }
    Ok([
        camera.fx * p.x / p.z + camera.cx,
        camera.fy * p.y / p.z + camera.cy,
    ])
}

fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// `F = K_b^{-T} [t]x R K_a^{-1}` from the relative pose of `b` w.r.t. `a`.
pub fn ground_truth_f(
    a: &PinholeCamera,
    b: &PinholeCamera,
) -> Result<FundamentalMatrix, SynthError> {
    let r = b.rotation * a.rotation.transpose();
    let t = b.translation - r * a.translation;
    if t.norm() < 1e-12 {
        return Err(SynthError::NoBaseline);
    }
    let ka_inv = a
        .intrinsics()
        .try_inverse()
        .ok_or(SynthError::BadIntrinsics)?;
    let kb_inv = b
        .intrinsics()
        .try_inverse()
        .ok_or(SynthError::BadIntrinsics)?;
    FundamentalMatrix::new(kb_inv.transpose() * skew(&t) * r * ka_inv).ok_or(SynthError::NoBaseline)
}

/// Multi-octave value noise over the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    pub seed: u64,
    /// World size of one lattice cell at the coarsest octave.
    pub cell: f64,
    pub octaves: u32,
    /// Luminance range is `0.5 ± contrast / 2`.
    pub contrast: f64,
}

impl Default for Texture {
    fn default() -> Self {
        Self {
            seed: 1,
            cell: 0.8,
            octaves: 3,
            contrast: 0.8,
        }
    }
}

impl Texture {
    fn lattice(&self, octave: u32, ix: i64, iy: i64) -> f64 {
        let h = splitmix64(
            self.seed
                ^ splitmix64(
                    (ix as u64).wrapping_mul(0x9E37_79B9) ^ ((iy as u64) << 32) ^ octave as u64,
                ),
        );
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    fn value_noise(&self, octave: u32, x: f64, y: f64) -> f64 {
        let (fx, fy) = (x.floor(), y.floor());
        let (ix, iy) = (fx as i64, fy as i64);
        let fade = |t: f64| t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
        let (tx, ty) = (fade(x - fx), fade(y - fy));
        let v00 = self.lattice(octave, ix, iy);
        let v10 = self.lattice(octave, ix + 1, iy);
        let v01 = self.lattice(octave, ix, iy + 1);
        let v11 = self.lattice(octave, ix + 1, iy + 1);
        let top = v00 + (v10 - v00) * tx;
        let bot = v01 + (v11 - v01) * tx;
        top + (bot - top) * ty
    }

    /// Luminance at plane coordinates `(x, y)`.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let mut sum = 0.0;
        let mut amp = 1.0;
        let mut norm = 0.0;
        let mut freq = 1.0 / self.cell;
        for o in 0..self.octaves {
            sum += amp * self.value_noise(o, x * freq, y * freq);
            norm += amp;
            amp *= 0.5;
            freq *= 2.0;
        }
        let v = sum / norm; // in [0, 1], concentrated near 0.5
        (0.5 + (v - 0.5) * 2.0 * self.contrast).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Circle around the scene center at constant height.
    Orbit,
    /// Straight translation with fixed orientation.
    Dolly,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "orbit" => Ok(Preset::Orbit),
            "dolly" => Ok(Preset::Dolly),
            other => Err(format!(
                "unknown preset `{other}` (expected orbit or dolly)"
            )),
        }
    }
}

/// Parameters for [`SyntheticScene::build`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub preset: Preset,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub num_points: usize,
    /// Orbit: radians per frame. Dolly: world units per frame.
    pub step: f64,
}

impl SceneConfig {
    pub fn orbit(frame_count: usize, seed: u64) -> Self {
        Self {
            preset: Preset::Orbit,
            frame_count,
            width: 320,
            height: 240,
            seed,
            num_points: 300,
            step: 0.2f64.to_radians(),
        }
    }

    pub fn dolly(frame_count: usize, seed: u64) -> Self {
        Self {
            preset: Preset::Dolly,
            step: 0.02,
            ..Self::orbit(frame_count, seed)
        }
    }
}

/// Feature-dot blur in pixels.
const DOT_SIGMA: f64 = 2.0;
const DOT_OPACITY: f64 = 0.9;
const SKY: f32 = 0.75;
const SUPERSAMPLE: [f64; 2] = [-0.25, 0.25];

/// Rigid scene plus camera trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub points3d: Vec<Vector3<f64>>,
    /// Target luminance of each dot.
    pub point_tones: Vec<f64>,
    pub texture: Texture,
    pub trajectory: Vec<PinholeCamera>,
    pub seed: u64,
}

impl SyntheticScene {
    pub fn build(config: &SceneConfig) -> Result<Self, SynthError> {
        if config.frame_count == 0 {
            return Err(SynthError::InvalidConfig("frame_count must be >= 1".into()));
        }
        let mut rng = rng_from_seed(config.seed);
        let mut points3d = Vec::with_capacity(config.num_points);
        let mut point_tones = Vec::with_capacity(config.num_points);
        for _ in 0..config.num_points {
            points3d.push(Vector3::new(
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(0.1..2.5),
            ));
            point_tones.push(if rng.random_bool(0.5) {
                rng.random_range(0.85..1.0)
            } else {
                rng.random_range(0.0..0.15)
            });
        }
        let texture = Texture {
            seed: rng.random(),
            ..Texture::default()
        };

        let (w, h) = (config.width as f64, config.height as f64);
        let focal = 0.5 * w / (28f64.to_radians()).tan();
        let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let trajectory = (0..config.frame_count)
            .map(|k| {
                let k = k as f64;
                match config.preset {
                    Preset::Orbit => {
                        let a = phase + k * config.step;
                        let eye = Vector3::new(7.0 * a.cos(), 7.0 * a.sin(), 6.0);
                        PinholeCamera::look_at(
                            focal,
                            focal,
                            cx,
                            cy,
                            eye,
                            Vector3::new(0.0, 0.0, 0.5),
                        )
                    }
                    Preset::Dolly => {
                        let dir = Vector3::new(phase.cos(), phase.sin(), 0.0);
                        let side = Vector3::new(-phase.sin(), phase.cos(), 0.0);
                        let eye = -dir * 7.0
                            + side * (k * config.step - 1.5)
                            + Vector3::new(0.0, 0.0, 6.0);
                        let target = eye + dir * 7.0 - Vector3::new(0.0, 0.0, 5.5);
                        PinholeCamera::look_at(focal, focal, cx, cy, eye, target)
                    }
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            points3d,
            point_tones,
            texture,
            trajectory,
            seed: config.seed,
        })
    }

    /// Pixel in camera `b` showing the ground-plane point seen at `xy` in
    /// camera `a`, if the ray hits the plane and lands in front of `b`.
    pub fn transfer_ground(&self, a: usize, b: usize, xy: [f64; 2]) -> Option<[f64; 2]> {
        let ca = &self.trajectory[a];
        let origin = ca.center();
        let dir = ca.ray(xy[0], xy[1]);
        if dir.z >= 0.0 {
            return None;
        }
        let s = -origin.z / dir.z;
        project(&self.trajectory[b], &(origin + dir * s)).ok()
    }
}

/// Exact projections recorded while rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub width: usize,
    pub height: usize,
    pub points3d: Vec<[f64; 3]>,
    pub frames: Vec<LedgerFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerFrame {
    pub index: usize,
    pub camera: PinholeCamera,
    /// Points that land inside the image, by point id.
    pub projections: Vec<LedgerProjection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerProjection {
    pub point: usize,
    pub xy: [f64; 2],
}

impl Ledger {
    /// Exact correspondences for points visible in both frames.
    pub fn correspondences(&self, a: usize, b: usize) -> Vec<Correspondence> {
        let fb = &self.frames[b];
        self.frames[a]
            .projections
            .iter()
            .filter_map(|pa| {
                let pb = fb.projections.iter().find(|p| p.point == pa.point)?;
                Some(Correspondence::from_points(pa.point, pa.xy, pb.xy))
            })
            .collect()
    }
}

fn render_frame(
    scene: &SyntheticScene,
    index: usize,
    width: usize,
    height: usize,
) -> Result<(Frame, LedgerFrame), SynthError> {
    let cam = &scene.trajectory[index];
    let eye = cam.center();
    let n = (SUPERSAMPLE.len() * SUPERSAMPLE.len()) as f64;
    let mut pixels = vec![0.0f32; width * height];
    for (y, row) in pixels.chunks_mut(width).enumerate() {
        for (x, px) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for oy in SUPERSAMPLE {
                for ox in SUPERSAMPLE {
                    let d = cam.ray(x as f64 + ox, y as f64 + oy);
                    acc += if d.z < 0.0 {
                        let s = -eye.z / d.z;
                        scene.texture.sample(eye.x + s * d.x, eye.y + s * d.y)
                    } else {
                        SKY as f64
                    };
                }
            }
            *px = (acc / n) as f32;
        }
    }

    // painter's order: far dots first
    let mut visible: Vec<(f64, usize, [f64; 2])> = scene
        .points3d
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let depth = (cam.rotation * p + cam.translation).z;
            project(cam, p).ok().map(|xy| (depth, i, xy))
        })
        .collect();
    visible.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let reach = (3.0 * DOT_SIGMA).ceil() as i64;
    for &(_, i, [u, v]) in &visible {
        let tone = scene.point_tones[i];
        let (cu, cv) = (u.round() as i64, v.round() as i64);
        for y in (cv - reach).max(0)..=(cv + reach).min(height as i64 - 1) {
            for x in (cu - reach).max(0)..=(cu + reach).min(width as i64 - 1) {
                let r2 = (x as f64 - u).powi(2) + (y as f64 - v).powi(2);
                let w = DOT_OPACITY * (-r2 / (2.0 * DOT_SIGMA * DOT_SIGMA)).exp();
                let p = &mut pixels[y as usize * width + x as usize];
                *p = (*p as f64 * (1.0 - w) + tone * w) as f32;
            }
        }
    }

    let mut projections: Vec<LedgerProjection> = visible
        .iter()
        .filter(|(_, _, [u, v])| {
            (0.0..=(width - 1) as f64).contains(u) && (0.0..=(height - 1) as f64).contains(v)
        })
        .map(|&(_, point, xy)| LedgerProjection { point, xy })
        .collect();
    projections.sort_by_key(|p| p.point);
    let frame = Frame::from_clamped(index, width, height, pixels, format!("synthetic:{index}"))?;
    Ok((
        frame,
        LedgerFrame {
            index,
            camera: *cam,
            projections,
        },
    ))
}

/// Rasterize every trajectory camera.
pub fn render_sequence(
    scene: &SyntheticScene,
    width: usize,
    height: usize,
) -> Result<(Vec<Frame>, Ledger), SynthError> {
    let rendered: Vec<(Frame, LedgerFrame)> = (0..scene.trajectory.len())
        .into_par_iter()
        .map(|i| render_frame(scene, i, width, height))
        .collect::<Result<_, _>>()?;
    let (frames, ledger_frames) = rendered.into_iter().unzip();
    Ok((
        frames,
        Ledger {
            width,
            height,
            points3d: scene.points3d.iter().map(|p| [p.x, p.y, p.z]).collect(),
            frames: ledger_frames,
        },
    ))
}

/// Build and render a preset in one call.
pub fn render_preset(
    config: &SceneConfig,
) -> Result<(SyntheticScene, Vec<Frame>, Ledger), SynthError> {
    let scene = SyntheticScene::build(config)?;
    let (frames, ledger) = render_sequence(&scene, config.width, config.height)?;
    Ok((scene, frames, ledger))
}

/// Lattice spacing of the jitter displacement field, pixels.
pub const JITTER_CELL: usize = 32;

fn bilinear(frame: &Frame, x: f64, y: f64) -> f32 {
    let (w, h) = (frame.width(), frame.height());
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = ((x - x0 as f64) as f32, (y - y0 as f64) as f32);
    let top = frame.get(x0, y0) * (1.0 - fx) + frame.get(x1, y0) * fx;
    let bot = frame.get(x0, y1) * (1.0 - fx) + frame.get(x1, y1) * fx;
    top * (1.0 - fy) + bot * fy
}

fn warp_frame(frame: &Frame, sigma: f64, seed: u64) -> Result<Frame, SynthError> {
    let (w, h) = (frame.width(), frame.height());
    let gw = w / JITTER_CELL + 2;
    let gh = h / JITTER_CELL + 2;
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let field: Vec<[f64; 2]> = (0..gw * gh)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let gy = y as f64 / JITTER_CELL as f64;
        let iy = gy.floor() as usize;
        let ty = smooth(gy - iy as f64);
        for x in 0..w {
            let gx = x as f64 / JITTER_CELL as f64;
            let ix = gx.floor() as usize;
            let tx = smooth(gx - ix as f64);
            let node = |i: usize, j: usize| field[j * gw + i];
            let mut d = [0.0; 2];
            for (k, dk) in d.iter_mut().enumerate() {
                let top = node(ix, iy)[k] * (1.0 - tx) + node(ix + 1, iy)[k] * tx;
                let bot = node(ix, iy + 1)[k] * (1.0 - tx) + node(ix + 1, iy + 1)[k] * tx;
                *dk = top * (1.0 - ty) + bot * ty;
            }
            out[y * w + x] = bilinear(frame, x as f64 + d[0], y as f64 + d[1]);
        }
    }
    Ok(Frame::from_clamped(
        frame.index,
        w,
        h,
        out,
        frame.source_path.clone(),
    )?)
}

/// Warp each frame by its own random smooth displacement field whose node
/// displacements are `N(0, sigma²)` pixels. `sigma == 0` returns the input
/// unchanged.
pub fn jitter_warp(frames: &[Frame], sigma: f64, seed: u64) -> Result<Vec<Frame>, SynthError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(SynthError::InvalidConfig(
            "jitter sigma must be >= 0".into(),
        ));
    }
    if sigma == 0.0 {
        return Ok(frames.to_vec());
    }
    frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| warp_frame(f, sigma, derive_seed(seed, i as u64)))
        .collect()
}

/// Add independent `N(0, sigma²)` luminance noise to every pixel, clamped.
pub fn add_pixel_noise(frames: &[Frame], sigma: f64, seed: u64) -> Result<Vec<Frame>, SynthError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(SynthError::InvalidConfig("noise sigma must be >= 0".into()));
    }
    if sigma == 0.0 {
        return Ok(frames.to_vec());
    }
    frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut rng = rng_from_seed(derive_seed(seed ^ 0x6E6F_6973_6500_0000, i as u64));
            let normal = Normal::new(0.0, sigma).expect("valid sigma");
            let px: Vec<f32> = f
                .pixels()
                .iter()
                .map(|&p| p + normal.sample(&mut rng) as f32)
                .collect();
            Ok(Frame::from_clamped(
                f.index,
                f.width(),
                f.height(),
                px,
                f.source_path.clone(),
            )?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epipolar::epipolar_residual;

    fn cam(rotation: Matrix3<f64>, t: Vector3<f64>, f: f64, c: f64) -> PinholeCamera {
        PinholeCamera::new(f, f, c, c, rotation, t).unwrap()
    }

    #[test]
    fn projection_examples() {
        let id = cam(Matrix3::identity(), Vector3::zeros(), 1.0, 0.0);
        assert_eq!(
            project(&id, &Vector3::new(0.0, 0.0, 1.0)).unwrap(),
            [0.0, 0.0]
        );
        let c = cam(Matrix3::identity(), Vector3::zeros(), 100.0, 50.0);
        assert_eq!(
            project(&c, &Vector3::new(1.0, 2.0, 2.0)).unwrap(),
            [100.0, 150.0]
        );
        assert!(matches!(
            project(&c, &Vector3::new(1.0, 2.0, 0.0)),
            Err(SynthError::BehindCamera(_))
        ));
    }

    #[test]
    fn x_translation_gives_rectified_f() {
        let a = cam(Matrix3::identity(), Vector3::zeros(), 1.0, 0.0);
        let b = cam(Matrix3::identity(), Vector3::new(1.0, 0.0, 0.0), 1.0, 0.0);
        let f = ground_truth_f(&a, &b).unwrap();
        let expected =
            FundamentalMatrix::new(Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0))
                .unwrap();
        assert!(f.distance_up_to_sign(&expected) < 1e-12);
        assert!(matches!(
            ground_truth_f(&a, &a),
            Err(SynthError::NoBaseline)
        ));
    }

    #[test]
    fn rejects_non_rotation() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            PinholeCamera::new(1.0, 1.0, 0.0, 0.0, m, Vector3::zeros()),
            Err(SynthError::NotARotation)
        ));
        assert!(matches!(
            PinholeCamera::new(0.0, 1.0, 0.0, 0.0, Matrix3::identity(), Vector3::zeros()),
            Err(SynthError::BadIntrinsics)
        ));
    }

    #[test]
    fn trajectories_are_orthonormal_and_see_points() {
        for cfg in [SceneConfig::orbit(20, 3), SceneConfig::dolly(20, 3)] {
            let scene = SyntheticScene::build(&cfg).unwrap();
            for c in &scene.trajectory {
                let err = (c.rotation.transpose() * c.rotation - Matrix3::identity())
                    .abs()
                    .max();
                assert!(err < 1e-10);
                for p in &scene.points3d {
                    assert!((c.rotation * p + c.translation).z > 0.0);
                }
            }
        }
    }

    #[test]
    fn ledger_points_satisfy_ground_truth() {
        let mut cfg = SceneConfig::orbit(31, 5);
        cfg.width = 96;
        cfg.height = 72;
        let (scene, _, ledger) = render_preset(&cfg).unwrap();
        let f = ground_truth_f(&scene.trajectory[0], &scene.trajectory[30]).unwrap();
        let corrs = ledger.correspondences(0, 30);
        assert!(corrs.len() > 20);
        for c in corrs {
            let r = epipolar_residual(&f, c.a_xy, c.b_xy);
            assert!(r.max() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn zero_points_means_empty_ledger() {
        let mut cfg = SceneConfig::orbit(2, 1);
        cfg.num_points = 0;
        cfg.width = 32;
        cfg.height = 24;
        let (_, frames, ledger) = render_preset(&cfg).unwrap();
        assert_eq!(frames.len(), 2);
        assert!(ledger.frames.iter().all(|f| f.projections.is_empty()));
    }

    #[test]
    fn jitter_identity_and_determinism() {
        let mut cfg = SceneConfig::orbit(2, 9);
        cfg.width = 48;
        cfg.height = 40;
        let (_, frames, _) = render_preset(&cfg).unwrap();
        assert_eq!(jitter_warp(&frames, 0.0, 1).unwrap(), frames);
        let a = jitter_warp(&frames, 2.0, 11).unwrap();
        let b = jitter_warp(&frames, 2.0, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, frames);
        assert!(jitter_warp(&frames, -1.0, 1).is_err());
    }

    #[test]
    fn ground_transfer_round_trip() {
        let scene = SyntheticScene::build(&SceneConfig::orbit(10, 2)).unwrap();
        let p = scene.transfer_ground(0, 9, [160.0, 120.0]).unwrap();
        let back = scene.transfer_ground(9, 0, p).unwrap();
        assert!((back[0] - 160.0).abs() < 1e-8 && (back[1] - 120.0).abs() < 1e-8);
    }
}
