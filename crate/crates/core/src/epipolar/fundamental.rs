use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::EpipolarError;
use crate::matching::Correspondence;

/// Minimum correspondences for the linear solve.
pub const MIN_CORRESPONDENCES: usize = 8;

/// `σ8/σ1` below this means the design matrix has rank < 8.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// `σ8/σ7` below this flags a near-degenerate configuration.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Line coefficients smaller than this in both components denote the line at
/// infinity.
const LINE_EPS: f64 = 1e-15;

/// Rank-2, unit Frobenius norm 3x3 matrix with `x'ᵀ F x = 0`.
///
/// The sign is fixed so the largest-magnitude entry (first in row-major order
/// among entries within a relative 1e-9 of the maximum) is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalMatrix(Matrix3<f64>);

impl FundamentalMatrix {
    /// Enforce rank 2, then canonicalize scale and sign. Returns `None` for a
    /// zero or non-finite input.
    pub fn new(m: Matrix3<f64>) -> Option<Self> {
        if !m.iter().all(|v| v.is_finite()) || m.norm() == 0.0 {
            return None;
        }
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u?, svd.v_t?);
        let mut s = svd.singular_values;
        let min_idx = s.imin();
        s[min_idx] = 0.0;
        let r2 = u * Matrix3::from_diagonal(&s) * vt;
        Self::canonical(r2)
    }

    fn canonical(m: Matrix3<f64>) -> Option<Self> {
        let n = m.norm();
        if !(n.is_finite() && n > 0.0) {
            return None;
        }
        let mut m = m / n;
        // entries within a relative 1e-9 of the maximum count as tied, so
        // rounding noise cannot move the pivot
        let max = m.amax();
        let pivot = m
            .transpose()
            .iter()
            .copied()
            .find(|v| v.abs() >= max * (1.0 - 1e-9))
            .unwrap_or(0.0);
        if pivot < 0.0 {
            m = -m;
        }
        Some(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    /// `min(‖F - G‖, ‖F + G‖)` in Frobenius norm.
    pub fn distance_up_to_sign(&self, other: &FundamentalMatrix) -> f64 {
        (self.0 - other.0).norm().min((self.0 + other.0).norm())
    }

    pub fn residual(&self, x: [f64; 2], xp: [f64; 2]) -> EpipolarResidual {
        epipolar_residual_raw(&self.0, x, xp)
    }
}

/// Point-to-epipolar-line distances for one correspondence, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpipolarResidual {
    /// Distance of `x'` to the line `F x`.
    pub d_forward: f64,
    /// Distance of `x` to the line `Fᵀ x'`.
    pub d_backward: f64,
}

impl EpipolarResidual {
    pub fn is_finite(&self) -> bool {
        self.d_forward.is_finite() && self.d_backward.is_finite()
    }

    /// Inlier test statistic.
    pub fn max(&self) -> f64 {
        self.d_forward.max(self.d_backward)
    }

    /// Reported bidirectional error.
    pub fn mean(&self) -> f64 {
        0.5 * (self.d_forward + self.d_backward)
    }
}

fn point_line_distance(line: &Vector3<f64>, p: &Vector3<f64>) -> f64 {
    if line.x.abs() < LINE_EPS && line.y.abs() < LINE_EPS {
        return f64::INFINITY;
    }
    line.dot(p).abs() / line.x.hypot(line.y)
}

/// Residual under any 3x3 matrix; invariant to scaling the matrix. A point
/// mapping to the line at infinity gives `+∞` in that direction.
pub fn epipolar_residual_raw(f: &Matrix3<f64>, x: [f64; 2], xp: [f64; 2]) -> EpipolarResidual {
    let p = Vector3::new(x[0], x[1], 1.0);
    let q = Vector3::new(xp[0], xp[1], 1.0);
    let forward = f * p;
    let backward = f.transpose() * q;
    EpipolarResidual {
        d_forward: point_line_distance(&forward, &q),
        d_backward: point_line_distance(&backward, &p),
    }
}

pub fn epipolar_residual(f: &FundamentalMatrix, x: [f64; 2], xp: [f64; 2]) -> EpipolarResidual {
    epipolar_residual_raw(&f.0, x, xp)
}

/// Similarity moving the centroid to the origin with mean radius √2, and the
/// transformed points.
pub fn normalize_points(
    points: &[[f64; 2]],
) -> Result<(Matrix3<f64>, Vec<[f64; 2]>), EpipolarError> {
    if points.len() < 2 {
        return Err(EpipolarError::DegenerateConfiguration(
            "need at least two points to normalize".into(),
        ));
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean_r = points
        .iter()
        .map(|p| (p[0] - cx).hypot(p[1] - cy))
        .sum::<f64>()
        / n;
    if !(mean_r.is_finite() && mean_r > 0.0) {
        return Err(EpipolarError::DegenerateConfiguration(
            "all points coincide".into(),
        ));
    }
    let s = std::f64::consts::SQRT_2 / mean_r;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let out = points
        .iter()
        .map(|p| [s * (p[0] - cx), s * (p[1] - cy)])
        .collect();
    Ok((t, out))
}

/// Linear solve result with the design-matrix spectrum kept for degeneracy
/// diagnostics.
#[derive(Debug, Clone)]
pub(crate) struct LinearFit {
    pub f: FundamentalMatrix,
    /// Singular values of the normalized design matrix, descending (9 entries).
    pub singular_values: [f64; 9],
}

impl LinearFit {
    /// Design matrix rank below 8.
    pub fn rank_deficient(&self) -> bool {
        let s = &self.singular_values;
        s[0] <= 0.0 || s[7] / s[0] < RANK_TOLERANCE
    }

    pub fn near_degenerate(&self) -> bool {
        let s = &self.singular_values;
        self.rank_deficient() || s[6] <= 0.0 || s[7] / s[6] < DEGENERACY_TOLERANCE
    }
}

/// Normalized eight-point solve over `idx` (or every correspondence) without
/// rejecting rank-deficient designs.
pub(crate) fn linear_fit(
    corrs: &[Correspondence],
    idx: Option<&[usize]>,
) -> Result<LinearFit, EpipolarError> {
    let pick = |f: &dyn Fn(&Correspondence) -> [f64; 2]| -> Vec<[f64; 2]> {
        match idx {
            Some(ids) => ids.iter().map(|&i| f(&corrs[i])).collect(),
            None => corrs.iter().map(f).collect(),
        }
    };
    let pa = pick(&|c| c.a_xy);
    let pb = pick(&|c| c.b_xy);
    let n = pa.len();
    if n < MIN_CORRESPONDENCES {
        return Err(EpipolarError::TooFewCorrespondences { found: n });
    }
    let (ta, na) = normalize_points(&pa)?;
    let (tb, nb) = normalize_points(&pb)?;

    // pad with zero rows so the SVD exposes all nine right singular vectors
    let rows = n.max(9);
    let mut design = DMatrix::<f64>::zeros(rows, 9);
    for (i, (p, q)) in na.iter().zip(&nb).enumerate() {
        let (x, y) = (p[0], p[1]);
        let (xp, yp) = (q[0], q[1]);
        let row = [xp * x, xp * y, xp, yp * x, yp * y, yp, x, y, 1.0];
        for (j, v) in row.iter().enumerate() {
            design[(i, j)] = *v;
        }
    }
    let svd = design.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| EpipolarError::DegenerateConfiguration("svd failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut singular_values = [0.0; 9];
    for (k, &i) in order.iter().enumerate() {
        singular_values[k] = svd.singular_values[i];
    }
    let null = vt.row(order[8]);
    let fn_ = Matrix3::from_row_slice(null.clone_owned().as_slice());
    let normalized = FundamentalMatrix::new(fn_)
        .ok_or_else(|| EpipolarError::DegenerateConfiguration("null vector is zero".into()))?;
    let denorm = tb.transpose() * normalized.matrix() * ta;
    let f = FundamentalMatrix::new(denorm).ok_or_else(|| {
        EpipolarError::DegenerateConfiguration("denormalized matrix is not finite".into())
    })?;
    Ok(LinearFit { f, singular_values })
}

/// Normalized eight-point estimate from at least eight correspondences.
pub fn eight_point(corrs: &[Correspondence]) -> Result<FundamentalMatrix, EpipolarError> {
    let fit = linear_fit(corrs, None)?;
    if fit.rank_deficient() {
        return Err(EpipolarError::DegenerateConfiguration(format!(
            "design matrix rank < 8 (σ8/σ1 = {:e})",
            fit.singular_values[7] / fit.singular_values[0]
        )));
    }
    Ok(fit.f)
}
