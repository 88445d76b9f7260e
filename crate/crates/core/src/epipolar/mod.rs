//! Two-view epipolar geometry: Hartley normalization, the normalized
//! eight-point solve with rank-2 enforcement, symmetric point-to-epipolar-line
//! residuals and seeded RANSAC.

mod fundamental;
mod ransac;

use thiserror::Error;

pub use fundamental::{
    eight_point, epipolar_residual, epipolar_residual_raw, normalize_points, EpipolarResidual,
    FundamentalMatrix, DEGENERACY_TOLERANCE, MIN_CORRESPONDENCES, RANK_TOLERANCE,
};
pub use ransac::{
    ransac_fundamental, RansacParams, RansacResult, DEFAULT_CONFIDENCE, DEFAULT_MAX_ITERS,
    DEFAULT_THRESHOLD,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpipolarError {
    #[error("need at least 8 correspondences, got {found}")]
    TooFewCorrespondences { found: usize },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("invalid RANSAC parameter: {0}")]
    InvalidParams(String),
}
