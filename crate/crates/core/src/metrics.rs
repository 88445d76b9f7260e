//! Per-pair and per-video geometric-consistency metrics and the
//! keep-ratio-versus-interval stability curve.
//!
//! For a frame pair, `num_pts` counts ratio-test survivors (after the optional
//! cross check), `num_inliers_f` counts correspondences RANSAC keeps, and
//! `keep_ratio` is their quotient. Each inlier contributes one residual, the
//! mean of its two point-to-epipolar-line distances under the final F.
//!
//! Per video, counts and keep ratios are averaged over valid pairs (so the
//! reported keep ratio is a mean of per-pair ratios), while `mean_err` and
//! `rmse` are the MAE and RMSE of the residuals pooled across all valid pairs.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epipolar::{
    ransac_fundamental, EpipolarError, RansacParams, RansacResult, MIN_CORRESPONDENCES,
};
use crate::imageio::{sample_pairs, Frame, FramePair, ImageIoError};
use crate::matching::{match_features, Correspondence, MatchParams};
use crate::rng::derive_seed;
use crate::sift::{extract, Features, SiftError, SiftParams};

/// Frame interval used when none is given.
pub const DEFAULT_INTERVAL: usize = 30;

/// Intervals sampled by default for the stability curve.
pub const DEFAULT_STABILITY_INTERVALS: [usize; 8] = [5, 10, 15, 20, 25, 30, 40, 50];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{frame_count} frames are not enough for interval {interval}")]
    InsufficientFrames { frame_count: usize, interval: usize },
    #[error("all {pairs} frame pairs were invalid")]
    AllPairsInvalid { pairs: usize },
    #[error("pair ({}, {}) invalid: {reason}", pair.a_index, pair.b_index)]
    PairInvalid {
        pair: FramePair,
        num_pts: usize,
        reason: String,
    },
    #[error("frames differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("frame pair must have b > a, got ({0}, {1})")]
    BadPair(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Sift(#[from] SiftError),
}

impl From<ImageIoError> for MetricsError {
    fn from(e: ImageIoError) -> Self {
        match e {
            ImageIoError::InsufficientFrames {
                frame_count,
                interval,
            } => MetricsError::InsufficientFrames {
                frame_count,
                interval,
            },
            ImageIoError::ZeroInterval => {
                MetricsError::InvalidParams("interval must be >= 1".into())
            }
            other => MetricsError::InvalidParams(other.to_string()),
        }
    }
}

/// Everything the pipeline needs besides the frames.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub sift: SiftParams,
    pub matching: MatchParams,
    /// `ransac.seed` is the master seed; each pair gets a derived seed.
    pub ransac: RansacParams,
}

impl PipelineParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        self.sift.validate()?;
        let r = self.matching.ratio;
        if !(r > 0.0 && r <= 1.0) {
            return Err(MetricsError::InvalidParams(format!(
                "ratio must be in (0, 1], got {r}"
            )));
        }
        self.ransac
            .validate()
            .map_err(|e| MetricsError::InvalidParams(e.to_string()))
    }

    pub fn pair_seed(&self, pair_index: usize) -> u64 {
        derive_seed(self.ransac.seed, pair_index as u64)
    }
}

/// Metrics for one valid frame pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub pair: FramePair,
    pub num_pts: usize,
    pub num_inliers_f: usize,
    pub keep_ratio: f64,
    /// One averaged bidirectional distance per inlier, pixels.
    pub residuals: Vec<f64>,
    /// Residuals excluded because a point mapped to the line at infinity.
    pub nonfinite_residuals: usize,
    pub degenerate: bool,
}

impl PairMetrics {
    pub fn mean_err(&self) -> f64 {
        residual_stats(&self.residuals).map_or(0.0, |s| s.0)
    }

    pub fn rmse(&self) -> f64 {
        residual_stats(&self.residuals).map_or(0.0, |s| s.1)
    }
}

/// A pair excluded from the averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidPair {
    pub pair: FramePair,
    pub num_pts: usize,
    pub reason: String,
}

/// Per-video aggregate over valid pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VideoScore {
    pub mean_num_pts: f64,
    pub mean_num_inliers_f: f64,
    pub mean_keep_ratio: f64,
    pub mean_err: f64,
    pub rmse: f64,
    pub pair_count: usize,
    pub invalid_pairs: usize,
}

impl VideoScore {
    /// Aggregate valid pair metrics; `invalid_pairs` is carried through.
    pub fn aggregate(pairs: &[PairMetrics], invalid_pairs: usize) -> Result<Self, MetricsError> {
        if pairs.is_empty() {
            return Err(MetricsError::AllPairsInvalid {
                pairs: invalid_pairs,
            });
        }
        let n = pairs.len() as f64;
        let mean = |f: &dyn Fn(&PairMetrics) -> f64| pairs.iter().map(f).sum::<f64>() / n;
        let mut count = 0usize;
        let mut abs_sum = 0.0;
        let mut sq_sum = 0.0;
        for r in pairs.iter().flat_map(|p| &p.residuals) {
            count += 1;
            abs_sum += r.abs();
            sq_sum += r * r;
        }
        let (mean_err, rmse) = if count == 0 {
            (0.0, 0.0)
        } else {
            let mae = abs_sum / count as f64;
            // rounding can leave rmse an ulp under mae on constant populations
            (mae, (sq_sum / count as f64).sqrt().max(mae))
        };
        Ok(Self {
            mean_num_pts: mean(&|p| p.num_pts as f64),
            mean_num_inliers_f: mean(&|p| p.num_inliers_f as f64),
            mean_keep_ratio: mean(&|p| p.keep_ratio),
            mean_err,
            rmse,
            pair_count: pairs.len(),
            invalid_pairs,
        })
    }
}

/// `(mae, rmse)` of a residual population, `None` when empty.
pub fn residual_stats(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mae = values.iter().map(|v| v.abs()).sum::<f64>() / n;
    let rmse = (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    Some((mae, rmse.max(mae)))
}

/// Result of scoring one video at one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoEvaluation {
    pub interval: usize,
    pub score: VideoScore,
    pub pairs: Vec<PairMetrics>,
    pub invalid: Vec<InvalidPair>,
}

/// Intermediate products for one pair, kept for visualization.
#[derive(Debug, Clone)]
pub struct PairAnalysis {
    pub pair: FramePair,
    pub correspondences: Vec<Correspondence>,
    pub ransac: Result<RansacResult, EpipolarError>,
}

impl PairAnalysis {
    pub fn num_pts(&self) -> usize {
        self.correspondences.len()
    }

    pub fn inlier_ids(&self) -> &[usize] {
        self.ransac
            .as_ref()
            .map_or(&[], |r| r.inlier_ids.as_slice())
    }

    pub fn metrics(&self) -> Result<PairMetrics, MetricsError> {
        let num_pts = self.num_pts();
        let invalid = |reason: String| MetricsError::PairInvalid {
            pair: self.pair,
            num_pts,
            reason,
        };
        if num_pts < MIN_CORRESPONDENCES {
            return Err(invalid(format!(
                "only {num_pts} initial matches, need {MIN_CORRESPONDENCES}"
            )));
        }
        let ransac = self.ransac.as_ref().map_err(|e| invalid(e.to_string()))?;
        let mut residuals = Vec::with_capacity(ransac.inlier_ids.len());
        let mut nonfinite = 0;
        for &i in &ransac.inlier_ids {
            let c = &self.correspondences[i];
            let r = ransac.f.residual(c.a_xy, c.b_xy);
            if r.is_finite() {
                residuals.push(r.mean());
            } else {
                nonfinite += 1;
            }
        }
        if nonfinite > 0 {
            warn!(
                "pair ({}, {}): {nonfinite} residuals at the line at infinity excluded",
                self.pair.a_index, self.pair.b_index
            );
        }
        let num_inliers_f = residuals.len();
        Ok(PairMetrics {
            pair: self.pair,
            num_pts,
            num_inliers_f,
            keep_ratio: num_inliers_f as f64 / num_pts as f64,
            residuals,
            nonfinite_residuals: nonfinite,
            degenerate: ransac.degenerate,
        })
    }
}

/// Match precomputed features and run RANSAC with the seed for `pair_index`.
pub fn analyze_features(
    pair: FramePair,
    a: &Features,
    b: &Features,
    params: &PipelineParams,
    pair_index: usize,
) -> PairAnalysis {
    let correspondences = match_features(a, b, &params.matching);
    let ransac_params = RansacParams {
        seed: params.pair_seed(pair_index),
        ..params.ransac
    };
    let ransac = ransac_fundamental(&correspondences, &ransac_params);
    PairAnalysis {
        pair,
        correspondences,
        ransac,
    }
}

fn check_pair(frame_a: &Frame, frame_b: &Frame) -> Result<FramePair, MetricsError> {
    if (frame_a.width(), frame_a.height()) != (frame_b.width(), frame_b.height()) {
        return Err(MetricsError::DimensionMismatch(
            frame_a.width(),
            frame_a.height(),
            frame_b.width(),
            frame_b.height(),
        ));
    }
    FramePair::new(frame_a.index, frame_b.index)
        .ok_or(MetricsError::BadPair(frame_a.index, frame_b.index))
}

/// Full pipeline on two frames, returning intermediates.
pub fn analyze_pair(
    frame_a: &Frame,
    frame_b: &Frame,
    params: &PipelineParams,
) -> Result<PairAnalysis, MetricsError> {
    params.validate()?;
    let pair = check_pair(frame_a, frame_b)?;
    let (fa, fb) = rayon::join(
        || extract(frame_a, &params.sift),
        || extract(frame_b, &params.sift),
    );
    Ok(analyze_features(pair, &fa?, &fb?, params, 0))
}

/// SIFT, matching and RANSAC on one pair of frames.
pub fn score_pair(
    frame_a: &Frame,
    frame_b: &Frame,
    params: &PipelineParams,
) -> Result<PairMetrics, MetricsError> {
    analyze_pair(frame_a, frame_b, params)?.metrics()
}

/// Features for the given frame indices, computed in parallel.
fn extract_many(
    frames: &[Frame],
    indices: &[usize],
    params: &SiftParams,
) -> Result<BTreeMap<usize, Features>, MetricsError> {
    let results: Vec<(usize, Result<Features, SiftError>)> = indices
        .par_iter()
        .map(|&i| (i, extract(&frames[i], params)))
        .collect();
    let mut out = BTreeMap::new();
    for (i, r) in results {
        out.insert(i, r?);
    }
    Ok(out)
}

fn evaluate_pairs(
    pairs: &[FramePair],
    features: &BTreeMap<usize, Features>,
    params: &PipelineParams,
    interval: usize,
) -> Result<VideoEvaluation, MetricsError> {
    let outcomes: Vec<Result<PairMetrics, MetricsError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            analyze_features(*p, &features[&p.a_index], &features[&p.b_index], params, i).metrics()
        })
        .collect();
    let mut valid = Vec::new();
    let mut invalid = Vec::new();
    for o in outcomes {
        match o {
            Ok(m) => valid.push(m),
            Err(MetricsError::PairInvalid {
                pair,
                num_pts,
                reason,
            }) => {
                warn!(
                    "pair ({}, {}) invalid: {reason}",
                    pair.a_index, pair.b_index
                );
                invalid.push(InvalidPair {
                    pair,
                    num_pts,
                    reason,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let score = VideoScore::aggregate(&valid, invalid.len())?;
    Ok(VideoEvaluation {
        interval,
        score,
        pairs: valid,
        invalid,
    })
}

fn frames_in(pairs: &[FramePair]) -> Vec<usize> {
    let mut idx: Vec<usize> = pairs.iter().flat_map(|p| [p.a_index, p.b_index]).collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// Score a sequence at one sampling interval.
pub fn score_video(
    frames: &[Frame],
    interval: usize,
    params: &PipelineParams,
) -> Result<VideoEvaluation, MetricsError> {
    params.validate()?;
    let pairs = sample_pairs(frames.len(), interval)?;
    let features = extract_many(frames, &frames_in(&pairs), &params.sift)?;
    evaluate_pairs(&pairs, &features, params, interval)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub interval: usize,
    pub mean_keep_ratio: f64,
    pub pair_count: usize,
}

/// Mean keep ratio as a function of frame interval, intervals ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCurve {
    pub points: Vec<StabilityPoint>,
}

impl StabilityCurve {
    pub fn at(&self, interval: usize) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.interval == interval)
            .map(|p| p.mean_keep_ratio)
    }
}

/// Score the sequence at each interval. Intervals without a usable pair are
/// omitted with a warning. Features are extracted once per frame.
pub fn stability_curve(
    frames: &[Frame],
    intervals: &[usize],
    params: &PipelineParams,
) -> Result<StabilityCurve, MetricsError> {
    params.validate()?;
    let mut intervals: Vec<usize> = intervals.to_vec();
    intervals.sort_unstable();
    intervals.dedup();
    if intervals.first() == Some(&0) {
        return Err(MetricsError::InvalidParams("interval must be >= 1".into()));
    }
    let plans: Vec<(usize, Vec<FramePair>)> = intervals
        .iter()
        .filter_map(|&k| match sample_pairs(frames.len(), k) {
            Ok(p) => Some((k, p)),
            Err(_) => {
                warn!("interval {k}: {} frames are too few, omitted", frames.len());
                None
            }
        })
        .collect();
    if plans.is_empty() {
        return Err(MetricsError::InsufficientFrames {
            frame_count: frames.len(),
            interval: intervals.first().copied().unwrap_or(0),
        });
    }
    let all_pairs: Vec<FramePair> = plans.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let features = extract_many(frames, &frames_in(&all_pairs), &params.sift)?;

    let mut points = Vec::new();
    let mut invalid_pairs = 0;
    for (k, pairs) in &plans {
        match evaluate_pairs(pairs, &features, params, *k) {
            Ok(eval) => points.push(StabilityPoint {
                interval: *k,
                mean_keep_ratio: eval.score.mean_keep_ratio,
                pair_count: eval.score.pair_count,
            }),
            Err(MetricsError::AllPairsInvalid { pairs }) => {
                warn!("interval {k}: all {pairs} pairs invalid, omitted");
                invalid_pairs += pairs;
            }
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(MetricsError::AllPairsInvalid {
            pairs: invalid_pairs,
        });
    }
    Ok(StabilityCurve { points })
}
