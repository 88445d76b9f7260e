use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use super::ReportError;
use crate::metrics::{
    InvalidPair, PairMetrics, PipelineParams, StabilityCurve, VideoEvaluation, VideoScore,
};

pub const TOOL_VERSION: &str = concat!("geoconsist ", env!("CARGO_PKG_VERSION"));

/// Round to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn ser_sig6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(sig6(*x))
}

/// Protocol parameters echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub interval: usize,
    #[serde(serialize_with = "ser_sig6")]
    pub ransac_threshold: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub ratio: f64,
    pub cross_check: bool,
    pub seed: u64,
    #[serde(serialize_with = "ser_sig6")]
    pub confidence: f64,
    pub max_iters: usize,
}

impl ReportParams {
    pub fn new(interval: usize, params: &PipelineParams) -> Self {
        Self {
            interval,
            ransac_threshold: sig6(params.ransac.threshold),
            ratio: sig6(params.matching.ratio),
            cross_check: params.matching.cross_check,
            seed: params.ransac.seed,
            confidence: sig6(params.ransac.confidence),
            max_iters: params.ransac.max_iters,
        }
    }
}

/// One row of the per-pair table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub a: usize,
    pub b: usize,
    pub num_pts: usize,
    #[serde(rename = "num_inliers_F")]
    pub num_inliers_f: usize,
    #[serde(serialize_with = "ser_sig6")]
    pub keep_ratio: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub mean_err: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub rmse: f64,
    pub degenerate: bool,
    /// Present when the pair was excluded from the averages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid: Option<String>,
}

impl PairRow {
    pub fn valid(m: &PairMetrics) -> Self {
        Self {
            a: m.pair.a_index,
            b: m.pair.b_index,
            num_pts: m.num_pts,
            num_inliers_f: m.num_inliers_f,
            keep_ratio: sig6(m.keep_ratio),
            mean_err: sig6(m.mean_err()),
            rmse: sig6(m.rmse()),
            degenerate: m.degenerate,
            invalid: None,
        }
    }

    pub fn invalid(p: &InvalidPair) -> Self {
        Self {
            a: p.pair.a_index,
            b: p.pair.b_index,
            num_pts: p.num_pts,
            num_inliers_f: 0,
            keep_ratio: 0.0,
            mean_err: 0.0,
            rmse: 0.0,
            degenerate: false,
            invalid: Some(p.reason.clone()),
        }
    }
}

/// Per-video report. Metric keys follow the usual table headings
/// (`num_pts`, `num_inliers_F`, `keep_ratio`, `mean_err`, `rmse`); the first
/// three are means over valid pairs, the error pair is pooled over inliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub tool_version: String,
    pub video_id: String,
    #[serde(default)]
    pub method: String,
    pub params: ReportParams,
    #[serde(serialize_with = "ser_sig6")]
    pub num_pts: f64,
    #[serde(rename = "num_inliers_F", serialize_with = "ser_sig6")]
    pub num_inliers_f: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub keep_ratio: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub mean_err: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub rmse: f64,
    pub pair_count: usize,
    pub invalid_pairs: usize,
    pub pairs: Vec<PairRow>,
}

impl ScoreReport {
    pub fn from_score(
        video_id: impl Into<String>,
        method: impl Into<String>,
        params: ReportParams,
        score: &VideoScore,
        pairs: Vec<PairRow>,
    ) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            video_id: video_id.into(),
            method: method.into(),
            params,
            num_pts: sig6(score.mean_num_pts),
            num_inliers_f: sig6(score.mean_num_inliers_f),
            keep_ratio: sig6(score.mean_keep_ratio),
            mean_err: sig6(score.mean_err),
            rmse: sig6(score.rmse),
            pair_count: score.pair_count,
            invalid_pairs: score.invalid_pairs,
            pairs,
        }
    }

    /// Report for a scored video; pair rows are ordered by first frame.
    pub fn from_evaluation(
        video_id: impl Into<String>,
        method: impl Into<String>,
        params: &PipelineParams,
        eval: &VideoEvaluation,
    ) -> Self {
        let mut rows: Vec<PairRow> = eval
            .pairs
            .iter()
            .map(PairRow::valid)
            .chain(eval.invalid.iter().map(PairRow::invalid))
            .collect();
        rows.sort_by_key(|r| (r.a, r.b));
        Self::from_score(
            video_id,
            method,
            ReportParams::new(eval.interval, params),
            &eval.score,
            rows,
        )
    }
}

pub fn to_json_string(report: &ScoreReport) -> Result<String, ReportError> {
    if report.pair_count == 0 {
        return Err(ReportError::EmptyReport);
    }
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(report: &ScoreReport, path: &Path) -> Result<(), ReportError> {
    let s = to_json_string(report)?;
    fs::write(path, s).map_err(|e| ReportError::io(path, e))
}

pub fn read_json(path: &Path) -> Result<ScoreReport, ReportError> {
    let s = fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

/// Stability curve with its label and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub tool_version: String,
    pub label: String,
    pub params: ReportParams,
    pub points: Vec<StabilityRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub interval: usize,
    #[serde(serialize_with = "ser_sig6")]
    pub keep_ratio: f64,
    pub pair_count: usize,
}

impl StabilityReport {
    pub fn new(label: impl Into<String>, params: &PipelineParams, curve: &StabilityCurve) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            label: label.into(),
            // interval 0: the curve spans several intervals
            params: ReportParams::new(0, params),
            points: curve
                .points
                .iter()
                .map(|p| StabilityRow {
                    interval: p.interval,
                    keep_ratio: sig6(p.mean_keep_ratio),
                    pair_count: p.pair_count,
                })
                .collect(),
        }
    }
}

pub fn write_stability_json(report: &StabilityReport, path: &Path) -> Result<(), ReportError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| ReportError::io(path, e))
}
