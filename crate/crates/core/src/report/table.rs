use std::fs;
use std::path::Path;

use super::{ReportError, ScoreReport};

pub const CSV_HEADER: [&str; 7] = [
    "video",
    "method",
    "num_pts",
    "num_inliers_F",
    "keep_ratio",
    "mean_err",
    "rmse",
];

/// One row per report, two decimals per metric, RFC-4180 quoting.
pub fn to_csv_string(reports: &[ScoreReport]) -> Result<String, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::EmptyReport);
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.video_id.clone(),
            r.method.clone(),
            format!("{:.2}", r.num_pts),
            format!("{:.2}", r.num_inliers_f),
            format!("{:.2}", r.keep_ratio),
            format!("{:.2}", r.mean_err),
            format!("{:.2}", r.rmse),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ReportError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Csv(e.to_string()))
}

pub fn write_csv(reports: &[ScoreReport], path: &Path) -> Result<(), ReportError> {
    let s = to_csv_string(reports)?;
    fs::write(path, s).map_err(|e| ReportError::io(path, e))
}
