//! Report serialization: JSON and CSV score tables, the stability plot as
//! SVG, and PNG match overlays.

mod json;
mod overlay;
mod svg;
mod table;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use json::{
    read_json, sig6, to_json_string, write_json, write_stability_json, PairRow, ReportParams,
    ScoreReport, StabilityReport, StabilityRow, TOOL_VERSION,
};
pub use overlay::{draw_matches, render_matches, OverlaySummary, INLIER_COLOR, OUTLIER_COLOR};
pub use svg::{plot_stability, stability_svg, top_gridline_y};
pub use table::{to_csv_string, write_csv, CSV_HEADER};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("nothing to report: no valid pairs")]
    EmptyReport,
    #[error("stability curve `{0}` has no points")]
    EmptyCurve(String),
    #[error("montage needs equal heights, got {0} and {1}")]
    HeightMismatch(usize, usize),
}

impl ReportError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<csv::Error> for ReportError {
    fn from(e: csv::Error) -> Self {
        ReportError::Csv(e.to_string())
    }
}
