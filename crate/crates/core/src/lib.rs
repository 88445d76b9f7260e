//! Geometric-consistency metrics for video frame sequences.
//!
//! Frames are sampled in pairs at a fixed interval, matched with SIFT
//! features and a ratio test, and filtered with fundamental-matrix RANSAC.
//! Each pair yields the number of initial matches (`num_pts`), the number of
//! epipolar inliers (`num_inliers_F`), their ratio (`keep_ratio`) and the
//! point-to-epipolar-line error of every inlier; a video is summarized by
//! pair means and pooled MAE/RMSE. Sweeping the interval gives a stability
//! curve.
//!
//! ```no_run
//! use geoconsist::{imageio, metrics};
//!
//! let frames = imageio::load_frame_dir("frames/".as_ref(), "*.png")?;
//! let eval = metrics::score_video(&frames, 30, &metrics::PipelineParams::default())?;
//! println!("keep_ratio = {:.2}", eval.score.mean_keep_ratio);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod epipolar;
pub mod imageio;
pub mod matching;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod sift;
pub mod synth;

pub use epipolar::{FundamentalMatrix, RansacParams, RansacResult};
pub use imageio::{Frame, FramePair};
pub use matching::{Correspondence, MatchParams};
pub use metrics::{PairMetrics, PipelineParams, StabilityCurve, VideoScore};
pub use sift::{Descriptor, Keypoint, SiftParams};
