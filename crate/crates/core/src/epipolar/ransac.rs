use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::fundamental::{linear_fit, LinearFit, MIN_CORRESPONDENCES};
use super::{EpipolarError, FundamentalMatrix};
use crate::matching::Correspondence;
use crate::rng::{rng_from_seed, DEFAULT_SEED};

pub const DEFAULT_THRESHOLD: f64 = 3.0;
pub const DEFAULT_CONFIDENCE: f64 = 0.999;
pub const DEFAULT_MAX_ITERS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    /// Inlier bound on `max(d_forward, d_backward)`, pixels.
    pub threshold: f64,
    pub confidence: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            confidence: DEFAULT_CONFIDENCE,
            max_iters: DEFAULT_MAX_ITERS,
            seed: DEFAULT_SEED,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<(), EpipolarError> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(EpipolarError::InvalidParams("threshold must be > 0".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(EpipolarError::InvalidParams(
                "confidence must be in (0, 1)".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(EpipolarError::InvalidParams(
                "max_iters must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacResult {
    pub f: FundamentalMatrix,
    /// Ascending indices into the correspondence list.
    pub inlier_ids: Vec<usize>,
    pub iterations_run: usize,
    /// The consensus set barely constrains F (rank-deficient or
    /// near-degenerate design); metrics are still meaningful but F is not.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
struct Consensus {
    inliers: Vec<usize>,
    residual_sum: f64,
}

impl Consensus {
    fn better_than(&self, other: &Consensus) -> bool {
        self.inliers.len() > other.inliers.len()
            || (self.inliers.len() == other.inliers.len() && self.residual_sum < other.residual_sum)
    }
}

fn consensus(f: &FundamentalMatrix, corrs: &[Correspondence], threshold: f64) -> Consensus {
    let mut inliers = Vec::new();
    let mut residual_sum = 0.0;
    for (i, c) in corrs.iter().enumerate() {
        let r = f.residual(c.a_xy, c.b_xy);
        let e = r.max();
        // NaN and +inf both fail this test
        if e <= threshold {
            inliers.push(i);
            residual_sum += e;
        }
    }
    Consensus {
        inliers,
        residual_sum,
    }
}

/// Iterations needed to draw one all-inlier sample with `confidence`.
fn required_iterations(inlier_ratio: f64, confidence: f64, cap: usize) -> usize {
    if inlier_ratio >= 1.0 {
        return 1;
    }
    let p_good = inlier_ratio.powi(MIN_CORRESPONDENCES as i32);
    if p_good <= 0.0 {
        return cap;
    }
    let denom = (1.0 - p_good).ln();
    if denom >= 0.0 {
        return cap;
    }
    let n = ((1.0 - confidence).ln() / denom).ceil();
    if n.is_finite() && n < cap as f64 {
        (n as usize).max(1)
    } else {
        cap
    }
}

/// Robust fundamental matrix from putative correspondences.
///
/// Minimal samples of eight distinct correspondences are drawn from a
/// ChaCha8 stream seeded with `params.seed`. The best sample model (most
/// inliers, then lowest residual sum) is refit on its consensus set once and
/// inliers are re-evaluated against the refit.
pub fn ransac_fundamental(
    corrs: &[Correspondence],
    params: &RansacParams,
) -> Result<RansacResult, EpipolarError> {
    params.validate()?;
    let n = corrs.len();
    if n < MIN_CORRESPONDENCES {
        return Err(EpipolarError::TooFewCorrespondences { found: n });
    }
    let mut rng = rng_from_seed(params.seed);
    let mut best: Option<(LinearFit, Consensus)> = None;
    let mut needed = params.max_iters;
    let mut iterations = 0;
    while iterations < needed.min(params.max_iters) {
        iterations += 1;
        let mut ids: Vec<usize> = sample(&mut rng, n, MIN_CORRESPONDENCES).into_vec();
        ids.sort_unstable();
        let Ok(fit) = linear_fit(corrs, Some(&ids)) else {
            continue;
        };
        let cons = consensus(&fit.f, corrs, params.threshold);
        if best.as_ref().is_none_or(|(_, b)| cons.better_than(b)) {
            let ratio = cons.inliers.len() as f64 / n as f64;
            needed = required_iterations(ratio, params.confidence, params.max_iters);
            best = Some((fit, cons));
        }
    }
    let Some((sample_fit, sample_cons)) = best else {
        return Err(EpipolarError::DegenerateConfiguration(
            "no minimal sample produced a model".into(),
        ));
    };

    let (fit, cons) = match linear_fit(corrs, Some(&sample_cons.inliers)) {
        Ok(refit) => {
            let cons = consensus(&refit.f, corrs, params.threshold);
            if cons.inliers.len() >= MIN_CORRESPONDENCES {
                (refit, cons)
            } else {
                (sample_fit, sample_cons)
            }
        }
        Err(_) => (sample_fit, sample_cons),
    };
    if cons.inliers.len() < MIN_CORRESPONDENCES {
        return Err(EpipolarError::DegenerateConfiguration(format!(
            "best model has only {} inliers",
            cons.inliers.len()
        )));
    }
    let degenerate = match linear_fit(corrs, Some(&cons.inliers)) {
        Ok(final_design) => final_design.near_degenerate(),
        Err(_) => true,
    } || fit.rank_deficient();
    Ok(RansacResult {
        f: fit.f,
        inlier_ids: cons.inliers,
        iterations_run: iterations,
        degenerate,
    })
}
