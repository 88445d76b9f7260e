//! Exact brute-force descriptor matching with the ratio test and an optional
//! mutual (cross) check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sift::{Descriptor, Features};

pub const DEFAULT_RATIO: f64 = 0.75;

/// Nearest-neighbour match between descriptor sets, before coordinates are
/// attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorMatch {
    pub a_id: usize,
    pub b_id: usize,
    pub distance: f64,
}

/// A matched point pair `(x, x')` across two frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub a_id: usize,
    pub b_id: usize,
    /// Euclidean descriptor distance.
    pub distance: f64,
    pub a_xy: [f64; 2],
    pub b_xy: [f64; 2],
}

impl Correspondence {
    /// Correspondence with no descriptor provenance, e.g. from a synthetic
    /// ledger.
    pub fn from_points(id: usize, a_xy: [f64; 2], b_xy: [f64; 2]) -> Self {
        Self {
            a_id: id,
            b_id: id,
            distance: 0.0,
            a_xy,
            b_xy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    /// Lowe ratio threshold in `(0, 1]`; a match needs `d1 / d2 < ratio`.
    pub ratio: f64,
    /// Keep only pairs that also pass in the B to A direction.
    pub cross_check: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            ratio: DEFAULT_RATIO,
            cross_check: true,
        }
    }
}

/// Euclidean distance between two descriptors.
///
/// Squared differences are accumulated in eight interleaved `f32` lanes that
/// are then summed pairwise; the exact order is part of the contract so that
/// independent implementations reproduce the same bits.
#[inline]
pub fn descriptor_distance(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f32; 8];
    for (ca, cb) in a.chunks_exact(8).zip(b.chunks_exact(8)) {
        for k in 0..8 {
            let d = ca[k] - cb[k];
            lanes[k] += d * d;
        }
    }
    let rem = a.len() - a.len() % 8;
    for k in rem..a.len() {
        let d = a[k] - b[k];
        lanes[k - rem] += d * d;
    }
    let s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]))
        + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
    (s as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct TwoBest {
    best: (f64, usize),
    second: Option<f64>,
}

impl TwoBest {
    /// Ratio-test winner, if any.
    fn accepted(&self, ratio: f64) -> Option<usize> {
        let d2 = self.second?;
        (d2 > 0.0 && self.best.0 / d2 < ratio).then_some(self.best.1)
    }
}

/// Two nearest entries of `pool` to `query`; ties go to the lower index.
fn two_best(query: &Descriptor, pool: &[Descriptor]) -> Option<TwoBest> {
    let mut best: Option<(f64, usize)> = None;
    let mut second: Option<f64> = None;
    for (j, cand) in pool.iter().enumerate() {
        let d = descriptor_distance(query.as_slice(), cand.as_slice());
        match best {
            Some((bd, _)) if d >= bd => {
                if second.is_none_or(|s| d < s) {
                    second = Some(d);
                }
            }
            Some((bd, _)) => {
                second = Some(bd);
                best = Some((d, j));
            }
            None => best = Some((d, j)),
        }
    }
    best.map(|best| TwoBest { best, second })
}

/// Match every A descriptor to its nearest B descriptor, keeping it when
/// `d1 / d2 < ratio`. With `cross_check`, the pair must also win the ratio
/// test from B's side. Output is sorted by `a_id`.
pub fn match_descriptors(
    desc_a: &[Descriptor],
    desc_b: &[Descriptor],
    ratio: f64,
    cross_check: bool,
) -> Vec<DescriptorMatch> {
    if desc_a.is_empty() || desc_b.is_empty() {
        return Vec::new();
    }
    let forward: Vec<Option<DescriptorMatch>> = desc_a
        .par_iter()
        .enumerate()
        .map(|(a_id, d)| {
            let tb = two_best(d, desc_b)?;
            let b_id = tb.accepted(ratio)?;
            Some(DescriptorMatch {
                a_id,
                b_id,
                distance: tb.best.0,
            })
        })
        .collect();
    let mut matches: Vec<DescriptorMatch> = forward.into_iter().flatten().collect();
    if cross_check {
        let mut candidates: Vec<usize> = matches.iter().map(|m| m.b_id).collect();
        candidates.sort_unstable();
        candidates.dedup();
        let reverse: Vec<(usize, Option<usize>)> = candidates
            .par_iter()
            .map(|&b_id| {
                let back = two_best(&desc_b[b_id], desc_a).and_then(|tb| tb.accepted(ratio));
                (b_id, back)
            })
            .collect();
        matches.retain(|m| {
            let idx = reverse
                .binary_search_by_key(&m.b_id, |(b, _)| *b)
                .expect("candidate present");
            reverse[idx].1 == Some(m.a_id)
        });
    }
    matches
}

/// Match two feature sets and attach keypoint coordinates.
pub fn match_features(a: &Features, b: &Features, params: &MatchParams) -> Vec<Correspondence> {
    match_descriptors(
        &a.descriptors,
        &b.descriptors,
        params.ratio,
        params.cross_check,
    )
    .into_iter()
    .map(|m| {
        let ka = &a.keypoints[m.a_id];
        let kb = &b.keypoints[m.b_id];
        Correspondence {
            a_id: m.a_id,
            b_id: m.b_id,
            distance: m.distance,
            a_xy: [ka.x, ka.y],
            b_xy: [kb.x, kb.y],
        }
    })
    .collect()
}
