//! Brute-force reference implementations for cross-checking `geoconsist`.
//!
//! Everything here works on plain slices so it cannot accidentally share code
//! paths with the crate under test. Nothing in this crate is fast.

/// One oracle match: `(a_id, b_id, distance)`.
pub type OracleMatch = (usize, usize, f64);

/// Outcome of comparing an optimized quantity with its oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub max_abs_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleCheck {
    pub fn new(name: impl Into<String>, max_abs_discrepancy: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_abs_discrepancy,
            tolerance,
            pass: max_abs_discrepancy.is_finite() && max_abs_discrepancy <= tolerance,
        }
    }
}

/// Collection of checks; passes only if every check passes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn push(&mut self, check: OracleCheck) {
        self.checks.push(check);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmptyPopulation;

/// Euclidean distance with the matcher's documented summation order: eight
/// interleaved `f32` lanes, then a pairwise lane reduction.
fn distance(a: &[f32], b: &[f32]) -> f64 {
    let mut lanes = [0.0f32; 8];
    for i in 0..a.len() {
        let d = a[i] - b[i];
        lanes[i % 8] += d * d;
    }
    let s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]))
        + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
    (s as f64).sqrt()
}

/// Full distance matrix, `rows[i][j] = |a_i - b_j|`.
fn distance_matrix(a: &[Vec<f32>], b: &[Vec<f32>]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|da| b.iter().map(|db| distance(da, db)).collect())
        .collect()
}

/// Indices of the row sorted by (distance, index).
fn ranked(row: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&i, &j| row[i].total_cmp(&row[j]).then(i.cmp(&j)));
    idx
}

fn passes_ratio(row: &[f64], ratio: f64) -> Option<usize> {
    let order = ranked(row);
    if order.len() < 2 {
        return None;
    }
    let d1 = row[order[0]];
    let d2 = row[order[1]];
    if d2 > 0.0 && d1 / d2 < ratio {
        Some(order[0])
    } else {
        None
    }
}

/// Literal double-loop nearest-two-neighbour matching with the ratio test.
///
/// With `cross_check`, a pair survives only if it also survives the ratio
/// test when the roles of A and B are swapped.
pub fn oracle_match(
    desc_a: &[Vec<f32>],
    desc_b: &[Vec<f32>],
    ratio: f64,
    cross_check: bool,
) -> Vec<OracleMatch> {
    if desc_a.is_empty() || desc_b.is_empty() {
        return Vec::new();
    }
    let m = distance_matrix(desc_a, desc_b);
    let mut out = Vec::new();
    for (i, row) in m.iter().enumerate() {
        let Some(j) = passes_ratio(row, ratio) else {
            continue;
        };
        if cross_check {
            let column: Vec<f64> = m.iter().map(|r| r[j]).collect();
            if passes_ratio(&column, ratio) != Some(i) {
                continue;
            }
        }
        out.push((i, j, row[j]));
    }
    out
}

/// Direct `(mae, rmse)` of a residual population.
pub fn oracle_stats(values: &[f64]) -> Result<(f64, f64), EmptyPopulation> {
    if values.is_empty() {
        return Err(EmptyPopulation);
    }
    let n = values.len() as f64;
    let mae = values.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mse = values.iter().map(|v| v * v).sum::<f64>() / n;
    Ok((mae, mse.sqrt()))
}

/// Point-to-line distances computed straight from the 3x3 entries.
pub fn oracle_residual(f: &[[f64; 3]; 3], x: [f64; 2], xp: [f64; 2]) -> (f64, f64) {
    let p = [x[0], x[1], 1.0];
    let q = [xp[0], xp[1], 1.0];
    let mut fwd = [0.0; 3];
    let mut bwd = [0.0; 3];
    for r in 0..3 {
        for c in 0..3 {
            fwd[r] += f[r][c] * p[c];
            bwd[c] += f[r][c] * q[r];
        }
    }
    let df = (fwd[0] * q[0] + fwd[1] * q[1] + fwd[2] * q[2]).abs() / fwd[0].hypot(fwd[1]);
    let db = (bwd[0] * p[0] + bwd[1] * p[1] + bwd[2] * p[2]).abs() / bwd[0].hypot(bwd[1]);
    (df, db)
}
