//! Solution path of weighted nearly isotonic regression.
//!
//! Clusters move linearly in `lambda` between knots. A pair of adjacent
//! clusters is merged when they collide; after every merge slopes are
//! recomputed and pending collisions at the same `lambda` are processed
//! before the path advances.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pava::{ClusterPartition, Direction, WeightedSeries};

/// Relative tolerance for coalescing events into one knot.
const KNOT_RTOL: f64 = 1e-12;

/// Relative tolerance used to decide that two fitted values form one piece.
pub const PIECE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub start: usize,
    pub end: usize,
    pub value: f64,
    pub weight: f64,
}

/// State right after the merges at one knot, valid until the next knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub lambda: f64,
    /// Clusters in solve order (reversed for decreasing series).
    pub clusters: Vec<Cluster>,
    /// `d value / d lambda` for each cluster on the following segment.
    pub slopes: Vec<f64>,
    /// `violations[j]` is true when cluster `j` sits strictly above `j + 1`.
    pub violations: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPath {
    n: usize,
    direction: Direction,
    /// Input values in the caller's order, returned verbatim at `lambda = 0`.
    raw: Vec<f64>,
    states: Vec<PathState>,
}

/// Fitted expectation parameters at one `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    pub eta: Vec<f64>,
    /// Number of clusters in the bracketing path state.
    pub clusters: usize,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn states(&self) -> &[PathState] {
        &self.states
    }

    /// `lambda_0 = 0 < lambda_1 < ... < lambda_T`.
    pub fn knots(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.lambda).collect()
    }

    pub fn terminal_lambda(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.lambda)
    }

    /// Cluster partition at knot `k`, in the caller's index order.
    pub fn partition(&self, k: usize) -> ClusterPartition {
        let st = &self.states[k];
        let part = ClusterPartition {
            blocks: st.clusters.iter().map(|c| c.start..c.end).collect::<Vec<Range<usize>>>(),
            levels: st.clusters.iter().map(|c| c.value).collect(),
        };
        match self.direction {
            Direction::Increasing => part,
            Direction::Decreasing => part.reversed(),
        }
    }

    pub fn final_partition(&self) -> ClusterPartition {
        self.partition(self.states.len() - 1)
    }

    /// Fit exactly at knot `k` (post-merge state).
    pub fn fit_at_knot(&self, k: usize) -> PathPoint {
        let st = &self.states[k];
        self.evaluate(st, st.lambda)
    }

    /// Fit at any `lambda >= 0` by affine interpolation inside the bracketing
    /// segment. At a knot the post-merge state is used.
    pub fn fit_at(&self, lambda: f64) -> PathPoint {
        let lambda = lambda.max(0.0);
        if lambda == 0.0 {
            return PathPoint {
                lambda,
                eta: self.raw.clone(),
                clusters: self.states[0].clusters.len(),
            };
        }
        let k = self
            .states
            .partition_point(|s| s.lambda <= lambda)
            .saturating_sub(1);
        self.evaluate(&self.states[k], lambda)
    }

    fn evaluate(&self, st: &PathState, lambda: f64) -> PathPoint {
        let dl = lambda - st.lambda;
        let mut eta = vec![0.0; self.n];
        for (c, &m) in st.clusters.iter().zip(&st.slopes) {
            let v = if m == 0.0 { c.value } else { c.value + m * dl };
            for slot in &mut eta[c.start..c.end] {
                *slot = v;
            }
        }
        if self.direction == Direction::Decreasing {
            eta.reverse();
        }
        PathPoint {
            lambda,
            eta,
            clusters: st.clusters.len(),
        }
    }
}

/// Number of maximal runs of equal values, comparing neighbours with a
/// relative tolerance.
pub fn count_pieces(values: &[f64]) -> usize {
    if values.is_empty() {
        return 0;
    }
    1 + values
        .windows(2)
        .filter(|p| !same_level(p[0], p[1]))
        .count()
}

fn same_level(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    if a.is_infinite() || b.is_infinite() {
        return false;
    }
    (a - b).abs() <= PIECE_RTOL * a.abs().max(b.abs())
}

fn slopes(clusters: &[Cluster], eps: f64) -> (Vec<bool>, Vec<f64>) {
    let k = clusters.len();
    let violations: Vec<bool> = clusters
        .windows(2)
        .map(|p| p[0].value - p[1].value > eps)
        .collect();
    let m = (0..k)
        .map(|j| {
            let left = j > 0 && violations[j - 1];
            let right = j + 1 < k && violations[j];
            (f64::from(u8::from(left)) - f64::from(u8::from(right))) / clusters[j].weight
        })
        .collect();
    (violations, m)
}

/// Earliest collision at or after `lambda`; ties go to the smallest index.
fn next_event(clusters: &[Cluster], m: &[f64], lambda: f64, eps: f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for j in 0..clusters.len().saturating_sub(1) {
        let diff = clusters[j + 1].value - clusters[j].value;
        let dm = m[j] - m[j + 1];
        // Touching clusters that are not separating merge at once.
        let t = if diff.abs() <= eps {
            if dm >= 0.0 {
                lambda
            } else {
                continue;
            }
        } else if dm != 0.0 && (diff > 0.0) == (dm > 0.0) {
            (lambda + diff / dm).max(lambda)
        } else {
            continue;
        };
        match best {
            None => best = Some((t, j)),
            Some((bt, _)) if t < bt && !(bt - t <= KNOT_RTOL * bt) => best = Some((t, j)),
            _ => {}
        }
    }
    best
}

/// Computes the full path from `lambda = 0` to the isotonic fit.
pub fn solve_path(series: &WeightedSeries) -> Result<SolutionPath> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (x, w) = series.oriented();
    let n = x.len();
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let eps = 1e-12 * scale;

    let mut clusters: Vec<Cluster> = (0..n)
        .map(|i| Cluster {
            start: i,
            end: i + 1,
            value: x[i],
            weight: w[i],
        })
        .collect();
    let mut lambda = 0.0;
    let (mut viol, mut m) = slopes(&clusters, eps);
    let mut states = Vec::new();

    while let Some((t, j)) = next_event(&clusters, &m, lambda, eps) {
        let same = t - lambda <= KNOT_RTOL * lambda;
        if !same {
            states.push(PathState {
                lambda,
                clusters: clusters.clone(),
                slopes: m.clone(),
                violations: viol.clone(),
            });
            for (c, &mj) in clusters.iter_mut().zip(&m) {
                if mj != 0.0 {
                    c.value += mj * (t - lambda);
                }
            }
            lambda = t;
        }
        let b = clusters.remove(j + 1);
        let a = &mut clusters[j];
        let weight = a.weight + b.weight;
        if a.value != b.value {
            a.value = (a.weight * a.value + b.weight * b.value) / weight;
        }
        a.weight = weight;
        a.end = b.end;
        (viol, m) = slopes(&clusters, eps);
    }
    states.push(PathState {
        lambda,
        clusters,
        slopes: m,
        violations: viol,
    });
    Ok(SolutionPath {
        n,
        direction: series.direction(),
        raw: series.values().to_vec(),
        states,
    })
}
