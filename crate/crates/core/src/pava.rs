//! Weighted isotonic regression by pooling adjacent violators.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Increasing,
    Decreasing,
}

/// Observations with strictly positive weights and a monotonicity direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSeries {
    values: Vec<f64>,
    weights: Vec<f64>,
    direction: Direction,
}

impl WeightedSeries {
    pub fn new(values: Vec<f64>, weights: Vec<f64>, direction: Direction) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                got: weights.len(),
                expected: values.len(),
            });
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0) || !w.is_finite())
        {
            return Err(Error::NonpositiveWeight { index, value });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value {bad}")));
        }
        Ok(WeightedSeries {
            values,
            weights,
            direction,
        })
    }

    /// Unit weights, increasing direction.
    pub fn unweighted(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        WeightedSeries::new(values, vec![1.0; n], Direction::Increasing)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// Values and weights in the order where the constraint is nondecreasing.
    pub(crate) fn oriented(&self) -> (Vec<f64>, Vec<f64>) {
        let mut v = self.values.clone();
        let mut w = self.weights.clone();
        if self.direction == Direction::Decreasing {
            v.reverse();
            w.reverse();
        }
        (v, w)
    }
}

/// Contiguous blocks covering `0..n` with one fitted level per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub blocks: Vec<Range<usize>>,
    pub levels: Vec<f64>,
}

impl ClusterPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Total number of indices covered.
    pub fn n(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.end)
    }

    /// Reverses index order, mapping block `a..b` to `n-b..n-a`.
    pub(crate) fn reversed(mut self) -> Self {
        let n = self.n();
        self.blocks.reverse();
        self.levels.reverse();
        for b in &mut self.blocks {
            *b = (n - b.end)..(n - b.start);
        }
        self
    }
}

/// Weighted least-squares projection onto monotone sequences.
///
/// Single left-to-right stack pass. Only strict violations are pooled, so
/// equal adjacent levels stay in separate blocks.
pub fn isotonic_fit(series: &WeightedSeries) -> Result<ClusterPartition> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (x, w) = series.oriented();
    let part = pool(&x, &w);
    Ok(match series.direction {
        Direction::Increasing => part,
        Direction::Decreasing => part.reversed(),
    })
}

fn pool(x: &[f64], w: &[f64]) -> ClusterPartition {
    // (start, end, weighted sum, weight)
    let mut stack: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut cur = (i, i + 1, w[i] * x[i], w[i]);
        while let Some(&prev) = stack.last() {
            if cur.2 / cur.3 < prev.2 / prev.3 {
                stack.pop();
                cur = (prev.0, cur.1, prev.2 + cur.2, prev.3 + cur.3);
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    ClusterPartition {
        blocks: stack.iter().map(|c| c.0..c.1).collect(),
        levels: stack.iter().map(|c| c.2 / c.3).collect(),
    }
}

/// Length-`n` vector constant on each block.
pub fn expand(partition: &ClusterPartition, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (block, &level) in partition.blocks.iter().zip(&partition.levels) {
        for slot in &mut out[block.clone()] {
            *slot = level;
        }
    }
    out
}
