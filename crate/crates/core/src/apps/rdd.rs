//! Discontinuity detection in count sequences.
//!
//! Counts are fitted with a Poisson model whose rate is penalized for
//! increasing, so an upward step survives only if the data support it.

use serde::{Deserialize, Serialize};

use super::select_and_fit;
use crate::error::Result;
use crate::expfam::Family;
use crate::generalized::{Fit, GeneralizedModel, PenaltyScale};
use crate::pava::Direction;
use crate::path::PIECE_RTOL;
use crate::selection::{Criterion, CriterionTrace};

/// An upward step of the fitted rate between positions `index` and `index + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub index: usize,
    pub before: f64,
    pub after: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RddFit {
    pub fit: Fit,
    pub trace: CriterionTrace,
    pub jumps: Vec<Jump>,
}

/// Positions where `rate` strictly increases.
pub fn upward_jumps(rate: &[f64]) -> Vec<Jump> {
    rate.windows(2)
        .enumerate()
        .filter(|(_, p)| p[1] - p[0] > PIECE_RTOL * p[0].abs().max(p[1].abs()))
        .map(|(i, p)| Jump {
            index: i,
            before: p[0],
            after: p[1],
            magnitude: p[1] - p[0],
        })
        .collect()
}

/// `exposure = None` means unit exposure.
pub fn rdd_fit(counts: &[f64], exposure: Option<&[f64]>, criterion: Criterion) -> Result<RddFit> {
    let model = GeneralizedModel::new(
        counts,
        exposure,
        Family::poisson(),
        Direction::Decreasing,
        PenaltyScale::Natural,
    )?;
    let (fit, trace) = select_and_fit(&model, criterion)?;
    let jumps = upward_jumps(&fit.eta);
    Ok(RddFit { fit, trace, jumps })
}
