//! Nearly isotonic estimation for exponential families.
//!
//! Raw observations `x_i` with weights `w_i` are divided into the expectation
//! scale `x_i / w_i`, the weighted path is solved there and the fitted
//! expectation parameters are mapped to natural parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::{Family, FamilyKind};
use crate::path::{count_pieces, solve_path, PathPoint, SolutionPath};
use crate::pava::{Direction, WeightedSeries};

/// Unit in which `lambda` is expressed.
///
/// `Natural` penalizes `lambda * sum (theta_i - theta_{i+1})_+` against the
/// weighted likelihood. `MeanWeight` multiplies the penalty by the mean weight,
/// so for binomial data `lambda` is measured per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyScale {
    Natural,
    MeanWeight,
}

impl PenaltyScale {
    /// Per-trial for binomial data, natural otherwise.
    pub fn default_for(kind: FamilyKind) -> Self {
        match kind {
            FamilyKind::Binomial => PenaltyScale::MeanWeight,
            _ => PenaltyScale::Natural,
        }
    }
}

/// A fitted parameter sequence at one `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub lambda: f64,
    pub eta: Vec<f64>,
    pub theta: Vec<f64>,
    /// Clusters of the path state at `lambda`.
    pub clusters: usize,
    /// Maximal runs of equal fitted values.
    pub pieces: usize,
    pub bounds: Option<(f64, f64)>,
}

/// Data, family and precomputed path for repeated fits.
#[derive(Debug, Clone)]
pub struct GeneralizedModel {
    family: Family,
    data: Vec<f64>,
    weights: Vec<f64>,
    penalty_scale: PenaltyScale,
    weight_scale: f64,
    series: WeightedSeries,
    path: SolutionPath,
}

impl GeneralizedModel {
    /// `weights = None` uses `family.shape` for every observation.
    pub fn new(
        data: &[f64],
        weights: Option<&[f64]>,
        family: Family,
        direction: Direction,
        penalty_scale: PenaltyScale,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        let weights = match weights {
            Some(w) => w.to_vec(),
            None => vec![family.shape; data.len()],
        };
        if weights.len() != data.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                got: weights.len(),
                expected: data.len(),
            });
        }
        for (index, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonpositiveWeight { index, value: w });
            }
        }
        for (&x, &w) in data.iter().zip(&weights) {
            family.check_support(x, w)?;
        }
        let weight_scale = match penalty_scale {
            PenaltyScale::Natural => 1.0,
            PenaltyScale::MeanWeight => weights.iter().sum::<f64>() / weights.len() as f64,
        };
        let tilde: Vec<f64> = data
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| family.tilde(x, w))
            .collect();
        let solve_weights: Vec<f64> = if weight_scale == 1.0 {
            weights.clone()
        } else {
            weights.iter().map(|w| w / weight_scale).collect()
        };
        let series = WeightedSeries::new(tilde, solve_weights, direction)?;
        let path = solve_path(&series)?;
        Ok(GeneralizedModel {
            family,
            data: data.to_vec(),
            weights,
            penalty_scale,
            weight_scale,
            series,
            path,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn direction(&self) -> Direction {
        self.series.direction()
    }

    pub fn penalty_scale(&self) -> PenaltyScale {
        self.penalty_scale
    }

    /// Factor between the natural penalty and the user's `lambda`.
    pub fn weight_scale(&self) -> f64 {
        self.weight_scale
    }

    /// Expectation-scale series the path is solved on.
    pub fn series(&self) -> &WeightedSeries {
        &self.series
    }

    pub fn path(&self) -> &SolutionPath {
        &self.path
    }

    pub fn knots(&self) -> Vec<f64> {
        self.path.knots()
    }

    pub fn fit_at(&self, lambda: f64) -> Result<Fit> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be nonnegative, got {lambda}"
            )));
        }
        self.to_fit(self.path.fit_at(lambda))
    }

    pub fn fit_at_knot(&self, k: usize) -> Result<Fit> {
        self.to_fit(self.path.fit_at_knot(k))
    }

    fn to_fit(&self, point: PathPoint) -> Result<Fit> {
        let mut eta = point.eta;
        if self.family.kind != FamilyKind::Normal {
            for v in &mut eta {
                *v = snap_to_closure(&self.family, *v);
            }
        }
        let theta = match self.family.kind {
            FamilyKind::Normal => eta.clone(),
            _ => eta
                .iter()
                .map(|&e| self.family.mean_map_inv(e))
                .collect::<Result<Vec<_>>>()?,
        };
        let pieces = count_pieces(&eta);
        Ok(Fit {
            lambda: point.lambda,
            eta,
            theta,
            clusters: point.clusters,
            pieces,
            bounds: None,
        })
    }
}

/// Rounding can push a pooled mean a few ulps past the end of the mean range.
fn snap_to_closure(family: &Family, eta: f64) -> f64 {
    let slack = 1e-12;
    match family.kind {
        FamilyKind::Binomial if eta < 0.0 && eta > -slack => 0.0,
        FamilyKind::Binomial if eta > 1.0 && eta < 1.0 + slack => 1.0,
        FamilyKind::Poisson if eta < 0.0 && eta > -slack => 0.0,
        _ => eta,
    }
}

/// One-shot generalized fit.
pub fn fit_generalized(
    data: &[f64],
    weights: Option<&[f64]>,
    family: Family,
    lambda: f64,
    direction: Direction,
    penalty_scale: PenaltyScale,
) -> Result<Fit> {
    GeneralizedModel::new(data, weights, family, direction, penalty_scale)?.fit_at(lambda)
}

/// Clips natural parameters to `[alpha, beta]` and re-derives `eta` where the
/// clip is active. The clipped sequence solves the bounded problem.
pub fn clip_bounds(fit: &Fit, family: &Family, alpha: f64, beta: f64) -> Result<Fit> {
    if alpha.is_nan() || beta.is_nan() || alpha > beta {
        return Err(Error::InvalidBounds {
            lower: alpha,
            upper: beta,
        });
    }
    let dom = family.natural_domain();
    if alpha > dom.upper || beta < dom.lower {
        return Err(Error::InvalidBounds {
            lower: alpha,
            upper: beta,
        });
    }
    let mut eta = fit.eta.clone();
    let mut theta = fit.theta.clone();
    for (e, t) in eta.iter_mut().zip(theta.iter_mut()) {
        let c = t.max(alpha).min(beta);
        if c != *t {
            *t = c;
            *e = family.mean_map(c)?;
        }
    }
    Ok(Fit {
        lambda: fit.lambda,
        pieces: count_pieces(&eta),
        eta,
        theta,
        clusters: fit.clusters,
        bounds: Some((alpha, beta)),
    })
}
