//! Choosing `lambda`: AIC and Mallows-type Cp over the path knots, and a
//! Monte Carlo harness comparing expected AIC with the expected discrepancy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::Family;
use crate::generalized::{Fit, GeneralizedModel, PenaltyScale};
use crate::pava::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Criterion {
    Aic,
    Cp { sigma2: f64 },
}

/// Sum of log-densities of `data` under the fitted expectation parameters.
pub fn log_likelihood(data: &[f64], weights: &[f64], family: &Family, eta: &[f64]) -> Result<f64> {
    if data.len() != eta.len() || weights.len() != eta.len() {
        return Err(Error::LengthMismatch {
            what: "fit",
            got: eta.len(),
            expected: data.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..data.len() {
        total += family.log_density(data[i], eta[i], weights[i])?;
    }
    Ok(total)
}

/// `-2 log L + 2 K` with the full log-density, `K` the number of pieces.
pub fn aic(data: &[f64], weights: &[f64], family: &Family, fit: &Fit) -> Result<f64> {
    Ok(-2.0 * log_likelihood(data, weights, family, &fit.eta)? + 2.0 * fit.pieces as f64)
}

/// `||eta - x||^2 - n sigma^2 + 2 sigma^2 K` for Gaussian data.
pub fn cp_gaussian(data: &[f64], sigma2: f64, fit: &Fit) -> f64 {
    let rss: f64 = data
        .iter()
        .zip(&fit.eta)
        .map(|(x, e)| (e - x) * (e - x))
        .sum();
    let n = data.len() as f64;
    rss - n * sigma2 + 2.0 * sigma2 * fit.pieces as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub lambda: f64,
    pub criterion: f64,
    pub pieces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionTrace {
    pub entries: Vec<TraceEntry>,
    pub selected: usize,
}

impl CriterionTrace {
    pub fn selected_entry(&self) -> &TraceEntry {
        &self.entries[self.selected]
    }

    pub fn selected_lambda(&self) -> f64 {
        self.selected_entry().lambda
    }
}

/// Index of the smallest criterion; ties go to the smaller `lambda`.
pub fn argmin_entry(entries: &[TraceEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in entries.iter().enumerate() {
        if e.criterion.is_nan() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &entries[b];
                if e.criterion < cur.criterion
                    || (e.criterion == cur.criterion && e.lambda < cur.lambda)
                {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

pub fn criterion_value(model: &GeneralizedModel, fit: &Fit, criterion: Criterion) -> Result<f64> {
    match criterion {
        Criterion::Aic => aic(model.data(), model.weights(), model.family(), fit),
        Criterion::Cp { sigma2 } => {
            if !(sigma2 > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "sigma2 must be positive, got {sigma2}"
                )));
            }
            Ok(cp_gaussian(model.data(), sigma2, fit))
        }
    }
}

/// Evaluates the criterion at every knot (post-merge state) and picks the
/// minimizer.
pub fn select_lambda(model: &GeneralizedModel, criterion: Criterion) -> Result<CriterionTrace> {
    let knots = model.path().states().len();
    let mut entries = Vec::with_capacity(knots);
    for k in 0..knots {
        let fit = model.fit_at_knot(k)?;
        entries.push(TraceEntry {
            lambda: fit.lambda,
            criterion: criterion_value(model, &fit, criterion)?,
            pieces: fit.pieces,
        });
    }
    let selected = argmin_entry(&entries).ok_or(Error::EmptyInput)?;
    Ok(CriterionTrace { entries, selected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LambdaGrid {
    Explicit { values: Vec<f64> },
    LogSpaced { min: f64, max: f64, count: usize },
}

impl LambdaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            LambdaGrid::Explicit { values } => {
                if values.is_empty() || values.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::InvalidArgument("lambda grid must be nonempty and nonnegative".into()));
                }
                Ok(values.clone())
            }
            LambdaGrid::LogSpaced { min, max, count } => {
                if !(*min > 0.0) || !(max >= min) || *count == 0 {
                    return Err(Error::InvalidArgument("log grid needs 0 < min <= max and count >= 1".into()));
                }
                if *count == 1 {
                    return Ok(vec![*min]);
                }
                let (a, b) = (min.ln(), max.ln());
                Ok((0..*count)
                    .map(|i| (a + (b - a) * i as f64 / (*count - 1) as f64).exp())
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudyConfig {
    pub family: Family,
    pub weights: Vec<f64>,
    /// True expectation parameters (per unit of weight).
    pub true_eta: Vec<f64>,
    pub grid: LambdaGrid,
    pub replications: usize,
    pub seed: u64,
    pub inner_draws: usize,
    pub direction: Direction,
    pub penalty_scale: PenaltyScale,
}

impl BiasStudyConfig {
    pub fn new(family: Family, weights: Vec<f64>, true_eta: Vec<f64>, grid: LambdaGrid) -> Self {
        BiasStudyConfig {
            penalty_scale: PenaltyScale::default_for(family.kind),
            family,
            weights,
            true_eta,
            grid,
            replications: 1000,
            seed: 0,
            inner_draws: 100,
            direction: Direction::Increasing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudyResult {
    pub lambdas: Vec<f64>,
    pub mean_aic: Vec<f64>,
    pub sd_aic: Vec<f64>,
    /// Mean of twice the Monte Carlo discrepancy `-E_y sum log p(y | theta_hat)`.
    pub mean_discrepancy: Vec<f64>,
    pub sd_discrepancy: Vec<f64>,
    pub replications: usize,
}

/// Runs `replications` independent draws from the true model. Replication
/// `r` uses a ChaCha stream `(seed, r)`, so the result does not depend on
/// thread scheduling.
pub fn bias_study(config: &BiasStudyConfig) -> Result<BiasStudyResult> {
    let n = config.true_eta.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if config.weights.len() != n {
        return Err(Error::LengthMismatch {
            what: "weights",
            got: config.weights.len(),
            expected: n,
        });
    }
    if config.replications == 0 || config.inner_draws == 0 {
        return Err(Error::InvalidArgument(
            "replications and inner draws must be positive".into(),
        ));
    }
    let lambdas = config.grid.values()?;
    let per_rep: Vec<Vec<(f64, f64)>> = (0..config.replications)
        .into_par_iter()
        .map(|r| replicate(config, &lambdas, r as u64))
        .collect::<Result<_>>()?;

    let g = lambdas.len();
    let reps = config.replications as f64;
    let mut mean_aic = vec![0.0; g];
    let mut mean_d = vec![0.0; g];
    for rep in &per_rep {
        for (k, &(a, d)) in rep.iter().enumerate() {
            mean_aic[k] += a;
            mean_d[k] += d;
        }
    }
    mean_aic.iter_mut().for_each(|v| *v /= reps);
    mean_d.iter_mut().for_each(|v| *v /= reps);
    let mut sd_aic = vec![0.0; g];
    let mut sd_d = vec![0.0; g];
    if config.replications > 1 {
        for rep in &per_rep {
            for (k, &(a, d)) in rep.iter().enumerate() {
                sd_aic[k] += (a - mean_aic[k]).powi(2);
                sd_d[k] += (d - mean_d[k]).powi(2);
            }
        }
        let denom = reps - 1.0;
        sd_aic.iter_mut().for_each(|v| *v = (*v / denom).sqrt());
        sd_d.iter_mut().for_each(|v| *v = (*v / denom).sqrt());
    }
    Ok(BiasStudyResult {
        lambdas,
        mean_aic,
        sd_aic,
        mean_discrepancy: mean_d,
        sd_discrepancy: sd_d,
        replications: config.replications,
    })
}

fn draw(config: &BiasStudyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    config
        .true_eta
        .iter()
        .zip(&config.weights)
        .map(|(&eta, &w)| config.family.sample(eta, w, rng))
        .collect()
}

fn replicate(config: &BiasStudyConfig, lambdas: &[f64], r: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(r);
    let x = draw(config, &mut rng)?;
    let fresh: Vec<Vec<f64>> = (0..config.inner_draws)
        .map(|_| draw(config, &mut rng))
        .collect::<Result<_>>()?;
    let model = GeneralizedModel::new(
        &x,
        Some(&config.weights),
        config.family,
        config.direction,
        config.penalty_scale,
    )?;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let fit = model.fit_at(lambda)?;
        let a = aic(&x, &config.weights, &config.family, &fit)?;
        let mut d = 0.0;
        for y in &fresh {
            d -= log_likelihood(y, &config.weights, &config.family, &fit.eta)?;
        }
        out.push((a, 2.0 * d / config.inner_draws as f64));
    }
    Ok(out)
}
