//! Spectral density estimation from the raw periodogram.
//!
//! Periodogram ordinates are treated as independent `p(f_j) / 2 * chi2(2)`
//! variables, i.e. exponential with mean `p(f_j)`, and the spectrum is fitted
//! with a decreasing nearly isotonic constraint.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::select_and_fit;
use crate::error::{Error, Result};
use crate::expfam::Family;
use crate::generalized::{Fit, GeneralizedModel, PenaltyScale};
use crate::pava::Direction;
use crate::selection::{Criterion, CriterionTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    /// `j / T` in cycles per sample, `j = 1..=T/2`.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub len: usize,
}

/// `p_j = |sum_t x_t exp(-2 pi i j t / T)|^2 / (2 pi T)` for `j = 1..=floor(T/2)`.
pub fn periodogram(series: &[f64]) -> Result<Periodogram> {
    let t = series.len();
    if t < 2 {
        return Err(Error::EmptyInput);
    }
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(t).process(&mut buf);
    let norm = 2.0 * std::f64::consts::PI * t as f64;
    let m = t / 2;
    Ok(Periodogram {
        freqs: (1..=m).map(|j| j as f64 / t as f64).collect(),
        power: (1..=m).map(|j| buf[j].norm_sqr() / norm).collect(),
        len: t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFit {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Fitted spectral density at each frequency.
    pub fitted: Vec<f64>,
    pub fit: Fit,
    pub trace: CriterionTrace,
}

impl SpectrumFit {
    /// Frequencies covered by the largest fitted level.
    pub fn peak_plateau(&self) -> Vec<f64> {
        let top = self.fitted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.freqs
            .iter()
            .zip(&self.fitted)
            .filter(|(_, &v)| v == top)
            .map(|(&f, _)| f)
            .collect()
    }
}

pub fn spectrum_fit(series: &[f64], criterion: Criterion) -> Result<SpectrumFit> {
    if series.len() < 4 {
        return Err(Error::InvalidArgument("spectrum fit needs at least 4 observations".into()));
    }
    let p = periodogram(series)?;
    spectrum_fit_periodogram(&p.freqs, &p.power, criterion)
}

/// Fits precomputed periodogram ordinates.
pub fn spectrum_fit_periodogram(freqs: &[f64], power: &[f64], criterion: Criterion) -> Result<SpectrumFit> {
    if freqs.len() != power.len() {
        return Err(Error::LengthMismatch {
            what: "power",
            got: power.len(),
            expected: freqs.len(),
        });
    }
    let model = GeneralizedModel::new(
        power,
        None,
        Family::chi_square(2.0),
        Direction::Decreasing,
        PenaltyScale::Natural,
    )?;
    let (fit, trace) = select_and_fit(&model, criterion)?;
    Ok(SpectrumFit {
        freqs: freqs.to_vec(),
        power: power.to_vec(),
        fitted: fit.eta.clone(),
        fit,
        trace,
    })
}
