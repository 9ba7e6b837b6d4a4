//! Quantifying the discretization error of an ODE solver from noisy data.
//!
//! Residuals between observations and the numerical solution are squared and
//! summed in blocks of `d`. Under Gaussian observation noise with variance
//! `gamma2` each block sum is `(gamma2 + sigma_j^2) chi2(d)`, so the block
//! scale is fitted as a chi-square scale with the lower bound `gamma2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::Family;
use crate::generalized::{clip_bounds, Fit, GeneralizedModel, PenaltyScale};
use crate::pava::Direction;
use crate::selection::{argmin_entry, criterion_value, Criterion, CriterionTrace, TraceEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResiduals {
    pub sums: Vec<f64>,
    pub block_size: usize,
    pub gamma2: f64,
    /// Trailing residuals that did not fill a block.
    pub dropped: usize,
}

pub fn block_residuals(residuals: &[f64], d: usize, gamma2: f64) -> Result<BlockResiduals> {
    if d == 0 {
        return Err(Error::InvalidArgument("block size must be at least 1".into()));
    }
    let sums = residuals
        .chunks_exact(d)
        .map(|c| c.iter().map(|r| r * r).sum())
        .collect();
    Ok(BlockResiduals {
        sums,
        block_size: d,
        gamma2,
        dropped: residuals.len() % d,
    })
}

#[derive(Debug, Clone)]
pub struct OdeErrorEstimate {
    /// Fitted block scale `c_j = gamma2 + sigma_j^2`, never below `gamma2`.
    pub scale: Vec<f64>,
    /// Estimated discretization error standard deviation per block.
    pub sigma: Vec<f64>,
    pub fit: Fit,
    pub trace: CriterionTrace,
    pub model: GeneralizedModel,
}

/// Lower natural-parameter bound that keeps the block scale at or above `gamma2`.
pub fn scale_bound(gamma2: f64) -> f64 {
    if gamma2 > 0.0 {
        -1.0 / (2.0 * gamma2)
    } else {
        f64::NEG_INFINITY
    }
}

pub fn ode_error_quantify(blocks: &BlockResiduals, criterion: Criterion) -> Result<OdeErrorEstimate> {
    let gamma2 = blocks.gamma2;
    if !(gamma2 >= 0.0) || !gamma2.is_finite() {
        return Err(Error::InvalidBounds {
            lower: gamma2,
            upper: f64::INFINITY,
        });
    }
    let family = Family::chi_square(blocks.block_size as f64);
    let model = GeneralizedModel::new(
        &blocks.sums,
        None,
        family,
        Direction::Increasing,
        PenaltyScale::Natural,
    )?;
    let alpha = scale_bound(gamma2);
    let bounded = |k: usize| -> Result<Fit> { clip_bounds(&model.fit_at_knot(k)?, &family, alpha, 0.0) };

    let mut entries = Vec::new();
    for k in 0..model.path().states().len() {
        let fit = bounded(k)?;
        entries.push(TraceEntry {
            lambda: fit.lambda,
            criterion: criterion_value(&model, &fit, criterion)?,
            pieces: fit.pieces,
        });
    }
    let selected = argmin_entry(&entries).ok_or(Error::EmptyInput)?;
    let fit = bounded(selected)?;
    let scale: Vec<f64> = fit.eta.iter().map(|e| (0.5 * e).max(gamma2)).collect();
    let sigma = scale.iter().map(|c| (c - gamma2).max(0.0).sqrt()).collect();
    Ok(OdeErrorEstimate {
        scale,
        sigma,
        fit,
        trace: CriterionTrace { entries, selected },
        model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FnParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for FnParams {
    fn default() -> Self {
        FnParams { a: 0.2, b: 0.2, c: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FnState {
    pub v: f64,
    pub r: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub r: Vec<f64>,
}

impl Trajectory {
    fn push(&mut self, s: FnState) {
        self.t.push(s.t);
        self.v.push(s.v);
        self.r.push(s.r);
    }
}

fn rhs(p: &FnParams, v: f64, r: f64) -> (f64, f64) {
    (p.c * (v - v * v * v / 3.0 + r), -(v - p.a + p.b * r) / p.c)
}

/// Explicit Euler with step `dt`; returns `steps + 1` states.
pub fn fn_simulate(params: FnParams, initial: (f64, f64), dt: f64, steps: usize) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {dt}")));
    }
    let mut s = FnState {
        v: initial.0,
        r: initial.1,
        t: 0.0,
    };
    let mut out = Trajectory::default();
    out.push(s);
    for k in 1..=steps {
        let (dv, dr) = rhs(&params, s.v, s.r);
        s.v += dt * dv;
        s.r += dt * dr;
        s.t = k as f64 * dt;
        out.push(s);
    }
    Ok(out)
}

/// Classical fourth-order Runge-Kutta with step `dt / refine`, sampled at the
/// same times as [`fn_simulate`].
pub fn fn_reference(
    params: FnParams,
    initial: (f64, f64),
    dt: f64,
    steps: usize,
    refine: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || refine == 0 {
        return Err(Error::InvalidArgument("step must be positive and refine at least 1".into()));
    }
    let h = dt / refine as f64;
    let (mut v, mut r) = initial;
    let mut out = Trajectory::default();
    out.push(FnState { v, r, t: 0.0 });
    for k in 1..=steps {
        for _ in 0..refine {
            let (k1v, k1r) = rhs(&params, v, r);
            let (k2v, k2r) = rhs(&params, v + 0.5 * h * k1v, r + 0.5 * h * k1r);
            let (k3v, k3r) = rhs(&params, v + 0.5 * h * k2v, r + 0.5 * h * k2r);
            let (k4v, k4r) = rhs(&params, v + h * k3v, r + h * k3r);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            r += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        }
        out.push(FnState {
            v,
            r,
            t: k as f64 * dt,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    V,
    R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnDemoConfig {
    pub params: FnParams,
    pub initial: (f64, f64),
    pub dt: f64,
    /// Euler steps between consecutive observations.
    pub obs_every: usize,
    /// Observation numbers `first..=last`, with observation `i` at time `(i - 1) h`.
    pub first_obs: usize,
    pub last_obs: usize,
    pub noise_var_v: f64,
    pub noise_var_r: f64,
    pub block_size: usize,
    pub component: Component,
    pub reference_refine: usize,
    pub seed: u64,
}

impl Default for FnDemoConfig {
    fn default() -> Self {
        FnDemoConfig {
            params: FnParams::default(),
            initial: (-1.0, 1.0),
            dt: 0.025,
            obs_every: 2,
            first_obs: 201,
            last_obs: 1200,
            noise_var_v: 0.01,
            noise_var_r: 0.004,
            block_size: 3,
            component: Component::V,
            reference_refine: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnDemo {
    pub times: Vec<f64>,
    pub exact: Vec<f64>,
    pub numerical: Vec<f64>,
    pub observed: Vec<f64>,
    pub residuals: Vec<f64>,
    pub blocks: BlockResiduals,
    /// Mean time of each block.
    pub block_times: Vec<f64>,
    /// Root mean square of the true discretization error in each block.
    pub block_error: Vec<f64>,
}

/// Simulates noisy observations of the exact trajectory and residuals
/// against the Euler solution. Bit-reproducible for a given seed.
pub fn fn_demo(config: &FnDemoConfig) -> Result<FnDemo> {
    if config.first_obs == 0 || config.last_obs < config.first_obs || config.obs_every == 0 {
        return Err(Error::InvalidArgument("invalid observation window".into()));
    }
    let steps = (config.last_obs - 1) * config.obs_every;
    let euler = fn_simulate(config.params, config.initial, config.dt, steps)?;
    let exact = fn_reference(config.params, config.initial, config.dt, steps, config.reference_refine)?;
    let (gamma2, ex, nu) = match config.component {
        Component::V => (config.noise_var_v, &exact.v, &euler.v),
        Component::R => (config.noise_var_r, &exact.r, &euler.r),
    };
    let noise_v = Normal::new(0.0, config.noise_var_v.sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let noise_r = Normal::new(0.0, config.noise_var_r.sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut out = FnDemo {
        times: Vec::new(),
        exact: Vec::new(),
        numerical: Vec::new(),
        observed: Vec::new(),
        residuals: Vec::new(),
        blocks: BlockResiduals {
            sums: Vec::new(),
            block_size: config.block_size,
            gamma2,
            dropped: 0,
        },
        block_times: Vec::new(),
        block_error: Vec::new(),
    };
    for i in config.first_obs..=config.last_obs {
        let k = (i - 1) * config.obs_every;
        // Both components are always drawn so the V and R demos share noise.
        let ev: f64 = noise_v.sample(&mut rng);
        let er: f64 = noise_r.sample(&mut rng);
        let e = match config.component {
            Component::V => ev,
            Component::R => er,
        };
        let y = ex[k] + e;
        out.times.push(euler.t[k]);
        out.exact.push(ex[k]);
        out.numerical.push(nu[k]);
        out.observed.push(y);
        out.residuals.push(y - nu[k]);
    }
    out.blocks = block_residuals(&out.residuals, config.block_size, gamma2)?;
    let d = config.block_size;
    for j in 0..out.blocks.sums.len() {
        let r = j * d..(j + 1) * d;
        out.block_times.push(out.times[r.clone()].iter().sum::<f64>() / d as f64);
        let ms = r
            .map(|i| (out.numerical[i] - out.exact[i]).powi(2))
            .sum::<f64>()
            / d as f64;
        out.block_error.push(ms.sqrt());
    }
    Ok(out)
}
