//! Application drivers built on the generalized path solver.

pub mod ode;
pub mod rdd;
pub mod spectrum;

pub use ode::{
    block_residuals, fn_demo, fn_reference, fn_simulate, ode_error_quantify, BlockResiduals, FnDemo,
    Component, FnDemoConfig, FnParams, FnState, OdeErrorEstimate, Trajectory,
};
pub use rdd::{rdd_fit, Jump, RddFit};
pub use spectrum::{periodogram, spectrum_fit, spectrum_fit_periodogram, Periodogram, SpectrumFit};

use crate::error::Result;
use crate::generalized::{Fit, GeneralizedModel};
use crate::selection::{select_lambda, Criterion, CriterionTrace};

/// Selects `lambda` over the knots and returns the fit there.
pub(crate) fn select_and_fit(model: &GeneralizedModel, criterion: Criterion) -> Result<(Fit, CriterionTrace)> {
    let trace = select_lambda(model, criterion)?;
    let fit = model.fit_at_knot(trace.selected)?;
    Ok((fit, trace))
}
