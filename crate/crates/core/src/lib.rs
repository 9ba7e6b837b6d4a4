//! Generalized nearly isotonic regression.
//!
//! Solution paths of the penalized problem
//! `sum_i w_i (psi(theta_i) - theta_i x_i / w_i) + lambda sum_i (theta_i - theta_{i+1})_+`
//! for one-parameter exponential families, model selection over the path
//! knots, and drivers for spectra, count discontinuities and ODE error scales.

pub mod apps;
pub mod cli;
pub mod error;
pub mod expfam;
pub mod generalized;
pub mod io;
pub mod kkt;
pub mod oracle;
pub mod path;
pub mod pava;
pub mod selection;

pub use error::{Error, Result};
pub use expfam::{Family, FamilyKind, NaturalDomain};
pub use generalized::{clip_bounds, fit_generalized, Fit, GeneralizedModel, PenaltyScale};
pub use kkt::{kkt_check, KktCertificate};
pub use path::{count_pieces, solve_path, PathPoint, SolutionPath};
pub use pava::{expand, isotonic_fit, ClusterPartition, Direction, WeightedSeries};
pub use oracle::{dual_bound, objective_value, subgradient_minimize, DualCertificate, ObjectiveSpec, OracleSolution};
pub use selection::{aic, bias_study, cp_gaussian, select_lambda, BiasStudyConfig, BiasStudyResult, Criterion, CriterionTrace, LambdaGrid, TraceEntry};
