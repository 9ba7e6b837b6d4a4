//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on data or domain errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::apps::{self, ode};
use crate::error::Error;
use crate::expfam::{Family, FamilyKind};
use crate::generalized::{clip_bounds, Fit, GeneralizedModel, PenaltyScale};
use crate::io::{fmt17, read_dataset, write_report, Dataset, KeyValueConfig, PathReport, ReportFormat};
use crate::kkt::kkt_check;
use crate::oracle::{dual_bound, objective_value, subgradient_minimize, ObjectiveSpec};
use crate::pava::Direction;
use crate::selection::{
    bias_study, criterion_value, select_lambda, BiasStudyConfig, Criterion, CriterionTrace, LambdaGrid,
};

pub const SEED_ENV: &str = "NEARISO_SEED";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Parser, Debug)]
#[command(name = "neariso", version, about = "Generalized nearly isotonic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit at one lambda, or at the knot chosen by a criterion.
    Fit(ModelArgs),
    /// Write every knot of the solution path.
    Path(ModelArgs),
    /// Print the selected lambda and its piece count.
    Select(ModelArgs),
    /// Spectral density from a series or a precomputed periodogram.
    Spectrum(SpectrumArgs),
    /// Upward jumps in a count sequence.
    Rdd(RddArgs),
    /// Per-block ODE discretization error scale from residuals.
    OdeError(OdeArgs),
    /// Bias study driven by a key-value config file.
    Simulate(SimulateArgs),
    /// Optimality certificates for a fit.
    Verify(ModelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Normal,
    Binomial,
    Poisson,
    Chisq,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Inc,
    Dec,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Inc => Direction::Increasing,
            DirectionArg::Dec => Direction::Decreasing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SelectArg {
    Aic,
    Cp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    Natural,
    MeanWeight,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SelectionArgs {
    #[arg(long, conflicts_with = "select")]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    select: Option<SelectArg>,
    /// Noise variance for Cp.
    #[arg(long)]
    sigma2: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// CSV or JSON dataset.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "normal")]
    family: FamilyArg,
    /// Trials for binomial, degrees of freedom for chisq, shape for gamma.
    #[arg(long)]
    shape: Option<f64>,
    #[arg(long, value_enum, default_value = "inc")]
    direction: DirectionArg,
    /// Natural-parameter bounds `a,b`.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Option<(f64, f64)>,
    /// How lambda relates to the weights; binomial defaults to mean-weight.
    #[arg(long, value_enum)]
    penalty_scale: Option<ScaleArg>,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct SpectrumArgs {
    /// Series in the value column, or with --periodogram frequencies in index and power in value.
    input: PathBuf,
    #[arg(long)]
    periodogram: bool,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct RddArgs {
    /// Counts in the value column, optional exposure in the weight column.
    input: PathBuf,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct OdeArgs {
    /// Residuals in the value column.
    input: PathBuf,
    #[arg(long)]
    blocks: usize,
    /// Observation noise variance.
    #[arg(long, default_value_t = 0.0)]
    gamma2: f64,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct SimulateArgs {
    /// Key-value study config; omit with --fn-demo alone.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run the FitzHugh-Nagumo error demo instead of a bias study.
    #[arg(long)]
    fn_demo: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

fn parse_bounds(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let p = |t: &str| {
        let t = t.trim();
        match t {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")),
        }
    };
    Ok((p(a)?, p(b)?))
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Path(a) => cmd_path(&a),
        Command::Select(a) => cmd_select(&a),
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Rdd(a) => cmd_rdd(&a),
        Command::OdeError(a) => cmd_ode(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Verify(a) => cmd_verify(&a),
    }
}

fn open_output(out: &OutputArgs) -> CliResult<Box<dyn Write>> {
    Ok(match &out.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(Error::from)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn report_format(out: &OutputArgs, default: FormatArg) -> ReportFormat {
    match out.format.unwrap_or(default) {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::CsvLong,
    }
}

fn criterion(sel: &SelectionArgs, default: SelectArg) -> CliResult<Criterion> {
    match sel.select.unwrap_or(default) {
        SelectArg::Aic => {
            if sel.sigma2.is_some() {
                return usage("--sigma2 only applies to --select cp");
            }
            Ok(Criterion::Aic)
        }
        SelectArg::Cp => match sel.sigma2 {
            Some(s) if s > 0.0 && s.is_finite() => Ok(Criterion::Cp { sigma2: s }),
            Some(s) => usage(format!("--sigma2 must be positive, got {s}")),
            None => usage("--select cp requires --sigma2"),
        },
    }
}

fn criterion_name(c: Criterion) -> &'static str {
    match c {
        Criterion::Aic => "aic",
        Criterion::Cp { .. } => "cp",
    }
}

fn family(kind: FamilyArg, shape: Option<f64>, data: &Dataset) -> CliResult<Family> {
    Ok(match kind {
        FamilyArg::Normal => {
            if shape.is_some() {
                return usage("--shape does not apply to --family normal");
            }
            Family::normal()
        }
        FamilyArg::Poisson => {
            if shape.is_some() {
                return usage("--shape does not apply to --family poisson");
            }
            Family::poisson()
        }
        FamilyArg::Binomial => {
            // Without --shape the trial count comes from the weight column.
            let n = match (shape, &data.weight) {
                (Some(s), _) => s,
                (None, Some(w)) => w.iter().cloned().fold(1.0, f64::max),
                (None, None) => return usage("--family binomial needs --shape or a weight column"),
            };
            if n < 1.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                return usage(format!("--shape must be a positive integer for binomial, got {n}"));
            }
            Family::binomial(n as u32)
        }
        FamilyArg::Chisq => match shape {
            Some(d) if d > 0.0 => Family::chi_square(d),
            Some(d) => return usage(format!("--shape must be positive, got {d}")),
            None => return usage("--family chisq requires --shape <degrees of freedom>"),
        },
        FamilyArg::Gamma => match shape {
            Some(k) if k > 0.0 => Family::gamma(k),
            Some(k) => return usage(format!("--shape must be positive, got {k}")),
            None => return usage("--family gamma requires --shape"),
        },
    })
}

fn load(path: &Path) -> CliResult<Dataset> {
    Ok(read_dataset(path)?)
}

fn build_model(a: &ModelArgs) -> CliResult<(Dataset, GeneralizedModel)> {
    let data = load(&a.input)?;
    let fam = family(a.family, a.shape, &data)?;
    let scale = match a.penalty_scale {
        Some(ScaleArg::Natural) => PenaltyScale::Natural,
        Some(ScaleArg::MeanWeight) => PenaltyScale::MeanWeight,
        None => PenaltyScale::default_for(fam.kind),
    };
    // The chi-square weight is d/2 per observation unless the file says otherwise.
    let model = GeneralizedModel::new(&data.value, data.weight.as_deref(), fam, a.direction.into(), scale)?;
    Ok((data, model))
}

fn bounded(fit: Fit, model: &GeneralizedModel, bounds: Option<(f64, f64)>) -> CliResult<Fit> {
    Ok(match bounds {
        Some((lo, hi)) => clip_bounds(&fit, model.family(), lo, hi)?,
        None => fit,
    })
}

/// Fit at `--lambda`, or at the selected knot when it is absent.
fn chosen_fit(a: &ModelArgs, model: &GeneralizedModel) -> CliResult<(Fit, Option<(Criterion, CriterionTrace)>)> {
    if let Some(l) = a.selection.lambda {
        if !(l >= 0.0) {
            return usage(format!("--lambda must be nonnegative, got {l}"));
        }
        if a.selection.sigma2.is_some() {
            return usage("--sigma2 only applies to --select cp");
        }
        return Ok((bounded(model.fit_at(l)?, model, a.bounds)?, None));
    }
    let c = criterion(&a.selection, SelectArg::Aic)?;
    let trace = select_lambda(model, c)?;
    let fit = model.fit_at_knot(trace.selected)?;
    Ok((bounded(fit, model, a.bounds)?, Some((c, trace))))
}

fn cmd_fit(a: &ModelArgs) -> CliResult<()> {
    let (data, model) = build_model(a)?;
    let (fit, sel) = chosen_fit(a, &model)?;
    let mut report = PathReport::for_model(&model, data.index.clone(), data.digest());
    let crit = match &sel {
        Some((c, t)) => {
            report.criterion = Some(criterion_name(*c).into());
            report.selected_lambda = Some(t.selected_lambda());
            Some(criterion_value(&model, &fit, *c)?)
        }
        None => None,
    };
    report.push(&fit, crit);
    write_report(&report, report_format(&a.out, FormatArg::Csv), open_output(&a.out)?)?;
    Ok(())
}

fn cmd_path(a: &ModelArgs) -> CliResult<()> {
    if a.selection.lambda.is_some() {
        return usage("--lambda does not apply to `path`");
    }
    let (data, model) = build_model(a)?;
    let mut report = PathReport::for_model(&model, data.index.clone(), data.digest());
    let sel = match a.selection.select {
        Some(_) => {
            let c = criterion(&a.selection, SelectArg::Aic)?;
            let t = select_lambda(&model, c)?;
            report.criterion = Some(criterion_name(c).into());
            report.selected_lambda = Some(t.selected_lambda());
            Some((c, t))
        }
        None if a.selection.sigma2.is_some() => return usage("--sigma2 only applies to --select cp"),
        None => None,
    };
    for k in 0..model.path().states().len() {
        let fit = bounded(model.fit_at_knot(k)?, &model, a.bounds)?;
        let crit = match &sel {
            Some((c, _)) => Some(criterion_value(&model, &fit, *c)?),
            None => None,
        };
        report.push(&fit, crit);
    }
    write_report(&report, report_format(&a.out, FormatArg::Json), open_output(&a.out)?)?;
    Ok(())
}

fn cmd_select(a: &ModelArgs) -> CliResult<()> {
    if a.selection.lambda.is_some() {
        return usage("--lambda does not apply to `select`");
    }
    let (_, model) = build_model(a)?;
    let c = criterion(&a.selection, SelectArg::Aic)?;
    let trace = select_lambda(&model, c)?;
    let e = trace.selected_entry();
    let mut w = open_output(&a.out)?;
    match a.out.format.unwrap_or(FormatArg::Csv) {
        FormatArg::Csv => {
            writeln!(w, "lambda,{},pieces", criterion_name(c)).map_err(Error::from)?;
            writeln!(w, "{},{},{}", fmt17(e.lambda), fmt17(e.criterion), e.pieces).map_err(Error::from)?;
        }
        FormatArg::Json => {
            serde_json::to_writer_pretty(&mut w, &trace).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w).map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn resolve_criterion(sel: &SelectionArgs) -> CliResult<Criterion> {
    if sel.lambda.is_some() {
        return usage("--lambda does not apply here; use --select");
    }
    criterion(sel, SelectArg::Aic)
}

fn cmd_spectrum(a: &SpectrumArgs) -> CliResult<()> {
    let c = resolve_criterion(&a.selection)?;
    let data = load(&a.input)?;
    let s = if a.periodogram {
        apps::spectrum_fit_periodogram(&data.index, &data.value, c)?
    } else {
        apps::spectrum_fit(&data.value, c)?
    };
    let mut w = open_output(&a.out)?;
    match a.out.format.unwrap_or(FormatArg::Csv) {
        FormatArg::Csv => {
            writeln!(w, "# lambda = {}", fmt17(s.fit.lambda)).map_err(Error::from)?;
            writeln!(w, "freq,log_fit").map_err(Error::from)?;
            for (f, p) in s.freqs.iter().zip(&s.fitted) {
                writeln!(w, "{},{}", fmt17(*f), fmt17(p.ln())).map_err(Error::from)?;
            }
        }
        FormatArg::Json => {
            let v = serde_json::json!({
                "lambda": fmt17(s.fit.lambda),
                "pieces": s.fit.pieces,
                "freqs": s.freqs.iter().map(|v| fmt17(*v)).collect::<Vec<_>>(),
                "power": s.power.iter().map(|v| fmt17(*v)).collect::<Vec<_>>(),
                "fitted": s.fitted.iter().map(|v| fmt17(*v)).collect::<Vec<_>>(),
            });
            serde_json::to_writer_pretty(&mut w, &v).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w).map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn cmd_rdd(a: &RddArgs) -> CliResult<()> {
    let c = resolve_criterion(&a.selection)?;
    let data = load(&a.input)?;
    let r = apps::rdd_fit(&data.value, data.weight.as_deref(), c)?;
    let mut w = open_output(&a.out)?;
    match a.out.format.unwrap_or(FormatArg::Csv) {
        FormatArg::Csv => {
            writeln!(w, "# lambda = {}", fmt17(r.fit.lambda)).map_err(Error::from)?;
            for j in &r.jumps {
                writeln!(
                    w,
                    "# jump between index {} and {}: {} -> {}",
                    fmt17(data.index[j.index]),
                    fmt17(data.index[j.index + 1]),
                    fmt17(j.before),
                    fmt17(j.after)
                )
                .map_err(Error::from)?;
            }
            writeln!(w, "index,rate").map_err(Error::from)?;
            for (i, e) in data.index.iter().zip(&r.fit.eta) {
                writeln!(w, "{},{}", fmt17(*i), fmt17(*e)).map_err(Error::from)?;
            }
        }
        FormatArg::Json => {
            let jumps: Vec<_> = r
                .jumps
                .iter()
                .map(|j| {
                    serde_json::json!({
                        "after_index": fmt17(data.index[j.index]),
                        "before_index": fmt17(data.index[j.index + 1]),
                        "from": fmt17(j.before),
                        "to": fmt17(j.after),
                    })
                })
                .collect();
            let v = serde_json::json!({
                "lambda": fmt17(r.fit.lambda),
                "pieces": r.fit.pieces,
                "index": data.index.iter().map(|v| fmt17(*v)).collect::<Vec<_>>(),
                "rate": r.fit.eta.iter().map(|v| fmt17(*v)).collect::<Vec<_>>(),
                "jumps": jumps,
            });
            serde_json::to_writer_pretty(&mut w, &v).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w).map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn write_ode(w: &mut dyn Write, est: &ode::OdeErrorEstimate, times: Option<&[f64]>) -> CliResult<()> {
    writeln!(w, "# lambda = {}", fmt17(est.fit.lambda)).map_err(Error::from)?;
    writeln!(w, "block,{}scale,sigma", if times.is_some() { "time," } else { "" }).map_err(Error::from)?;
    for (j, (c, s)) in est.scale.iter().zip(&est.sigma).enumerate() {
        match times {
            Some(t) => writeln!(w, "{},{},{},{}", j + 1, fmt17(t[j]), fmt17(*c), fmt17(*s)),
            None => writeln!(w, "{},{},{}", j + 1, fmt17(*c), fmt17(*s)),
        }
        .map_err(Error::from)?;
    }
    Ok(())
}

fn cmd_ode(a: &OdeArgs) -> CliResult<()> {
    if a.blocks == 0 {
        return usage("--blocks must be at least 1");
    }
    if !(a.gamma2 >= 0.0) || !a.gamma2.is_finite() {
        return usage(format!("--gamma2 must be a nonnegative number, got {}", a.gamma2));
    }
    let c = resolve_criterion(&a.selection)?;
    let data = load(&a.input)?;
    let blocks = ode::block_residuals(&data.value, a.blocks, a.gamma2)?;
    let est = ode::ode_error_quantify(&blocks, c)?;
    let mut w = open_output(&a.out)?;
    write_ode(&mut *w, &est, None)?;
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn seed(flag: Option<u64>, config: Option<&KeyValueConfig>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        return v
            .trim()
            .parse()
            .or_else(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")));
    }
    Ok(config.map(|c| c.get_usize("seed")).transpose()?.flatten().unwrap_or(0) as u64)
}

/// Builds a bias study from a config. Recognized keys:
/// `family`, `shape`, `true_eta` (list) or `sequence = binomial|chisq`,
/// `weight`, `lambdas` (list) or `lambda_min`/`lambda_max`/`lambda_count`,
/// `replications`, `inner_draws`, `direction`, `penalty_scale`.
fn study_config(cfg: &KeyValueConfig, seed: u64) -> CliResult<BiasStudyConfig> {
    let shape = cfg.get_f64("shape")?;
    let fam = match cfg.get("family").unwrap_or("normal") {
        "normal" => Family::normal(),
        "poisson" => Family::poisson(),
        "binomial" => Family::binomial(shape.unwrap_or(1.0) as u32),
        "chisq" => Family::chi_square(shape.ok_or_else(|| Error::Schema("chisq needs `shape`".into()))?),
        "gamma" => Family::gamma(shape.ok_or_else(|| Error::Schema("gamma needs `shape`".into()))?),
        other => return Err(Error::Schema(format!("unknown family `{other}`")).into()),
    };
    let true_eta = match (cfg.get_list("true_eta")?, cfg.get("sequence")) {
        (Some(v), None) => v,
        (None, Some(name)) => standard_sequence(name, &fam)?,
        (Some(_), Some(_)) => return Err(Error::Schema("give `true_eta` or `sequence`, not both".into()).into()),
        (None, None) => return Err(Error::Schema("missing `true_eta` or `sequence`".into()).into()),
    };
    let n = true_eta.len();
    let weights = vec![cfg.get_f64("weight")?.unwrap_or(fam.shape); n];
    let grid = match cfg.get_list("lambdas")? {
        Some(values) => LambdaGrid::Explicit { values },
        None => LambdaGrid::LogSpaced {
            min: cfg.get_f64("lambda_min")?.unwrap_or(0.01),
            max: cfg.get_f64("lambda_max")?.unwrap_or(10.0),
            count: cfg.get_usize("lambda_count")?.unwrap_or(25),
        },
    };
    let mut c = BiasStudyConfig::new(fam, weights, true_eta, grid);
    c.seed = seed;
    if let Some(r) = cfg.get_usize("replications")? {
        c.replications = r;
    }
    if let Some(r) = cfg.get_usize("inner_draws")? {
        c.inner_draws = r;
    }
    c.direction = match cfg.get("direction").unwrap_or("inc") {
        "inc" => Direction::Increasing,
        "dec" => Direction::Decreasing,
        other => return Err(Error::Schema(format!("unknown direction `{other}`")).into()),
    };
    c.penalty_scale = match cfg.get("penalty_scale") {
        None => PenaltyScale::default_for(fam.kind),
        Some("natural") => PenaltyScale::Natural,
        Some("mean-weight") => PenaltyScale::MeanWeight,
        Some(other) => return Err(Error::Schema(format!("unknown penalty_scale `{other}`")).into()),
    };
    Ok(c)
}

/// Two increasing ramps of 50 values each, in expectation units of `family`.
pub fn standard_sequence(name: &str, family: &Family) -> crate::error::Result<Vec<f64>> {
    let ramp = |lo: f64, hi: f64| -> Vec<f64> {
        (0..100).map(|i| lo + (hi - lo) * (i % 50) as f64 / 49.0).collect()
    };
    match (name, family.kind) {
        ("binomial", FamilyKind::Binomial) => Ok(ramp(0.2, 0.8)),
        // A chi-square observation with scale s has per-unit expectation 2 s.
        ("chisq", FamilyKind::GammaScale) => Ok(ramp(1.0, 10.0).iter().map(|s| 2.0 * s).collect()),
        _ => Err(Error::Schema(format!(
            "sequence `{name}` does not fit family `{}`",
            family.name()
        ))),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let cfg = match &a.config {
        Some(p) => Some(KeyValueConfig::parse(&std::fs::read_to_string(p).map_err(Error::from)?)?),
        None => None,
    };
    let seed = seed(a.seed, cfg.as_ref())?;
    let mut w = open_output(&a.out)?;
    if a.fn_demo {
        let mut config = ode::FnDemoConfig { seed, ..Default::default() };
        if let Some(c) = &cfg {
            if let Some(d) = c.get_usize("block_size")? {
                config.block_size = d;
            }
            if let Some(v) = c.get("component") {
                config.component = match v {
                    "v" | "V" => ode::Component::V,
                    "r" | "R" => ode::Component::R,
                    other => return Err(Error::Schema(format!("unknown component `{other}`")).into()),
                };
            }
        }
        let demo = ode::fn_demo(&config)?;
        let est = ode::ode_error_quantify(&demo.blocks, Criterion::Aic)?;
        write_ode(&mut *w, &est, Some(&demo.block_times))?;
    } else {
        let Some(cfg) = &cfg else {
            return usage("simulate needs --config or --fn-demo");
        };
        let study = bias_study(&study_config(cfg, seed)?)?;
        writeln!(w, "# replications = {}, seed = {seed}", study.replications).map_err(Error::from)?;
        writeln!(w, "lambda,mean_aic,sd_aic,mean_2d,sd_2d").map_err(Error::from)?;
        for i in 0..study.lambdas.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt17(study.lambdas[i]),
                fmt17(study.mean_aic[i]),
                fmt17(study.sd_aic[i]),
                fmt17(study.mean_discrepancy[i]),
                fmt17(study.sd_discrepancy[i])
            )
            .map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn cmd_verify(a: &ModelArgs) -> CliResult<()> {
    let (_, model) = build_model(a)?;
    let (fit, _) = chosen_fit(a, &model)?;
    let spec = ObjectiveSpec::from_model(&model, fit.lambda, a.bounds)?;
    let path_value = objective_value(&spec, &fit.theta)?;
    // The bounded fit is certified through the unbounded one it was clipped from.
    let unbounded = model.fit_at(fit.lambda)?;
    let kkt = kkt_check(model.series(), fit.lambda, &unbounded.eta);
    let oracle = subgradient_minimize(&spec, 200_000, 1e-9);
    let dual = dual_bound(&spec, 200_000, 1e-9);

    let mut w = open_output(&a.out)?;
    let mut ok = kkt.valid;
    writeln!(w, "lambda,{}", fmt17(fit.lambda)).map_err(Error::from)?;
    writeln!(w, "objective,{}", fmt17(path_value)).map_err(Error::from)?;
    writeln!(w, "kkt_valid,{}", kkt.valid).map_err(Error::from)?;
    writeln!(w, "kkt_max_violation,{}", fmt17(kkt.max_violation)).map_err(Error::from)?;
    let tol = 1e-6 * (1.0 + path_value.abs());
    match oracle {
        Ok(o) => {
            ok &= path_value <= o.value + tol;
            writeln!(w, "subgradient_objective,{}", fmt17(o.value)).map_err(Error::from)?;
        }
        Err(Error::NonConvergence { best, .. }) => {
            ok &= path_value <= best + tol;
            writeln!(w, "subgradient_objective,{}", fmt17(best)).map_err(Error::from)?;
        }
        Err(e) => return Err(e.into()),
    }
    match dual {
        Ok(d) => {
            ok &= path_value - d.dual_value <= tol;
            writeln!(w, "dual_bound,{}", fmt17(d.dual_value)).map_err(Error::from)?;
        }
        // Data on the support boundary has infinite optima the dual solver does not handle.
        Err(e) => writeln!(w, "dual_bound,unavailable ({e})").map_err(Error::from)?,
    }
    writeln!(w, "certified,{ok}").map_err(Error::from)?;
    w.flush().map_err(Error::from)?;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument("fit failed certification".into()).into())
    }
}
