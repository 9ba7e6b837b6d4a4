//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the verdicts always appear in the
//! `cargo test` output. The process exits 0 after reporting; set
//! `NEARISO_ACCEPTANCE_STRICT=1` to make any FAIL exit nonzero.

mod common;

use std::time::{Duration, Instant};

use common::{dataset, max_abs_diff, reference, table};
use neariso::apps::{self, ode};
use neariso::expfam::FamilyKind;
use neariso::selection::{criterion_value, LambdaGrid};
use neariso::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, detail: String::new(), notes: Vec::new() }
    }

    /// Records a sub-check; any failing sub-check fails the criterion.
    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        if !ok {
            self.detail.push_str("FAILED ");
        }
        self.detail.push_str(&what);
    }

    fn note(&mut self, what: String) {
        self.notes.push(what);
    }
}

/// Printed values in the reference material are cut, not rounded, to the
/// shown significant digits (0.6047... appears as 0.604).
fn truncate_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let p = digits - 1 - x.abs().log10().floor() as i32;
    let f = 10f64.powi(p);
    // Nudge so values like 0.2000000000000000x are not cut to 0.199.
    (x * f * (1.0 + 1e-12)).trunc() / f
}

fn knot_printed_as(knots: &[f64], target: f64, digits: i32) -> Option<usize> {
    knots
        .iter()
        .position(|&k| (truncate_sig(k, digits) - target).abs() <= 1e-12 * target.abs().max(1.0))
}

fn gaussian() -> Outcome {
    let mut o = Outcome::new();
    let g = dataset("gaussian.csv");
    let m = GeneralizedModel::new(&g.value, None, Family::normal(), Direction::Increasing, PenaltyScale::Natural)
        .unwrap();
    let knots = m.knots();
    let iso = m.fit_at(m.path().terminal_lambda()).unwrap();
    let d = max_abs_diff(&iso.eta, &reference("gaussian_isotonic.csv"));
    o.check(d <= 1e-9, format!("isotonic fit max diff {d:.1e} <= 1e-9"));
    match knot_printed_as(&knots, 3.68, 3) {
        Some(k) => {
            let d = max_abs_diff(&m.fit_at_knot(k).unwrap().eta, &reference("gaussian_fit_3.68.csv"));
            o.check(d <= 1e-9, format!("fit at knot {} max diff {d:.1e} <= 1e-9", knots[k]));
        }
        None => o.check(false, "no knot printed as 3.68".into()),
    }
    let trace = select_lambda(&m, Criterion::Cp { sigma2: 1.0 }).unwrap();
    let sel = trace.selected_lambda();
    o.check(
        (truncate_sig(sel, 3) - 3.68).abs() < 1e-12,
        format!("Cp(sigma2=1) selects {sel} (K={}), want 3.68", trace.selected_entry().pieces),
    );
    if let Some(k) = knot_printed_as(&knots, 3.68, 3) {
        o.note(format!(
            "Cp at 3.68 knot: {:.6}, at selected knot: {:.6}",
            trace.entries[k].criterion,
            trace.selected_entry().criterion
        ));
    }
    o
}

/// Compares a printed `(lambda, aic)` table with the trace; the offset is fixed
/// by the first row and must hold for every row.
fn aic_curve(o: &mut Outcome, name: &str, trace: &CriterionTrace) {
    let rows = table(name);
    let find = |l: f64| {
        trace
            .entries
            .iter()
            .find(|e| (e.lambda - l).abs() <= 1e-9 * (1.0 + l.abs()))
    };
    let offset = find(rows[0].0).map(|e| rows[0].1 - e.criterion).unwrap_or(f64::NAN);
    let mut bad = Vec::new();
    for &(l, a) in &rows {
        match find(l) {
            Some(e) if (a - e.criterion - offset).abs() <= 1e-6 => {}
            Some(e) => bad.push(format!("{l:.6}: {a:.6} vs {:.6} (K={})", e.criterion + offset, e.pieces)),
            None => bad.push(format!("{l:.6}: not a knot")),
        }
    }
    o.check(
        bad.is_empty(),
        format!("AIC curve: {}/{} rows match with offset {offset:.3e}", rows.len() - bad.len(), rows.len()),
    );
    for b in bad {
        o.note(format!("{name} mismatch at {b}"));
    }
}

fn binomial() -> Outcome {
    let mut o = Outcome::new();
    let b = dataset("binomial.csv");
    let m = GeneralizedModel::new(
        &b.value,
        b.weight.as_deref(),
        Family::binomial(10),
        Direction::Increasing,
        PenaltyScale::MeanWeight,
    )
    .unwrap();
    let knots = m.knots();
    for t in [0.200, 0.604, 5.05] {
        let k = knot_printed_as(&knots, t, 3);
        o.check(k.is_some(), format!("knot printed as {t}: {:?}", k.map(|k| knots[k])));
    }
    if let Some(k) = knot_printed_as(&knots, 0.604, 3) {
        let fit = m.fit_at_knot(k).unwrap();
        let d = max_abs_diff(&fit.eta, &reference("binomial_fit_0.604.csv"));
        o.check(d <= 1e-9, format!("fit at 0.604 max diff {d:.1e}"));
        let spot = |r: std::ops::RangeInclusive<usize>, v: f64| r.into_iter().all(|i| (fit.eta[i - 1] - v).abs() <= 1e-9);
        o.check(
            spot(24..=44, 0.6380952380952382) && spot(51..=60, 0.23047619047619047),
            "spot values on 24-44 and 51-60".into(),
        );
    }
    let trace = select_lambda(&m, Criterion::Aic).unwrap();
    let sel = trace.selected_lambda();
    o.check((sel - 0.604761904761904).abs() <= 1e-9, format!("AIC selects {sel}"));
    aic_curve(&mut o, "binomial_aic.csv", &trace);
    o
}

fn chisq() -> Outcome {
    let mut o = Outcome::new();
    let c = dataset("chisq.csv");
    let m = GeneralizedModel::new(
        &c.value,
        c.weight.as_deref(),
        Family::chi_square(5.0),
        Direction::Increasing,
        PenaltyScale::Natural,
    )
    .unwrap();
    let knots = m.knots();
    match knot_printed_as(&knots, 270.04, 5) {
        Some(k) => {
            let s: Vec<f64> = m.fit_at_knot(k).unwrap().eta.iter().map(|e| e / 2.0).collect();
            let d = max_abs_diff(&s, &reference("chisq_fit_270.04.csv"));
            let plateau = (25..=80).all(|i| (s[i - 1] - 5.49032474717414).abs() <= 1e-9);
            o.check(d <= 1e-9 && plateau, format!("fit at knot {} max diff {d:.1e}, plateau {plateau}", knots[k]));
        }
        None => o.check(false, "no knot at 270.04".into()),
    }
    let trace = select_lambda(&m, Criterion::Aic).unwrap();
    let sel = trace.selected_lambda();
    o.check(
        (sel - 80.68680806399138).abs() <= 1e-6,
        format!("AIC selects {sel} (K={}), want 80.68680806399138", trace.selected_entry().pieces),
    );
    if let Some(e) = trace.entries.iter().find(|e| (e.lambda - 80.68680806399138).abs() < 1e-6) {
        o.note(format!(
            "AIC at 80.6868: {:.6} (K={}); at selected: {:.6} (K={})",
            e.criterion,
            e.pieces,
            trace.selected_entry().criterion,
            trace.selected_entry().pieces
        ));
    }
    aic_curve(&mut o, "chisq_aic.csv", &trace);
    o
}

const KINDS: [FamilyKind; 4] = [FamilyKind::Normal, FamilyKind::Binomial, FamilyKind::Poisson, FamilyKind::GammaScale];

/// Random interior data for `kind`: `(family, data, weights)`.
fn instance(kind: FamilyKind, n: usize, rng: &mut ChaCha8Rng) -> (Family, Vec<f64>, Vec<f64>) {
    let trend = rng.random_range(-0.3..0.3);
    match kind {
        FamilyKind::Normal => {
            let w = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
            let x = (0..n).map(|i| trend * i as f64 + rng.random_range(-3.0..3.0)).collect();
            (Family::normal(), x, w)
        }
        FamilyKind::Binomial => {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(2..=20) as f64).collect();
            let x = w.iter().map(|&t| rng.random_range(1..t as u32) as f64).collect();
            (Family::binomial(20), x, w)
        }
        FamilyKind::Poisson => {
            let w = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
            let x = (0..n).map(|_| rng.random_range(1..=25) as f64).collect();
            (Family::poisson(), x, w)
        }
        FamilyKind::GammaScale => {
            let w = (0..n).map(|_| rng.random_range(0.5..5.0)).collect();
            let x = (0..n).map(|i| (0.05 * trend * i as f64).exp() * rng.random_range(0.2..10.0)).collect();
            (Family::gamma(2.0), x, w)
        }
    }
}

fn oracle_equivalence() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f72_6163);
    let (mut worst_obj, mut worst_kkt, mut worst_gap) = (f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    let (mut obj_fail, mut kkt_fail, mut bounded) = (0, 0, 0);
    let count = 500;
    for i in 0..count {
        let kind = KINDS[i % 4];
        let n = rng.random_range(2..=40);
        let (family, x, w) = instance(kind, n, &mut rng);
        let direction = if rng.random_bool(0.5) { Direction::Increasing } else { Direction::Decreasing };
        let model = GeneralizedModel::new(&x, Some(&w), family, direction, PenaltyScale::default_for(kind)).unwrap();
        let knots = model.knots();
        let lt = model.path().terminal_lambda();
        let lambda = match (i / 4) % 4 {
            0 => knots[rng.random_range(0..knots.len())],
            1 if knots.len() > 1 => {
                let k = rng.random_range(0..knots.len() - 1);
                0.5 * (knots[k] + knots[k + 1])
            }
            1 => 0.5 * lt,
            2 => 0.0,
            _ => 10.0 * lt.max(1e-3),
        };
        let unbounded = model.fit_at(lambda).unwrap();
        let bounds = if i % 5 == 0 {
            bounded += 1;
            let mut t = unbounded.theta.clone();
            t.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let lo = t[t.len() / 4];
            let hi = t[(3 * t.len()) / 4];
            let hi = if kind == FamilyKind::GammaScale { hi.min(-1e-3) } else { hi };
            Some((lo.min(hi), hi))
        } else {
            None
        };
        let fit = match bounds {
            Some((a, b)) => clip_bounds(&unbounded, &family, a, b).unwrap(),
            None => unbounded.clone(),
        };
        let spec = ObjectiveSpec::from_model(&model, lambda, bounds).unwrap();
        let v = objective_value(&spec, &fit.theta).unwrap();
        let oracle = match subgradient_minimize(&spec, 1_000_000, 1e-10) {
            Ok(s) => s.value,
            Err(Error::NonConvergence { best, .. }) => best,
            Err(e) => panic!("oracle failed on instance {i}: {e}"),
        };
        let excess = (v - oracle) / (1.0 + v.abs());
        worst_obj = worst_obj.max(excess);
        if excess > 1e-6 {
            obj_fail += 1;
        }
        let kkt = kkt_check(model.series(), lambda, &unbounded.eta);
        worst_kkt = worst_kkt.max(kkt.max_violation);
        if !kkt.valid || kkt.max_violation > 1e-8 {
            kkt_fail += 1;
        }
        if let Ok(d) = dual_bound(&spec, 100_000, 1e-10) {
            worst_gap = worst_gap.max((v - d.dual_value) / (1.0 + v.abs()));
        }
    }
    o.check(
        obj_fail == 0,
        format!("{count} instances ({bounded} bounded): path objective above oracle in {obj_fail}, worst relative excess {worst_obj:.2e}"),
    );
    o.check(kkt_fail == 0, format!("KKT failures {kkt_fail}, worst violation {worst_kkt:.2e} <= 1e-8"));
    o.note(format!("worst relative gap to the dual lower bound {worst_gap:.2e}"));
    o
}

fn limit_identities() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c69_6d69);
    let (mut zero_bad, mut pava_worst, mut normal_bad) = (0, 0.0f64, 0);
    for i in 0..200 {
        let kind = KINDS[i % 4];
        let n = rng.random_range(1..=40);
        let (family, x, w) = instance(kind, n, &mut rng);
        let direction = if i % 3 == 0 { Direction::Decreasing } else { Direction::Increasing };
        let model = GeneralizedModel::new(&x, Some(&w), family, direction, PenaltyScale::default_for(kind)).unwrap();
        let tilde: Vec<f64> = x.iter().zip(&w).map(|(&a, &b)| family.tilde(a, b)).collect();
        if model.fit_at(0.0).unwrap().eta != tilde {
            zero_bad += 1;
        }
        let iso = expand(&isotonic_fit(model.series()).unwrap(), n);
        let lt = model.path().terminal_lambda();
        for l in [lt, lt * 1.5 + 1e-3, 1e6] {
            pava_worst = pava_worst.max(max_abs_diff(&model.fit_at(l).unwrap().eta, &iso));
        }
        if kind == FamilyKind::Normal {
            let direct = solve_path(&WeightedSeries::new(x.clone(), w.clone(), direction).unwrap()).unwrap();
            for l in [0.0, 0.3 * lt, 0.5 * lt, lt, 2.0 * lt] {
                let g = fit_generalized(&x, Some(&w), family, l, direction, PenaltyScale::Natural).unwrap();
                let same = g.eta.iter().zip(&direct.fit_at(l).eta).all(|(a, b)| a.to_bits() == b.to_bits());
                if !same {
                    normal_bad += 1;
                }
            }
        }
    }
    o.check(zero_bad == 0, format!("fit at 0 differs from data in {zero_bad}/200"));
    o.check(pava_worst <= 1e-10, format!("terminal fit vs PAVA worst {pava_worst:.1e} <= 1e-10"));
    o.check(normal_bad == 0, format!("normal generalized fit not bitwise equal in {normal_bad} cases"));
    o
}

fn weight_replication() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7265_706c);
    let mut worst = 0.0f64;
    let mut worst_gen = 0.0f64;
    for i in 0..200 {
        let n = rng.random_range(1..=10);
        let w: Vec<usize> = (0..n).map(|_| rng.random_range(1..=5)).collect();
        let direction = if i % 2 == 0 { Direction::Increasing } else { Direction::Decreasing };
        let expand_w = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(&w).flat_map(|(&a, &k)| std::iter::repeat_n(a, k)).collect()
        };
        let wf: Vec<f64> = w.iter().map(|&k| k as f64).collect();

        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let weighted = solve_path(&WeightedSeries::new(x.clone(), wf.clone(), direction).unwrap()).unwrap();
        let ex = expand_w(&x);
        let unit = solve_path(&WeightedSeries::new(ex.clone(), vec![1.0; ex.len()], direction).unwrap()).unwrap();
        let lt = weighted.terminal_lambda().max(unit.terminal_lambda()).max(1e-3);

        // Poisson with exposure `w` against `w` unit-exposure copies of the rate.
        let counts: Vec<f64> = wf.iter().map(|&k| (rng.random_range(1..=8) as f64) * k).collect();
        let rates: Vec<f64> = counts.iter().zip(&wf).map(|(c, k)| c / k).collect();
        let pm = GeneralizedModel::new(&counts, Some(&wf), Family::poisson(), direction, PenaltyScale::Natural).unwrap();
        let er = expand_w(&rates);
        let pu = GeneralizedModel::new(&er, Some(&vec![1.0; er.len()]), Family::poisson(), direction, PenaltyScale::Natural)
            .unwrap();
        let plt = pm.path().terminal_lambda().max(pu.path().terminal_lambda()).max(1e-3);

        for s in 0..25 {
            let f = 1.2 * s as f64 / 24.0;
            let l = f * lt;
            worst = worst.max(max_abs_diff(&expand_w(&weighted.fit_at(l).eta), &unit.fit_at(l).eta));
            let l = f * plt;
            worst_gen = worst_gen.max(max_abs_diff(&expand_w(&pm.fit_at(l).unwrap().eta), &pu.fit_at(l).unwrap().eta));
        }
    }
    o.check(worst <= 1e-9, format!("200 instances x 25 lambdas, normal worst {worst:.1e} <= 1e-9"));
    o.check(worst_gen <= 1e-9, format!("poisson worst {worst_gen:.1e} <= 1e-9"));
    o
}

/// Terminal knot of the noiseless truth, which sets the study grid to
/// `[lambda_T / 1000, lambda_T]`.
fn truth_grid(truth: &[f64], weight: f64, scale: PenaltyScale) -> LambdaGrid {
    let solve_w = match scale {
        PenaltyScale::Natural => weight,
        PenaltyScale::MeanWeight => 1.0,
    };
    let series = WeightedSeries::new(truth.to_vec(), vec![solve_w; truth.len()], Direction::Increasing).unwrap();
    let lt = solve_path(&series).unwrap().terminal_lambda();
    LambdaGrid::LogSpaced { min: lt / 1000.0, max: lt, count: 25 }
}

fn study(o: &mut Outcome, label: &str, family: Family, weight: f64, truth: Vec<f64>) {
    let scale = PenaltyScale::default_for(family.kind);
    let grid = truth_grid(&truth, weight, scale);
    let mut cfg = BiasStudyConfig::new(family, vec![weight; truth.len()], truth, grid);
    cfg.replications = 1000;
    cfg.seed = 20260101;
    let r = bias_study(&cfg).unwrap();
    let argmin = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold(0, |b, (i, &x)| if x < v[b] { i } else { b })
    };
    let ia = argmin(&r.mean_aic);
    let id = argmin(&r.mean_discrepancy);
    let hi = r.mean_aic.iter().cloned().fold(f64::MIN, f64::max);
    let range = hi - r.mean_aic[ia];
    let near = ia.saturating_sub(3)..(ia + 4).min(r.lambdas.len());
    let gap = near
        .clone()
        .map(|k| (r.mean_aic[k] - r.mean_discrepancy[k]).abs())
        .fold(0.0, f64::max);
    o.check(
        gap <= 0.02 * range,
        format!("{label}: max |AIC - 2D| within 3 steps of the minimizer {gap:.3} <= {:.3}", 0.02 * range),
    );
    o.check(
        ia.abs_diff(id) <= 1,
        format!("{label}: argmins at {:.4} and {:.4}", r.lambdas[ia], r.lambdas[id]),
    );
    for k in near {
        o.note(format!(
            "{label} lambda {:.5}: mean AIC {:.3}, mean 2D {:.3}",
            r.lambdas[k], r.mean_aic[k], r.mean_discrepancy[k]
        ));
    }
}

fn unbiasedness() -> Outcome {
    let mut o = Outcome::new();
    let ramp = |lo: f64, hi: f64| -> Vec<f64> { (0..100).map(|i| lo + (hi - lo) * (i % 50) as f64 / 49.0).collect() };
    study(&mut o, "binomial N=50", Family::binomial(50), 50.0, ramp(0.2, 0.8));
    let chi = Family::chi_square(10.0);
    study(&mut o, "chi-square d=10", chi, chi.shape, ramp(1.0, 10.0).iter().map(|s| 2.0 * s).collect());
    o
}

fn applications() -> Outcome {
    let mut o = Outcome::new();
    let s = dataset("sunspot_periodogram.csv");
    let sf = apps::spectrum_fit_periodogram(&s.index, &s.value, Criterion::Aic).unwrap();
    let lf: Vec<f64> = sf.fitted.iter().map(|v| v.ln()).collect();
    let d = max_abs_diff(&lf, &reference("sunspot_fit.csv"));
    o.check(d <= 1e-6, format!("sunspot fit at {} max diff {d:.1e}", sf.fit.lambda));
    let peak = sf.peak_plateau();
    let step = s.index[1] - s.index[0];
    o.check(
        peak.iter().any(|f| (f - 0.102).abs() <= 0.5 * step),
        format!("sunspot maximal plateau {peak:?} contains f~0.102"),
    );

    let m = dataset("mlda.csv");
    let r = apps::rdd_fit(&m.value, None, Criterion::Aic).unwrap();
    let d = max_abs_diff(&r.fit.eta, &reference("mlda_fit.csv"));
    o.check(d <= 1e-6, format!("MLDA AIC fit at {} max diff {d:.2e}", r.fit.lambda));
    let ages: Vec<String> = r
        .jumps
        .iter()
        .map(|j| format!("{:.3}", 0.5 * (m.index[j.index] + m.index[j.index + 1])))
        .collect();
    let one_at_21 = r.jumps.len() == 1 && {
        let j = &r.jumps[0];
        let nearest = (0..m.index.len() - 1)
            .min_by(|&a, &b| {
                let da = (0.5 * (m.index[a] + m.index[a + 1]) - 21.04).abs();
                let db = (0.5 * (m.index[b] + m.index[b + 1]) - 21.04).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        j.index == nearest
    };
    o.check(one_at_21, format!("MLDA jumps at ages {ages:?}, want exactly one near 21.04"));
    let model = GeneralizedModel::new(&m.value, None, Family::poisson(), Direction::Decreasing, PenaltyScale::Natural)
        .unwrap();
    let reff = reference("mlda_fit.csv");
    for (k, l) in model.knots().iter().enumerate() {
        let f = model.fit_at_knot(k).unwrap();
        if max_abs_diff(&f.eta, &reff) <= 1e-6 {
            let crit = criterion_value(&model, &f, Criterion::Aic).unwrap();
            o.note(format!(
                "MLDA figure fit is the path knot {l} (AIC {crit:.4} vs selected {:.4}) with {} upward jumps",
                r.trace.selected_entry().criterion,
                apps::rdd::upward_jumps(&f.eta).len()
            ));
        }
    }

    for component in [ode::Component::V, ode::Component::R] {
        let cfg = ode::FnDemoConfig { component, seed: 20260101, ..Default::default() };
        let demo = ode::fn_demo(&cfg).unwrap();
        let est = ode::ode_error_quantify(&demo.blocks, Criterion::Aic).unwrap();
        let g2 = demo.blocks.gamma2;
        let floor_ok = est.scale.iter().all(|&c| c >= g2);
        o.check(floor_ok, format!("FN {component:?}: all {} block scales >= gamma2", est.scale.len()));

        let window = ode::BlockResiduals { sums: demo.blocks.sums[..50].to_vec(), ..demo.blocks.clone() };
        let w = ode::ode_error_quantify(&window, Criterion::Aic).unwrap();
        let bounds = Some((ode::scale_bound(g2), 0.0));
        let spec = ObjectiveSpec::from_model(&w.model, w.fit.lambda, bounds).unwrap();
        let v = objective_value(&spec, &w.fit.theta).unwrap();
        let cert = dual_bound(&spec, 1_000_000, 1e-12).unwrap();
        let gap = v - cert.dual_value;
        o.check(gap.abs() <= 1e-6, format!("FN {component:?} window: objective {v:.9} within {gap:.1e} of the dual bound"));
        let sub = match subgradient_minimize(&spec, 1_000_000, 1e-12) {
            Ok(s) => s.value,
            Err(Error::NonConvergence { best, .. }) => best,
            Err(e) => panic!("{e}"),
        };
        o.note(format!("FN {component:?} window: projected subgradient reaches {sub:.9} (path {v:.9})"));
    }
    o
}

fn hygiene() -> Outcome {
    let mut o = Outcome::new();
    let fams = [Family::normal(), Family::binomial(12), Family::poisson(), Family::gamma(2.5), Family::chi_square(3.0)];
    let grid = |f: &Family| -> Vec<f64> {
        let (lo, hi) = match f.kind {
            FamilyKind::Normal => (-1e3, 1e3),
            FamilyKind::Binomial => (-10.0, 10.0),
            FamilyKind::Poisson => (-20.0, 20.0),
            FamilyKind::GammaScale => (-1e3, -1e-3),
        };
        (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect()
    };
    let (mut rt, mut cvx, mut fd) = (0.0f64, true, 0.0f64);
    for f in &fams {
        let ts = grid(f);
        for &t in &ts {
            let e = f.mean_map(t).unwrap();
            let back = f.mean_map_inv(e).unwrap();
            rt = rt.max((back - t).abs() / (1.0 + t.abs()));
        }
        for p in ts.windows(3) {
            let (a, b, c) = (f.psi(p[0]).unwrap(), f.psi(p[1]).unwrap(), f.psi(p[2]).unwrap());
            cvx &= a + c - 2.0 * b >= -1e-9 * (1.0 + b.abs());
        }
        for &t in ts.iter().step_by(7) {
            let h = 1e-4 * (1.0 + t.abs()).min(if f.kind == FamilyKind::GammaScale { 0.1 * t.abs() } else { 1.0 });
            let d1 = (f.psi(t + h).unwrap() - f.psi(t - h).unwrap()) / (2.0 * h);
            let d2 = (f.psi(t + h / 2.0).unwrap() - f.psi(t - h / 2.0).unwrap()) / h;
            let rich = (4.0 * d2 - d1) / 3.0;
            let m = f.mean_map(t).unwrap();
            fd = fd.max((rich - m).abs() / (1.0 + m.abs()));
        }
    }
    o.check(rt <= 1e-9, format!("round trip worst {rt:.1e}"));
    o.check(cvx, "psi convex on every grid".into());
    o.check(fd <= 1e-6, format!("derivative check worst {fd:.1e}"));

    let mut norm = 0.0f64;
    for trials in 1..=20u32 {
        let f = Family::binomial(trials);
        for &p in &[0.05, 0.3, 0.5, 0.9] {
            let s: f64 = (0..=trials).map(|x| f.log_density(x as f64, p, trials as f64).unwrap().exp()).sum();
            norm = norm.max((s - 1.0).abs());
        }
    }
    let pois = Family::poisson();
    for &mu in &[0.1, 1.0, 7.5, 30.0] {
        let s: f64 = (0..400).map(|x| pois.log_density(x as f64, mu, 1.0).unwrap().exp()).sum();
        norm = norm.max((s - 1.0).abs());
    }
    // Gamma densities integrate to one; composite Simpson on a log grid.
    for &(k, eta) in &[(2.5, 1.0), (0.7, 3.0), (5.0, 0.2)] {
        let g = Family::gamma(k);
        let m = 40_000;
        let (a, b) = ((1e-60f64).ln(), (200.0 * eta * k + 50.0f64).ln());
        let h = (b - a) / m as f64;
        let fx = |u: f64| {
            let x = u.exp();
            (g.log_density(x, eta, k).unwrap().exp()) * x
        };
        let mut s = fx(a) + fx(b);
        for i in 1..m {
            s += fx(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        norm = norm.max((s * h / 3.0 - 1.0).abs());
    }
    o.check(norm <= 1e-9, format!("density normalization worst {norm:.1e}"));
    o
}

fn main() {
    let strict = std::env::var("NEARISO_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(u8, &str, u64, fn() -> Outcome); 9] = [
        (1, "gaussian fixtures", 1, gaussian),
        (2, "binomial fixtures", 1, binomial),
        (3, "chi-square fixtures", 1, chisq),
        (4, "oracle equivalence", 300, oracle_equivalence),
        (5, "limit identities", 30, limit_identities),
        (6, "weight replication", 30, weight_replication),
        (7, "AIC unbiasedness", 600, unbiasedness),
        (8, "applications", 120, applications),
        (9, "numerical hygiene", 30, hygiene),
    ];
    let mut passed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let mut o = run();
        let elapsed = start.elapsed();
        o.check(
            elapsed <= Duration::from_secs(budget),
            format!("runtime {:.2}s <= {budget}s", elapsed.as_secs_f64()),
        );
        println!("{} criterion {id} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        for n in &o.notes {
            println!("    {n}");
        }
        passed += o.pass as usize;
    }
    println!("acceptance: {passed} of 9 criteria pass");
    if strict && passed < 9 {
        std::process::exit(1);
    }
}
