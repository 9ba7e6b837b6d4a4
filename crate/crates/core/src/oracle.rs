//! Reference solvers used to cross-check the path algorithm.
//!
//! `subgradient_minimize` is a plain projected subgradient method on the
//! natural parameters. It only yields an upper bound on the optimum.
//! `dual_bound` maximizes the concave dual over the hinge multipliers with an
//! accelerated projected gradient method; any dual value is a lower bound, so
//! the pair brackets the optimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::{Family, FamilyKind};
use crate::generalized::GeneralizedModel;
use crate::pava::Direction;

/// The penalized objective
/// `sum_i w_i (psi(theta_i) - theta_i x_i / w_i) + lambda sum hinge`,
/// optionally restricted to `alpha <= theta_i <= beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub family: Family,
    pub data: Vec<f64>,
    pub weights: Vec<f64>,
    /// Penalty in natural units.
    pub lambda: f64,
    pub bounds: Option<(f64, f64)>,
    pub direction: Direction,
}

impl ObjectiveSpec {
    pub fn new(
        family: Family,
        data: Vec<f64>,
        weights: Vec<f64>,
        lambda: f64,
        bounds: Option<(f64, f64)>,
        direction: Direction,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.len() != data.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                got: weights.len(),
                expected: data.len(),
            });
        }
        for (index, &w) in weights.iter().enumerate() {
            if !(w > 0.0) {
                return Err(Error::NonpositiveWeight { index, value: w });
            }
        }
        if let Some((a, b)) = bounds {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(Error::InvalidBounds { lower: a, upper: b });
            }
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
        }
        Ok(ObjectiveSpec {
            family,
            data,
            weights,
            lambda,
            bounds,
            direction,
        })
    }

    /// Objective of `model` at the user-scale `lambda`.
    pub fn from_model(model: &GeneralizedModel, lambda: f64, bounds: Option<(f64, f64)>) -> Result<Self> {
        ObjectiveSpec::new(
            *model.family(),
            model.data().to_vec(),
            model.weights().to_vec(),
            lambda * model.weight_scale(),
            bounds,
            model.direction(),
        )
    }

    fn n(&self) -> usize {
        self.data.len()
    }

    fn tilde(&self) -> Vec<f64> {
        self.data
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| self.family.tilde(x, w))
            .collect()
    }

    fn lower(&self) -> f64 {
        let dom = self.family.natural_domain().lower;
        self.bounds.map_or(dom, |b| b.0.max(dom))
    }

    fn upper(&self) -> f64 {
        let dom = self.family.natural_domain().upper;
        self.bounds.map_or(dom, |b| b.1.min(dom))
    }

    /// Hinge on the forward difference in the penalized direction.
    fn hinge(&self, a: f64, b: f64) -> f64 {
        let d = match self.direction {
            Direction::Increasing => a - b,
            Direction::Decreasing => b - a,
        };
        if d.is_nan() {
            0.0
        } else {
            d.max(0.0)
        }
    }
}

/// Per-unit loss `psi(theta) - theta u`, with the limits at infinite `theta`.
fn unit_loss(family: &Family, theta: f64, u: f64) -> f64 {
    if theta.is_infinite() {
        // Finite only when u sits at the matching end of the mean range.
        let lim = if theta < 0.0 {
            match family.kind {
                FamilyKind::Binomial | FamilyKind::Poisson if u == 0.0 => Some(0.0),
                _ => None,
            }
        } else {
            match family.kind {
                FamilyKind::Binomial if u == 1.0 => Some(0.0),
                _ => None,
            }
        };
        return lim.unwrap_or(f64::INFINITY);
    }
    match family.psi(theta) {
        Ok(p) => p - theta * u,
        Err(_) => f64::INFINITY,
    }
}

pub fn objective_value(spec: &ObjectiveSpec, theta: &[f64]) -> Result<f64> {
    if theta.len() != spec.n() {
        return Err(Error::LengthMismatch {
            what: "theta",
            got: theta.len(),
            expected: spec.n(),
        });
    }
    let dom = spec.family.natural_domain();
    let (lo, hi) = spec.bounds.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    for &t in theta {
        if t.is_nan() || !dom.contains_closed(t) || t < lo || t > hi {
            return Err(Error::Domain {
                family: spec.family.name(),
                value: t,
            });
        }
    }
    let xt = spec.tilde();
    let mut total = 0.0;
    for i in 0..spec.n() {
        total += spec.weights[i] * unit_loss(&spec.family, theta[i], xt[i]);
    }
    if spec.lambda > 0.0 {
        let pen: f64 = theta.windows(2).map(|p| spec.hinge(p[0], p[1])).sum();
        total += spec.lambda * pen;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Largest finite natural parameter kept inside an open domain end.
fn interior(family: &Family, lo: f64, hi: f64) -> (f64, f64) {
    match family.kind {
        FamilyKind::GammaScale => (lo, hi.min(-1e-12)),
        _ => (lo, hi),
    }
}

/// Projected subgradient descent with steps `c / sqrt(k)` along the
/// normalized subgradient. The hinge subgradient at a tie is 0.
///
/// Stops once the best objective improved by less than
/// `tol * (1 + |best|)` over a window of iterations; otherwise reports
/// `NonConvergence` carrying the best value found.
pub fn subgradient_minimize(spec: &ObjectiveSpec, iters: usize, tol: f64) -> Result<OracleSolution> {
    let n = spec.n();
    let xt = spec.tilde();
    let (lo, hi) = interior(&spec.family, spec.lower(), spec.upper());
    let mut theta: Vec<f64> = xt
        .iter()
        .map(|&u| {
            let t = spec.family.mean_map_inv(u).unwrap_or(0.0);
            if t.is_finite() {
                t.clamp(lo, hi)
            } else {
                (if t > 0.0 { 20.0 } else { -20.0f64 }).clamp(lo, hi)
            }
        })
        .collect();
    let spread = theta.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let c = 0.5 * (1.0 + spread);
    let mut best = theta.clone();
    let mut best_val = objective_value(spec, &theta)?;
    let window = 20_000.max(iters / 50);
    let mut mark = best_val;
    let mut g = vec![0.0; n];
    for k in 1..=iters {
        for i in 0..n {
            let eta = spec.family.mean_map(theta[i]).unwrap_or(f64::INFINITY);
            g[i] = spec.weights[i] * (eta - xt[i]);
        }
        for i in 0..n.saturating_sub(1) {
            let active = match spec.direction {
                Direction::Increasing => theta[i] > theta[i + 1],
                Direction::Decreasing => theta[i + 1] > theta[i],
            };
            if active {
                let s = match spec.direction {
                    Direction::Increasing => spec.lambda,
                    Direction::Decreasing => -spec.lambda,
                };
                g[i] += s;
                g[i + 1] -= s;
            }
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // Zero is a subgradient: the current iterate is optimal.
            return Ok(OracleSolution {
                value: objective_value(spec, &theta)?,
                theta,
                iterations: k,
            });
        }
        if !norm.is_finite() {
            break;
        }
        let step = c / (k as f64).sqrt() / norm;
        for i in 0..n {
            theta[i] = (theta[i] - step * g[i]).clamp(lo, hi);
        }
        let v = objective_value(spec, &theta)?;
        if v < best_val {
            best_val = v;
            best.copy_from_slice(&theta);
        }
        if k % window == 0 {
            if mark - best_val <= tol * (1.0 + best_val.abs()) {
                return Ok(OracleSolution {
                    theta: best,
                    value: best_val,
                    iterations: k,
                });
            }
            mark = best_val;
        }
    }
    if iters < window {
        return Ok(OracleSolution {
            theta: best,
            value: best_val,
            iterations: iters,
        });
    }
    Err(Error::NonConvergence {
        iterations: iters,
        best: best_val,
    })
}

/// Result of the dual solve. `dual_value <= optimum <= primal_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// Hinge multipliers between neighbours, in solve order.
    pub xi: Vec<f64>,
    pub dual_value: f64,
    /// Primal point recovered from the multipliers, feasible for the spec.
    pub theta: Vec<f64>,
    pub primal_value: f64,
    pub iterations: usize,
}

impl DualCertificate {
    pub fn gap(&self) -> f64 {
        self.primal_value - self.dual_value
    }
}

struct Dual<'a> {
    spec: &'a ObjectiveSpec,
    x: Vec<f64>,
    w: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Dual<'_> {
    fn u(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        let lam = self.spec.lambda;
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { xi[i] } else { 0.0 };
                let left = if i > 0 { xi[i - 1] } else { 0.0 };
                self.x[i] - lam / self.w[i] * (right - left)
            })
            .collect()
    }

    /// Minimizer of `psi(theta) - theta u` over the box, possibly infinite.
    fn theta_star(&self, u: f64) -> f64 {
        let fam = &self.spec.family;
        let raw = if fam.eta_in_closure(u) {
            fam.mean_map_inv(u).unwrap_or(f64::NAN)
        } else if match fam.kind {
            FamilyKind::Normal => false,
            FamilyKind::Binomial => u > 1.0,
            _ => false,
        } {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        raw.max(self.lo).min(self.hi)
    }

    fn h(&self, u: f64, theta: f64) -> f64 {
        if theta.is_finite() {
            return unit_loss(&self.spec.family, theta, u);
        }
        let c = self.spec.family.conjugate(u);
        if c.is_finite() {
            -c
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Dual value and gradient.
    fn eval(&self, xi: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let u = self.u(xi);
        let theta: Vec<f64> = u.iter().map(|&v| self.theta_star(v)).collect();
        let mut val = 0.0;
        for i in 0..u.len() {
            val += self.w[i] * self.h(u[i], theta[i]);
        }
        let grad = (0..xi.len())
            .map(|k| self.spec.lambda * (theta[k] - theta[k + 1]))
            .collect();
        (val, grad, theta)
    }
}

/// Maximizes the dual by accelerated projected gradient ascent with
/// backtracking. Stops when the recovered primal point closes the gap to
/// `gap_tol` or after `max_iters` iterations; the certificate is returned in
/// both cases and carries the best dual value seen.
pub fn dual_bound(spec: &ObjectiveSpec, max_iters: usize, gap_tol: f64) -> Result<DualCertificate> {
    let n = spec.n();
    let mut x = spec.tilde();
    let mut w = spec.weights.clone();
    if spec.direction == Direction::Decreasing {
        x.reverse();
        w.reverse();
    }
    let lo = spec.lower();
    let hi = spec.upper();
    let dual = Dual {
        spec,
        x,
        w,
        lo,
        hi,
    };
    let m = n.saturating_sub(1);
    let orient = |mut t: Vec<f64>| {
        if spec.direction == Direction::Decreasing {
            t.reverse();
        }
        t
    };

    let mut xi = vec![0.0; m];
    let (mut val, _, mut theta) = dual.eval(&xi);
    if !val.is_finite() {
        return Err(Error::InvalidArgument(
            "dual oracle needs data inside the open mean range".into(),
        ));
    }
    let mut best = (val, xi.clone(), theta.clone());
    let mut y = xi.clone();
    let mut t = 1.0f64;
    let mut lip = 1.0f64;
    let mut iterations = 0;
    let primal = |th: &[f64]| objective_value(spec, &orient(th.to_vec())).unwrap_or(f64::INFINITY);
    let mut best_primal = primal(&theta);
    while iterations < max_iters && m > 0 {
        iterations += 1;
        let (vy, gy, _) = dual.eval(&y);
        let mut next;
        loop {
            next = y
                .iter()
                .zip(&gy)
                .map(|(a, g)| (a + g / lip).clamp(0.0, 1.0))
                .collect::<Vec<_>>();
            let (vn, _, th) = dual.eval(&next);
            let lin: f64 = next
                .iter()
                .zip(&y)
                .zip(&gy)
                .map(|((a, b), g)| g * (a - b) - 0.5 * lip * (a - b) * (a - b))
                .sum();
            if vy.is_finite() && vn.is_finite() && vn >= vy + lin - 1e-15 * vy.abs() {
                val = vn;
                theta = th;
                break;
            }
            lip *= 2.0;
            if lip > 1e300 {
                val = vn;
                theta = th;
                break;
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        // Restart momentum when the objective decreases.
        if val < best.0 {
            t = 1.0;
            y = xi.clone();
        } else {
            y = next
                .iter()
                .zip(&xi)
                .map(|(a, b)| (a + beta * (a - b)).clamp(0.0, 1.0))
                .collect();
            t = t_next;
            xi = next;
        }
        if val > best.0 {
            best = (val, xi.clone(), theta.clone());
        }
        if iterations % 50 == 0 || iterations == max_iters {
            best_primal = best_primal.min(primal(&theta));
            if best_primal - best.0 <= gap_tol {
                break;
            }
        }
        lip = (lip * 0.95).max(1e-12);
    }
    let primal_value = primal(&best.2).min(best_primal);
    let theta_out = orient(best.2.clone());
    Ok(DualCertificate {
        xi: best.1,
        dual_value: best.0,
        theta: theta_out,
        primal_value,
        iterations,
    })
}
