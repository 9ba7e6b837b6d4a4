//! One-parameter exponential families in natural and expectation coordinates.
//!
//! Every family is stored with its weight-free cumulant function `psi`. An
//! observation with weight `w` has cumulant `w * psi`, so a single [`Family`]
//! value covers heterogeneous trial counts or degrees of freedom:
//!
//! | family     | weight               | per-unit `psi(theta)` | `eta = psi'(theta)` |
//! |------------|----------------------|-----------------------|---------------------|
//! | Normal     | `1 / sigma^2`        | `theta^2 / 2`         | `theta`             |
//! | Binomial   | trials `N`           | `log(1 + e^theta)`    | success probability |
//! | Poisson    | exposure (usually 1) | `e^theta`             | rate                |
//! | GammaScale | shape `a`            | `-log(-theta)`        | scale `-1/theta`    |
//!
//! A chi-square observation `x ~ s * chi2(d)` is `GammaScale` with shape
//! `d / 2`, expectation parameter `2 s` and natural parameter `-1 / (2 s)`.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Normal,
    Binomial,
    Poisson,
    GammaScale,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Normal => "normal",
            FamilyKind::Binomial => "binomial",
            FamilyKind::Poisson => "poisson",
            FamilyKind::GammaScale => "gamma",
        }
    }
}

/// Open interval of valid natural parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalDomain {
    pub lower: f64,
    pub upper: f64,
}

impl NaturalDomain {
    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lower && theta < self.upper
    }

    /// Closure of the interval in the extended reals.
    pub fn contains_closed(&self, theta: f64) -> bool {
        theta >= self.lower && theta <= self.upper
    }
}

/// A one-parameter exponential family.
///
/// `shape` is the default per-observation weight, used when a data set does
/// not carry its own: trials for the binomial, the gamma shape `a` (`d / 2`
/// for a chi-square), `1 / sigma^2` for the normal and the exposure for the
/// Poisson.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub shape: f64,
}

impl Family {
    pub fn normal() -> Self {
        Family {
            kind: FamilyKind::Normal,
            shape: 1.0,
        }
    }

    pub fn binomial(trials: u32) -> Self {
        Family {
            kind: FamilyKind::Binomial,
            shape: f64::from(trials),
        }
    }

    pub fn poisson() -> Self {
        Family {
            kind: FamilyKind::Poisson,
            shape: 1.0,
        }
    }

    pub fn gamma(shape: f64) -> Self {
        Family {
            kind: FamilyKind::GammaScale,
            shape,
        }
    }

    /// Chi-square with `dof` degrees of freedom, as a gamma with shape `dof / 2`.
    pub fn chi_square(dof: f64) -> Self {
        Family::gamma(dof / 2.0)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn natural_domain(&self) -> NaturalDomain {
        match self.kind {
            FamilyKind::GammaScale => NaturalDomain {
                lower: f64::NEG_INFINITY,
                upper: 0.0,
            },
            _ => NaturalDomain {
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
            },
        }
    }

    fn domain_error(&self, value: f64) -> Error {
        Error::Domain {
            family: self.name(),
            value,
        }
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if theta.is_nan() || !self.natural_domain().contains(theta) {
            return Err(self.domain_error(theta));
        }
        Ok(())
    }

    /// Whether `eta` lies in the closure of the mean-parameter range.
    pub fn eta_in_closure(&self, eta: f64) -> bool {
        match self.kind {
            FamilyKind::Normal => eta.is_finite(),
            FamilyKind::Binomial => (0.0..=1.0).contains(&eta),
            FamilyKind::Poisson => eta >= 0.0 && eta.is_finite(),
            FamilyKind::GammaScale => eta > 0.0 && eta.is_finite(),
        }
    }

    fn eta_in_open_range(&self, eta: f64) -> bool {
        match self.kind {
            FamilyKind::Normal => eta.is_finite(),
            FamilyKind::Binomial => eta > 0.0 && eta < 1.0,
            FamilyKind::Poisson | FamilyKind::GammaScale => eta > 0.0 && eta.is_finite(),
        }
    }

    /// Per-unit cumulant function.
    pub fn psi(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match self.kind {
            FamilyKind::Normal => 0.5 * theta * theta,
            FamilyKind::Binomial => softplus(theta),
            FamilyKind::Poisson => theta.exp(),
            FamilyKind::GammaScale => -(-theta).ln(),
        })
    }

    /// `eta = psi'(theta)`. Infinite arguments map to the matching end of the
    /// mean range, so clipped fits at `theta = -inf` stay representable.
    pub fn mean_map(&self, theta: f64) -> Result<f64> {
        if theta.is_nan() || !self.natural_domain().contains_closed(theta) {
            return Err(self.domain_error(theta));
        }
        Ok(match self.kind {
            FamilyKind::Normal => theta,
            FamilyKind::Binomial => logistic(theta),
            FamilyKind::Poisson => theta.exp(),
            FamilyKind::GammaScale => {
                if theta == 0.0 {
                    return Err(self.domain_error(theta));
                }
                -1.0 / theta
            }
        })
    }

    /// `theta = (psi')^{-1}(eta)`, with the ends of the closed mean range
    /// mapped to signed infinities.
    pub fn mean_map_inv(&self, eta: f64) -> Result<f64> {
        if !self.eta_in_closure(eta) {
            return Err(self.domain_error(eta));
        }
        Ok(match self.kind {
            FamilyKind::Normal => eta,
            FamilyKind::Binomial => {
                if eta == 0.0 {
                    f64::NEG_INFINITY
                } else if eta == 1.0 {
                    f64::INFINITY
                } else {
                    (eta / (1.0 - eta)).ln()
                }
            }
            FamilyKind::Poisson => eta.ln(),
            FamilyKind::GammaScale => -1.0 / eta,
        })
    }

    /// Per-unit convex conjugate `psi*(u) = sup_theta (theta u - psi(theta))`,
    /// `+inf` outside the closed mean range.
    pub fn conjugate(&self, u: f64) -> f64 {
        match self.kind {
            FamilyKind::Normal => 0.5 * u * u,
            FamilyKind::Binomial => {
                if !(0.0..=1.0).contains(&u) {
                    f64::INFINITY
                } else {
                    xlogx(u) + xlogx(1.0 - u)
                }
            }
            FamilyKind::Poisson => {
                if u < 0.0 {
                    f64::INFINITY
                } else {
                    xlogx(u) - u
                }
            }
            FamilyKind::GammaScale => {
                if u <= 0.0 {
                    f64::INFINITY
                } else {
                    -1.0 - u.ln()
                }
            }
        }
    }

    /// Data value divided into the expectation scale: `x / w`, except for the
    /// normal family whose sufficient statistic already carries the weight.
    pub fn tilde(&self, x: f64, weight: f64) -> f64 {
        match self.kind {
            FamilyKind::Normal => x,
            _ => x / weight,
        }
    }

    /// Checks that `x` is a valid observation for the weight-scaled family.
    pub fn check_support(&self, x: f64, weight: f64) -> Result<()> {
        let ok = x.is_finite()
            && match self.kind {
                FamilyKind::Normal => true,
                FamilyKind::Binomial => {
                    is_integral(weight) && is_integral(x) && x >= 0.0 && x <= weight
                }
                // Non-integral rates are accepted through the lgamma extension.
                FamilyKind::Poisson => x >= 0.0,
                FamilyKind::GammaScale => x > 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::Support {
                family: self.name(),
                value: x,
                weight,
            })
        }
    }

    /// Full log-density of `x` for the weight-scaled family with expectation
    /// parameter `eta` (per unit of weight), including the base measure.
    pub fn log_density(&self, x: f64, eta: f64, weight: f64) -> Result<f64> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::NonpositiveWeight {
                index: 0,
                value: weight,
            });
        }
        self.check_support(x, weight)?;
        if !self.eta_in_closure(eta) {
            return Err(self.domain_error(eta));
        }
        Ok(match self.kind {
            FamilyKind::Normal => {
                let r = x - eta;
                0.5 * (weight / (2.0 * std::f64::consts::PI)).ln() - 0.5 * weight * r * r
            }
            FamilyKind::Binomial => {
                let n = weight;
                let log_coef = ln_factorial(n) - ln_factorial(x) - ln_factorial(n - x);
                log_coef + xlogy(x, eta) + xlogy(n - x, 1.0 - eta)
            }
            FamilyKind::Poisson => {
                let mean = weight * eta;
                xlogy(x, mean) - mean - ln_factorial(x)
            }
            FamilyKind::GammaScale => {
                let a = weight;
                (a - 1.0) * x.ln() - x / eta - a * eta.ln() - ln_gamma(a)
            }
        })
    }

    /// One draw from the weight-scaled family with expectation parameter `eta`.
    pub fn sample<R: Rng + ?Sized>(&self, eta: f64, weight: f64, rng: &mut R) -> Result<f64> {
        if !self.eta_in_open_range(eta) {
            return Err(self.domain_error(eta));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::NonpositiveWeight {
                index: 0,
                value: weight,
            });
        }
        let bad = || self.domain_error(eta);
        Ok(match self.kind {
            FamilyKind::Normal => {
                let z: f64 = StandardNormal.sample(rng);
                eta + z / weight.sqrt()
            }
            FamilyKind::Binomial => {
                if !is_integral(weight) {
                    return Err(Error::Support {
                        family: self.name(),
                        value: eta,
                        weight,
                    });
                }
                Binomial::new(weight.round() as u64, eta)
                    .map_err(|_| bad())?
                    .sample(rng) as f64
            }
            FamilyKind::Poisson => Poisson::new(weight * eta).map_err(|_| bad())?.sample(rng),
            FamilyKind::GammaScale => Gamma::new(weight, eta).map_err(|_| bad())?.sample(rng),
        })
    }
}

fn is_integral(v: f64) -> bool {
    v.is_finite() && (v - v.round()).abs() <= 1e-9 * (1.0 + v.abs())
}

/// `ln Gamma(x + 1)`, exact zero at `x = 0` and `x = 1`.
fn ln_factorial(x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        0.0
    } else {
        ln_gamma(x + 1.0)
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn xlogx(x: f64) -> f64 {
    xlogy(x, x)
}
