//! Optimality certificate for a candidate nearly isotonic fit.

use serde::{Deserialize, Serialize};

use crate::pava::{Direction, WeightedSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    /// Multipliers `xi_0..xi_n` in solve order (reversed for decreasing series).
    pub xi: Vec<f64>,
    pub valid: bool,
    pub max_violation: f64,
    pub tolerance: f64,
}

/// Rebuilds the hinge multipliers from the stationarity condition
/// `w_i (eta_i - x_i) + lambda (xi_i - xi_{i-1}) = 0` and measures how far
/// they are from a valid subgradient.
///
/// `series` holds the expectation-scale values `x / w` with their weights.
/// Because the mean map is increasing, the same check certifies the fit of
/// any family in natural coordinates.
pub fn kkt_check(series: &WeightedSeries, lambda: f64, eta_hat: &[f64]) -> KktCertificate {
    let (x, w) = series.oriented();
    let mut eta = eta_hat.to_vec();
    if series.direction() == Direction::Decreasing {
        eta.reverse();
    }
    let n = x.len();
    let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = 1e-8 * scale;
    let order_tol = 1e-9 * scale;

    // Without a penalty stationarity reduces to eta = x and any multiplier works.
    if lambda == 0.0 && eta.len() == n {
        let worst = x
            .iter()
            .zip(&eta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) });
        return KktCertificate {
            xi: vec![0.0; n + 1],
            valid: worst <= tolerance,
            max_violation: worst,
            tolerance,
        };
    }

    let mut xi = Vec::with_capacity(n + 1);
    xi.push(0.0);
    let mut acc = 0.0;
    for i in 0..n {
        acc -= w[i] * (eta[i] - x[i]) / lambda;
        xi.push(acc);
    }

    let mut worst = if eta.len() == n && lambda > 0.0 {
        xi[n].abs()
    } else {
        f64::INFINITY
    };
    for i in 1..n {
        let v = xi[i];
        worst = worst.max(-v).max(v - 1.0);
        if eta[i - 1] > eta[i] + order_tol {
            worst = worst.max((v - 1.0).abs());
        } else if eta[i - 1] < eta[i] - order_tol {
            worst = worst.max(v.abs());
        }
    }
    if worst.is_nan() {
        worst = f64::INFINITY;
    }
    KktCertificate {
        xi,
        valid: worst <= tolerance,
        max_violation: worst,
        tolerance,
    }
}
