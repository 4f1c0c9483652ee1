// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Boundary values of the Borel transform of a bump and its derivatives.
//!
//! With `F(z) = ∫ ρ(t) / (t - z) dt` and `z = E + iε`,
//! `∂_E^j Im F = j! Im ∫ ρ(t) (t - z)^{-j-1} dt = π (P_ε * ρ^(j))(E)`,
//! where `P_ε` is the Poisson kernel. The suprema over `E` are bounded by
//! `π ‖ρ^(j)‖_∞` uniformly in `ε`, and `Im F / π → ρ` as `ε → 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{linspace, Check, VerifyError, DEFAULT_SLACK};
use crate::disorder::SingleSiteDensity;
use crate::quad::adaptive;
use crate::C64;

/// Relative accuracy expected from the two sides of the derivative
/// identity, measured against `j! ‖ρ‖_∞ ε^{-j}` (the size of the terms that
/// cancel in the direct form).
const IDENTITY_TOL: f64 = 1e-9;

/// Interior energies `[0.05, 0.95]`.
pub fn default_energy_grid() -> Vec<f64> {
    linspace(0.05, 0.95, 19)
}

/// Energies outside the support used for the decay check.
const OFF_SUPPORT: [f64; 4] = [-0.5, -0.2, 1.2, 1.5];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivativeRow {
    pub order: usize,
    pub epsilon: f64,
    /// `sup_E |∂_E^j Im F| = π sup_E |P_ε * ρ^(j)|`.
    pub sup: f64,
    /// `π ‖ρ^(j)‖_∞`.
    pub bound: f64,
    /// Ratio of `sup` to its value at the first `ε`; informational.
    pub ratio_to_first: f64,
    /// Largest scaled mismatch between the direct and convolution forms.
    pub identity_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub passed: bool,
    pub rows: Vec<DerivativeRow>,
    /// `max_E |Im F / π - ρ|` per `ε`.
    pub convergence_errors: Vec<f64>,
    /// Observed order between the last two `ε`.
    pub convergence_order: f64,
    pub checks: Vec<Check>,
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|k| k as f64).product()
}

/// `∂_E^j Im F(E + iε)` from the direct form.
pub fn direct_derivative(rho: &SingleSiteDensity, j: usize, energy: f64, eps: f64) -> f64 {
    let z = C64::new(energy, eps);
    let f = |t: f64| {
        let w = rho.value(t);
        (C64::new(w, 0.0) / (C64::new(t, 0.0) - z).powi(j as i32 + 1)).im
    };
    factorial(j) * adaptive(f, 0.0, 1.0, &peak_breaks(energy, eps), 1e-15, 1e-13).value
}

/// `π (P_ε * ρ^(j))(E)`.
pub fn poisson_derivative(rho: &SingleSiteDensity, j: usize, energy: f64, eps: f64) -> Result<f64, VerifyError> {
    rho.eval(j, 0.5)?;
    let f = |t: f64| rho.eval_unchecked(j, t) * eps / ((t - energy).powi(2) + eps * eps);
    Ok(adaptive(f, 0.0, 1.0, &peak_breaks(energy, eps), 1e-14, 1e-13).value)
}

fn peak_breaks(energy: f64, eps: f64) -> Vec<f64> {
    [-10.0, -1.0, 0.0, 1.0, 10.0].iter().map(|k| energy + k * eps).collect()
}

pub fn verify_boundary_derivatives(
    rho: &SingleSiteDensity,
    epsilons: &[f64],
    energies: &[f64],
) -> Result<BoundaryReport, VerifyError> {
    if epsilons.len() < 2 || epsilons.iter().any(|&e| !(e > 0.0)) || energies.is_empty() {
        return Err(VerifyError::Invalid("need at least two positive ε and one energy".into()));
    }
    let m = rho.smoothness();
    let rho_max = rho.sup_norm(0)?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for j in 0..=m {
        let bound = PI * rho.sup_norm(j)?;
        let mut first = None;
        for &eps in epsilons {
            let mut sup = 0.0f64;
            let mut err = 0.0f64;
            let scale = factorial(j) * rho_max * eps.powi(-(j as i32)).max(1.0);
            for &e in energies {
                let conv = poisson_derivative(rho, j, e, eps)?;
                let direct = direct_derivative(rho, j, e, eps);
                sup = sup.max(conv.abs());
                err = err.max((conv - direct).abs() / scale);
            }
            let first = *first.get_or_insert(sup);
            checks.push(Check::at_most(format!("derivative identity j={j} eps={eps}"), err, IDENTITY_TOL));
            checks.push(Check::at_most(format!("sup bound j={j} eps={eps}"), sup, bound + DEFAULT_SLACK));
            rows.push(DerivativeRow {
                order: j,
                epsilon: eps,
                sup,
                bound,
                ratio_to_first: if first > 0.0 { sup / first } else { 1.0 },
                identity_error: err,
            });
        }
    }

    let convergence_errors: Vec<f64> = epsilons
        .iter()
        .map(|&eps| {
            energies
                .iter()
                .map(|&e| (direct_derivative(rho, 0, e, eps) / PI - rho.value(e)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let k = epsilons.len();
    let convergence_order = (convergence_errors[k - 2] / convergence_errors[k - 1]).ln()
        / (epsilons[k - 2] / epsilons[k - 1]).ln();
    checks.push(Check::at_least("observed order of Im F / π → ρ", convergence_order, 0.8));

    for &eps in epsilons {
        let worst = OFF_SUPPORT
            .iter()
            .map(|&e| {
                let dist = if e < 0.0 { -e } else { e - 1.0 };
                direct_derivative(rho, 0, e, eps) * dist * dist / eps
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most(format!("off-support Im F · dist² / ε, eps={eps}"), worst, 1.0 + DEFAULT_SLACK));
    }

    Ok(BoundaryReport {
        passed: checks.iter().all(|c| c.passed),
        rows,
        convergence_errors,
        convergence_order,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_for_cubic_bump() {
        let rho = SingleSiteDensity::new(3).unwrap();
        let r = verify_boundary_derivatives(&rho, &[0.1, 0.01, 0.001], &default_energy_grid()).unwrap();
        assert!(r.passed, "{:#?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        assert_eq!(r.rows.len(), 3 * 3);
        assert!(r.convergence_order > 0.8);
    }

    #[test]
    fn zeroth_order_against_closed_form() {
        // p = 1: ρ = 6t(1 - t); Im ∫ ρ/(t - z) dt in closed form via log/atan
        let rho = SingleSiteDensity::new(1).unwrap();
        let (e, eps) = (0.3, 0.02);
        let atan = |t: f64| ((t - e) / eps).atan();
        // moments ∫ t^k ε/((t-e)^2+ε^2) dt for k = 1, 2, with u = t - e
        let u0 = atan(1.0) - atan(0.0);
        let l = |t: f64| ((t - e).powi(2) + eps * eps).ln();
        let i1 = 0.5 * eps * (l(1.0) - l(0.0)) + e * u0;
        let i2 = eps * (1.0 - eps * u0) + e * eps * (l(1.0) - l(0.0)) + e * e * u0;
        let closed = 6.0 * (i1 - i2);
        let got = direct_derivative(&rho, 0, e, eps);
        assert!((got - closed).abs() < 1e-11, "{got} {closed}");
    }

    #[test]
    fn orders_above_p_are_rejected() {
        let rho = SingleSiteDensity::new(2).unwrap();
        assert!(poisson_derivative(&rho, 3, 0.5, 0.1).is_err());
    }
}
