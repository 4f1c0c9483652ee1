// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Spectral averaging along a one-parameter family `A + tB`.
//!
//! `F(E + iε) = ∫ Im⟨φ, (A + tB - E - iε)^{-1} φ⟩ ρ(t) dt` stays bounded as
//! `ε → 0` when `φ ∈ Ran B`.

use serde::{Deserialize, Serialize};

use super::{linspace, Check, VerifyError};
use crate::disorder::SingleSiteDensity;
use crate::quad::adaptive;
use crate::spectral::dense_hermitian_eigen;
use crate::{CMatrix, C64};

/// Initial panels of the adaptive `t` integral; they keep narrow peaks from
/// slipping between nodes.
const INITIAL_PANELS: usize = 64;

/// `[-0.5, 1.5]` in steps of `0.01`.
pub fn default_energy_grid() -> Vec<f64> {
    linspace(-0.5, 1.5, 201)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralAveragingReport {
    pub passed: bool,
    pub epsilons: Vec<f64>,
    /// `sup_E F(E + iε)` per `ε`.
    pub sups: Vec<f64>,
    /// Energy attaining each supremum.
    pub argmax: Vec<f64>,
    /// `|sup_{ε_last} / sup_{ε_first} - 1|`.
    pub stability_drift: f64,
    /// Closed-form limit of the supremum for `1 × 1` input.
    pub scalar_limit: Option<f64>,
    pub checks: Vec<Check>,
}

/// Residual of the least-squares solve `Bx = φ`, relative to `‖φ‖`.
fn range_residual(b: &CMatrix, phi: &[C64]) -> Result<f64, VerifyError> {
    let norm: f64 = phi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let spec = dense_hermitian_eigen(b.clone())?;
    let cut = 1e-12 * spec.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut outside = 0.0;
    for (k, &lam) in spec.values.iter().enumerate() {
        if lam.abs() <= cut {
            let c: C64 = (0..phi.len()).map(|i| spec.vectors[(i, k)].conj() * phi[i]).sum();
            outside += c.norm_sqr();
        }
    }
    Ok(outside.sqrt() / norm)
}

/// `F(E + iε)` by adaptive quadrature over the support of `ρ`.
pub fn averaged_im_resolvent(
    a: &CMatrix,
    b: &CMatrix,
    phi: &[C64],
    rho: &SingleSiteDensity,
    energy: f64,
    eps: f64,
) -> f64 {
    let n = a.nrows();
    let z = C64::new(energy, eps);
    let rhs = nalgebra::DVector::from_column_slice(phi);
    let f = |t: f64| {
        let w = rho.value(t);
        if w == 0.0 {
            return 0.0;
        }
        let m = a + b * C64::new(t, 0.0) - CMatrix::identity(n, n) * z;
        match m.lu().solve(&rhs) {
            Some(x) => w * rhs.dotc(&x).im,
            None => f64::NAN,
        }
    };
    let breaks: Vec<f64> = (1..INITIAL_PANELS).map(|k| k as f64 / INITIAL_PANELS as f64).collect();
    adaptive(f, 0.0, 1.0, &breaks, 1e-11, 1e-10).value
}

/// Suprema of `F` over `energies` for each `ε`.
///
/// Checks: `φ ∈ Ran B`, every supremum is finite, successive changes of the
/// supremum do not grow as `ε` shrinks, and for `1 × 1` input the supremum at
/// the smallest `ε` is within 1% of `π |φ|² ‖ρ‖_∞ / |B|`.
pub fn verify_spectral_averaging(
    a: &CMatrix,
    b: &CMatrix,
    phi: &[C64],
    rho: &SingleSiteDensity,
    energies: &[f64],
    epsilons: &[f64],
) -> Result<SpectralAveragingReport, VerifyError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n || phi.len() != n {
        return Err(VerifyError::Invalid("A, B and φ must have matching dimensions".into()));
    }
    if (a - a.adjoint()).iter().any(|v| v.norm() > 1e-12) || (b - b.adjoint()).iter().any(|v| v.norm() > 1e-12) {
        return Err(VerifyError::Invalid("A and B must be Hermitian".into()));
    }
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) || energies.is_empty() {
        return Err(VerifyError::Invalid("need positive ε values and a non-empty energy grid".into()));
    }
    let residual = range_residual(b, phi)?;
    if residual > 1e-8 {
        return Err(VerifyError::NotInRange(residual));
    }

    let mut sups = Vec::with_capacity(epsilons.len());
    let mut argmax = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let (mut best, mut at) = (f64::NEG_INFINITY, energies[0]);
        for &e in energies {
            let v = averaged_im_resolvent(a, b, phi, rho, e, eps);
            if v.is_nan() || v > best {
                best = v;
                at = e;
            }
            if v.is_nan() {
                break;
            }
        }
        sups.push(best);
        argmax.push(at);
    }

    let rho_max = rho.sup_norm(0)?;
    let scalar_limit = (n == 1 && b[(0, 0)].re != 0.0)
        .then(|| std::f64::consts::PI * phi[0].norm_sqr() * rho_max / b[(0, 0)].re.abs());
    let finite = sups.iter().all(|s| s.is_finite());
    let changes: Vec<f64> = sups.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let growth = changes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let last = *sups.last().expect("non-empty");
    let stability_drift = if sups[0] != 0.0 { (last / sups[0] - 1.0).abs() } else { (last - sups[0]).abs() };

    let mut checks = vec![
        Check::at_most("non-finite suprema", if finite { 0.0 } else { 1.0 }, 0.0),
        Check::at_most("growth of successive supremum changes", growth, 1e-9),
    ];
    if let Some(limit) = scalar_limit {
        let rel = if limit > 0.0 { (last / limit - 1.0).abs() } else { last.abs() };
        checks.push(Check::at_most("relative gap to the scalar limit", rel, 0.01));
    }
    Ok(SpectralAveragingReport {
        passed: checks.iter().all(|c| c.passed),
        epsilons: epsilons.to_vec(),
        sups,
        argmax,
        stability_drift,
        scalar_limit,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, C64::new(v, 0.0))
    }

    #[test]
    fn scalar_case_approaches_the_density() {
        let rho = SingleSiteDensity::new(3).unwrap();
        let r = verify_spectral_averaging(
            &scalar(0.0),
            &scalar(1.0),
            &[C64::new(1.0, 0.0)],
            &rho,
            &default_energy_grid(),
            &[0.1, 0.01, 0.001],
        )
        .unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.argmax[2], 0.5);
        assert!(r.sups[0] < r.sups[1] && r.sups[1] < r.sups[2]);
        assert!(r.sups[2] <= PI * rho.value(0.5) + 1e-9);
    }

    #[test]
    fn poisson_convolution_oracle() {
        // F(E + iε) = ∫ ρ(t) ε / ((t - E)^2 + ε^2) dt, by a fine fixed rule
        let rho = SingleSiteDensity::new(2).unwrap();
        let (e, eps) = (0.3, 0.05);
        let got = averaged_im_resolvent(&scalar(0.0), &scalar(1.0), &[C64::new(1.0, 0.0)], &rho, e, eps);
        let oracle: f64 = crate::quad::GaussLegendre::new(40)
            .composite(0.0, 1.0, 50)
            .into_iter()
            .map(|(t, w)| w * rho.value(t) * eps / ((t - e).powi(2) + eps * eps))
            .sum();
        assert!((got - oracle).abs() < 1e-9, "{got} {oracle}");
    }

    #[test]
    fn zero_coupling_forces_zero_vector() {
        let rho = SingleSiteDensity::new(3).unwrap();
        let a = scalar(0.2);
        assert!(matches!(
            verify_spectral_averaging(&a, &scalar(0.0), &[C64::new(1.0, 0.0)], &rho, &[0.0], &[0.1]),
            Err(VerifyError::NotInRange(_))
        ));
        let r = verify_spectral_averaging(&a, &scalar(0.0), &[C64::new(0.0, 0.0)], &rho, &[0.0, 0.5], &[0.1, 0.01])
            .unwrap();
        assert!(r.sups.iter().all(|&s| s == 0.0));
        assert!(r.scalar_limit.is_none());
    }

    #[test]
    fn vector_outside_range_is_rejected() {
        let rho = SingleSiteDensity::new(3).unwrap();
        let mut b = CMatrix::zeros(2, 2);
        b[(0, 0)] = C64::new(1.0, 0.0);
        let a = CMatrix::zeros(2, 2);
        let phi = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(
            verify_spectral_averaging(&a, &b, &phi, &rho, &[0.5], &[0.1]),
            Err(VerifyError::NotInRange(r)) if (r - 1.0).abs() < 1e-12
        ));
    }
}
