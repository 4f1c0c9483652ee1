// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Dissipative semigroups: Hölder continuity in the generator and the
//! Fourier representation of averaged resolvents.

use serde::{Deserialize, Serialize};

use super::{Check, Corpus, VerifyError, Witness, DEFAULT_SLACK};
use crate::disorder::SingleSiteDensity;
use crate::quad::{adaptive, GaussLegendre};
use crate::rng::sample_rng;
use crate::spectral::{expm, imaginary_part, min_hermitian_eigenvalue, spectral_norm, SolverError, DISSIPATIVE_TOL};
use crate::{CMatrix, C64};

/// Times at which the Hölder inequality is tested.
pub const DEFAULT_T_GRID: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];

fn check_dissipative(a: &CMatrix) -> Result<f64, VerifyError> {
    if a.nrows() != a.ncols() {
        return Err(SolverError::NotSquare { rows: a.nrows(), cols: a.ncols() }.into());
    }
    let min = min_hermitian_eigenvalue(&imaginary_part(a))?;
    if min < -DISSIPATIVE_TOL {
        return Err(SolverError::NotDissipative { min_eigenvalue: min }.into());
    }
    Ok(min)
}

fn itexp(a: &CMatrix, t: f64) -> CMatrix {
    expm(&(a * C64::new(0.0, t)))
}

/// `2^{1-s} t^s δ^s`.
pub fn hoelder_bound(s: f64, t: f64, delta: f64) -> f64 {
    2f64.powf(1.0 - s) * t.powf(s) * delta.powf(s)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemigroupReport {
    pub passed: bool,
    pub pairs: usize,
    pub exponents: Vec<f64>,
    /// Largest `‖e^{itA} - e^{itB}‖ / bound` per exponent.
    pub max_ratio: Vec<f64>,
    pub violations: usize,
    pub checks: Vec<Check>,
    pub witness: Option<Witness>,
}

/// Tests `‖e^{itA} - e^{itB}‖ ≤ 2^{1-s} t^s ‖A - B‖^s` on dissipative pairs.
///
/// Even instances pair `A` with an independent `B`; odd instances use
/// `B = A + δC` with `δ` log-uniform in `[1e-6, 1]`.
pub fn verify_semigroup_hoelder(corpus: &Corpus, exponents: &[f64], t_grid: &[f64]) -> Result<SemigroupReport, VerifyError> {
    if exponents.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
        return Err(VerifyError::Invalid("exponents must lie in [0, 1]".into()));
    }
    if t_grid.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(VerifyError::Invalid("times must be finite and non-negative".into()));
    }
    let mut max_ratio = vec![0.0f64; exponents.len()];
    let mut violations = 0;
    let mut worst: Option<(f64, Witness)> = None;
    for inst in corpus.instances() {
        let b = if inst.index % 2 == 0 {
            inst.b.clone()
        } else {
            let u: f64 = rand::Rng::random(&mut sample_rng(corpus.seed ^ 0xde17a, inst.index as u64));
            inst.perturbed(10f64.powf(-6.0 * u))
        };
        check_dissipative(&inst.a)?;
        check_dissipative(&b)?;
        let delta = spectral_norm(&(&inst.a - &b));
        for &t in t_grid {
            let lhs = spectral_norm(&(itexp(&inst.a, t) - itexp(&b, t)));
            for (k, &s) in exponents.iter().enumerate() {
                let bound = hoelder_bound(s, t, delta);
                if lhs > bound + DEFAULT_SLACK {
                    violations += 1;
                }
                let ratio = if bound > 0.0 { lhs / bound } else { 0.0 };
                max_ratio[k] = max_ratio[k].max(ratio);
                if worst.as_ref().is_none_or(|w| ratio > w.0) {
                    let wit = Witness::new(inst.index)
                        .param("ratio", ratio)
                        .param("s", s)
                        .param("t", t)
                        .param("norm_diff", delta)
                        .matrix("A", &inst.a)
                        .matrix("B", &b);
                    worst = Some((ratio, wit));
                }
            }
        }
    }
    let checks = vec![Check::at_most("violations", violations as f64, 0.0)];
    Ok(SemigroupReport {
        passed: violations == 0,
        pairs: corpus.count,
        exponents: exponents.to_vec(),
        max_ratio,
        violations,
        checks,
        witness: worst.map(|w| w.1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityConfig {
    /// Truncation of the time integral.
    pub t_max: f64,
    /// Stop once the a-priori bound `e^{-t min Im A}` falls below this.
    pub early_stop: f64,
    pub tolerance: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self { t_max: 1e3, early_stop: 1e-18, tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityReport {
    pub passed: bool,
    pub instances: usize,
    pub max_discrepancy: f64,
    /// `(T_max, discrepancy)` for instance 0 as the truncation doubles.
    pub doubling: Vec<(f64, f64)>,
    pub checks: Vec<Check>,
    pub witness: Option<Witness>,
}

/// `ĝ(t) = ∫ ρ(λ - 1) e^{itλ} dλ`.
fn g_hat(rho: &SingleSiteDensity, t: f64) -> C64 {
    let panels = (t.abs() / 8.0).ceil() as usize + 1;
    let rule = GaussLegendre::new(16);
    let inner: C64 = rule
        .composite(0.0, 1.0, panels)
        .into_iter()
        .map(|(x, w)| C64::from_polar(w * rho.value(x), t * x))
        .sum();
    C64::from_polar(1.0, t) * inner
}

/// `(∫ g(λ)(A + λ)^{-1} dλ, -i ∫_0^T e^{itA} ĝ(t) dt)` for `g = ρ(· - 1)`.
///
/// `T` is `t_max`, shortened to where `e^{-T min Im A}` drops below
/// `early_stop`.
pub fn resolvent_semigroup_sides(
    a: &CMatrix,
    rho: &SingleSiteDensity,
    t_max: f64,
    early_stop: f64,
) -> Result<(CMatrix, CMatrix), VerifyError> {
    let floor = check_dissipative(a)?;
    let n = a.nrows();
    let id = CMatrix::identity(n, n);
    let lhs = adaptive(
        |lam| {
            let w = rho.value(lam - 1.0);
            if w == 0.0 {
                return CMatrix::zeros(n, n);
            }
            (a + &id * C64::new(lam, 0.0))
                .try_inverse()
                .map(|m| m * C64::new(w, 0.0))
                .unwrap_or_else(|| CMatrix::from_element(n, n, C64::new(f64::NAN, 0.0)))
        },
        1.0,
        2.0,
        &[1.5],
        1e-14,
        1e-13,
    )
    .value;
    if lhs.iter().any(|v| !v.is_finite()) {
        return Err(VerifyError::Invalid("A + λ is singular on the support".into()));
    }
    let horizon = if floor > 0.0 { (-early_stop.ln() / floor).min(t_max) } else { t_max };
    let panels = horizon.ceil().max(1.0) as usize;
    let rule = GaussLegendre::new(16);
    let mut rhs = CMatrix::zeros(n, n);
    for (t, w) in rule.composite(0.0, horizon, panels) {
        rhs += itexp(a, t) * (g_hat(rho, t) * w);
    }
    Ok((lhs, rhs * C64::new(0.0, -1.0)))
}

/// Checks the Fourier representation of `∫ g(λ)(A + λ)^{-1} dλ` on a
/// dissipative corpus, plus monotone convergence in `T_max` on instance 0.
pub fn verify_resolvent_semigroup_identity(
    corpus: &Corpus,
    rho: &SingleSiteDensity,
    cfg: &IdentityConfig,
) -> Result<IdentityReport, VerifyError> {
    if !(cfg.t_max > 0.0 && cfg.early_stop > 0.0) {
        return Err(VerifyError::Invalid("t_max and early_stop must be positive".into()));
    }
    let mut max_discrepancy = 0.0f64;
    let mut worst: Option<Witness> = None;
    for inst in corpus.instances() {
        let (l, r) = resolvent_semigroup_sides(&inst.a, rho, cfg.t_max, cfg.early_stop)?;
        let d = spectral_norm(&(l - r));
        if worst.is_none() || d > max_discrepancy {
            worst = Some(Witness::new(inst.index).param("discrepancy", d).matrix("A", &inst.a));
        }
        max_discrepancy = max_discrepancy.max(d);
    }
    let mut doubling = Vec::new();
    if corpus.count > 0 {
        let a = corpus.instance(0).a;
        let mut t = cfg.t_max / 8.0;
        while t <= cfg.t_max * (1.0 + 1e-12) {
            let (l, r) = resolvent_semigroup_sides(&a, rho, t, cfg.early_stop)?;
            doubling.push((t, spectral_norm(&(l - r))));
            t *= 2.0;
        }
    }
    let rises = doubling.windows(2).map(|w| w[1].1 - w[0].1).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("max discrepancy", max_discrepancy, cfg.tolerance),
        Check::at_most("largest increase as T_max doubles", rises, 1e-12),
    ];
    Ok(IdentityReport {
        passed: checks.iter().all(|c| c.passed),
        instances: corpus.count,
        max_discrepancy,
        doubling,
        checks,
        witness: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho() -> SingleSiteDensity {
        SingleSiteDensity::new(3).unwrap()
    }

    #[test]
    fn hoelder_on_small_corpus() {
        let c = Corpus::dissipative(4, 1, 5, 60, 0.0);
        let r = verify_semigroup_hoelder(&c, &[0.0, 0.5, 1.0], &DEFAULT_T_GRID).unwrap();
        assert!(r.passed);
        assert!(r.max_ratio.iter().all(|&m| m <= 1.0 + 1e-9));
        assert!(r.witness.is_some());
    }

    #[test]
    fn scalar_semigroup_is_explicit() {
        // e^{it(x+iy)} - e^{it(x'+iy)} for scalars, against the bound
        let a = CMatrix::from_element(1, 1, C64::new(0.3, 0.2));
        let b = CMatrix::from_element(1, 1, C64::new(-0.1, 0.2));
        let t = 2.0;
        let got = spectral_norm(&(itexp(&a, t) - itexp(&b, t)));
        let want = ((C64::i() * t * a[(0, 0)]).exp() - (C64::i() * t * b[(0, 0)]).exp()).norm();
        assert!((got - want).abs() < 1e-14);
        assert!(got <= hoelder_bound(0.5, t, 0.4));
    }

    #[test]
    fn non_dissipative_input_is_rejected() {
        let a = CMatrix::from_element(1, 1, C64::new(0.0, -0.1));
        assert!(matches!(
            resolvent_semigroup_sides(&a, &rho(), 10.0, 1e-18),
            Err(VerifyError::Solver(SolverError::NotDissipative { .. }))
        ));
    }

    #[test]
    fn scalar_identity_matches_direct_integral() {
        let eta = 0.4;
        let a = CMatrix::from_element(1, 1, C64::new(0.0, eta));
        let (l, r) = resolvent_semigroup_sides(&a, &rho(), 1e3, 1e-18).unwrap();
        // independent oracle: fine fixed rule for ∫ ρ(x)/(1 + x + iη) dx
        let oracle: C64 = GaussLegendre::new(200)
            .on(0.0, 1.0)
            .into_iter()
            .map(|(x, w)| C64::new(w * rho().value(x), 0.0) / C64::new(1.0 + x, eta))
            .sum();
        assert!((l[(0, 0)] - oracle).norm() < 1e-12);
        assert!((r[(0, 0)] - oracle).norm() < 1e-8, "{}", (r[(0, 0)] - oracle).norm());
    }

    #[test]
    fn fourier_transform_of_bump() {
        let r = rho();
        assert!((g_hat(&r, 0.0) - C64::new(1.0, 0.0)).norm() < 1e-14);
        // |ĝ| ≤ ‖g‖₁ = 1 and decays
        assert!(g_hat(&r, 50.0).norm() < g_hat(&r, 5.0).norm());
    }

    #[test]
    fn identity_on_small_corpus() {
        let c = Corpus::dissipative(8, 2, 4, 4, 0.5);
        let r = verify_resolvent_semigroup_identity(&c, &rho(), &IdentityConfig::default()).unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.doubling.len(), 4);
    }
}
