// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Smoothness of `h(E) = E tr(A^ω - E - iε)^{-1}` for finitely many random
//! couplings `A^ω = A + Σ ω_n T_n` with `Σ T_n = I`.
//!
//! Because the `T_n` cover, `A^ω - E = A + Σ (ω_n - E) T_n`, so `h` is a
//! convolution with the product density `Φ` and
//! `h^(ℓ)(E) = ∫ f(A^ω - E) (D^ℓ Φ)(ω) dω` with `D = Σ_n ∂_n`. Both `h` and
//! the right-hand side are evaluated by tensor Gauss–Legendre quadrature
//! over `(0, 1)^N`; finite differences of the first are compared with the
//! second.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linspace, Check, VerifyError};
use crate::disorder::SingleSiteDensity;
use crate::quad::GaussLegendre;
use crate::spectral::dense_hermitian_eigen;
use crate::{CMatrix, C64};

/// Largest number of random couplings accepted.
pub const MAX_COUPLINGS: usize = 5;

/// Coordinate blocks `T_n`; must partition `0..dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub blocks: Vec<Vec<usize>>,
}

impl Covering {
    /// One coupling per coordinate.
    pub fn coordinates(dim: usize) -> Self {
        Self { blocks: (0..dim).map(|i| vec![i]).collect() }
    }

    pub fn new(blocks: Vec<Vec<usize>>) -> Self {
        Self { blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Rejects anything but a partition of `0..dim`.
    pub fn validate(&self, dim: usize) -> Result<(), VerifyError> {
        let mut seen = vec![0usize; dim];
        for b in &self.blocks {
            for &i in b {
                if i >= dim {
                    return Err(VerifyError::NotCovering(format!("coordinate {i} outside 0..{dim}")));
                }
                seen[i] += 1;
            }
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(VerifyError::NotCovering(format!("coordinate {i} covered {} times", seen[i])));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub eta: f64,
    pub ell: usize,
    pub energies: Vec<f64>,
    /// Gauss points per panel and panels per coordinate for the main rule.
    pub rule_points: usize,
    pub panels: usize,
    pub fd_step: f64,
    /// Bound on the maximum relative error.
    pub tolerance: f64,
    /// Panel counts (2-point rule) for the refinement study.
    pub refinement_panels: Vec<usize>,
    /// Relative error below which refinement is not required to improve.
    pub refinement_floor: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            ell: 1,
            energies: linspace(-2.0, 3.0, 11),
            rule_points: 6,
            panels: 4,
            fd_step: 1e-3,
            tolerance: 5e-3,
            refinement_panels: vec![1, 2, 4],
            refinement_floor: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub passed: bool,
    pub ell: usize,
    pub eta: f64,
    pub energies: Vec<f64>,
    /// Finite differences of the quadrature oracle for `h`.
    pub finite_difference: Vec<C64>,
    /// The convolution form `∫ f · D^ℓ Φ`.
    pub convolution_form: Vec<C64>,
    pub max_relative_error: f64,
    /// `(nodes per coordinate, max relative error)` for coarse rules.
    pub refinement: Vec<(usize, f64)>,
    pub checks: Vec<Check>,
}

/// Offsets (in steps) and weights of the central difference for `h^(ℓ)`.
fn stencil(ell: usize) -> Vec<(f64, f64)> {
    let binom = |n: usize, k: usize| (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64);
    (0..=ell)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (ell as f64 / 2.0 - k as f64, sign * binom(ell, k))
        })
        .collect()
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .rev()
        .flat_map(|a| {
            compositions(total - a, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, a);
                rest
            })
        })
        .collect()
}

struct Evaluated {
    /// `h` at every stencil energy.
    h: Vec<C64>,
    conv: Vec<C64>,
}

/// Tensor quadrature of `h` at `stencil_energies` and of the convolution
/// form at `energies`.
fn evaluate(
    a: &CMatrix,
    covering: &Covering,
    rho: &SingleSiteDensity,
    eta: f64,
    ell: usize,
    energies: &[f64],
    stencil_energies: &[f64],
    nodes: &[(f64, f64)],
) -> Result<Evaluated, VerifyError> {
    let n_cpl = covering.len();
    let k = nodes.len();
    let total = k.pow(n_cpl as u32);
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let multi: Vec<(Vec<usize>, f64)> = compositions(ell, n_cpl)
        .into_iter()
        .map(|al| {
            let c = fact(ell) / al.iter().map(|&x| fact(x)).product::<f64>();
            (al, c)
        })
        .collect();
    // derivative tables at the nodes
    let table: Vec<Vec<f64>> = (0..=ell)
        .map(|j| nodes.iter().map(|&(x, _)| rho.eval(j, x)).collect::<Result<Vec<f64>, _>>())
        .collect::<Result<_, _>>()?;

    let chunk = |outer: usize| -> Result<(Vec<C64>, Vec<C64>), VerifyError> {
        let mut h = vec![C64::new(0.0, 0.0); stencil_energies.len()];
        let mut conv = vec![C64::new(0.0, 0.0); energies.len()];
        let inner_total = total / k;
        let mut idx = vec![0usize; n_cpl];
        for inner in 0..inner_total {
            idx[0] = outer;
            let mut r = inner;
            for slot in idx.iter_mut().skip(1) {
                *slot = r % k;
                r /= k;
            }
            let mut m = a.clone();
            let mut w = 1.0;
            let mut phi = 1.0;
            for (n, &i) in idx.iter().enumerate() {
                let (x, wx) = nodes[i];
                w *= wx;
                phi *= table[0][i];
                for &c in &covering.blocks[n] {
                    m[(c, c)] += C64::new(x, 0.0);
                }
            }
            let dphi: f64 = multi
                .iter()
                .map(|(al, c)| c * al.iter().zip(&idx).map(|(&j, &i)| table[j][i]).product::<f64>())
                .sum();
            let spec = dense_hermitian_eigen(m)?;
            let tr = |e: f64| -> C64 {
                let z = C64::new(e, eta);
                spec.values.iter().map(|&l| (C64::new(l, 0.0) - z).inv()).sum()
            };
            for (acc, &e) in h.iter_mut().zip(stencil_energies) {
                *acc += tr(e) * (w * phi);
            }
            for (acc, &e) in conv.iter_mut().zip(energies) {
                *acc += tr(e) * (w * dphi);
            }
        }
        Ok((h, conv))
    };
    let parts = (0..k).into_par_iter().map(chunk).collect::<Result<Vec<_>, _>>()?;
    let mut h = vec![C64::new(0.0, 0.0); stencil_energies.len()];
    let mut conv = vec![C64::new(0.0, 0.0); energies.len()];
    for (ph, pc) in parts {
        for (a, b) in h.iter_mut().zip(ph) {
            *a += b;
        }
        for (a, b) in conv.iter_mut().zip(pc) {
            *a += b;
        }
    }
    Ok(Evaluated { h, conv })
}

/// Finite differences of `h` and the convolution form on one rule; returns
/// `(fd, conv, max relative error)`.
fn compare(
    a: &CMatrix,
    covering: &Covering,
    rho: &SingleSiteDensity,
    cfg: &SmoothingConfig,
    nodes: &[(f64, f64)],
) -> Result<(Vec<C64>, Vec<C64>, f64), VerifyError> {
    let st = stencil(cfg.ell);
    let stencil_energies: Vec<f64> = cfg
        .energies
        .iter()
        .flat_map(|&e| st.iter().map(move |&(o, _)| e + o * cfg.fd_step))
        .collect();
    let ev = evaluate(a, covering, rho, cfg.eta, cfg.ell, &cfg.energies, &stencil_energies, nodes)?;
    let scale = cfg.fd_step.powi(cfg.ell as i32);
    let fd: Vec<C64> = ev
        .h
        .chunks(st.len())
        .map(|vals| vals.iter().zip(&st).map(|(v, &(_, w))| v * w).sum::<C64>() / scale)
        .collect();
    let max_diff = fd.iter().zip(&ev.conv).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let max_ref = ev.conv.iter().map(|b| b.norm()).fold(0.0, f64::max);
    let rel = if max_ref > 0.0 { max_diff / max_ref } else { max_diff };
    Ok((fd, ev.conv, rel))
}

/// Compares `d^ℓ/dE^ℓ h` (finite differences of a tensor-quadrature oracle)
/// with the convolution form `∫ f(A^ω - E) D^ℓΦ(ω) dω` on `cfg.energies`.
pub fn verify_finite_smooth(
    a: &CMatrix,
    covering: &Covering,
    rho: &SingleSiteDensity,
    cfg: &SmoothingConfig,
) -> Result<SmoothingReport, VerifyError> {
    let dim = a.nrows();
    if a.ncols() != dim {
        return Err(VerifyError::Invalid("A must be square".into()));
    }
    if (a - a.adjoint()).iter().any(|v| v.norm() > 1e-12) {
        return Err(VerifyError::Invalid("A must be Hermitian".into()));
    }
    covering.validate(dim)?;
    if covering.is_empty() || covering.len() > MAX_COUPLINGS {
        return Err(VerifyError::Invalid(format!("need 1..={MAX_COUPLINGS} couplings, got {}", covering.len())));
    }
    if cfg.ell > rho.smoothness() {
        return Err(VerifyError::Invalid(format!(
            "derivative order {} exceeds smoothness {}",
            cfg.ell,
            rho.smoothness()
        )));
    }
    if !(cfg.eta > 0.0) || cfg.energies.is_empty() {
        return Err(VerifyError::Invalid("need eta > 0 and a non-empty energy grid".into()));
    }
    let main = GaussLegendre::new(cfg.rule_points).composite(0.0, 1.0, cfg.panels);
    let (fd, conv, rel) = if cfg.ell == 0 {
        let ev = evaluate(a, covering, rho, cfg.eta, 0, &cfg.energies, &cfg.energies, &main)?;
        let d = ev.h.iter().zip(&ev.conv).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        let r = ev.conv.iter().map(|y| y.norm()).fold(0.0, f64::max);
        (ev.h, ev.conv, if r > 0.0 { d / r } else { d })
    } else {
        compare(a, covering, rho, cfg, &main)?
    };

    let mut checks = vec![Check::at_most("max relative error", rel, cfg.tolerance)];
    let mut refinement = Vec::new();
    if cfg.ell > 0 {
        let two = GaussLegendre::new(2);
        for &p in &cfg.refinement_panels {
            let (_, _, e) = compare(a, covering, rho, cfg, &two.composite(0.0, 1.0, p))?;
            refinement.push((2 * p, e));
        }
        for w in refinement.windows(2) {
            let (coarse, fine) = (w[0].1, w[1].1);
            let ok = coarse <= cfg.refinement_floor || fine <= coarse / 2.0;
            checks.push(Check {
                name: format!("refinement {} -> {} nodes halves the error", w[0].0, w[1].0),
                observed: fine,
                bound: if coarse <= cfg.refinement_floor { f64::INFINITY } else { coarse / 2.0 },
                passed: ok,
            });
        }
    }
    Ok(SmoothingReport {
        passed: checks.iter().all(|c| c.passed),
        ell: cfg.ell,
        eta: cfg.eta,
        energies: cfg.energies.clone(),
        finite_difference: fd,
        convolution_form: conv,
        max_relative_error: rel,
        refinement,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Corpus;

    #[test]
    fn order_zero_forms_coincide() {
        let a = Corpus::hermitian(1, 3, 3, 1).instance(0).a;
        let rho = SingleSiteDensity::new(2).unwrap();
        let cfg = SmoothingConfig { ell: 0, ..SmoothingConfig::default() };
        let r = verify_finite_smooth(&a, &Covering::coordinates(3), &rho, &cfg).unwrap();
        assert!(r.max_relative_error <= 1e-12, "{}", r.max_relative_error);
        assert!(r.passed);
    }

    #[test]
    fn scalar_case_matches_one_dimensional_quadrature() {
        let a = CMatrix::zeros(1, 1);
        let rho = SingleSiteDensity::new(3).unwrap();
        let cfg = SmoothingConfig { energies: linspace(-0.5, 1.5, 9), rule_points: 40, panels: 8, ..Default::default() };
        let r = verify_finite_smooth(&a, &Covering::coordinates(1), &rho, &cfg).unwrap();
        assert!(r.max_relative_error <= 1e-6, "{}", r.max_relative_error);
        // independent oracle: ∫ ρ(x) / (x - z)^2 dx
        let rule = GaussLegendre::new(60).composite(0.0, 1.0, 10);
        for (e, conv) in cfg.energies.iter().zip(&r.convolution_form) {
            let z = C64::new(*e, cfg.eta);
            let want: C64 = rule.iter().map(|&(x, w)| (C64::new(x, 0.0) - z).powi(-2) * (w * rho.value(x))).sum();
            assert!((conv - want).norm() < 1e-10 * want.norm().max(1.0), "E={e}");
        }
    }

    #[test]
    fn rejects_incomplete_covering() {
        let a = CMatrix::zeros(3, 3);
        let rho = SingleSiteDensity::new(3).unwrap();
        let cov = Covering::new(vec![vec![0], vec![1]]);
        assert!(matches!(
            verify_finite_smooth(&a, &cov, &rho, &SmoothingConfig::default()),
            Err(VerifyError::NotCovering(_))
        ));
        let cov = Covering::new(vec![vec![0, 1], vec![1, 2]]);
        assert!(cov.validate(3).is_err());
    }

    #[test]
    fn grouped_covering_and_second_order() {
        let a = Corpus::hermitian(4, 4, 4, 1).instance(0).a;
        let rho = SingleSiteDensity::new(3).unwrap();
        let cov = Covering::new(vec![vec![0, 2], vec![1, 3]]);
        let cfg = SmoothingConfig { ell: 2, fd_step: 1e-2, rule_points: 10, ..Default::default() };
        let r = verify_finite_smooth(&a, &cov, &rho, &cfg).unwrap();
        assert!(r.max_relative_error < 1e-3, "{}", r.max_relative_error);
    }

    #[test]
    fn stencils_are_central_differences() {
        assert_eq!(stencil(1), vec![(0.5, 1.0), (-0.5, -1.0)]);
        assert_eq!(stencil(2), vec![(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)]);
        assert_eq!(compositions(2, 3).len(), 6);
    }
}
