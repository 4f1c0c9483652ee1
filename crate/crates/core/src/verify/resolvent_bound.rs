// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Averaged resolvent differences against fractional powers.
//!
//! For Hermitian `A`, `B`, weights `F_1, F_2 ⪰ 0`, `F = F_1 + F_2` and
//! `R(X, x_1, x_2) = (X + x_1 F_1 + x_2 F_2 - z)^{-1}`, compares
//!
//! ```text
//! LHS = ‖∫ F^½ (R(A) - R(B)) F^½ ρ_1(x_1) ρ_2(x_2)‖
//! RHS = ∫ ‖F^½ (R(A) - R(B)) F^½‖^s φ_R(x_1) φ_R(x_2)
//! ```
//!
//! The ratio `LHS / RHS` should stay bounded by a constant that does not
//! depend on the instance; the report gives its empirical maximum and checks
//! that it is stable when the corpus doubles, and that `LHS` vanishes at
//! least like `‖A - B‖^s`.

use serde::{Deserialize, Serialize};

use super::{Check, Corpus, VerifyError, Witness};
use crate::disorder::SingleSiteDensity;
use crate::quad::GaussLegendre;
use crate::spectral::{hermitian_sqrt, spectral_norm};
use crate::{CMatrix, C64};

/// Width of the smooth transitions of the cutoff.
pub const TRANSITION: f64 = 0.1;

/// `C^∞` step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    let psi = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    let (a, b) = (psi(t), psi(1.0 - t));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Two densities on `(0, R)` and the cutoff `φ_R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpPair {
    pub rho1: SingleSiteDensity,
    pub rho2: SingleSiteDensity,
    pub r: f64,
}

impl BumpPair {
    /// Bumps rescaled from `(0, 1)` to `(0, r)`.
    pub fn new(rho1: SingleSiteDensity, rho2: SingleSiteDensity, r: f64) -> Self {
        Self { rho1, rho2, r }
    }

    pub fn density1(&self, x: f64) -> f64 {
        self.rho1.value(x / self.r) / self.r
    }

    pub fn density2(&self, x: f64) -> f64 {
        self.rho2.value(x / self.r) / self.r
    }

    /// Smooth indicator of `(0, 2R + 1)`: one on
    /// `[TRANSITION, 2R + 1 - TRANSITION]`, zero outside the open interval.
    pub fn chi(&self, x: f64) -> f64 {
        let hi = 2.0 * self.r + 1.0;
        smooth_step(x / TRANSITION) * smooth_step((hi - x) / TRANSITION)
    }

    /// `φ_R(x) = χ_R(x + 5R/2 + 1)`.
    pub fn phi(&self, x: f64) -> f64 {
        self.chi(x + 2.5 * self.r + 1.0)
    }

    /// Support `(-5R/2 - 1, -R/2)` of `φ_R`.
    pub fn phi_support(&self) -> (f64, f64) {
        (-2.5 * self.r - 1.0, -0.5 * self.r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventBoundConfig {
    pub s: f64,
    pub energies: Vec<f64>,
    pub etas: Vec<f64>,
    /// Perturbation size `‖A - B‖` for the ratio survey.
    pub delta: f64,
    /// Perturbation sizes for the Hölder slope.
    pub slope_deltas: Vec<f64>,
    /// Instances used for the slope fit.
    pub slope_instances: usize,
    /// Allowed slack below `s` for the fitted slope.
    pub slope_slack: f64,
    /// Allowed relative change of the maximal ratio when the corpus doubles.
    pub stability: f64,
    /// Gauss points per panel.
    pub rule_points: usize,
}

impl Default for ResolventBoundConfig {
    fn default() -> Self {
        Self {
            s: 0.4,
            energies: vec![-1.0, 0.0, 1.0],
            etas: vec![0.5, 0.1],
            delta: 0.1,
            slope_deltas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            slope_instances: 20,
            slope_slack: 0.05,
            stability: 0.10,
            rule_points: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolventBoundReport {
    pub passed: bool,
    pub s: f64,
    /// Largest ratio over the corpus.
    pub max_ratio: f64,
    /// Largest ratio over the doubled corpus.
    pub max_ratio_doubled: f64,
    /// Per-instance largest ratio over the `z` grid, doubled corpus order.
    pub ratios: Vec<f64>,
    /// Smallest fitted log-log slope of `LHS` against `δ`.
    pub min_slope: f64,
    pub checks: Vec<Check>,
    pub witness: Option<Witness>,
}

/// Tensor rule on `(lo, hi)^2`, split at the given interior breakpoints.
fn rule_1d(points: usize, edges: &[f64]) -> Vec<(f64, f64)> {
    let g = GaussLegendre::new(points);
    edges.windows(2).flat_map(|w| g.on(w[0], w[1])).collect()
}

struct Rules {
    lhs: Vec<(f64, f64, f64)>,
    rhs: Vec<(f64, f64, f64)>,
}

impl Rules {
    fn new(pair: &BumpPair, points: usize) -> Self {
        let r = pair.r;
        let l = rule_1d(points, &[0.0, 0.25 * r, 0.5 * r, 0.75 * r, r]);
        let (a, b) = pair.phi_support();
        let p = rule_1d(points, &[a, a + TRANSITION, 0.5 * (a + b), b - TRANSITION, b]);
        let lhs = l
            .iter()
            .flat_map(|&(x1, w1)| l.iter().map(move |&(x2, w2)| (x1, x2, w1 * w2)))
            .map(|(x1, x2, w)| (x1, x2, w * pair.density1(x1) * pair.density2(x2)))
            .filter(|t| t.2 != 0.0)
            .collect();
        let rhs = p
            .iter()
            .flat_map(|&(x1, w1)| p.iter().map(move |&(x2, w2)| (x1, x2, w1 * w2)))
            .map(|(x1, x2, w)| (x1, x2, w * pair.phi(x1) * pair.phi(x2)))
            .filter(|t| t.2 != 0.0)
            .collect();
        Self { lhs, rhs }
    }
}

/// `F^½ (R(A) - R(B)) F^½` at one node.
fn sandwiched(
    a: &CMatrix,
    b: &CMatrix,
    f1: &CMatrix,
    f2: &CMatrix,
    root: &CMatrix,
    x1: f64,
    x2: f64,
    z: C64,
) -> Result<CMatrix, VerifyError> {
    let n = a.nrows();
    let shift = f1 * C64::new(x1, 0.0) + f2 * C64::new(x2, 0.0) - CMatrix::identity(n, n) * z;
    let inv = |x: &CMatrix| {
        (x + &shift)
            .try_inverse()
            .ok_or_else(|| VerifyError::Invalid("singular shifted matrix".into()))
    };
    let d = inv(a)? - inv(b)?;
    Ok(root * d * root)
}

/// `(LHS, RHS)` for one instance at one `z`.
pub fn resolvent_average_sides(
    a: &CMatrix,
    b: &CMatrix,
    f1: &CMatrix,
    f2: &CMatrix,
    pair: &BumpPair,
    s: f64,
    z: C64,
    rule_points: usize,
) -> Result<(f64, f64), VerifyError> {
    let rules = Rules::new(pair, rule_points);
    let root = hermitian_sqrt(&(f1 + f2))?;
    sides(a, b, f1, f2, &root, &rules, s, z, true)
}

#[allow(clippy::too_many_arguments)]
fn sides(
    a: &CMatrix,
    b: &CMatrix,
    f1: &CMatrix,
    f2: &CMatrix,
    root: &CMatrix,
    rules: &Rules,
    s: f64,
    z: C64,
    with_rhs: bool,
) -> Result<(f64, f64), VerifyError> {
    let n = a.nrows();
    let mut acc = CMatrix::zeros(n, n);
    for &(x1, x2, w) in &rules.lhs {
        acc += sandwiched(a, b, f1, f2, root, x1, x2, z)? * C64::new(w, 0.0);
    }
    let lhs = spectral_norm(&acc);
    let mut rhs = 0.0;
    if with_rhs {
        for &(x1, x2, w) in &rules.rhs {
            rhs += w * spectral_norm(&sandwiched(a, b, f1, f2, root, x1, x2, z)?).powf(s);
        }
    }
    Ok((lhs, rhs))
}

/// Ratio survey over `corpus` and its doubling, plus the Hölder slope of
/// `LHS` along `B = A + δC`.
pub fn verify_resolvent_average_bound(
    corpus: &Corpus,
    pair: &BumpPair,
    cfg: &ResolventBoundConfig,
) -> Result<ResolventBoundReport, VerifyError> {
    if !(cfg.s > 0.0 && cfg.s < 1.0) {
        return Err(VerifyError::Invalid("s must lie in (0, τ) = (0, 1)".into()));
    }
    if corpus.count == 0 {
        return Err(VerifyError::Invalid("empty corpus".into()));
    }
    let rules = Rules::new(pair, cfg.rule_points);
    let zs: Vec<C64> = cfg
        .etas
        .iter()
        .flat_map(|&eta| cfg.energies.iter().map(move |&e| C64::new(e, eta)))
        .collect();
    let doubled = corpus.with_count(2 * corpus.count);
    let mut ratios = Vec::with_capacity(doubled.count);
    let mut worst: Option<(f64, Witness)> = None;
    let mut min_slope = f64::INFINITY;
    for inst in doubled.instances() {
        let b = inst.perturbed(cfg.delta);
        let root = hermitian_sqrt(&(&inst.f1 + &inst.f2))?;
        let mut best = 0.0f64;
        for &z in &zs {
            let (lhs, rhs) = sides(&inst.a, &b, &inst.f1, &inst.f2, &root, &rules, cfg.s, z, true)?;
            let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
            if ratio > best {
                best = ratio;
                if worst.as_ref().is_none_or(|w| ratio > w.0) {
                    let wit = Witness::new(inst.index)
                        .param("ratio", ratio)
                        .param("lhs", lhs)
                        .param("rhs", rhs)
                        .param("E", z.re)
                        .param("eta", z.im)
                        .param("delta", cfg.delta)
                        .matrix("A", &inst.a)
                        .matrix("B", &b)
                        .matrix("F1", &inst.f1)
                        .matrix("F2", &inst.f2);
                    worst = Some((ratio, wit));
                }
            }
        }
        ratios.push(best);
        if inst.index < cfg.slope_instances.min(corpus.count) {
            for &z in &zs {
                let pts: Vec<(f64, f64)> = cfg
                    .slope_deltas
                    .iter()
                    .map(|&d| {
                        let (lhs, _) =
                            sides(&inst.a, &inst.perturbed(d), &inst.f1, &inst.f2, &root, &rules, cfg.s, z, false)?;
                        Ok((d.ln(), lhs.ln()))
                    })
                    .collect::<Result<_, VerifyError>>()?;
                min_slope = min_slope.min(slope(&pts));
            }
        }
    }
    let max_ratio = ratios[..corpus.count].iter().copied().fold(0.0, f64::max);
    let max_ratio_doubled = ratios.iter().copied().fold(0.0, f64::max);
    let drift = if max_ratio > 0.0 { (max_ratio_doubled / max_ratio - 1.0).abs() } else { f64::INFINITY };
    let checks = vec![
        Check::at_most("max ratio finite", if max_ratio_doubled.is_finite() { 0.0 } else { 1.0 }, 0.0),
        Check::at_most("relative change of max ratio when the corpus doubles", drift, cfg.stability),
        Check::at_least("min log-log slope of LHS in delta", min_slope, cfg.s - cfg.slope_slack),
    ];
    Ok(ResolventBoundReport {
        passed: checks.iter().all(|c| c.passed),
        s: cfg.s,
        max_ratio,
        max_ratio_doubled,
        ratios,
        min_slope,
        checks,
        witness: worst.map(|w| w.1),
    })
}

/// Least-squares slope of `y` against `x`.
fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
