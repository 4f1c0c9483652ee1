// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo estimators over the disorder ensemble.
//!
//! Every estimator runs through one sampling engine. Unit `i` of a run draws
//! from [`sample_rng`]`(master_seed, i)`, units are evaluated in parallel and
//! collected in index order, and means and variances are pairwise sums over
//! that ordered list. Results are therefore bit-identical for any worker
//! count.
//!
//! With `antithetic` set, a unit evaluates the integrand at `ω` and at the
//! reflected configuration `1 - ω` and reports the average. All supported
//! densities are symmetric about 1/2, so the reflection preserves the law.
//!
//! Volumes are counted in sites: `volume = N + 1` is the prefix `Λ_N`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disorder::{DensityError, Disorder};
use crate::graph::{ModelError, ModelSpec};
use crate::rng::sample_rng;
use crate::spectral::{
    hermitian_eigen, ComplexShift, HermitianMatrix, KernelBlock, ResolventFactor, SolverError,
};
use crate::C64;

/// Largest volume accepted by the exhaustive tilted expansion.
pub const MAX_TILTED_VOLUME: usize = 6;
/// Highest derivative order available through the score weights.
pub const MAX_SCORE_ORDER: usize = 2;
/// Default fractional-moment exponent.
pub const DEFAULT_S: f64 = 1.0 / 3.0;
/// Default imaginary parts.
pub const DEFAULT_EPSILONS: [f64; 4] = [0.5, 0.2, 0.1, 0.05];

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid configuration at {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("derivative order {ell} exceeds the smoothness order {m} of the disorder")]
    OrderExceedsSmoothness { ell: usize, m: usize },
    #[error("score weights support derivative orders up to {MAX_SCORE_ORDER}, got {0}")]
    ScoreOrder(usize),
    #[error("score weights need bump order p >= 2 (finite Fisher information), got p = {0}")]
    InfiniteScoreVariance(u32),
    #[error("tilted expansion is limited to {MAX_TILTED_VOLUME} sites, got {0}")]
    TiltedVolume(usize),
    #[error("derivative order {0} is only available with the experimental flag")]
    Experimental(usize),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

type Result<T> = std::result::Result<T, EstimatorError>;

/// Which parameter preset a run follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Fractional moments and DOS curves: any `s ∈ (0, 1)`.
    #[default]
    Moment,
    /// Telescoping analysis: enforces `s < 1/2`.
    Telescope,
}

/// Sampling and grid parameters shared by all estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub master_seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    pub antithetic: bool,
    pub energies: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub s: f64,
    pub ell: usize,
    pub preset: Preset,
    /// Unlocks tilted derivatives of order 3 and above.
    pub experimental: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            master_seed: 0,
            workers: 0,
            antithetic: true,
            energies: vec![0.0],
            epsilons: DEFAULT_EPSILONS.to_vec(),
            s: DEFAULT_S,
            ell: 0,
            preset: Preset::Moment,
            experimental: false,
        }
    }
}

impl McConfig {
    pub fn with_samples(n_samples: usize, master_seed: u64) -> Self {
        Self { n_samples, master_seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| Err(EstimatorError::Config { field, reason: reason.into() });
        if self.n_samples == 0 {
            return bad("n_samples", "must be at least 1");
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad("s", "must lie in (0, 1)");
        }
        if self.preset == Preset::Telescope && self.s >= 0.5 {
            return bad("s", "telescope preset requires s < 1/2");
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return bad("epsilons", "need at least one finite positive value");
        }
        if self.energies.is_empty() || self.energies.iter().any(|e| !e.is_finite()) {
            return bad("energies", "need at least one finite value");
        }
        Ok(())
    }
}

/// Monte Carlo mean with standard error and provenance.
///
/// For complex means `stderr` is the standard error of the complex mean,
/// `sqrt(Var Re + Var Im) / sqrt(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: C64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Estimate {
    /// Estimate with a known value and no sampling error.
    pub fn exact(value: C64) -> Self {
        Self { mean: value, stderr: 0.0, n_samples: 0, seed: 0 }
    }

    pub fn magnitude(&self) -> f64 {
        self.mean.norm()
    }

    /// `|self - other| ≤ k · sqrt(σ₁² + σ₂²)`.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.mean - other.mean).norm() <= k * self.stderr.hypot(other.stderr)
    }

    /// `|self - value| ≤ k · σ`.
    pub fn agrees_with_value(&self, value: C64, k: f64) -> bool {
        (self.mean - value).norm() <= k * self.stderr
    }
}

/// Exact pairwise summation with a fixed split, so the rounding pattern is a
/// function of the ordered input alone.
pub fn pairwise_sum(xs: &[C64]) -> C64 {
    if xs.len() <= 8 {
        xs.iter().fold(C64::new(0.0, 0.0), |a, &b| a + b)
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn pairwise_sum_real(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum_real(a) + pairwise_sum_real(b)
    }
}

fn summarize(column: &[C64], seed: u64) -> Estimate {
    let n = column.len();
    let mean = pairwise_sum(column) / n as f64;
    let stderr = if n < 2 {
        f64::INFINITY
    } else {
        let dev: Vec<f64> = column.iter().map(|x| (x - mean).norm_sqr()).collect();
        (pairwise_sum_real(&dev) / ((n - 1) as f64 * n as f64)).sqrt()
    };
    Estimate { mean, stderr, n_samples: n, seed }
}

/// Runs `mc.n_samples` independent units, each returning `width` values, and
/// summarises each output column.
pub fn run_units<F>(mc: &McConfig, width: usize, unit: F) -> Result<Vec<Estimate>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<C64>> + Sync + Send,
{
    if mc.n_samples == 0 {
        return Err(EstimatorError::Config { field: "n_samples", reason: "must be at least 1".into() });
    }
    let seed = mc.master_seed;
    let work = || {
        (0..mc.n_samples)
            .into_par_iter()
            .map(|i| unit(&mut sample_rng(seed, i as u64)))
            .collect::<Result<Vec<Vec<C64>>>>()
    };
    let rows = if mc.workers == 1 {
        (0..mc.n_samples).map(|i| unit(&mut sample_rng(seed, i as u64))).collect::<Result<Vec<_>>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(mc.workers)
            .build()
            .map_err(|e| EstimatorError::Pool(e.to_string()))?
            .install(work)?
    };
    Ok((0..width)
        .map(|c| {
            let col: Vec<C64> = rows.iter().map(|r| r[c]).collect();
            summarize(&col, seed)
        })
        .collect())
}

/// Random model: operator data plus the single-site laws.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub model: ModelSpec,
    pub disorder: Disorder,
}

impl Ensemble {
    pub fn new(model: ModelSpec, disorder: Disorder) -> Self {
        Self { model, disorder }
    }

    /// Draws `ω` for `volume` sites and evaluates `g`, averaging with the
    /// reflected configuration when antithetic pairing is on.
    fn disorder_units<G>(&self, volume: usize, mc: &McConfig, width: usize, g: G) -> Result<Vec<Estimate>>
    where
        G: Fn(&[f64]) -> Result<Vec<C64>> + Sync + Send,
    {
        self.model.check_volume(volume)?;
        run_units(mc, width, |rng| {
            let omega = self.disorder.draw(volume, rng)?;
            let mut out = g(&omega)?;
            if mc.antithetic {
                let twin = g(&reflect(&omega))?;
                for (a, b) in out.iter_mut().zip(twin) {
                    *a = (*a + b) * 0.5;
                }
            }
            Ok(out)
        })
    }

    fn hamiltonian(&self, free: &HermitianMatrix, omega: &[f64]) -> HermitianMatrix {
        let d = self.model.projections().prefix_dim(omega.len());
        if free.dim() == d {
            free.with_added_diagonal(&self.model.potential_diagonal(omega))
        } else {
            free.leading_block(d).with_added_diagonal(&self.model.potential_diagonal(omega))
        }
    }

    /// `tr P_0 (h - z)^{-q}` from a factorisation.
    fn trace_power(&self, factor: &ResolventFactor, q: usize) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in self.model.projections().block_range(0) {
            let mut x = vec![C64::new(0.0, 0.0); factor.dim()];
            x[j] = C64::new(1.0, 0.0);
            for _ in 0..q {
                factor.solve_in_place(&mut x);
            }
            acc += x[j];
        }
        acc
    }

    fn check_order(&self, ell: usize, volume: usize) -> Result<()> {
        let m = self.disorder.smoothness(volume);
        if ell > m {
            return Err(EstimatorError::OrderExceedsSmoothness { ell, m });
        }
        Ok(())
    }

    /// `S_ℓ(ω) / λ^ℓ` for `ℓ ≤ 2`.
    fn score_weight(&self, omega: &[f64], ell: usize) -> f64 {
        let lambda = self.model.coupling();
        match ell {
            0 => 1.0,
            1 => {
                let s1: f64 = omega.iter().enumerate().map(|(n, &w)| self.disorder.density(n).score(w)).sum();
                s1 / lambda
            }
            _ => {
                let (s1, curv) = omega.iter().enumerate().fold((0.0, 0.0), |(a, b), (n, &w)| {
                    let d = self.disorder.density(n);
                    (a + d.score(w), b + d.log_curvature(w))
                });
                (s1 * s1 + curv) / (lambda * lambda)
            }
        }
    }

    fn check_score(&self, ell: usize, score_volume: usize) -> Result<()> {
        if ell == 0 {
            return Ok(());
        }
        if ell > MAX_SCORE_ORDER {
            return Err(EstimatorError::ScoreOrder(ell));
        }
        self.check_order(ell, score_volume)?;
        let p = self.disorder.min_order(score_volume);
        if p < 2 {
            return Err(EstimatorError::InfiniteScoreVariance(p));
        }
        Ok(())
    }
}

fn reflect(omega: &[f64]) -> Vec<f64> {
    omega.iter().map(|w| 1.0 - w).collect()
}

fn shifts(energies: &[f64], eta: f64) -> Result<Vec<ComplexShift>> {
    energies
        .iter()
        .map(|&e| ComplexShift::new(e, eta).map_err(EstimatorError::from))
        .collect()
}

/// `E ‖P_n (h_Λ - z)^{-1} P_k‖^s` for each `(n, k)` in `pairs`, sharing
/// samples across pairs.
pub fn estimate_fractional_moments(
    ens: &Ensemble,
    volume: usize,
    shift: ComplexShift,
    pairs: &[(usize, usize)],
    s: f64,
    mc: &McConfig,
) -> Result<Vec<Estimate>> {
    if !(s > 0.0 && s < 1.0) {
        return Err(EstimatorError::Config { field: "s", reason: "must lie in (0, 1)".into() });
    }
    let free = ens.model.restricted_free(volume)?;
    let proj = ens.model.projections();
    ens.disorder_units(volume, mc, pairs.len(), |omega| {
        let h = ens.hamiltonian(&free, omega);
        let f = ResolventFactor::new(&h, shift)?;
        pairs
            .iter()
            .map(|&(n, k)| {
                let b = KernelBlock::from_factor(&f, proj, n, k)?;
                Ok(C64::new(b.norm.powf(s), 0.0))
            })
            .collect()
    })
}

/// `E ‖P_n (h_Λ - z)^{-1} P_k‖^s`.
pub fn estimate_fractional_moment(
    ens: &Ensemble,
    volume: usize,
    shift: ComplexShift,
    n: usize,
    k: usize,
    s: f64,
    mc: &McConfig,
) -> Result<Estimate> {
    Ok(estimate_fractional_moments(ens, volume, shift, &[(n, k)], s, mc)?[0])
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 usable points, found {0}")]
    InsufficientPoints(usize),
    #[error("all means are zero (exact decoupling)")]
    AllZero,
}

/// Exponential fit `log|mean| ≈ intercept - rate · distance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points_used: usize,
}

impl DecayFit {
    /// Prefactor `C = exp(intercept)`.
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Least squares of `log|mean|` against distance.
///
/// Points at distance 0, outside `window`, or with `|mean| ≤ 2·stderr` are
/// skipped.
pub fn fit_decay(points: &[(f64, Estimate)], window: Option<(f64, f64)>) -> std::result::Result<DecayFit, FitError> {
    if !points.is_empty() && points.iter().all(|(_, e)| e.mean == C64::new(0.0, 0.0)) {
        return Err(FitError::AllZero);
    }
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, e)| {
            *d != 0.0 && *d >= lo && *d <= hi && e.magnitude() > 2.0 * e.stderr && e.magnitude() > 0.0
        })
        .map(|(d, e)| (*d, e.magnitude().ln()))
        .collect();
    if used.len() < 3 {
        return Err(FitError::InsufficientPoints(used.len()));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::InsufficientPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy <= f64::EPSILON * n * my.abs().max(1.0) {
        if ss_res <= 1e-24 * n { 1.0 } else { 0.0 }
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    let d_min = used.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let d_max = used.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        rate: -slope,
        intercept,
        r_squared,
        window: (d_min, d_max),
        points_used: used.len(),
    })
}

/// Integrated density of states at one energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdsEstimate {
    pub energy: f64,
    /// `E tr(P_0 E_h((-∞, E]))`.
    pub trace: Estimate,
    /// The same divided by `tr P_0`.
    pub per_state: Estimate,
}

/// IDS on an energy grid from one eigendecomposition per sample.
pub fn estimate_ids(ens: &Ensemble, volume: usize, energies: &[f64], mc: &McConfig) -> Result<Vec<IdsEstimate>> {
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(EstimatorError::Config { field: "energies", reason: "must be finite".into() });
    }
    let free = ens.model.restricted_free(volume)?;
    let block = ens.model.projections().block_range(0);
    let rank = block.len() as f64;
    let est = ens.disorder_units(volume, mc, energies.len(), |omega| {
        let spec = hermitian_eigen(&ens.hamiltonian(&free, omega))?;
        Ok(energies.iter().map(|&e| C64::new(spec.projector_trace(block.clone(), e), 0.0)).collect())
    })?;
    Ok(energies
        .iter()
        .zip(est)
        .map(|(&energy, trace)| IdsEstimate {
            energy,
            trace,
            per_state: Estimate { mean: trace.mean / rank, stderr: trace.stderr / rank, ..trace },
        })
        .collect())
}

/// `E tr P_0 (h_Λ - E - iε)^{-1}` on an energy grid.
pub fn estimate_trace_resolvent(
    ens: &Ensemble,
    volume: usize,
    energies: &[f64],
    eta: f64,
    mc: &McConfig,
) -> Result<Vec<Estimate>> {
    estimate_resolvent_power_trace(ens, volume, energies, eta, 0, mc)
}

/// `(1/π) E Im tr P_0 (h_Λ - E - iε)^{-1}`.
pub fn estimate_smoothed_dos(
    ens: &Ensemble,
    volume: usize,
    energies: &[f64],
    eta: f64,
    mc: &McConfig,
) -> Result<Vec<Estimate>> {
    let free = ens.model.restricted_free(volume)?;
    let sh = shifts(energies, eta)?;
    ens.disorder_units(volume, mc, sh.len(), |omega| {
        let h = ens.hamiltonian(&free, omega);
        sh.iter()
            .map(|&z| {
                let f = ResolventFactor::new(&h, z)?;
                Ok(C64::new(ens.trace_power(&f, 1).im / std::f64::consts::PI, 0.0))
            })
            .collect()
    })
}

/// `ℓ! · E tr P_0 (h_Λ - E - iε)^{-(ℓ+1)}`, the exact `ℓ`-th energy
/// derivative of the averaged trace.
pub fn estimate_resolvent_power_trace(
    ens: &Ensemble,
    volume: usize,
    energies: &[f64],
    eta: f64,
    ell: usize,
    mc: &McConfig,
) -> Result<Vec<Estimate>> {
    let free = ens.model.restricted_free(volume)?;
    let sh = shifts(energies, eta)?;
    let fact: f64 = (1..=ell).map(|k| k as f64).product();
    ens.disorder_units(volume, mc, sh.len(), |omega| {
        let h = ens.hamiltonian(&free, omega);
        sh.iter()
            .map(|&z| Ok(ens.trace_power(&ResolventFactor::new(&h, z)?, ell + 1) * fact))
            .collect()
    })
}

/// `d^ℓ/dE^ℓ E tr P_0 (h_Λ - E - iε)^{-1}` through score weights.
///
/// Shifting `E` is the same as shifting every `ω_n` by `-E/λ`, so the
/// derivative moves onto the product density: it equals
/// `λ^{-ℓ} E[f · S_ℓ]` with `S_1 = Σ ρ'/ρ` and
/// `S_2 = S_1² + Σ (log ρ)''`. Order 0 is the plain trace mean.
pub fn estimate_dos_derivative(
    ens: &Ensemble,
    volume: usize,
    energies: &[f64],
    eta: f64,
    ell: usize,
    mc: &McConfig,
) -> Result<Vec<Estimate>> {
    estimate_dos_derivative_extended(ens, volume, volume, energies, eta, ell, mc)
}

/// As [`estimate_dos_derivative`] with the integrand computed on the first
/// `volume` sites and the score summed over `score_volume ≥ volume` sites.
/// The extra sites do not enter the integrand, so the expectation is the
/// same.
pub fn estimate_dos_derivative_extended(
    ens: &Ensemble,
    volume: usize,
    score_volume: usize,
    energies: &[f64],
    eta: f64,
    ell: usize,
    mc: &McConfig,
) -> Result<Vec<Estimate>> {
    if ell == 0 && score_volume == volume {
        return estimate_trace_resolvent(ens, volume, energies, eta, mc);
    }
    if score_volume < volume {
        return Err(EstimatorError::Config {
            field: "score_volume",
            reason: format!("must be at least the volume {volume}"),
        });
    }
    ens.check_score(ell, score_volume)?;
    let free = ens.model.restricted_free(volume)?;
    let sh = shifts(energies, eta)?;
    ens.disorder_units(score_volume, mc, sh.len(), |omega| {
        let w = ens.score_weight(omega, ell);
        let h = ens.hamiltonian(&free, &omega[..volume]);
        sh.iter()
            .map(|&z| Ok(ens.trace_power(&ResolventFactor::new(&h, z)?, 1) * w))
            .collect()
    })
}

/// Compositions of `total` into `parts` non-negative parts, each at most
/// `cap`, in lexicographic order.
fn compositions(total: usize, parts: usize, cap: usize) -> Vec<Vec<usize>> {
    fn go(rem: usize, parts: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == parts {
            if rem <= cap {
                cur.push(rem);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for a in (0..=rem.min(cap)).rev() {
            cur.push(a);
            go(rem - a, parts, cap, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        go(total, parts, cap, &mut Vec::new(), &mut out);
    }
    out
}

/// `d^ℓ/dE^ℓ E tr P_0 G` by the exhaustive multinomial expansion: for each
/// multi-index `α` with `|α| = ℓ`, sites with `α_n > 0` are drawn from the
/// normalised `|ρ^(α_n)|` and carry `sign · ‖ρ^(α_n)‖₁`.
///
/// Volumes are limited to [`MAX_TILTED_VOLUME`] sites; orders above
/// [`MAX_SCORE_ORDER`] need `mc.experimental`.
pub fn estimate_dos_derivative_tilted(
    ens: &Ensemble,
    volume: usize,
    energies: &[f64],
    eta: f64,
    ell: usize,
    mc: &McConfig,
) -> Result<Vec<Estimate>> {
    if volume > MAX_TILTED_VOLUME {
        return Err(EstimatorError::TiltedVolume(volume));
    }
    if ell > MAX_SCORE_ORDER && !mc.experimental {
        return Err(EstimatorError::Experimental(ell));
    }
    ens.check_order(ell, volume)?;
    let free = ens.model.restricted_free(volume)?;
    let sh = shifts(energies, eta)?;
    let lambda_pow = ens.model.coupling().powi(ell as i32);
    let factorial = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let terms: Vec<(Vec<usize>, f64)> = compositions(ell, volume, ell)
        .into_iter()
        .map(|a| {
            let c = factorial(ell) / a.iter().map(|&k| factorial(k)).product::<f64>();
            (a, c / lambda_pow)
        })
        .collect();
    let parity = if ell % 2 == 0 { 1.0 } else { -1.0 };
    ens.model.check_volume(volume)?;
    run_units(mc, sh.len(), |rng| {
        let mut acc = vec![C64::new(0.0, 0.0); sh.len()];
        for (alpha, coef) in &terms {
            let mut omega = Vec::with_capacity(volume);
            let mut weight = *coef;
            for (n, &a) in alpha.iter().enumerate() {
                let d = ens.disorder.density(n);
                if a == 0 {
                    omega.push(d.sample(rng)?);
                } else {
                    let t = d.sample_tilted(a, rng)?;
                    omega.push(t.value);
                    weight *= t.sign * t.weight;
                }
            }
            let eval = |om: &[f64]| -> Result<Vec<C64>> {
                let h = ens.hamiltonian(&free, om);
                sh.iter().map(|&z| Ok(ens.trace_power(&ResolventFactor::new(&h, z)?, 1))).collect()
            };
            let mut vals = eval(&omega)?;
            if mc.antithetic {
                // |ρ^(j)| is symmetric and its sign picks up (-1)^j
                let twin = eval(&reflect(&omega))?;
                for (v, t) in vals.iter_mut().zip(twin) {
                    *v = (*v + t * parity) * 0.5;
                }
            }
            for (a, v) in acc.iter_mut().zip(vals) {
                *a += v * weight;
            }
        }
        Ok(acc)
    })
}

/// `T_{K,ℓ}(E, ε) = d^ℓ/dE^ℓ E[tr G_{K+1} - tr G_K]` with
/// `G_M = P_0 (h_{Λ_M} - z)^{-1} P_0`, coupled through shared `ω`.
pub fn telescoping_term(
    ens: &Ensemble,
    k: usize,
    energies: &[f64],
    eta: f64,
    ell: usize,
    mc: &McConfig,
) -> Result<Vec<Estimate>> {
    let sh = shifts(energies, eta)?;
    let per_energy = telescope_units(ens, &[k], &sh, ell, mc, false)?;
    Ok(per_energy)
}

/// Shared sampler for telescoping terms. Output layout per unit: for each
/// shift, `[base?, T_{k_0}, T_{k_1}, …]`, where `base` is the order-`ℓ`
/// estimate on `Λ_{k_0}`.
fn telescope_units(
    ens: &Ensemble,
    ks: &[usize],
    sh: &[ComplexShift],
    ell: usize,
    mc: &McConfig,
    with_base: bool,
) -> Result<Vec<Estimate>> {
    let k_max = *ks.iter().max().expect("non-empty K list");
    let full = k_max + 2;
    ens.model.check_volume(full)?;
    ens.check_score(ell, full)?;
    let free = ens.model.restricted_free(full)?;
    let stride = ks.len() + usize::from(with_base);
    ens.disorder_units(full, mc, sh.len() * stride, |omega| {
        let trace_on = |sites: usize, z: ComplexShift| -> Result<C64> {
            let h = ens.hamiltonian(&free, &omega[..sites]);
            Ok(ens.trace_power(&ResolventFactor::new(&h, z)?, 1))
        };
        let mut out = Vec::with_capacity(sh.len() * stride);
        for &z in sh {
            if with_base {
                let k0 = ks[0];
                out.push(trace_on(k0 + 1, z)? * ens.score_weight(&omega[..k0 + 1], ell));
            }
            for &k in ks {
                let diff = trace_on(k + 2, z)? - trace_on(k + 1, z)?;
                out.push(diff * ens.score_weight(&omega[..k + 2], ell));
            }
        }
        Ok(out)
    })
}

/// Per-`K` telescoping terms, their exponential fit and partial sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelescopeReport {
    pub energy: f64,
    pub eta: f64,
    pub ell: usize,
    pub ks: Vec<usize>,
    pub terms: Vec<Estimate>,
    /// Order-`ℓ` estimate on `Λ_{K_min}`.
    pub base: Estimate,
    /// `base + Σ_{K' ≤ K} T_{K'}`.
    pub partial_sums: Vec<C64>,
    /// Sum of the standard errors entering each partial sum.
    pub partial_sum_stderr: Vec<f64>,
    pub fit: Option<DecayFit>,
    pub fit_note: Option<String>,
    pub all_zero: bool,
    pub summability_supported: bool,
}

/// Decay diagnostic for `|T_{K,ℓ}|` over `ks` (strictly increasing).
///
/// Summability is flagged when `|T_K|` decays exponentially in `K` (positive
/// fitted rate) with `r² ≥ 0.9`, or when every term vanishes.
pub fn telescope_series_diagnostic(
    ens: &Ensemble,
    ks: &[usize],
    energy: f64,
    eta: f64,
    ell: usize,
    mc: &McConfig,
) -> Result<TelescopeReport> {
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimatorError::Config { field: "ks", reason: "must be non-empty and increasing".into() });
    }
    let sh = [ComplexShift::new(energy, eta)?];
    let all = telescope_units(ens, ks, &sh, ell, mc, true)?;
    let base = all[0];
    let terms = all[1..].to_vec();
    Ok(assemble_report(energy, eta, ell, ks.to_vec(), base, terms))
}

/// Builds a report from precomputed terms; also used for synthetic inputs.
pub fn assemble_report(
    energy: f64,
    eta: f64,
    ell: usize,
    ks: Vec<usize>,
    base: Estimate,
    terms: Vec<Estimate>,
) -> TelescopeReport {
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut partial_sum_stderr = Vec::with_capacity(terms.len());
    let (mut acc, mut err) = (base.mean, base.stderr);
    for t in &terms {
        acc += t.mean;
        err += t.stderr;
        partial_sums.push(acc);
        partial_sum_stderr.push(err);
    }
    let points: Vec<(f64, Estimate)> = ks.iter().map(|&k| k as f64).zip(terms.iter().copied()).collect();
    let (fit, fit_note, all_zero) = match fit_decay(&points, None) {
        Ok(f) => (Some(f), None, false),
        Err(FitError::AllZero) => (None, Some(FitError::AllZero.to_string()), true),
        Err(e) => (None, Some(e.to_string()), false),
    };
    let summability_supported = all_zero || fit.as_ref().is_some_and(|f| f.rate > 0.0 && f.r_squared >= 0.9);
    TelescopeReport {
        energy,
        eta,
        ell,
        ks,
        terms,
        base,
        partial_sums,
        partial_sum_stderr,
        fit,
        fit_note,
        all_zero,
        summability_supported,
    }
}

/// Draws one configuration for `volume` sites; handy for single-sample
/// checks.
pub fn draw_configuration<R: Rng + ?Sized>(ens: &Ensemble, volume: usize, rng: &mut R) -> Result<Vec<f64>> {
    ens.model.check_volume(volume)?;
    Ok(ens.disorder.draw(volume, rng)?)
}
