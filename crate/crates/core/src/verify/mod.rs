// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Desk-scale numerical certificates for the smoothing and averaging
//! statements behind the estimators.
//!
//! Each `verify_*` function evaluates both sides of an identity or
//! inequality on explicit matrices, records every comparison as a [`Check`]
//! with its tolerance, and attaches a serialised [`Witness`] for the worst
//! instance. Reports are plain data and serialise to JSON.

pub mod boundary;
mod corpus;
mod resolvent_bound;
pub mod semigroup;
mod smoothing;
pub mod spectral_avg;

pub use boundary::{direct_derivative, poisson_derivative, verify_boundary_derivatives, BoundaryReport, DerivativeRow};
pub use corpus::{Corpus, Instance};
pub use resolvent_bound::{
    resolvent_average_sides, verify_resolvent_average_bound, BumpPair, ResolventBoundConfig, ResolventBoundReport,
};
pub use semigroup::{
    hoelder_bound, resolvent_semigroup_sides, verify_resolvent_semigroup_identity, verify_semigroup_hoelder, IdentityConfig, IdentityReport,
    SemigroupReport,
};
pub use smoothing::{verify_finite_smooth, Covering, SmoothingConfig, SmoothingReport};
pub use spectral_avg::{averaged_im_resolvent, verify_spectral_averaging, SpectralAveragingReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disorder::DensityError;
use crate::spectral::SolverError;
use crate::CMatrix;

/// Additive slack applied to inequality checks unless stated otherwise.
pub const DEFAULT_SLACK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("covering is not a partition of the coordinates: {0}")]
    NotCovering(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("vector is not in the range of B (residual {0:e})")]
    NotInRange(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// One comparison: passes when `observed ≤ bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self { name: name.into(), observed, bound, passed: observed <= bound }
    }

    /// Passes when `observed ≥ bound`.
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self { name: name.into(), observed, bound, passed: observed >= bound }
    }
}

/// Serialised matrices and parameters of an offending (or worst) instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub instance: usize,
    pub params: Vec<(String, f64)>,
    pub matrices: Vec<(String, Vec<Vec<[f64; 2]>>)>,
}

impl Witness {
    pub fn new(instance: usize) -> Self {
        Self { instance, ..Self::default() }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.push((name.into(), value));
        self
    }

    pub fn matrix(mut self, name: &str, m: &CMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        self.matrices.push((name.into(), rows));
        self
    }
}

/// Reports of the whole suite, as emitted by the command line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub finite_smooth: SmoothingReport,
    pub resolvent_average_bound: ResolventBoundReport,
    pub semigroup_hoelder: SemigroupReport,
    pub resolvent_semigroup_identity: IdentityReport,
    pub spectral_averaging: SpectralAveragingReport,
    pub boundary_derivatives: BoundaryReport,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.finite_smooth.passed
            && self.resolvent_average_bound.passed
            && self.semigroup_hoelder.passed
            && self.resolvent_semigroup_identity.passed
            && self.spectral_averaging.passed
            && self.boundary_derivatives.passed
    }
}

/// Sizes for [`run_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random pairs for the semigroup inequality.
    pub semigroup_pairs: usize,
    /// Instances for the resolvent-average bound (doubled for stability).
    pub bound_instances: usize,
    /// Instances for the resolvent/semigroup identity.
    pub identity_instances: usize,
    /// Bump order for every density used by the suite.
    pub p: u32,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 1, semigroup_pairs: 2000, bound_instances: 50, identity_instances: 20, p: 3 }
    }
}

/// Runs every verification at the sizes in `cfg`.
///
/// The spectral-averaging step uses the single-site case (`A = 0`, `B = 1`)
/// where the bounded-density conclusion has an exact value.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    use crate::disorder::SingleSiteDensity;
    let rho = SingleSiteDensity::new(cfg.p)?;

    let herm = Corpus::hermitian(cfg.seed, 4, 4, 1);
    let a = herm.instance(0).a;
    let finite_smooth = verify_finite_smooth(&a, &Covering::coordinates(4), &rho, &SmoothingConfig::default())?;

    let bound_corpus = Corpus::hermitian(cfg.seed ^ 0x5a5a, 2, 6, cfg.bound_instances);
    let resolvent_average_bound =
        verify_resolvent_average_bound(&bound_corpus, &BumpPair::new(rho.clone(), rho.clone(), 1.0), &ResolventBoundConfig::default())?;

    let dis = Corpus::dissipative(cfg.seed ^ 0x1234, 1, 8, cfg.semigroup_pairs, 0.0);
    let semigroup_hoelder = verify_semigroup_hoelder(&dis, &[0.3, 0.5, 0.7], &semigroup::DEFAULT_T_GRID)?;

    let strict = Corpus::dissipative(cfg.seed ^ 0x7777, 2, 6, cfg.identity_instances, 0.5);
    let resolvent_semigroup_identity = verify_resolvent_semigroup_identity(&strict, &rho, &IdentityConfig::default())?;

    let one = CMatrix::from_element(1, 1, crate::C64::new(1.0, 0.0));
    let zero = CMatrix::zeros(1, 1);
    let spectral_averaging = verify_spectral_averaging(
        &zero,
        &one,
        &[crate::C64::new(1.0, 0.0)],
        &rho,
        &spectral_avg::default_energy_grid(),
        &[0.1, 0.01, 0.001],
    )?;

    let boundary_derivatives = verify_boundary_derivatives(&rho, &[0.1, 0.01, 0.001], &boundary::default_energy_grid())?;

    Ok(SuiteReport {
        finite_smooth,
        resolvent_average_bound,
        semigroup_hoelder,
        resolvent_semigroup_identity,
        spectral_averaging,
        boundary_derivatives,
    })
}

/// Evenly spaced grid with `n ≥ 2` points.
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
