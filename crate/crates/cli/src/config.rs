// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration: sectioned `key = value` text (TOML).
//!
//! ```toml
//! [model]
//! dimension = 1
//! half_width = 16
//! coupling = 2.0
//!
//! [disorder]
//! p = 3
//!
//! [run]
//! command = "dos"
//! energies = { start = -2.0, stop = 4.0, points = 13 }
//! epsilons = [0.2, 0.05]
//! n_samples = 2000
//! master_seed = 7
//! ```
//!
//! Missing keys take the defaults below. Unknown keys are rejected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smoothdos::estimators::{Preset, MAX_SCORE_ORDER, MAX_TILTED_VOLUME};

use crate::error::CliError;

/// A run command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Dos,
    DosDeriv,
    Ids,
    Fracmom,
    Telescope,
    Verify,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Dos, Command::DosDeriv, Command::Ids, Command::Fracmom, Command::Telescope, Command::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Command::Dos => "dos",
            Command::DosDeriv => "dos-deriv",
            Command::Ids => "ids",
            Command::Fracmom => "fracmom",
            Command::Telescope => "telescope",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Derivative estimator used by `dos-deriv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Score,
    Tilted,
}

/// Either an explicit list or `points` evenly spaced values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Linspace { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Linspace { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub dimension: usize,
    /// Box `{-L..L}^d`.
    pub half_width: usize,
    pub hopping: f64,
    /// Flux per plaquette in the (0, 1) plane; needs `dimension ≥ 2`.
    pub flux: f64,
    /// Disorder strength `λ`.
    pub coupling: f64,
    pub rank: usize,
    /// Sites used, in enumeration order; all sites when absent.
    pub volume: Option<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { dimension: 1, half_width: 8, hopping: 1.0, flux: 0.0, coupling: 1.0, rank: 1, volume: None }
    }
}

/// Bump order `p`, or smoothness `m = p - 1`; give exactly one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DisorderSection {
    pub p: Option<u32>,
    pub m: Option<u32>,
}

impl DisorderSection {
    /// Resolved bump order.
    pub fn order(&self) -> u32 {
        match (self.p, self.m) {
            (Some(p), _) => p,
            (None, Some(m)) => m + 1,
            (None, None) => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub command: Command,
    pub energies: Grid,
    pub epsilons: Vec<f64>,
    pub s: f64,
    pub ell: usize,
    pub n_samples: usize,
    pub master_seed: u64,
    /// 0 lets the pool decide.
    pub workers: usize,
    pub antithetic: bool,
    pub preset: Preset,
    pub experimental: bool,
    pub method: Method,
    /// Distances along the first axis for `fracmom`.
    pub distances: Vec<usize>,
    /// Telescoping range `K_min..=K_max`.
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            command: Command::Dos,
            energies: Grid::Linspace { start: -2.0, stop: 2.0, points: 5 },
            epsilons: vec![0.2],
            s: smoothdos::estimators::DEFAULT_S,
            ell: 0,
            n_samples: 1000,
            master_seed: 1,
            workers: 0,
            antithetic: true,
            preset: Preset::Moment,
            experimental: false,
            method: Method::Score,
            distances: vec![1, 2, 3, 4],
            k_min: 2,
            k_max: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub seed: u64,
    pub semigroup_pairs: usize,
    pub bound_instances: usize,
    pub identity_instances: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        let d = smoothdos::verify::SuiteConfig::default();
        Self {
            seed: d.seed,
            semigroup_pairs: d.semigroup_pairs,
            bound_instances: d.bound_instances,
            identity_instances: d.identity_instances,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    /// Subset of `csv`, `json`. The manifest is always written.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec!["csv".into(), "json".into()] }
    }
}

impl OutputSection {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub disorder: DisorderSection,
    pub run: RunSection,
    pub verify: VerifySection,
    pub output: OutputSection,
}

fn invalid(path: &str, reason: impl Into<String>) -> CliError {
    CliError::Validation { path: path.into(), reason: reason.into() }
}

fn positive_finite(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Parse(e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Sites used by the estimators.
    pub fn volume(&self) -> usize {
        let side = 2 * self.model.half_width + 1;
        self.model.volume.unwrap_or_else(|| side.pow(self.model.dimension as u32))
    }

    /// Range checks; errors name the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        if !(1..=3).contains(&m.dimension) {
            return Err(invalid("model.dimension", "must be 1, 2 or 3"));
        }
        let side = 2 * m.half_width + 1;
        let sites = side.checked_pow(m.dimension as u32).filter(|&n| n <= 4096);
        let Some(sites) = sites else {
            return Err(invalid("model.half_width", "box has more than 4096 sites"));
        };
        if !m.hopping.is_finite() {
            return Err(invalid("model.hopping", "must be finite"));
        }
        if !m.flux.is_finite() {
            return Err(invalid("model.flux", "must be finite"));
        }
        if m.flux != 0.0 && m.dimension < 2 {
            return Err(invalid("model.flux", "needs dimension >= 2"));
        }
        positive_finite("model.coupling", m.coupling)?;
        if m.rank == 0 || m.rank * sites > 4096 {
            return Err(invalid("model.rank", "must be at least 1 with rank * sites <= 4096"));
        }
        if let Some(v) = m.volume {
            if v == 0 || v > sites {
                return Err(invalid("model.volume", format!("must lie in 1..={sites}")));
            }
        }

        let d = &self.disorder;
        match (d.p, d.m) {
            (Some(_), Some(_)) => return Err(invalid("disorder", "give either p or m, not both")),
            (Some(p), None) if !(1..=smoothdos::disorder::MAX_ORDER).contains(&p) => {
                return Err(invalid("disorder.p", format!("must lie in 1..={}", smoothdos::disorder::MAX_ORDER)))
            }
            (None, Some(mm)) if mm + 1 > smoothdos::disorder::MAX_ORDER => {
                return Err(invalid("disorder.m", format!("must be below {}", smoothdos::disorder::MAX_ORDER)))
            }
            _ => {}
        }

        let r = &self.run;
        let energies = r.energies.values();
        if energies.is_empty() || energies.iter().any(|e| !e.is_finite()) {
            return Err(invalid("run.energies", "need at least one finite value"));
        }
        if r.epsilons.is_empty() {
            return Err(invalid("run.epsilons", "need at least one value"));
        }
        for (i, &e) in r.epsilons.iter().enumerate() {
            positive_finite(&format!("run.epsilons[{i}]"), e)?;
        }
        if !(r.s > 0.0 && r.s < 1.0) {
            return Err(invalid("run.s", format!("must lie in (0, 1), got {}", r.s)));
        }
        if r.preset == Preset::Telescope && r.s >= 0.5 {
            return Err(invalid("run.s", "telescope preset requires s < 1/2"));
        }
        if r.master_seed > i64::MAX as u64 {
            return Err(invalid("run.master_seed", "must be at most 2^63 - 1 (TOML integer range)"));
        }
        if r.n_samples < 2 {
            return Err(invalid("run.n_samples", "must be at least 2"));
        }
        if r.workers > 1024 {
            return Err(invalid("run.workers", "at most 1024"));
        }
        let m_smooth = self.disorder.order() as usize - 1;
        match r.command {
            Command::DosDeriv => {
                if r.ell > m_smooth {
                    return Err(invalid("run.ell", format!("exceeds the disorder smoothness m = {m_smooth}")));
                }
                match r.method {
                    Method::Score if r.ell > MAX_SCORE_ORDER => {
                        return Err(invalid("run.ell", format!("score method supports ell <= {MAX_SCORE_ORDER}")))
                    }
                    Method::Score if r.ell > 0 && self.disorder.order() < 2 => {
                        return Err(invalid("disorder.p", "score weights need p >= 2"))
                    }
                    Method::Tilted if self.volume() > MAX_TILTED_VOLUME => {
                        return Err(invalid("model.volume", format!("tilted method needs at most {MAX_TILTED_VOLUME} sites")))
                    }
                    Method::Tilted if r.ell > MAX_SCORE_ORDER && !r.experimental => {
                        return Err(invalid("run.experimental", format!("ell = {} needs experimental = true", r.ell)))
                    }
                    _ => {}
                }
            }
            Command::Fracmom => {
                if r.distances.is_empty() {
                    return Err(invalid("run.distances", "need at least one distance"));
                }
                if let Some(&d) = r.distances.iter().find(|&&d| d > m.half_width) {
                    return Err(invalid("run.distances", format!("distance {d} exceeds half_width")));
                }
            }
            Command::Telescope => {
                if r.k_min > r.k_max {
                    return Err(invalid("run.k_min", "must not exceed k_max"));
                }
                if r.k_max + 2 > sites {
                    return Err(invalid("run.k_max", format!("needs k_max + 2 <= {sites} sites")));
                }
                if r.ell > MAX_SCORE_ORDER.min(m_smooth) {
                    return Err(invalid("run.ell", "telescoping supports score orders up to min(2, m)"));
                }
                if r.ell > 0 && self.disorder.order() < 2 {
                    return Err(invalid("disorder.p", "score weights need p >= 2"));
                }
            }
            _ => {}
        }

        let v = &self.verify;
        if v.seed > i64::MAX as u64 {
            return Err(invalid("verify.seed", "must be at most 2^63 - 1 (TOML integer range)"));
        }
        if v.semigroup_pairs == 0 || v.bound_instances == 0 || v.identity_instances == 0 {
            return Err(invalid("verify", "instance counts must be positive"));
        }
        if self.output.directory.is_empty() {
            return Err(invalid("output.directory", "must not be empty"));
        }
        if let Some(f) = self.output.formats.iter().find(|f| *f != "csv" && *f != "json") {
            return Err(invalid("output.formats", format!("unknown format `{f}`")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_parse_from_empty_text() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.volume(), 17);
    }

    #[test]
    fn grid_forms() {
        let c = ExperimentConfig::parse("[run]\nenergies = { start = 0.0, stop = 1.0, points = 3 }\n").unwrap();
        assert_eq!(c.run.energies.values(), vec![0.0, 0.5, 1.0]);
        let c = ExperimentConfig::parse("[run]\nenergies = [0.25, 2.0]\n").unwrap();
        assert_eq!(c.run.energies, Grid::List(vec![0.25, 2.0]));
    }

    #[test]
    fn range_errors_name_the_field() {
        let e = ExperimentConfig::parse("[run]\ns = 1.5\n").unwrap_err();
        assert!(e.to_string().starts_with("run.s:"), "{e}");
        assert_eq!(e.exit_code(), 2);
        let e = ExperimentConfig::parse("[run]\nepsilons = [0.1, -1.0]\n").unwrap_err();
        assert!(e.to_string().starts_with("run.epsilons[1]:"), "{e}");
    }

    #[test]
    fn type_errors_name_the_field() {
        let e = ExperimentConfig::parse("[model]\ncoupling = \"strong\"\n").unwrap_err();
        assert!(e.to_string().starts_with("model.coupling:"), "{e}");
        let e = ExperimentConfig::parse("[run]\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        assert!(matches!(ExperimentConfig::parse("[run\n"), Err(CliError::Parse(_))));
    }

    #[test]
    fn cross_field_checks() {
        assert!(ExperimentConfig::parse("[disorder]\np = 2\nm = 1\n").is_err());
        assert!(ExperimentConfig::parse("[model]\nflux = 0.5\n").is_err());
        let e = ExperimentConfig::parse("[disorder]\np = 2\n[run]\ncommand = \"dos-deriv\"\nell = 2\n").unwrap_err();
        assert!(e.to_string().starts_with("run.ell:"));
        let e = ExperimentConfig::parse("[run]\ncommand = \"fracmom\"\ndistances = [9]\n").unwrap_err();
        assert!(e.to_string().starts_with("run.distances:"));
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            1usize..=2,
            1usize..=6,
            -2.0f64..2.0,
            0.1f64..20.0,
            1usize..=2,
            prop_oneof![Just(Grid::List(vec![-1.0, 0.5])), (-3.0f64..0.0, 0.0f64..3.0, 1usize..20).prop_map(
                |(start, stop, points)| Grid::Linspace { start, stop, points }
            )],
            proptest::collection::vec(1e-3f64..2.0, 1..4),
            0.01f64..0.49,
            0..=i64::MAX as u64,
            0usize..9,
        )
            .prop_map(|(dimension, half_width, hopping, coupling, rank, energies, epsilons, s, seed, workers)| {
                let mut c = ExperimentConfig::default();
                c.model = ModelSection { dimension, half_width, hopping, coupling, rank, ..ModelSection::default() };
                c.run.energies = energies;
                c.run.epsilons = epsilons;
                c.run.s = s;
                c.run.master_seed = seed;
                c.run.workers = workers;
                c.run.distances = vec![1];
                c.run.k_min = 1;
                c.run.k_max = 1;
                c
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(c in arb_config()) {
            prop_assume!(c.validate().is_ok());
            let text = c.to_text();
            let back = ExperimentConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
