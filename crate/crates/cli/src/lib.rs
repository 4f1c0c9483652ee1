// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment runner behind the `smoothdos` binary.
//!
//! A run resolves an [`ExperimentConfig`], computes every output in memory,
//! writes them next to a [`RunManifest`], and can later be replayed with
//! [`reproduce`], which byte-compares the regenerated files.

pub mod config;
pub mod error;
pub mod manifest;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use smoothdos::disorder::{Disorder, SingleSiteDensity};
use smoothdos::estimators::{self, Ensemble, McConfig};
use smoothdos::graph::ModelSpec;
use smoothdos::spectral::ComplexShift;
use smoothdos::verify::{run_suite, SuiteConfig};

pub use config::{Command, ExperimentConfig};
pub use error::CliError;
pub use manifest::{OutputRecord, RunManifest, MANIFEST_FILE};
pub use output::{csv_text, CsvRow, CSV_HEADER};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SMOOTHDOS_OUT";

/// Command-line overrides applied on top of a configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

/// Applies `command` and the overrides, then validates.
pub fn resolve(mut cfg: ExperimentConfig, command: Command, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    cfg.run.command = command;
    if let Some(seed) = ov.seed {
        cfg.run.master_seed = seed;
    }
    if let Some(w) = ov.workers {
        cfg.run.workers = w;
    }
    if let Some(dir) = &ov.out {
        cfg.output.directory = dir.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Files produced by a run, in a fixed order, plus a failure diagnostic when
/// the run finished but a check did not pass.
#[derive(Clone, Debug, Default)]
pub struct Outputs {
    pub files: BTreeMap<String, Vec<u8>>,
    pub failure: Option<String>,
}

fn model_error(e: smoothdos::graph::ModelError) -> CliError {
    CliError::Validation { path: "model".into(), reason: e.to_string() }
}

fn ensemble(cfg: &ExperimentConfig) -> Result<Ensemble, CliError> {
    let m = &cfg.model;
    let model = ModelSpec::lattice(m.dimension, m.half_width, m.rank, m.hopping, m.flux, m.coupling)
        .map_err(model_error)?;
    let rho = SingleSiteDensity::new(cfg.disorder.order())
        .map_err(|e| CliError::Validation { path: "disorder".into(), reason: e.to_string() })?;
    Ok(Ensemble::new(model, Disorder::iid(rho)))
}

fn mc_config(cfg: &ExperimentConfig) -> Result<McConfig, CliError> {
    let r = &cfg.run;
    let mc = McConfig {
        n_samples: r.n_samples,
        master_seed: r.master_seed,
        workers: r.workers,
        antithetic: r.antithetic,
        energies: r.energies.values(),
        epsilons: r.epsilons.clone(),
        s: r.s,
        ell: r.ell,
        preset: r.preset,
        experimental: r.experimental,
    };
    mc.validate()?;
    Ok(mc)
}

fn json_bytes<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s.into_bytes()
}

/// Runs the configured command without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    cfg.validate()?;
    let mut out = Outputs::default();
    let csv = cfg.output.wants("csv");
    let json = cfg.output.wants("json");
    let r = &cfg.run;

    if r.command == Command::Verify {
        let suite = SuiteConfig {
            seed: cfg.verify.seed,
            semigroup_pairs: cfg.verify.semigroup_pairs,
            bound_instances: cfg.verify.bound_instances,
            identity_instances: cfg.verify.identity_instances,
            p: cfg.disorder.order(),
        };
        let report = run_suite(&suite)?;
        out.files.insert("verify_report.json".into(), json_bytes(&report));
        if !report.passed() {
            out.failure = Some("verification checks failed; see verify_report.json".into());
        }
        return Ok(out);
    }

    let ens = ensemble(cfg)?;
    let mc = mc_config(cfg)?;
    let volume = cfg.volume();
    let energies = r.energies.values();
    let grid_rows = |eps: f64, ests: &[estimators::Estimate], ell: usize, scale: f64| -> Vec<CsvRow> {
        energies
            .iter()
            .zip(ests)
            .map(|(&e, est)| CsvRow::scaled(e, eps, ell, est, scale))
            .collect()
    };

    match r.command {
        Command::Dos => {
            for &eps in &r.epsilons {
                let ests = estimators::estimate_smoothed_dos(&ens, volume, &energies, eps, &mc)?;
                if csv {
                    out.files.insert(format!("dos_eps{eps}.csv"), csv_text(&grid_rows(eps, &ests, 0, 1.0)));
                }
            }
        }
        Command::DosDeriv => {
            let inv_pi = std::f64::consts::FRAC_1_PI;
            for &eps in &r.epsilons {
                let ests = match cfg.run.method {
                    config::Method::Score => {
                        estimators::estimate_dos_derivative(&ens, volume, &energies, eps, r.ell, &mc)?
                    }
                    config::Method::Tilted => {
                        estimators::estimate_dos_derivative_tilted(&ens, volume, &energies, eps, r.ell, &mc)?
                    }
                };
                if csv {
                    out.files
                        .insert(format!("dos_deriv_ell{}_eps{eps}.csv", r.ell), csv_text(&grid_rows(eps, &ests, r.ell, inv_pi)));
                }
            }
        }
        Command::Ids => {
            let ids = estimators::estimate_ids(&ens, volume, &energies, &mc)?;
            if csv {
                let rows: Vec<CsvRow> = ids.iter().map(|x| CsvRow::scaled(x.energy, 0.0, 0, &x.per_state, 1.0)).collect();
                out.files.insert("ids.csv".into(), csv_text(&rows));
            }
        }
        Command::Fracmom => {
            let space = ens.model.space();
            let pairs: Vec<(usize, usize)> = r
                .distances
                .iter()
                .map(|&d| {
                    let mut point = vec![0i64; cfg.model.dimension];
                    point[0] = d as i64;
                    let k = space.index_of(&point).filter(|&k| k < volume).ok_or_else(|| CliError::Validation {
                        path: "run.distances".into(),
                        reason: format!("site at distance {d} lies outside the volume"),
                    })?;
                    Ok((0, k))
                })
                .collect::<Result<_, CliError>>()?;
            let mut per_d: Vec<Vec<CsvRow>> = vec![Vec::new(); pairs.len()];
            let mut fits = Vec::new();
            for &eps in &r.epsilons {
                for &e in &energies {
                    let shift = ComplexShift::new(e, eps).map_err(|err| CliError::Numerical(err.to_string()))?;
                    let ests = estimators::estimate_fractional_moments(&ens, volume, shift, &pairs, r.s, &mc)?;
                    for (rows, est) in per_d.iter_mut().zip(&ests) {
                        rows.push(CsvRow::scaled(e, eps, 0, est, 1.0));
                    }
                    let points: Vec<(f64, estimators::Estimate)> =
                        r.distances.iter().map(|&d| d as f64).zip(ests.iter().copied()).collect();
                    let fit = estimators::fit_decay(&points, None);
                    fits.push(serde_json::json!({
                        "energy": e,
                        "epsilon": eps,
                        "s": r.s,
                        "fit": fit.as_ref().ok(),
                        "note": fit.as_ref().err().map(|x| x.to_string()),
                    }));
                }
            }
            if csv {
                for (&d, rows) in r.distances.iter().zip(&per_d) {
                    out.files.insert(format!("fracmom_d{d}.csv"), csv_text(rows));
                }
            }
            if json {
                out.files.insert("fracmom_fit.json".into(), json_bytes(&fits));
            }
        }
        Command::Telescope => {
            let ks: Vec<usize> = (r.k_min..=r.k_max).collect();
            let mut base = Vec::new();
            let mut per_k: Vec<Vec<CsvRow>> = vec![Vec::new(); ks.len()];
            let mut reports = Vec::new();
            for &eps in &r.epsilons {
                for &e in &energies {
                    let rep = estimators::telescope_series_diagnostic(&ens, &ks, e, eps, r.ell, &mc)?;
                    base.push(CsvRow::scaled(e, eps, r.ell, &rep.base, 1.0));
                    for (rows, t) in per_k.iter_mut().zip(&rep.terms) {
                        rows.push(CsvRow::scaled(e, eps, r.ell, t, 1.0));
                    }
                    reports.push(rep);
                }
            }
            if csv {
                out.files.insert("telescope_base.csv".into(), csv_text(&base));
                for (&k, rows) in ks.iter().zip(&per_k) {
                    out.files.insert(format!("telescope_K{k}.csv"), csv_text(rows));
                }
            }
            if json {
                out.files.insert("telescope_report.json".into(), json_bytes(&reports));
            }
        }
        Command::Verify => unreachable!("handled above"),
    }
    Ok(out)
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(path, e))
}

/// Runs, writes outputs and the manifest into `cfg.output.directory`.
///
/// When a verification check fails the artifacts are still written and the
/// error carries the diagnostic.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let dir = PathBuf::from(&cfg.output.directory);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let start = Instant::now();
    log::info!("running `{}` into {}", cfg.run.command, dir.display());
    let outputs = execute(cfg)?;
    let mut records = Vec::with_capacity(outputs.files.len());
    for (name, bytes) in &outputs.files {
        write(&dir, name, bytes)?;
        records.push(OutputRecord::of(name, bytes));
    }
    let manifest = RunManifest::new(cfg.clone(), start.elapsed().as_secs_f64(), records);
    write(&dir, MANIFEST_FILE, manifest.to_json().as_bytes())?;
    match outputs.failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(manifest),
    }
}

/// First line where `a` and `b` differ, 1-based, with both lines.
fn first_difference(a: &[u8], b: &[u8]) -> String {
    let lines = |x: &'_ [u8]| -> Vec<Vec<u8>> {
        let body = x.strip_suffix(b"\n").unwrap_or(x);
        if body.is_empty() && x.len() <= 1 {
            return Vec::new();
        }
        body.split(|&c| c == b'\n').map(<[u8]>::to_vec).collect()
    };
    let (la, lb) = (lines(a), lines(b));
    let n = la.len().max(lb.len());
    for i in 0..n {
        let x = la.get(i).map_or(&b"<eof>"[..], Vec::as_slice);
        let y = lb.get(i).map_or(&b"<eof>"[..], Vec::as_slice);
        if x != y {
            return format!(
                "row {}: recorded `{}`, regenerated `{}`",
                i + 1,
                String::from_utf8_lossy(x),
                String::from_utf8_lossy(y)
            );
        }
    }
    if a == b {
        "identical".into()
    } else {
        "trailing newline differs".into()
    }
}

/// Re-runs the manifest at `path` (optionally with another worker count) and
/// byte-compares every output with the recorded files next to it.
pub fn reproduce(path: &Path, workers: Option<usize>) -> Result<RunManifest, CliError> {
    let manifest = RunManifest::load(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut cfg = manifest.config.clone();
    if let Some(w) = workers {
        cfg.run.workers = w;
    }
    let regenerated = execute(&cfg)?;
    let mut problems = Vec::new();
    if !manifest.hash_matches() {
        problems.push("manifest.json: content hash does not match the embedded config".to_string());
    }
    for rec in &manifest.outputs {
        let stored = match std::fs::read(dir.join(&rec.file)) {
            Ok(b) => b,
            Err(e) => {
                problems.push(format!("{}: cannot read recorded file ({e})", rec.file));
                continue;
            }
        };
        if manifest::sha256_hex(&stored) != rec.sha256 {
            problems.push(format!("{}: recorded file does not match its checksum", rec.file));
        }
        match regenerated.files.get(&rec.file) {
            None => problems.push(format!("{}: not produced by the re-run", rec.file)),
            Some(new) if *new != stored => problems.push(format!("{}: {}", rec.file, first_difference(&stored, new))),
            Some(_) => {}
        }
    }
    for name in regenerated.files.keys() {
        if !manifest.outputs.iter().any(|r| &r.file == name) {
            problems.push(format!("{name}: produced by the re-run but not recorded"));
        }
    }
    if problems.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::Mismatch(problems.join("\n")))
    }
}
