// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 4`.

use std::time::Instant;

use smoothdos::disorder::{Disorder, SingleSiteDensity};
use smoothdos::estimators::{self, Ensemble, Estimate, McConfig};
use smoothdos::graph::ModelSpec;
use smoothdos::quad::GaussLegendre;
use smoothdos::spectral::ComplexShift;
use smoothdos::verify::{self, Corpus, Covering, IdentityConfig, ResolventBoundConfig, SmoothingConfig};
use smoothdos::{CMatrix, C64};
use smoothdos_cli::{reproduce, run, Command, ExperimentConfig};

const SEED: u64 = 20_260_301;

type Outcome = (bool, String);

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn bump(p: u32) -> SingleSiteDensity {
    SingleSiteDensity::new(p).unwrap()
}

fn chain(half_width: usize, hopping: f64, coupling: f64, p: u32) -> Ensemble {
    let model = ModelSpec::lattice(1, half_width, 1, hopping, 0.0, coupling).unwrap();
    Ensemble::new(model, Disorder::iid(bump(p)))
}

fn mc(n: usize, seed: u64) -> McConfig {
    McConfig { workers: 1, ..McConfig::with_samples(n, seed) }
}

/// Score-weighted first derivative against `1! tr P_0 G^2` on the same seeds.
fn c1() -> Outcome {
    let t = Instant::now();
    let ens = chain(64, 1.0, 2.0, 3);
    let energies = linspace(-2.0, 4.0, 11);
    let m = mc(20_000, SEED);
    let score = estimators::estimate_dos_derivative(&ens, 129, &energies, 0.2, 1, &m).unwrap();
    let oracle = estimators::estimate_resolvent_power_trace(&ens, 129, &energies, 0.2, 1, &m).unwrap();
    let worst = score
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a.mean - b.mean).norm() / a.stderr.hypot(b.stderr))
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    (worst <= 4.0 && secs <= 120.0, format!("max |diff|/combined stderr = {worst:.2} (<= 4), {secs:.1} s (<= 120 s)"))
}

/// With `h_0 = 0` the smoothed DOS is `ρ * P_ε` exactly.
fn c2() -> Outcome {
    let model = ModelSpec::lattice(1, 2, 1, 0.0, 0.0, 1.0).unwrap();
    let rho = bump(3);
    let ens = Ensemble::new(model, Disorder::iid(rho.clone()));
    let energies = linspace(-0.5, 1.5, 21);
    let nodes = GaussLegendre::new(20).composite(0.0, 1.0, 400);
    let mut worst = 0.0f64;
    for (i, eps) in [0.2, 0.05].into_iter().enumerate() {
        let est = estimators::estimate_smoothed_dos(&ens, 5, &energies, eps, &mc(4000, SEED + i as u64)).unwrap();
        for (&e, x) in energies.iter().zip(&est) {
            let exact: f64 = nodes
                .iter()
                .map(|&(t, w)| w * rho.value(t) * eps / std::f64::consts::PI / ((t - e).powi(2) + eps * eps))
                .sum();
            let z = (x.mean.re - exact).abs() / x.stderr.max(1e-300);
            worst = worst.max(if x.stderr == 0.0 && x.mean.re == exact { 0.0 } else { z });
        }
    }
    (worst <= 4.0, format!("max |DOS - rho*P_eps| / stderr = {worst:.2} (<= 4) over 21 energies, eps in {{0.2, 0.05}}"))
}

fn c3() -> Outcome {
    let ens = chain(15, 1.0, 10.0, 3);
    let space = ens.model.space();
    let pairs: Vec<(usize, usize)> = (1..=15).map(|d| (0, space.index_of(&[d]).unwrap())).collect();
    let shift = ComplexShift::new(5.0, 0.1).unwrap();
    let est = estimators::estimate_fractional_moments(&ens, 31, shift, &pairs, 1.0 / 3.0, &mc(2000, SEED)).unwrap();
    let points: Vec<(f64, Estimate)> = (1..=15).map(|d| d as f64).zip(est).collect();
    match estimators::fit_decay(&points, None) {
        Ok(f) => (
            f.rate > 0.0 && f.r_squared >= 0.95,
            format!("xi_s = {:.4} (> 0), r^2 = {:.4} (>= 0.95), {} points", f.rate, f.r_squared, f.points_used),
        ),
        Err(e) => (false, format!("fit failed: {e}")),
    }
}

fn c4() -> Outcome {
    let ens = chain(15, 1.0, 10.0, 3);
    let ks: Vec<usize> = (4..=20).collect();
    // The mean increments fall off much faster than their spread, so a large
    // antithetic sample is needed to resolve more than a few of them.
    let m = McConfig { antithetic: true, ..mc(200_000, SEED) };
    let rep = estimators::telescope_series_diagnostic(&ens, &ks, 5.0, 1.0, 0, &m).unwrap();
    let direct = estimators::estimate_trace_resolvent(&ens, 22, &[5.0], 1.0, &m).unwrap()[0];
    let sum = *rep.partial_sums.last().unwrap();
    let err = rep.partial_sum_stderr.last().unwrap().hypot(direct.stderr);
    let gap = (sum - direct.mean).norm();
    let Some(fit) = rep.fit else {
        return (false, format!("fit failed: {:?}", rep.fit_note));
    };
    let ok = fit.rate > 0.0 && fit.r_squared >= 0.9 && gap <= 4.0 * err;
    (
        ok,
        format!(
            "log|T_K| slope = {:.4} (< 0), r^2 = {:.4} (>= 0.9) on {} resolved K; |sum - direct| = {gap:.2e} <= 4 x {err:.2e}",
            -fit.rate, fit.r_squared, fit.points_used
        ),
    )
}

fn c5() -> Outcome {
    let a = Corpus::hermitian(SEED, 4, 4, 1).instance(0).a;
    let r = verify::verify_finite_smooth(&a, &Covering::coordinates(4), &bump(3), &SmoothingConfig::default()).unwrap();
    (
        r.passed && r.max_relative_error <= 5e-3,
        format!("N = 4, eta = {}: max relative error = {:.2e} (<= 5e-3)", r.eta, r.max_relative_error),
    )
}

fn c6() -> Outcome {
    let corpus = Corpus::dissipative(SEED, 1, 8, 10_000, 0.0);
    let r = verify::verify_semigroup_hoelder(&corpus, &[0.3, 0.5, 0.7], &verify::semigroup::DEFAULT_T_GRID).unwrap();
    let ratios: Vec<String> = r.max_ratio.iter().map(|x| format!("{x:.3}")).collect();
    (
        r.violations == 0,
        format!("{} pairs, {} violations; max lhs/bound per s = [{}]", r.pairs, r.violations, ratios.join(", ")),
    )
}

fn c7() -> Outcome {
    let corpus = Corpus::dissipative(SEED, 1, 6, 100, 0.1);
    let cfg = IdentityConfig { t_max: 1e3, ..IdentityConfig::default() };
    let r = verify::verify_resolvent_semigroup_identity(&corpus, &bump(3), &cfg).unwrap();
    (
        r.passed && r.max_discrepancy <= 1e-6,
        format!("100 instances: max discrepancy = {:.2e} (<= 1e-6)", r.max_discrepancy),
    )
}

fn c8() -> Outcome {
    let rho = bump(3);
    let one = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    let zero = CMatrix::zeros(1, 1);
    let eps = [0.1, 0.01, 0.001];
    let scalar = verify::verify_spectral_averaging(
        &zero,
        &one,
        &[C64::new(1.0, 0.0)],
        &rho,
        &verify::spectral_avg::default_energy_grid(),
        &eps,
    )
    .unwrap();
    let limit = scalar.scalar_limit.unwrap();
    let gap = (scalar.sups[2] / limit - 1.0).abs();
    let ok_a = gap <= 0.01;
    let scalar_drift = scalar.sups[1] / scalar.sups[0] - 1.0;

    let energies = linspace(-3.0, 4.0, 200);
    let identity = CMatrix::identity(6, 6);
    let mut drift = 0.0f64;
    for inst in Corpus::hermitian(SEED, 6, 6, 5).instances() {
        let mut phi = vec![C64::new(0.0, 0.0); 6];
        phi[0] = C64::new(1.0, 0.0);
        let r = verify::verify_spectral_averaging(&inst.a, &identity, &phi, &rho, &energies, &[0.1, 0.01]).unwrap();
        drift = drift.max(r.stability_drift);
    }
    let ok_b = drift <= 0.02;
    (
        ok_a && ok_b,
        format!(
            "(a) 1x1 sup F = {:.4} vs pi |rho|_inf = {limit:.4}, gap {:.2}% (<= 1%) {}; \
             (b) 6x6 sup drift eps 0.1 -> 0.01 = {:.1}% (<= 2%) {} \
             [1x1 drift over the same eps range: {:.1}%]",
            scalar.sups[2],
            100.0 * gap,
            if ok_a { "ok" } else { "FAIL" },
            100.0 * drift,
            if ok_b { "ok" } else { "FAIL" },
            100.0 * scalar_drift
        ),
    )
}

fn c9() -> Outcome {
    let corpus = Corpus::hermitian(SEED, 2, 6, 400);
    let pair = verify::BumpPair::new(bump(3), bump(3), 1.0);
    let cfg = ResolventBoundConfig::default();
    let r = verify::verify_resolvent_average_bound(&corpus, &pair, &cfg).unwrap();
    let drift = (r.max_ratio_doubled / r.max_ratio - 1.0).abs();
    (
        r.min_slope >= cfg.s - 0.05 && drift <= 0.10,
        format!(
            "min slope = {:.3} (>= {:.2}); max ratio {:.4} -> {:.4} on doubling, change {:.1}% (<= 10%)",
            r.min_slope,
            cfg.s - 0.05,
            r.max_ratio,
            r.max_ratio_doubled,
            100.0 * drift
        ),
    )
}

/// Small configurations of every sampling command, run with one worker and
/// replayed with eight.
fn c10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    let configs = [
        (Command::Dos, "[model]\nhalf_width = 4\ncoupling = 2.0\n[run]\nepsilons = [0.2, 0.05]\nn_samples = 300\n"),
        (Command::DosDeriv, "[model]\nhalf_width = 4\ncoupling = 2.0\n[run]\nell = 1\nn_samples = 300\n"),
        (Command::Ids, "[model]\nhalf_width = 4\n[run]\nn_samples = 200\n"),
        (Command::Fracmom, "[model]\nhalf_width = 4\ncoupling = 5.0\n[run]\nn_samples = 200\n"),
        (Command::Telescope, "[model]\nhalf_width = 4\ncoupling = 5.0\n[run]\nn_samples = 200\n"),
    ];
    for (command, text) in configs {
        let mut cfg = ExperimentConfig::parse(text).unwrap();
        cfg.run.command = command;
        cfg.run.workers = 1;
        let dir = tmp.path().join(command.name());
        cfg.output.directory = dir.to_string_lossy().into_owned();
        let manifest = run(&cfg).unwrap();
        let replay = reproduce(&dir.join(smoothdos_cli::MANIFEST_FILE), Some(8));
        if let Err(e) = &replay {
            ok = false;
            notes.push(format!("{command}: {e}"));
        } else {
            notes.push(format!("{command}: {} files identical", manifest.outputs.len()));
        }
    }
    (ok, format!("workers 1 vs 8: {}", notes.join("; ")))
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "derivative identity", c1),
        (2, "exact-model DOS", c2),
        (3, "fractional-moment decay", c3),
        (4, "telescoping decay", c4),
        (5, "finite-volume smoothing", c5),
        (6, "semigroup Hoelder inequality", c6),
        (7, "resolvent/semigroup identity", c7),
        (8, "spectral averaging", c8),
        (9, "averaged resolvent Hoelder scaling", c9),
        (10, "determinism", c10),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {n:>2}: {} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed, total {:.1} s", start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
