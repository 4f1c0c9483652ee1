// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Cross-module checks through the public API.

use smoothdos::disorder::{Disorder, SingleSiteDensity};
use smoothdos::estimators::{self, Ensemble, McConfig};
use smoothdos::graph::ModelSpec;
use smoothdos::verify::{run_suite, SuiteConfig};

fn chain(half_width: usize, coupling: f64) -> Ensemble {
    let model = ModelSpec::lattice(1, half_width, 1, 1.0, 0.0, coupling).unwrap();
    Ensemble::new(model, Disorder::iid(SingleSiteDensity::new(3).unwrap()))
}

#[test]
fn bump_density_is_normalised() {
    // Plain trapezoid rule; the bump and its first derivatives vanish at the
    // ends so the rule converges fast.
    for p in 1..=6 {
        let rho = SingleSiteDensity::new(p).unwrap();
        let n = 20_000;
        let mass: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * rho.value(i as f64 / n as f64)
            })
            .sum::<f64>()
            / n as f64;
        assert!((mass - 1.0).abs() < 1e-8, "p = {p}: mass {mass}");
    }
}

#[test]
fn smoothed_dos_ignores_the_worker_count() {
    let ens = chain(6, 2.0);
    let energies = [-1.0, 0.5, 2.0];
    let one = estimators::estimate_smoothed_dos(&ens, 13, &energies, 0.1, &McConfig { workers: 1, ..McConfig::with_samples(400, 9) })
        .unwrap();
    let four = estimators::estimate_smoothed_dos(&ens, 13, &energies, 0.1, &McConfig { workers: 4, ..McConfig::with_samples(400, 9) })
        .unwrap();
    for (a, b) in one.iter().zip(&four) {
        assert_eq!(a.mean.re.to_bits(), b.mean.re.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}

#[test]
fn ids_is_a_distribution_function() {
    let ens = chain(5, 2.0);
    let energies: Vec<f64> = (0..=30).map(|i| -4.0 + 0.3 * i as f64).collect();
    let ids = estimators::estimate_ids(&ens, 11, &energies, &McConfig::with_samples(300, 4)).unwrap();
    assert_eq!(ids[0].per_state.mean.re, 0.0);
    assert_eq!(ids.last().unwrap().per_state.mean.re, 1.0);
    for w in ids.windows(2) {
        assert!(w[1].per_state.mean.re >= w[0].per_state.mean.re);
    }
}

#[test]
fn small_verification_suite_passes() {
    let cfg = SuiteConfig { semigroup_pairs: 200, identity_instances: 4, ..SuiteConfig::default() };
    let report = run_suite(&cfg).unwrap();
    assert!(report.passed(), "{report:#?}");
}
