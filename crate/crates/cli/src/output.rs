// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Fixed-schema CSV curves.

use std::fmt::Write;

use smoothdos::estimators::Estimate;

pub const CSV_HEADER: &str = "E,epsilon,ell,mean_re,mean_im,stderr,n_samples";

/// One grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsvRow {
    pub energy: f64,
    pub epsilon: f64,
    pub ell: usize,
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl CsvRow {
    /// Row for `scale · est`.
    pub fn scaled(energy: f64, epsilon: f64, ell: usize, est: &Estimate, scale: f64) -> Self {
        Self {
            energy,
            epsilon,
            ell,
            mean_re: est.mean.re * scale,
            mean_im: est.mean.im * scale,
            stderr: est.stderr * scale.abs(),
            n_samples: est.n_samples,
        }
    }
}

/// Header plus one line per row; floats carry 17 significant digits.
pub fn csv_text(rows: &[CsvRow]) -> Vec<u8> {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{}",
            r.energy, r.epsilon, r.ell, r.mean_re, r.mean_im, r.stderr, r.n_samples
        )
        .expect("writing to a String");
    }
    s.into_bytes()
}
