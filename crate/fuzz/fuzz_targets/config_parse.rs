// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use smoothdos_cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Any accepted config must survive a round trip through its own text.
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let again = ExperimentConfig::parse(&cfg.to_text()).expect("re-parse of serialised config");
        assert_eq!(again, cfg);
    }
});
