// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use smoothdos_cli::RunManifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = RunManifest::from_json(text) {
        let _ = m.hash_matches();
        let again = RunManifest::from_json(&m.to_json()).expect("re-parse of serialised manifest");
        assert_eq!(again.outputs, m.outputs);
        assert_eq!(again.config, m.config);
    }
});
