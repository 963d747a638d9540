//! cargo +nightly fuzz run plan_csv

#![no_main]

use gnss_cpd::plan::parse_plan_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_plan_csv(text) {
        assert!(rows.iter().all(|r| r.node_a < r.node_b));
    }
});
