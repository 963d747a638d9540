//! Scenario files come from users; parsing must reject junk without panicking,
//! and anything accepted must survive a JSON round trip.
//!
//! cargo +nightly fuzz run scenario_json

#![no_main]

use gnss_cpd::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Scenario::from_json(text) {
        let again = Scenario::from_json(&s.to_json()).expect("re-parse of emitted scenario");
        assert_eq!(again.to_json(), s.to_json());
        assert_eq!(again.nodes.len(), s.nodes.len());
    }
});
