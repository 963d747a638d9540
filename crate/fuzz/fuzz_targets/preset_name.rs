//! cargo +nightly fuzz run preset_name

#![no_main]

use gnss_cpd::presets::Preset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = text.parse::<Preset>() {
        assert_eq!(p.name().parse::<Preset>().ok(), Some(p));
    }
});
