//! Fuzz the two small value parsers: resolution-scale fractions and real
//! numbers (decimal or a/b).
//!
//! Oracles: an accepted scale is always an exponent in 0..=6; an accepted
//! real is always finite.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = spde::config::parse_scale(text) {
        assert!(f <= 6, "scale exponent {f} out of range");
    }
    if let Ok(x) = spde::config::parse_real(text) {
        assert!(x.is_finite());
    }
});
