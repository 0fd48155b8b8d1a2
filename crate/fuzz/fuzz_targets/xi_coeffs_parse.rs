//! Fuzz the initial-field coefficient file parser.
//!
//! Oracle: a successful parse yields only finite values, never more of them
//! than the input has lines.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(coeffs) = spde::harness::parse_coeff_lines(text) {
        assert!(coeffs.iter().all(|v| v.is_finite()));
        assert!(coeffs.len() <= text.lines().count());
    }
});
