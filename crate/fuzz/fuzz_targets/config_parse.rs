//! Fuzz the configuration parser.
//!
//! Besides "no panics on arbitrary bytes", this target checks a round-trip
//! oracle: any document that parses must serialize back to a document that
//! parses to the same value.  An absolute base directory makes the path
//! joins idempotent, so byte/value equality is exact.

#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let base = Path::new("/fuzz-base");
    if let Ok(cfg) = spde::config::parse_config(text, base) {
        let serialized =
            spde::config::serialize_config(&cfg).expect("parsed configs always serialize");
        let reparsed = spde::config::parse_config(&serialized, base)
            .expect("serialized configs always re-parse");
        assert_eq!(cfg, reparsed, "round trip changed the configuration");
    }
});
