#![no_main]

use collapse_lab::io::{resolve_config, RawConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(raw) = RawConfig::from_json_header(text) {
        let _ = resolve_config(raw);
    }
});
