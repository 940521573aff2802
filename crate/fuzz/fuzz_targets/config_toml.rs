#![no_main]

use collapse_lab::io::{resolve_config, RawConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let Ok(raw) = RawConfig::from_toml_str(text) else { return };
    let written = toml::to_string(&raw).expect("a parsed config serializes");
    let reparsed = RawConfig::from_toml_str(&written).expect("serialized config must parse");
    // Compared as text: NaN fields never compare equal.
    assert_eq!(written, toml::to_string(&reparsed).unwrap());
    let _ = resolve_config(raw);
});
