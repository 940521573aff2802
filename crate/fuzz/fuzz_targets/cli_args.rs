#![no_main]

use collapse_lab::io::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let args: Vec<&str> = text.split_whitespace().collect();
    // `--config` would read arbitrary paths from disk.
    if args.iter().any(|a| a.starts_with("--config")) {
        return;
    }
    if let Ok(parsed) = parse_config(args) {
        let mut echo = parsed.config.echo.clone();
        echo.out = parsed.config.out.clone();
        let again = collapse_lab::io::resolve_config(echo).expect("an echoed config resolves");
        assert_eq!(again.config.params, parsed.config.params);
    }
});
