#![no_main]

use collapse_lab::io::parse_state;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else { return };
    let Ok(spec) = std::str::from_utf8(rest) else { return };
    let n = (first != 0).then_some(first as usize % 16 + 1);
    if let Ok((state, _)) = parse_state(spec, n) {
        assert!(state.is_normalized());
        if let Some(n) = n {
            assert_eq!(state.dim(), n);
        }
    }
});
