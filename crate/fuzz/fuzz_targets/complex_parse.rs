//! Fuzz the complex-scalar scanner used for coupling lists and amplitudes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use unravel_cli::config::parse_complex;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_complex(text);
    }
});
