//! Fuzz the run-configuration parser: arbitrary text must never panic, and
//! any config that parses must survive a render/reparse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use unravel_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::parse_str(text, "fuzz") {
        let rendered = cfg.render(&[], true);
        let back = RunConfig::parse_str(&rendered, "fuzz-rerender")
            .expect("rendered config must reparse");
        assert_eq!(back.num_modes, cfg.num_modes);
        assert_eq!(back.seed, cfg.seed);
    }
});
