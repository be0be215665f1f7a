#![no_main]

use anosov_limits::scenario::{MAX_RADIUS, MIN_RADIUS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match anosov_limits::parse_scenario(text) {
        Ok(s) => {
            assert!((MIN_RADIUS..=MAX_RADIUS).contains(&s.radius));
            assert!(s.classify.grid_step > 0.0 && s.classify.grid_step <= 0.02);
        }
        Err(e) => assert!(e.line <= text.lines().count()),
    }
});
