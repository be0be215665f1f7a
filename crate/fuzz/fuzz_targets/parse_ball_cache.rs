#![no_main]

use anosov_core::group::cache::parse_ball_cache;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cache) = parse_ball_cache(text) {
        for e in &cache.entries {
            assert_eq!(e.entries.len(), cache.dim * cache.dim);
            assert!(e.entries.iter().all(|x| x.is_finite()));
        }
    }
});
