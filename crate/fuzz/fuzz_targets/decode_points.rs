#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(raw) = fq_core::cache::decode_points(data) {
        assert!(raw.separation > 0.0);
        assert!(raw.points.iter().all(|p| p[0].is_finite() && p[1].is_finite()));
    }
});
