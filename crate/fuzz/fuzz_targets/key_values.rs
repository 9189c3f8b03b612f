#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(map) = fq_core::cache::parse_key_values(text) {
        let again = fq_core::cache::parse_key_values(&fq_core::cache::render_key_values(&map));
        assert_eq!(again.ok(), Some(map));
    }
    if let Ok(cfg) = fq_cli::config::RunConfig::from_key_values(text) {
        let back = fq_cli::config::RunConfig::from_key_values(&cfg.to_key_values()).expect("round trip");
        assert_eq!(back.to_key_values(), cfg.to_key_values());
    }
});
