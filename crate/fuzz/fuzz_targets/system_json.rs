#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sys) = fq_core::TrigSystem::from_json(text) {
        let back = fq_core::TrigSystem::from_json(&sys.to_json()).expect("round trip");
        assert_eq!(back.to_json(), sys.to_json());
        let _ = sys.eval_system([0.25, -0.5]);
    }
});
