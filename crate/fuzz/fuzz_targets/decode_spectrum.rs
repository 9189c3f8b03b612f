#![no_main]

use fq_core::cache::{decode_spectrum, encode_spectrum};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = decode_spectrum(data) {
        let back = decode_spectrum(&encode_spectrum(&spec)).expect("re-encoded spectrum decodes");
        assert_eq!(back.entries, spec.entries);
    }
});
