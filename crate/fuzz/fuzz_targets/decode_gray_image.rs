#![no_main]

use libfuzzer_sys::fuzz_target;
use ssm_edge::dataset::decode_gray;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_gray(data) {
        assert!(img.iter().all(|v| (0.0..=255.0).contains(v)));
    }
});
