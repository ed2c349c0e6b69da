#![no_main]

use libfuzzer_sys::fuzz_target;
use ssm_edge::dataset::decode_edge_map;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = decode_edge_map(data) {
        assert!(map.as_grid().iter().all(|&v| v == 0 || v == 255));
    }
});
