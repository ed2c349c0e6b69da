#![no_main]

//! First two bytes give the map size, the remaining bits its pixels.

use libfuzzer_sys::fuzz_target;
use ssm_edge::erosion::{wind_erosion, ErosionParams};
use ssm_edge::{BinaryEdgeMap, Grid};

fuzz_target!(|data: &[u8]| {
    let [r, c, bits @ ..] = data else {
        return;
    };
    let (rows, cols) = (usize::from(r % 48) + 1, usize::from(c % 48) + 1);
    let mask = Grid::from_fn(rows, cols, |i, j| {
        let k = i * cols + j;
        bits.get(k / 8).is_some_and(|b| b >> (k % 8) & 1 == 1)
    });
    let map = BinaryEdgeMap::from_mask(&mask);
    let (out, trace) = wind_erosion(&map, &ErosionParams::default()).unwrap();
    for p in out.edge_pixels() {
        assert!(map.is_edge(p));
    }
    assert_eq!(
        trace.input_pixels,
        trace.output_pixels + trace.deleted_pixels + trace.dropped_junction_pixels
    );
});
