#![no_main]

//! Flag value parsers: weights, flips, erosion parameters, weight protocol.

use libfuzzer_sys::fuzz_target;
use ssm_edge::erosion::ErosionParams;
use ssm_edge::pipeline::WeightProtocol;
use ssm_edge::scan::{Flips, SaimWeights};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(w) = s.parse::<SaimWeights>() {
        assert!(w.validate().is_ok());
        assert_eq!(w.to_string().parse::<SaimWeights>().unwrap(), w);
    }
    if let Ok(f) = s.parse::<Flips>() {
        assert_eq!(f.to_string().parse::<Flips>().unwrap(), f);
    }
    if let Ok(p) = s.parse::<ErosionParams>() {
        assert!(p.validate().is_ok());
        assert_eq!(p.to_string().parse::<ErosionParams>().unwrap(), p);
    }
    let _ = s.parse::<WeightProtocol>();
});
