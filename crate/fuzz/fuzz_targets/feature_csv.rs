#![no_main]

use libfuzzer_sys::fuzz_target;
use phg_core::diagram::PointFeatureMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = PointFeatureMatrix::from_csv(text) {
            assert_eq!(PointFeatureMatrix::from_csv(&m.to_csv()).unwrap(), m);
        }
    }
});
