#![no_main]

use libfuzzer_sys::fuzz_target;
use phg_core::diagram::PersistenceDiagram;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = PersistenceDiagram::from_json(data) {
        let back = PersistenceDiagram::from_json(d.to_json().as_bytes()).unwrap();
        assert_eq!(d, back);
    }
});
