#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(grid) = phg_core::grid::parse_csv_grid(text) {
            assert_eq!(grid.values().len(), grid.height() * grid.width());
        }
    }
});
