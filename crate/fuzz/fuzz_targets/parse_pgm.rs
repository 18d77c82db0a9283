#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = phg_core::grid::parse_pgm(data) {
        // Whatever decodes must re-encode and decode to the same grid.
        let again = phg_core::grid::parse_pgm(&grid.to_pgm().unwrap()).unwrap();
        assert_eq!(grid, again);
    }
});
