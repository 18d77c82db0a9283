#![no_main]

use libfuzzer_sys::fuzz_target;
use phg_tinynn::checkpoint::Checkpoint;

// Input layout: u32 LE manifest length, manifest bytes, then the blob.
fuzz_target!(|data: &[u8]| {
    if data.len() < 4 {
        return;
    }
    let n = u32::from_le_bytes(data[..4].try_into().unwrap()) as usize;
    let rest = &data[4..];
    let (manifest, blob) = rest.split_at(n.min(rest.len()));
    if let Ok(ck) = Checkpoint::decode(manifest, blob) {
        let (m, b) = ck.encode();
        assert_eq!(Checkpoint::decode(m.as_bytes(), &b).unwrap(), ck);
    }
});
