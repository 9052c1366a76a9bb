#![no_main]

use libfuzzer_sys::fuzz_target;
use lifelog_core::bundle::Manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(m) = Manifest::from_json(data) else {
        return;
    };
    // Anything accepted re-serializes to a manifest that reads back equal
    // once quantized.
    let q = m.quantized();
    let json = q.to_json().expect("serializable");
    assert_eq!(Manifest::from_json(&json).expect("re-readable"), q);
});
