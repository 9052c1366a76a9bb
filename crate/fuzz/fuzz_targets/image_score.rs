#![no_main]

use libfuzzer_sys::fuzz_target;
use lifelog_core::ingest::score_image_bytes;

fuzz_target!(|data: &[u8]| {
    if let Ok(score) = score_image_bytes(data) {
        assert!(score.is_finite() && score >= 0.0);
    }
});
