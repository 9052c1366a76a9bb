#![no_main]

use libfuzzer_sys::fuzz_target;
use lifelog_core::ingest::{decode_image_timestamp, DEFAULT_IMAGE_PATTERN};

fuzz_target!(|input: (&str, i32)| {
    let (stem, tz) = input;
    let _ = decode_image_timestamp(stem, DEFAULT_IMAGE_PATTERN, i64::from(tz));
});
