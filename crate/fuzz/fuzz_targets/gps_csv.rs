#![no_main]

use libfuzzer_sys::fuzz_target;
use lifelog_core::ingest::{parse_gps_csv, write_gps_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = parse_gps_csv(data, 0) else {
        return;
    };
    let r = &parsed.report;
    assert_eq!(r.accepted, parsed.records.len());
    assert_eq!(r.rejected, r.duplicates + r.out_of_range + r.malformed);
    assert!(parsed.records.windows(2).all(|w| w[0].t < w[1].t));

    let again = parse_gps_csv(write_gps_csv(&parsed.records, 0).as_bytes(), 0)
        .expect("canonical output has a header");
    assert_eq!(again.records, parsed.records);
});
