#![no_main]

use libfuzzer_sys::fuzz_target;
use lifelog_core::ingest::{parse_heart_rate_csv, write_heart_rate_csv, MAX_BPM, MIN_BPM};

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = parse_heart_rate_csv(data, 0) else {
        return;
    };
    let r = &parsed.report;
    assert_eq!(r.accepted, parsed.records.len());
    assert_eq!(r.rejected, r.duplicates + r.out_of_range + r.malformed);
    assert!(parsed.records.windows(2).all(|w| w[0].t < w[1].t));
    assert!(parsed
        .records
        .iter()
        .all(|s| (MIN_BPM..=MAX_BPM).contains(&s.bpm)));

    let again = parse_heart_rate_csv(write_heart_rate_csv(&parsed.records, 0).as_bytes(), 0)
        .expect("canonical output has a header");
    assert_eq!(again.records, parsed.records);
});
