use chrono::{DateTime, NaiveDateTime};
use csv::{ByteRecord, ReaderBuilder, Trim};

use super::{GpsFix, HeartRateSample, IssueKind, ParseReport, Parsed, MAX_BPM, MIN_BPM};
use crate::{Epoch, Error, Result};

/// Device-local timestamp layout of the canonical exports.
pub const DEFAULT_TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Column layout of a heart-rate export.
///
/// The canonical schema is `time,bpm`. Vendor exports with other headers or
/// time layouts are read by naming their columns here; extra columns are
/// ignored.
#[derive(Debug, Clone)]
pub struct HeartRateColumns {
    pub time: String,
    pub bpm: String,
    pub time_format: String,
}

impl Default for HeartRateColumns {
    fn default() -> Self {
        Self {
            time: "time".into(),
            bpm: "bpm".into(),
            time_format: DEFAULT_TIME_FORMAT.into(),
        }
    }
}

/// Column layout of a GPS export; canonical schema is `time,lat,lon`.
#[derive(Debug, Clone)]
pub struct GpsColumns {
    pub time: String,
    pub lat: String,
    pub lon: String,
    pub time_format: String,
}

impl Default for GpsColumns {
    fn default() -> Self {
        Self {
            time: "time".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            time_format: DEFAULT_TIME_FORMAT.into(),
        }
    }
}

pub fn parse_heart_rate_csv(bytes: &[u8], tz_offset: i64) -> Result<Parsed<HeartRateSample>> {
    parse_heart_rate_csv_with(bytes, tz_offset, &HeartRateColumns::default())
}

pub fn parse_heart_rate_csv_with(
    bytes: &[u8],
    tz_offset: i64,
    columns: &HeartRateColumns,
) -> Result<Parsed<HeartRateSample>> {
    let fmt = columns.time_format.as_str();
    parse_rows(bytes, &[&columns.time, &columns.bpm], |fields| {
        let t = parse_time(fields[0], fmt, tz_offset)?;
        let bpm: u16 = fields[1]
            .parse()
            .map_err(|_| IssueKind::Malformed(format!("bpm {:?} is not an integer", fields[1])))?;
        if !(MIN_BPM..=MAX_BPM).contains(&bpm) {
            return Err(IssueKind::OutOfRange(format!(
                "bpm {bpm} outside {MIN_BPM}..={MAX_BPM}"
            )));
        }
        Ok((t, HeartRateSample { t, bpm }))
    })
}

pub fn parse_gps_csv(bytes: &[u8], tz_offset: i64) -> Result<Parsed<GpsFix>> {
    parse_gps_csv_with(bytes, tz_offset, &GpsColumns::default())
}

pub fn parse_gps_csv_with(
    bytes: &[u8],
    tz_offset: i64,
    columns: &GpsColumns,
) -> Result<Parsed<GpsFix>> {
    let fmt = columns.time_format.as_str();
    parse_rows(
        bytes,
        &[&columns.time, &columns.lat, &columns.lon],
        |fields| {
            let t = parse_time(fields[0], fmt, tz_offset)?;
            let lat = parse_coord(fields[1], "lat")?;
            let lon = parse_coord(fields[2], "lon")?;
            if !(-90.0..=90.0).contains(&lat) {
                return Err(IssueKind::OutOfRange(format!(
                    "lat {lat} outside [-90, 90]"
                )));
            }
            if !(-180.0..=180.0).contains(&lon) {
                return Err(IssueKind::OutOfRange(format!(
                    "lon {lon} outside [-180, 180]"
                )));
            }
            Ok((t, GpsFix { t, lat, lon }))
        },
    )
}

fn parse_time(field: &str, fmt: &str, tz_offset: i64) -> Result<Epoch, IssueKind> {
    let local = NaiveDateTime::parse_from_str(field, fmt)
        .map_err(|e| IssueKind::Malformed(format!("time {field:?}: {e}")))?;
    local
        .and_utc()
        .timestamp()
        .checked_sub(tz_offset)
        .ok_or_else(|| IssueKind::OutOfRange(format!("time {field:?} overflows with offset")))
}

fn parse_coord(field: &str, name: &str) -> Result<f64, IssueKind> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IssueKind::Malformed(format!(
            "{name} {field:?} is not a number"
        ))),
    }
}

/// Shared row loop: header lookup, per-row decode, then sort by time and
/// drop repeated timestamps (first occurrence wins).
fn parse_rows<T>(
    bytes: &[u8],
    wanted: &[&str],
    mut decode: impl FnMut(&[&str]) -> Result<(Epoch, T), IssueKind>,
) -> Result<Parsed<T>> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(bytes);

    let mut records = reader.byte_records();
    let header = match records.next() {
        None => {
            return Err(Error::Header(
                "input is empty; expected a header row".into(),
            ))
        }
        Some(Err(e)) => return Err(Error::Header(e.to_string())),
        Some(Ok(h)) => h,
    };
    let columns = locate_columns(&header, wanted)?;

    let mut report = ParseReport::default();
    let mut rows: Vec<(Epoch, u64, T)> = Vec::new();
    for record in records {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.reject(line, IssueKind::Malformed(e.to_string()));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let mut fields: Vec<&str> = Vec::with_capacity(columns.len());
        let mut bad = None;
        for &idx in &columns {
            match record.get(idx).map(std::str::from_utf8) {
                Some(Ok(s)) => fields.push(s),
                Some(Err(_)) => bad = Some(format!("column {} is not UTF-8", idx + 1)),
                None => bad = Some(format!("row has {} fields", record.len())),
            }
            if bad.is_some() {
                break;
            }
        }
        if let Some(reason) = bad {
            report.reject(line, IssueKind::Malformed(reason));
            continue;
        }
        match decode(&fields) {
            Ok((t, value)) => rows.push((t, line, value)),
            Err(kind) => report.reject(line, kind),
        }
    }

    rows.sort_by_key(|&(t, line, _)| (t, line));
    let mut out: Vec<T> = Vec::with_capacity(rows.len());
    let mut last: Option<Epoch> = None;
    for (t, line, value) in rows {
        if last == Some(t) {
            report.reject(line, IssueKind::Duplicate);
            continue;
        }
        last = Some(t);
        out.push(value);
    }
    report.accepted = out.len();
    report.issues.sort_by_key(|i| i.line);
    Ok(Parsed {
        records: out,
        report,
    })
}

fn locate_columns(header: &ByteRecord, wanted: &[&str]) -> Result<Vec<usize>> {
    let names: Vec<String> = header
        .iter()
        .map(|f| String::from_utf8_lossy(f).trim().to_ascii_lowercase())
        .collect();
    wanted
        .iter()
        .map(|w| {
            let w = w.trim().to_ascii_lowercase();
            names.iter().position(|n| *n == w).ok_or_else(|| {
                Error::Header(format!("missing column {w:?} (found {})", names.join(",")))
            })
        })
        .collect()
}

fn format_local(t: Epoch, tz_offset: i64, fmt: &str) -> String {
    DateTime::from_timestamp(t + tz_offset, 0)
        .map(|d| d.naive_utc().format(fmt).to_string())
        .unwrap_or_default()
}

/// Canonical `time,bpm` export of accepted samples, in device-local time.
pub fn write_heart_rate_csv(samples: &[HeartRateSample], tz_offset: i64) -> String {
    let mut out = String::from("time,bpm\n");
    for s in samples {
        out.push_str(&format_local(s.t, tz_offset, DEFAULT_TIME_FORMAT));
        out.push(',');
        out.push_str(&s.bpm.to_string());
        out.push('\n');
    }
    out
}

/// Canonical `time,lat,lon` export; coordinates use shortest round-trip
/// formatting so re-parsing is lossless.
pub fn write_gps_csv(fixes: &[GpsFix], tz_offset: i64) -> String {
    let mut out = String::from("time,lat,lon\n");
    for f in fixes {
        out.push_str(&format!(
            "{},{},{}\n",
            format_local(f.t, tz_offset, DEFAULT_TIME_FORMAT),
            f.lat,
            f.lon
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPOCH_20170402_0600: i64 = 1_491_112_800;

    #[test]
    fn two_rows_map_directly() {
        let csv = b"time,bpm\n2017-04-02T06:00:00,72\n2017-04-02T06:00:01,74\n";
        let parsed = parse_heart_rate_csv(csv, 0).unwrap();
        let bpm: Vec<u16> = parsed.records.iter().map(|s| s.bpm).collect();
        assert_eq!(bpm, [72, 74]);
        assert_eq!(parsed.records[0].t, EPOCH_20170402_0600);
        assert_eq!(
            parsed.report.to_string(),
            "accepted=2 rejected=0 duplicates=0"
        );
    }

    #[test]
    fn tz_offset_is_subtracted() {
        let csv = b"time,bpm\n2017-04-02T15:00:00,72\n";
        let parsed = parse_heart_rate_csv(csv, 9 * 3600).unwrap();
        assert_eq!(parsed.records[0].t, EPOCH_20170402_0600);
    }

    #[test]
    fn out_of_range_bpm_is_rejected_not_clamped() {
        let csv =
            b"time,bpm\n2017-04-02T06:00:00,72\n2017-04-02T06:00:01,300\n2017-04-02T06:00:02,24\n";
        let parsed = parse_heart_rate_csv(csv, 0).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.report.out_of_range, 2);
        assert_eq!(parsed.report.rejected, 2);
        assert_eq!(parsed.report.issues[0].line, 3);
    }

    #[test]
    fn bpm_bounds_are_inclusive() {
        let csv = b"time,bpm\n2017-04-02T06:00:00,25\n2017-04-02T06:00:01,250\n";
        assert_eq!(parse_heart_rate_csv(csv, 0).unwrap().records.len(), 2);
    }

    #[test]
    fn malformed_header_is_fatal() {
        assert!(matches!(
            parse_heart_rate_csv(b"when,rate\n", 0),
            Err(Error::Header(_))
        ));
        assert!(matches!(
            parse_heart_rate_csv(b"", 0),
            Err(Error::Header(_))
        ));
    }

    #[test]
    fn header_only_is_empty_not_error() {
        let parsed = parse_heart_rate_csv(b"time,bpm\n", 0).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.report.rows(), 0);
    }

    #[test]
    fn bad_rows_are_skipped_and_counted() {
        let csv = b"time,bpm\nnoon,72\n2017-04-02T06:00:00,seventy\n2017-04-02T06:00:01\n2017-04-02T06:00:02,80\n";
        let parsed = parse_heart_rate_csv(csv, 0).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.report.malformed, 3);
        assert_eq!(parsed.report.rows(), 4);
    }

    #[test]
    fn heart_rate_is_sorted_and_deduplicated() {
        let csv =
            b"time,bpm\n2017-04-02T06:00:02,80\n2017-04-02T06:00:00,70\n2017-04-02T06:00:02,99\n";
        let parsed = parse_heart_rate_csv(csv, 0).unwrap();
        let bpm: Vec<u16> = parsed.records.iter().map(|s| s.bpm).collect();
        assert_eq!(bpm, [70, 80]);
        assert_eq!(parsed.report.duplicates, 1);
    }

    #[test]
    fn six_hours_twenty_six_minutes_at_one_hertz() {
        let start = NaiveDateTime::parse_from_str("2017-04-02T06:00:00", DEFAULT_TIME_FORMAT)
            .unwrap()
            .and_utc()
            .timestamp();
        let n = 6 * 3600 + 26 * 60;
        let samples: Vec<HeartRateSample> = (0..n)
            .map(|i| HeartRateSample {
                t: start + i,
                bpm: 60 + (i % 40) as u16,
            })
            .collect();
        let csv = write_heart_rate_csv(&samples, 0);
        let parsed = parse_heart_rate_csv(csv.as_bytes(), 0).unwrap();
        assert_eq!(parsed.records.len(), 23160);
        assert_eq!(parsed.records, samples);
    }

    #[test]
    fn gps_row_maps_directly() {
        let csv = b"time,lat,lon\n2017-04-02T06:00:00,33.8940,130.8400\n";
        let parsed = parse_gps_csv(csv, 0).unwrap();
        assert_eq!(
            parsed.records,
            [GpsFix {
                t: EPOCH_20170402_0600,
                lat: 33.894,
                lon: 130.84
            }]
        );
    }

    #[test]
    fn gps_duplicate_keeps_first() {
        let csv =
            b"time,lat,lon\n2017-04-02T06:00:00,33.8940,130.8400\n2017-04-02T06:00:00,33.9,130.9\n";
        let parsed = parse_gps_csv(csv, 0).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].lat, 33.894);
        assert_eq!(parsed.report.duplicates, 1);
        assert_eq!(
            parsed.report.to_string(),
            "accepted=1 rejected=1 duplicates=1"
        );
    }

    #[test]
    fn gps_bounds_gate() {
        let csv = b"time,lat,lon\n2017-04-02T06:00:00,91.0,130.84\n2017-04-02T06:00:01,33.0,-180.5\n2017-04-02T06:00:02,NaN,1\n";
        let parsed = parse_gps_csv(csv, 0).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.report.out_of_range, 2);
        assert_eq!(parsed.report.malformed, 1);
    }

    #[test]
    fn vendor_columns_via_adapter() {
        let csv = b"Sample,Time,HR (bpm)\n1,02.04.2017 06:00:00,72\n";
        let columns = HeartRateColumns {
            time: "Time".into(),
            bpm: "HR (bpm)".into(),
            time_format: "%d.%m.%Y %H:%M:%S".into(),
        };
        let parsed = parse_heart_rate_csv_with(csv, 0, &columns).unwrap();
        assert_eq!(parsed.records[0].t, EPOCH_20170402_0600);
    }

    #[test]
    fn bom_and_padding_are_tolerated() {
        let csv = b"\xEF\xBB\xBF time , bpm \n 2017-04-02T06:00:00 , 72 \n";
        assert_eq!(parse_heart_rate_csv(csv, 0).unwrap().records.len(), 1);
    }
}
