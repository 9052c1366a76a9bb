//! Device export ingestion.
//!
//! Heart rate and GPS arrive as CSV in device-local time; frames arrive as a
//! directory of timestamp-named JPEG/PNG files. Everything is converted to
//! UTC epoch seconds here by subtracting one per-dataset offset, so every
//! later join is an integer comparison.

mod csv_export;
mod images;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Epoch, Result};

pub use csv_export::{
    parse_gps_csv, parse_gps_csv_with, parse_heart_rate_csv, parse_heart_rate_csv_with,
    write_gps_csv, write_heart_rate_csv, GpsColumns, HeartRateColumns, DEFAULT_TIME_FORMAT,
};
pub use images::{
    blur_score, decode_image_timestamp, scan_images, score_image_bytes, ImageScan, ScanOptions,
    ScanReport, DEFAULT_IMAGE_PATTERN, DEFAULT_SHARPNESS_THRESHOLD,
};

/// Lowest plausible heart rate; rows below are rejected.
pub const MIN_BPM: u16 = 25;
/// Highest plausible heart rate; rows above are rejected.
pub const MAX_BPM: u16 = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeartRateSample {
    pub t: Epoch,
    pub bpm: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsFix {
    pub t: Epoch,
    pub lat: f64,
    pub lon: f64,
}

/// One lifelog frame on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    /// File stem; unique within a dataset.
    pub id: String,
    pub path: PathBuf,
    pub t: Epoch,
    /// Variance of the Laplacian response; higher is sharper.
    pub blur_score: f64,
    pub sharp: bool,
}

/// All three streams of one recording, in UTC.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub hr: Vec<HeartRateSample>,
    pub fixes: Vec<GpsFix>,
    pub images: Vec<ImageRecord>,
    pub tz_offset_applied: i64,
}

impl Dataset {
    /// Sharp frames only, in time order.
    pub fn sharp_images(&self) -> Vec<ImageRecord> {
        self.images.iter().filter(|i| i.sharp).cloned().collect()
    }

    /// First and last timestamp over all streams, if any record exists.
    pub fn span(&self) -> Option<(Epoch, Epoch)> {
        let ts = self
            .hr
            .iter()
            .map(|s| s.t)
            .chain(self.fixes.iter().map(|f| f.t))
            .chain(self.images.iter().map(|i| i.t));
        ts.fold(None, |acc, t| match acc {
            None => Some((t, t)),
            Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
        })
    }
}

/// Where one dataset's exports live.
#[derive(Debug, Clone, Default)]
pub struct DatasetSources {
    pub hr: Option<PathBuf>,
    pub gps: Option<PathBuf>,
    pub images: Option<PathBuf>,
}

/// Parse reports for each source that was read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReports {
    pub hr: Option<ParseReport>,
    pub gps: Option<ParseReport>,
    pub images: Option<ScanReport>,
}

impl Dataset {
    /// Reads whichever sources are given. Missing sources leave their stream
    /// empty.
    pub fn load(
        sources: &DatasetSources,
        tz_offset: i64,
        scan: &ScanOptions,
    ) -> Result<(Dataset, IngestReports)> {
        let mut dataset = Dataset {
            tz_offset_applied: tz_offset,
            ..Dataset::default()
        };
        let mut reports = IngestReports::default();
        if let Some(path) = &sources.hr {
            let parsed = parse_heart_rate_csv(&read(path)?, tz_offset)?;
            dataset.hr = parsed.records;
            reports.hr = Some(parsed.report);
        }
        if let Some(path) = &sources.gps {
            let parsed = parse_gps_csv(&read(path)?, tz_offset)?;
            dataset.fixes = parsed.records;
            reports.gps = Some(parsed.report);
        }
        if let Some(dir) = &sources.images {
            let scanned = scan_images(dir, tz_offset, scan)?;
            dataset.images = scanned.records;
            reports.images = Some(scanned.report);
        }
        Ok((dataset, reports))
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| crate::Error::io(path, e))
}

/// Records accepted by a parser plus what happened to the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub report: ParseReport,
}

/// Accounting for one parsed export.
///
/// Every non-blank data row ends up either accepted or rejected; duplicates
/// are a subset of the rejected rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub accepted: usize,
    pub rejected: usize,
    pub duplicates: usize,
    pub out_of_range: usize,
    pub malformed: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<RowIssue>,
}

impl ParseReport {
    pub fn rows(&self) -> usize {
        self.accepted + self.rejected
    }

    pub(crate) fn reject(&mut self, line: u64, kind: IssueKind) {
        self.rejected += 1;
        match kind {
            IssueKind::Duplicate => self.duplicates += 1,
            IssueKind::OutOfRange(_) => self.out_of_range += 1,
            IssueKind::Malformed(_) => self.malformed += 1,
        }
        self.issues.push(RowIssue { line, kind });
    }
}

impl fmt::Display for ParseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "accepted={} rejected={} duplicates={}",
            self.accepted, self.rejected, self.duplicates
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowIssue {
    /// 1-based line in the input.
    pub line: u64,
    pub kind: IssueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum IssueKind {
    Malformed(String),
    OutOfRange(String),
    Duplicate,
}
