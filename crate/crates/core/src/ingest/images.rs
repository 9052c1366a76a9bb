use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use image::GrayImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ImageRecord;
use crate::{Epoch, Error, Result};

/// chrono layout of the timestamp embedded in frame filenames
/// (`20170402_060030.jpg`).
pub const DEFAULT_IMAGE_PATTERN: &str = "%Y%m%d_%H%M%S";

/// Frames scoring at or above this are considered sharp.
pub const DEFAULT_SHARPNESS_THRESHOLD: f64 = 100.0;

const EXTENSIONS: &[&str] = &["jpg", "jpeg", "png"];

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub pattern: String,
    pub sharpness_threshold: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            pattern: DEFAULT_IMAGE_PATTERN.into(),
            sharpness_threshold: DEFAULT_SHARPNESS_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub accepted: usize,
    pub sharp: usize,
    /// File names that do not carry a decodable timestamp or are not images.
    pub non_matching: Vec<String>,
    /// File name and the reason it could not be scored.
    pub unreadable: Vec<(String, String)>,
    /// File names whose stem repeats an earlier id.
    pub duplicate_ids: Vec<String>,
}

impl std::fmt::Display for ScanReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "accepted={} rejected={} duplicates={}",
            self.accepted,
            self.non_matching.len() + self.unreadable.len() + self.duplicate_ids.len(),
            self.duplicate_ids.len()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScan {
    pub records: Vec<ImageRecord>,
    pub report: ScanReport,
}

/// Finds the first position in `stem` where `pattern` parses and returns the
/// UTC epoch of that local time. Leading vendor prefixes
/// (`B00000123_21I5MG_20170402_060030E`) are skipped.
pub fn decode_image_timestamp(stem: &str, pattern: &str, tz_offset: i64) -> Option<Epoch> {
    stem.char_indices().find_map(|(i, _)| {
        let (dt, _) = NaiveDateTime::parse_and_remainder(&stem[i..], pattern).ok()?;
        dt.and_utc().timestamp().checked_sub(tz_offset)
    })
}

/// Variance of the 3x3 Laplacian (`[0 1 0; 1 -4 1; 0 1 0]`) over all interior
/// pixels. Zero for flat images; grows with edge energy.
pub fn blur_score(img: &GrayImage) -> Result<f64> {
    let (w, h) = img.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let (w, h) = (w as usize, h as usize);
    let px = img.as_raw();
    let at = |x: usize, y: usize| i32::from(px[y * w + x]);

    let mut responses = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let r = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4 * at(x, y);
            responses.push(r);
        }
    }
    // Integer sums are exact, so the score does not depend on traversal order.
    let n = responses.len() as f64;
    let sum: i64 = responses.iter().map(|&r| i64::from(r)).sum();
    let sum_sq: i64 = responses.iter().map(|&r| i64::from(r) * i64::from(r)).sum();
    let mean = sum as f64 / n;
    Ok((sum_sq as f64 / n - mean * mean).max(0.0))
}

/// Decodes a JPEG/PNG buffer to luma and scores it.
pub fn score_image_bytes(bytes: &[u8]) -> Result<f64> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    blur_score(&img.to_luma8())
}

/// Lists `dir`, decodes timestamps from file names and scores every frame.
///
/// Scoring runs in parallel; the result is ordered by `(t, id)` regardless.
pub fn scan_images(dir: &Path, tz_offset: i64, opts: &ScanOptions) -> Result<ImageScan> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut report = ScanReport::default();
    let mut candidates: Vec<(String, PathBuf, Epoch)> = Vec::new();

    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.file_type().map(|t| t.is_file()).unwrap_or(false) {
            paths.push(entry.path());
        }
    }
    paths.sort();

    let mut seen = std::collections::HashSet::new();
    for path in paths {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let ext_ok = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            .unwrap_or(false);
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let t = if ext_ok {
            decode_image_timestamp(&stem, &opts.pattern, tz_offset)
        } else {
            None
        };
        let Some(t) = t else {
            report.non_matching.push(name);
            continue;
        };
        if !seen.insert(stem.clone()) {
            report.duplicate_ids.push(name);
            continue;
        }
        candidates.push((stem, path, t));
    }

    let scored: Vec<_> = candidates
        .into_par_iter()
        .map(|(id, path, t)| {
            let score = std::fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|bytes| score_image_bytes(&bytes).map_err(|e| e.to_string()));
            (id, path, t, score)
        })
        .collect();

    let mut records = Vec::with_capacity(scored.len());
    for (id, path, t, score) in scored {
        match score {
            Ok(blur_score) => records.push(ImageRecord {
                sharp: blur_score >= opts.sharpness_threshold,
                id,
                path,
                t,
                blur_score,
            }),
            Err(reason) => {
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                report.unreadable.push((name, reason));
            }
        }
    }
    records.sort_by(|a, b| (a.t, &a.id).cmp(&(b.t, &b.id)));
    report.accepted = records.len();
    report.sharp = records.iter().filter(|r| r.sharp).count();
    Ok(ImageScan { records, report })
}
