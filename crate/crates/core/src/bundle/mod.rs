//! Review bundle: `manifest.json`, `heatmap.png`, `thumbs/` and `images/`.
//!
//! The manifest is canonical JSON (sorted keys, six-decimal floats), so the
//! same inputs and parameters always produce the same bytes.

mod json;
mod manifest;

use std::path::{Path, PathBuf};

use image::codecs::jpeg::JpegEncoder;
use image::imageops::FilterType;
use rayon::prelude::*;

pub use json::{quantize, to_canonical_json, FLOAT_DECIMALS};
pub use manifest::{
    quantize_episodes, quantize_frames, quantize_spot_index, AlignmentSummary, Files, ImageEntry,
    Manifest, ProjectionRecord, Reports, Span, SpotCell, SpotsRecord, MANIFEST_VERSION,
};

use crate::ingest::ImageRecord;
use crate::pipeline::{PipelineOutput, PipelineParams};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const HEATMAP_FILE: &str = "heatmap.png";
pub const THUMBS_DIR: &str = "thumbs";
pub const IMAGES_DIR: &str = "images";
/// Longest thumbnail side; smaller frames are kept at their size.
pub const THUMB_MAX_SIDE: u32 = 256;
const THUMB_QUALITY: u8 = 85;

/// A bundle written to disk.
#[derive(Debug, Clone)]
pub struct ReviewBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl ReviewBundle {
    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(MANIFEST_FILE)
    }

    /// Reads and checks a bundle directory.
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let manifest = Manifest::from_json(&bytes)?;
        manifest.check_files(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }
}

pub fn thumb_path(id: &str) -> String {
    format!("{THUMBS_DIR}/{id}.jpg")
}

fn original_path(img: &ImageRecord) -> String {
    let ext = img
        .path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_else(|| "bin".into());
    format!("{IMAGES_DIR}/{}.{ext}", img.id)
}

/// Assembles the manifest for a pipeline run.
pub fn build_manifest(out: &PipelineOutput, params: &PipelineParams) -> Manifest {
    let ds = &out.dataset;
    let (start, end) = ds.span().unwrap_or((0, 0));
    let mut reports = Reports {
        hr: out.reports.hr.clone(),
        gps: out.reports.gps.clone(),
        images: out.reports.images.clone(),
        alignment: AlignmentSummary {
            windows: out.fused.windows.len(),
            frames_aligned: out.fused.alignment.frames.len(),
            frames_unaligned: out.fused.alignment.unmatched.len(),
            frames_blurry: out.fused.alignment.skipped_blurry,
            geo_matched: out.fused.gps.pairs.len(),
            geo_unmatched: out.fused.gps.unmatched_images.len(),
        },
    };
    // Row-level issues stay in the CLI report; the manifest keeps counts.
    for r in [&mut reports.hr, &mut reports.gps].into_iter().flatten() {
        r.issues.clear();
    }
    Manifest {
        version: MANIFEST_VERSION,
        span: Span { start, end },
        tz_offset: ds.tz_offset_applied,
        params: params.clone(),
        files: Files {
            heatmap: HEATMAP_FILE.into(),
        },
        images: ds
            .images
            .iter()
            .map(|img| ImageEntry {
                id: img.id.clone(),
                t: img.t,
                blur_score: img.blur_score,
                sharp: img.sharp,
                thumb: thumb_path(&img.id),
                original: original_path(img),
            })
            .collect(),
        windows: out.fused.windows.clone(),
        frames: out.fused.alignment.frames.clone(),
        projection: ProjectionRecord {
            bbox: out.heatmap.projection.bbox(),
            width: out.heatmap.projection.width,
            height: out.heatmap.projection.height,
            padding: out.heatmap.projection.padding,
        },
        spots: SpotsRecord::from_index(&out.heatmap.spots),
        episodes: out.episodes.clone(),
        reports,
    }
    .quantized()
}

/// Writes the bundle into `out_dir`, replacing a previous bundle there.
pub fn build_bundle(
    out: &PipelineOutput,
    params: &PipelineParams,
    out_dir: &Path,
) -> Result<ReviewBundle> {
    let missing: Vec<String> = out
        .dataset
        .images
        .iter()
        .filter(|img| !img.path.is_file())
        .map(|img| img.path.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingImages(missing));
    }

    let manifest = build_manifest(out, params);
    manifest.check()?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for sub in [THUMBS_DIR, IMAGES_DIR] {
        let dir = out_dir.join(sub);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    let png = out.heatmap.png()?;
    write_atomic(&out_dir.join(HEATMAP_FILE), &png)?;

    out.dataset
        .images
        .par_iter()
        .zip(manifest.images.par_iter())
        .try_for_each(|(img, entry)| -> Result<()> {
            let original = out_dir.join(&entry.original);
            std::fs::copy(&img.path, &original).map_err(|e| Error::io(&img.path, e))?;
            write_thumbnail(&img.path, &out_dir.join(&entry.thumb))
        })?;

    write_atomic(&out_dir.join(MANIFEST_FILE), &manifest.to_json()?)?;
    Ok(ReviewBundle {
        dir: out_dir.to_path_buf(),
        manifest,
    })
}

fn write_thumbnail(src: &Path, dst: &Path) -> Result<()> {
    let img = image::open(src).map_err(|e| Error::Decode(format!("{}: {e}", src.display())))?;
    let (w, h) = (img.width(), img.height());
    let longest = w.max(h);
    let img = if longest > THUMB_MAX_SIDE {
        let scale = f64::from(THUMB_MAX_SIDE) / f64::from(longest);
        let tw = ((f64::from(w) * scale).round() as u32).max(1);
        let th = ((f64::from(h) * scale).round() as u32).max(1);
        img.resize_exact(tw, th, FilterType::Triangle)
    } else {
        img
    };
    let rgb = img.to_rgb8();
    let mut bytes = Vec::new();
    JpegEncoder::new_with_quality(&mut bytes, THUMB_QUALITY)
        .encode_image(&rgb)
        .map_err(|e| Error::Encode {
            what: "thumbnail",
            message: e.to_string(),
        })?;
    std::fs::write(dst, bytes).map_err(|e| Error::io(dst, e))
}

/// Writes to a sibling temp file and renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
