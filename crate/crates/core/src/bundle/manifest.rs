use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::json::{quantize, to_canonical_json};
use crate::fusion::{AlignedFrame, HrWindow};
use crate::heatmap::{BBox, Spot, SpotIndex};
use crate::ingest::{ParseReport, ScanReport};
use crate::moments::Episode;
use crate::pipeline::PipelineParams;
use crate::{Epoch, Error, Result};

/// Major version written by this crate. Readers reject any other.
pub const MANIFEST_VERSION: u64 = 1;

/// `manifest.json` of a review bundle.
///
/// Floats are stored quantized to six decimals; see [`Manifest::quantized`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u64,
    pub span: Span,
    pub tz_offset: i64,
    pub params: PipelineParams,
    pub files: Files,
    pub images: Vec<ImageEntry>,
    pub windows: Vec<HrWindow>,
    pub frames: Vec<AlignedFrame>,
    pub projection: ProjectionRecord,
    pub spots: SpotsRecord,
    pub episodes: Vec<Episode>,
    pub reports: Reports,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub start: Epoch,
    pub end: Epoch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Files {
    pub heatmap: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub id: String,
    pub t: Epoch,
    pub blur_score: f64,
    pub sharp: bool,
    /// Bundle-relative thumbnail path.
    pub thumb: String,
    /// Bundle-relative copy of the original frame.
    pub original: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionRecord {
    pub bbox: BBox,
    pub width: u32,
    pub height: u32,
    pub padding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpotsRecord {
    pub cell_px: u32,
    pub cells: Vec<SpotCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpotCell {
    pub cx: i64,
    pub cy: i64,
    pub spots: Vec<Spot>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reports {
    pub hr: Option<ParseReport>,
    pub gps: Option<ParseReport>,
    pub images: Option<ScanReport>,
    pub alignment: AlignmentSummary,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentSummary {
    pub windows: usize,
    pub frames_aligned: usize,
    pub frames_unaligned: usize,
    pub frames_blurry: usize,
    pub geo_matched: usize,
    pub geo_unmatched: usize,
}

impl SpotsRecord {
    pub fn from_index(index: &SpotIndex) -> Self {
        Self {
            cell_px: index.cell_px,
            cells: index
                .cells()
                .map(|((cx, cy), spots)| SpotCell {
                    cx,
                    cy,
                    spots: spots.to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_index(&self) -> SpotIndex {
        let mut index = SpotIndex::new(self.cell_px);
        for cell in &self.cells {
            for s in &cell.spots {
                index.insert((cell.cx, cell.cy), s.clone());
            }
        }
        index
    }
}

fn q_spot(s: &mut Spot) {
    s.lat = quantize(s.lat);
    s.lon = quantize(s.lon);
}

fn q_episode(e: &mut Episode) {
    e.peak_delta = quantize(e.peak_delta);
    e.trigger_threshold = quantize(e.trigger_threshold);
}

/// Quantizes every float of a spot index the way the manifest stores it.
pub fn quantize_spot_index(index: &SpotIndex) -> SpotIndex {
    let mut rec = SpotsRecord::from_index(index);
    rec.cells
        .iter_mut()
        .flat_map(|c| c.spots.iter_mut())
        .for_each(q_spot);
    rec.to_index()
}

pub fn quantize_episodes(episodes: &[Episode]) -> Vec<Episode> {
    let mut out = episodes.to_vec();
    out.iter_mut().for_each(q_episode);
    out
}

pub fn quantize_frames(frames: &[AlignedFrame]) -> Vec<AlignedFrame> {
    frames
        .iter()
        .map(|f| AlignedFrame {
            mean_bpm: quantize(f.mean_bpm),
            ..f.clone()
        })
        .collect()
}

impl Manifest {
    /// Same manifest with every float rounded to what the text form holds.
    pub fn quantized(mut self) -> Self {
        let p = &mut self.params;
        p.sharpness_threshold = quantize(p.sharpness_threshold);
        p.moments.abs_delta = quantize(p.moments.abs_delta);
        p.moments.z_threshold = quantize(p.moments.z_threshold);
        p.heatmap.padding = quantize(p.heatmap.padding);
        for img in &mut self.images {
            img.blur_score = quantize(img.blur_score);
        }
        for w in &mut self.windows {
            w.mean_bpm = quantize(w.mean_bpm);
        }
        self.frames = quantize_frames(&self.frames);
        let b = &mut self.projection.bbox;
        for v in [
            &mut b.min_lat,
            &mut b.min_lon,
            &mut b.max_lat,
            &mut b.max_lon,
        ] {
            *v = quantize(*v);
        }
        self.projection.padding = quantize(self.projection.padding);
        self.spots
            .cells
            .iter_mut()
            .flat_map(|c| c.spots.iter_mut())
            .for_each(q_spot);
        self.episodes.iter_mut().for_each(q_episode);
        self
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        to_canonical_json(self).map_err(|e| Error::Encode {
            what: "manifest",
            message: e.to_string(),
        })
    }

    /// Parses and checks a manifest. Unknown major versions are rejected
    /// before the body is interpreted.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| Error::Manifest(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Manifest("missing positive integer \"version\"".into()))?;
        if version == 0 {
            return Err(Error::Manifest("version must be positive".into()));
        }
        if version != MANIFEST_VERSION {
            return Err(Error::ManifestVersion {
                found: version,
                supported: MANIFEST_VERSION,
            });
        }
        let manifest: Manifest =
            serde_json::from_value(value).map_err(|e| Error::Manifest(e.to_string()))?;
        manifest.check()?;
        Ok(manifest)
    }

    /// Internal consistency: ordering, uniqueness and cross references.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Manifest(msg));
        if self.span.end < self.span.start {
            return bad("span ends before it starts".into());
        }
        let mut ids = HashSet::new();
        for img in &self.images {
            if !ids.insert(img.id.as_str()) {
                return bad(format!("duplicate image id {:?}", img.id));
            }
            for rel in [&img.thumb, &img.original] {
                if !is_safe_relative(rel) {
                    return bad(format!("unsafe path {rel:?}"));
                }
            }
        }
        if !is_safe_relative(&self.files.heatmap) {
            return bad(format!("unsafe path {:?}", self.files.heatmap));
        }
        if self.windows.windows(2).any(|w| w[1].start < w[0].end()) {
            return bad("windows overlap or are unsorted".into());
        }
        let mut framed = HashSet::new();
        for f in &self.frames {
            if !ids.contains(f.image_id.as_str()) || !framed.insert(f.image_id.as_str()) {
                return bad(format!("frame {:?} unknown or repeated", f.image_id));
            }
        }
        if self.spots.cell_px == 0 {
            return bad("spot cell size is zero".into());
        }
        let mut cells = HashSet::new();
        let mut spotted = HashSet::new();
        for c in &self.spots.cells {
            if !cells.insert((c.cx, c.cy)) {
                return bad(format!("spot cell ({}, {}) repeated", c.cx, c.cy));
            }
            if c.spots.windows(2).any(|w| w[0].t > w[1].t) {
                return bad(format!("spot cell ({}, {}) not time ordered", c.cx, c.cy));
            }
            for s in &c.spots {
                if !ids.contains(s.image_id.as_str()) || !spotted.insert(s.image_id.as_str()) {
                    return bad(format!("spot image {:?} unknown or repeated", s.image_id));
                }
            }
        }
        for pair in self.episodes.windows(2) {
            if pair[1].start < pair[0].end {
                return bad("episodes overlap or are unsorted".into());
            }
        }
        for e in &self.episodes {
            if e.end <= e.start {
                return bad(format!("episode {}..{} is empty", e.start, e.end));
            }
            if let Some(f) = e.frames.iter().find(|f| !framed.contains(f.as_str())) {
                return bad(format!("episode frame {f:?} is not an aligned frame"));
            }
        }
        Ok(())
    }

    /// Every file the manifest points at, bundle-relative.
    pub fn referenced_files(&self) -> Vec<&str> {
        std::iter::once(self.files.heatmap.as_str())
            .chain(
                self.images
                    .iter()
                    .flat_map(|i| [i.thumb.as_str(), i.original.as_str()]),
            )
            .collect()
    }

    /// Checks that every referenced file exists under `dir`.
    pub fn check_files(&self, dir: &Path) -> Result<()> {
        let missing: Vec<String> = self
            .referenced_files()
            .into_iter()
            .filter(|rel| !dir.join(rel).is_file())
            .map(str::to_owned)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Manifest(format!(
                "missing files: {}",
                missing.join(", ")
            )))
        }
    }

    pub fn image(&self, id: &str) -> Option<&ImageEntry> {
        self.images.iter().find(|i| i.id == id)
    }
}

/// Relative, no parent components, forward slashes only.
fn is_safe_relative(p: &str) -> bool {
    !p.is_empty()
        && !p.starts_with('/')
        && !p.contains('\\')
        && p.split('/').all(|c| !c.is_empty() && c != "." && c != "..")
}
