//! End-to-end composition of the stages with one parameter set.

use serde::{Deserialize, Serialize};

use crate::fusion::{
    align_gps_to_images_with, align_images_to_windows, window_heart_rate, FrameAlignment, GpsMatch,
    HrWindow, MatchStrategy, DEFAULT_GPS_TOLERANCE, DEFAULT_WINDOW_LEN,
};
use crate::heatmap::{render_heatmap, Heatmap, HeatmapParams, Ribbon};
use crate::ingest::{Dataset, IngestReports, DEFAULT_IMAGE_PATTERN, DEFAULT_SHARPNESS_THRESHOLD};
use crate::moments::{attach_frames, detect_special_moments, Episode, MomentParams};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub window_len: u32,
    pub gps_tolerance: u32,
    pub match_strategy: MatchStrategy,
    pub sharpness_threshold: f64,
    pub image_pattern: String,
    pub moments: MomentParams,
    pub heatmap: HeatmapParams,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            window_len: DEFAULT_WINDOW_LEN,
            gps_tolerance: DEFAULT_GPS_TOLERANCE,
            match_strategy: MatchStrategy::Optimal,
            sharpness_threshold: DEFAULT_SHARPNESS_THRESHOLD,
            image_pattern: DEFAULT_IMAGE_PATTERN.into(),
            moments: MomentParams::default(),
            heatmap: HeatmapParams::default(),
        }
    }
}

impl PipelineParams {
    pub fn scan_options(&self) -> crate::ingest::ScanOptions {
        crate::ingest::ScanOptions {
            pattern: self.image_pattern.clone(),
            sharpness_threshold: self.sharpness_threshold,
        }
    }
}

/// Windows and both joins.
#[derive(Debug, Clone)]
pub struct Fused {
    pub windows: Vec<HrWindow>,
    pub alignment: FrameAlignment,
    pub gps: GpsMatch,
}

/// Windows heart rate and joins sharp frames to windows and fixes.
pub fn fuse(dataset: &Dataset, params: &PipelineParams) -> Result<Fused> {
    let windows = window_heart_rate(&dataset.hr, params.window_len)?;
    let alignment = align_images_to_windows(&dataset.images, &windows);
    let sharp = dataset.sharp_images();
    let gps = align_gps_to_images_with(
        &dataset.fixes,
        &sharp,
        params.gps_tolerance,
        params.match_strategy,
    );
    Ok(Fused {
        windows,
        alignment,
        gps,
    })
}

/// Detected episodes with their frames attached.
pub fn special_moments(fused: &Fused, params: &PipelineParams) -> Result<Vec<Episode>> {
    let episodes = detect_special_moments(&fused.windows, &params.moments)?;
    Ok(attach_frames(episodes, &fused.alignment.frames))
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub dataset: Dataset,
    pub reports: IngestReports,
    pub fused: Fused,
    pub episodes: Vec<Episode>,
    pub heatmap: Heatmap,
}

/// Every stage; fails when no frame could be placed on the map.
pub fn run(
    dataset: Dataset,
    reports: IngestReports,
    params: &PipelineParams,
) -> Result<PipelineOutput> {
    let fused = fuse(&dataset, params)?;
    let episodes = special_moments(&fused, params)?;
    let heatmap = render_heatmap(&fused.gps.pairs, &params.heatmap, &Ribbon::rainbow())?;
    Ok(PipelineOutput {
        dataset,
        reports,
        fused,
        episodes,
        heatmap,
    })
}
