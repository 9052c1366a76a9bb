use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lifelog_core::fusion::{MatchStrategy, DEFAULT_GPS_TOLERANCE, DEFAULT_WINDOW_LEN};
use lifelog_core::heatmap::{
    HeatmapParams, Normalization, DEFAULT_PADDING, DEFAULT_RADIUS_PX, DEFAULT_SPOT_CELL_PX,
};
use lifelog_core::ingest::{DEFAULT_IMAGE_PATTERN, DEFAULT_SHARPNESS_THRESHOLD};
use lifelog_core::moments::MomentParams;
use lifelog_core::pipeline::PipelineParams;

#[derive(Debug, Parser)]
#[command(
    name = "lifelog",
    version,
    about = "Special moments and visit heat maps from wearable lifelogs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for image scoring and rendering (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Print a machine-readable run summary on stdout.
    #[arg(long, global = true, value_enum)]
    pub report: Option<ReportFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate exports, reporting accepted and rejected rows.
    Ingest {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Window heart rate and align frames; writes `window_start,mean_bpm,n_samples`.
    Fuse {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        fusion: FusionArgs,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect special moments; writes `start,end,peak_delta,n_frames,label`.
    Moments {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        fusion: FusionArgs,
        #[command(flatten)]
        moments: MomentArgs,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the visit heat map to a PNG.
    Heatmap {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        fusion: FusionArgs,
        #[command(flatten)]
        heatmap: HeatmapArgs,
        /// Output PNG.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline and write a review bundle.
    Bundle {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        fusion: FusionArgs,
        #[command(flatten)]
        moments: MomentArgs,
        #[command(flatten)]
        heatmap: HeatmapArgs,
        /// Bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a bundle to the viewer over HTTP.
    Serve {
        /// Bundle directory.
        bundle: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Built viewer to serve for all other paths.
        #[arg(long)]
        viewer: Option<PathBuf>,
    },
    /// Write a synthetic recording with known spikes (hr.csv, gps.csv, images/).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20170402)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Inputs {
    /// Heart-rate CSV (`time,bpm`).
    #[arg(long)]
    pub hr: Option<PathBuf>,
    /// GPS CSV (`time,lat,lon`).
    #[arg(long)]
    pub gps: Option<PathBuf>,
    /// Directory of timestamp-named frames.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Device clock offset from UTC: seconds (`32400`) or `+09:00`.
    #[arg(long, default_value = "0", allow_hyphen_values = true, value_parser = parse_tz_offset)]
    pub tz_offset: i64,
    /// chrono layout of the timestamp in frame file names.
    #[arg(long, default_value = DEFAULT_IMAGE_PATTERN)]
    pub image_pattern: String,
    /// Blur score at or above which a frame counts as sharp.
    #[arg(long, default_value_t = DEFAULT_SHARPNESS_THRESHOLD)]
    pub sharpness: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FusionArgs {
    /// Heart-rate window length in seconds.
    #[arg(long, default_value_t = DEFAULT_WINDOW_LEN)]
    pub window_len: u32,
    /// Largest frame-to-fix time difference in seconds.
    #[arg(long, default_value_t = DEFAULT_GPS_TOLERANCE)]
    pub gps_tolerance: u32,
    #[arg(long, value_enum, default_value_t = Strategy::Optimal)]
    pub gps_matching: Strategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Optimal,
    Greedy,
}

#[derive(Debug, Clone, Args)]
pub struct MomentArgs {
    #[arg(long, default_value_t = MomentParams::default().abs_delta)]
    pub abs_delta: f64,
    #[arg(long, default_value_t = MomentParams::default().z_threshold)]
    pub z_threshold: f64,
    #[arg(long, default_value_t = MomentParams::default().baseline_len)]
    pub baseline_len: usize,
    #[arg(long, default_value_t = MomentParams::default().merge_gap)]
    pub merge_gap: usize,
    #[arg(long, default_value_t = MomentParams::default().context_pad)]
    pub context_pad: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[arg(long, default_value_t = DEFAULT_RADIUS_PX)]
    pub radius_px: u32,
    /// Raster size as `WxH`.
    #[arg(long, default_value = "1024x768", value_parser = parse_size)]
    pub size: (u32, u32),
    #[arg(long, default_value_t = DEFAULT_PADDING)]
    pub padding: f64,
    #[arg(long, default_value_t = DEFAULT_SPOT_CELL_PX)]
    pub spot_cell_px: u32,
    /// Normalize colours to this accumulated value instead of the raster max.
    #[arg(long)]
    pub fixed_max: Option<u64>,
}

pub fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let dim = |v: &str| match v.trim().parse::<u32>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("bad dimension {v:?} in {s:?}")),
    };
    Ok((dim(w)?, dim(h)?))
}

pub fn parse_tz_offset(s: &str) -> Result<i64, String> {
    if let Ok(secs) = s.parse::<i64>() {
        return Ok(secs);
    }
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1, &s[1..]),
        Some(b'-') => (-1, &s[1..]),
        _ => return Err(format!("expected seconds or ±HH:MM, got {s:?}")),
    };
    let (h, m) = rest
        .split_once(':')
        .ok_or_else(|| format!("expected ±HH:MM, got {s:?}"))?;
    let h: i64 = h.parse().map_err(|_| format!("bad hours in {s:?}"))?;
    let m: i64 = m.parse().map_err(|_| format!("bad minutes in {s:?}"))?;
    if h > 23 || m > 59 {
        return Err(format!("offset {s:?} out of range"));
    }
    Ok(sign * (h * 3600 + m * 60))
}

/// Assembles pipeline parameters from whichever groups a command has.
pub fn pipeline_params(
    inputs: &Inputs,
    fusion: Option<&FusionArgs>,
    moments: Option<&MomentArgs>,
    heatmap: Option<&HeatmapArgs>,
) -> PipelineParams {
    let mut p = PipelineParams {
        sharpness_threshold: inputs.sharpness,
        image_pattern: inputs.image_pattern.clone(),
        ..PipelineParams::default()
    };
    if let Some(f) = fusion {
        p.window_len = f.window_len;
        p.gps_tolerance = f.gps_tolerance;
        p.match_strategy = match f.gps_matching {
            Strategy::Optimal => MatchStrategy::Optimal,
            Strategy::Greedy => MatchStrategy::Greedy,
        };
    }
    if let Some(m) = moments {
        p.moments = MomentParams {
            abs_delta: m.abs_delta,
            z_threshold: m.z_threshold,
            baseline_len: m.baseline_len,
            merge_gap: m.merge_gap,
            context_pad: m.context_pad,
        };
    }
    if let Some(h) = heatmap {
        p.heatmap = HeatmapParams {
            width: h.size.0,
            height: h.size.1,
            padding: h.padding,
            radius_px: h.radius_px,
            spot_cell_px: h.spot_cell_px,
            normalization: h.fixed_max.map_or(Normalization::Max, Normalization::Fixed),
            ..HeatmapParams::default()
        };
    }
    p
}
