//! Heart-rate windowing and timestamp joins.
//!
//! Windows are half-open `[start, start + len)` buckets anchored at the first
//! sample. Frames join the window containing them; GPS fixes join frames by
//! nearest time under a tolerance.

use serde::{Deserialize, Serialize};

use crate::ingest::{GpsFix, HeartRateSample, ImageRecord};
use crate::{Epoch, Error, Result};

/// Camera capture cadence and default window length, in seconds.
pub const DEFAULT_WINDOW_LEN: u32 = 30;
/// Half the capture interval.
pub const DEFAULT_GPS_TOLERANCE: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrWindow {
    pub start: Epoch,
    pub len: u32,
    pub mean_bpm: f64,
    pub n_samples: u32,
}

impl HrWindow {
    pub fn end(&self) -> Epoch {
        self.start + i64::from(self.len)
    }

    pub fn contains(&self, t: Epoch) -> bool {
        self.start <= t && t < self.end()
    }
}

/// Averages samples into `len`-second windows. Windows without samples are
/// not emitted; partial windows are kept with their sample count.
pub fn window_heart_rate(samples: &[HeartRateSample], len: u32) -> Result<Vec<HrWindow>> {
    if len == 0 {
        return Err(Error::InvalidParam(
            "window length must be at least 1 s".into(),
        ));
    }
    if samples.windows(2).any(|w| w[0].t >= w[1].t) {
        return Err(Error::Unsorted(
            "heart-rate samples must be strictly increasing",
        ));
    }
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let step = i64::from(len);
    let anchor = first.t.div_euclid(step) * step;

    let mut out: Vec<HrWindow> = Vec::new();
    let mut current: Option<(Epoch, u64, u32)> = None;
    for s in samples {
        let start = anchor + (s.t - anchor).div_euclid(step) * step;
        match &mut current {
            Some((cur, sum, n)) if *cur == start => {
                *sum += u64::from(s.bpm);
                *n += 1;
            }
            _ => {
                if let Some(done) = current.take() {
                    out.push(close(done, len));
                }
                current = Some((start, u64::from(s.bpm), 1));
            }
        }
    }
    if let Some(done) = current {
        out.push(close(done, len));
    }
    Ok(out)
}

fn close((start, sum, n): (Epoch, u64, u32), len: u32) -> HrWindow {
    HrWindow {
        start,
        len,
        mean_bpm: sum as f64 / f64::from(n),
        n_samples: n,
    }
}

/// A sharp frame with the heart-rate window containing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedFrame {
    pub image_id: String,
    pub t: Epoch,
    pub window_start: Epoch,
    pub mean_bpm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameAlignment {
    pub frames: Vec<AlignedFrame>,
    /// Sharp frames outside every window.
    pub unmatched: Vec<String>,
    /// Frames skipped because they are not sharp.
    pub skipped_blurry: usize,
}

/// Joins each sharp frame to the window whose `[start, start + len)` holds
/// its timestamp.
pub fn align_images_to_windows(images: &[ImageRecord], windows: &[HrWindow]) -> FrameAlignment {
    let mut out = FrameAlignment::default();
    for img in images {
        if !img.sharp {
            out.skipped_blurry += 1;
            continue;
        }
        let idx = windows.partition_point(|w| w.start <= img.t);
        match idx.checked_sub(1).map(|i| &windows[i]) {
            Some(w) if w.contains(img.t) => out.frames.push(AlignedFrame {
                image_id: img.id.clone(),
                t: img.t,
                window_start: w.start,
                mean_bpm: w.mean_bpm,
            }),
            _ => out.unmatched.push(img.id.clone()),
        }
    }
    out
}

/// A frame with the GPS fix assigned to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoImage {
    pub image_id: String,
    pub image_t: Epoch,
    pub fix: GpsFix,
    /// |image t - fix t| in seconds.
    pub dt: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStrategy {
    /// Maximum number of pairs within tolerance, then minimum total `dt`.
    #[default]
    Optimal,
    /// Each frame in time order takes the nearest unused fix.
    Greedy,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GpsMatch {
    pub pairs: Vec<GeoImage>,
    /// Frames left without a fix (expected indoors).
    pub unmatched_images: Vec<String>,
}

impl GpsMatch {
    pub fn total_dt(&self) -> u64 {
        self.pairs.iter().map(|p| u64::from(p.dt)).sum()
    }
}

pub fn align_gps_to_images(fixes: &[GpsFix], images: &[ImageRecord], tolerance: u32) -> GpsMatch {
    align_gps_to_images_with(fixes, images, tolerance, MatchStrategy::Optimal)
}

/// One-to-one assignment of fixes to frames with `|dt| <= tolerance`.
///
/// Both inputs must be sorted by time. Ties go to the earlier fix. The
/// result is ordered by frame time.
pub fn align_gps_to_images_with(
    fixes: &[GpsFix],
    images: &[ImageRecord],
    tolerance: u32,
    strategy: MatchStrategy,
) -> GpsMatch {
    let image_t: Vec<Epoch> = images.iter().map(|i| i.t).collect();
    let fix_t: Vec<Epoch> = fixes.iter().map(|f| f.t).collect();
    let assignment = match strategy {
        MatchStrategy::Optimal => match_optimal(&image_t, &fix_t, i64::from(tolerance)),
        MatchStrategy::Greedy => match_greedy(&image_t, &fix_t, i64::from(tolerance)),
    };
    let mut out = GpsMatch::default();
    for (img, fix) in images.iter().zip(assignment) {
        match fix {
            Some(j) => out.pairs.push(GeoImage {
                image_id: img.id.clone(),
                image_t: img.t,
                fix: fixes[j],
                dt: (img.t - fixes[j].t).unsigned_abs() as u32,
            }),
            None => out.unmatched_images.push(img.id.clone()),
        }
    }
    out
}

fn match_greedy(images: &[Epoch], fixes: &[Epoch], tol: i64) -> Vec<Option<usize>> {
    let mut used = vec![false; fixes.len()];
    images
        .iter()
        .map(|&t| {
            let pos = fixes.partition_point(|&f| f < t);
            let left = (0..pos)
                .rev()
                .take_while(|&j| t - fixes[j] <= tol)
                .find(|&j| !used[j]);
            let right = (pos..fixes.len())
                .take_while(|&j| fixes[j] - t <= tol)
                .find(|&j| !used[j]);
            let pick = match (left, right) {
                (Some(l), Some(r)) => Some(if t - fixes[l] <= fixes[r] - t { l } else { r }),
                (l, r) => l.or(r),
            };
            if let Some(j) = pick {
                used[j] = true;
            }
            pick
        })
        .collect()
}

/// Exact matching by dynamic programming over the two sorted streams.
///
/// With absolute-difference costs an optimal matching never crosses, so the
/// state is a pair of prefixes. Frame `i` can only reach fixes in the band
/// `lo[i]..hi[i]`, and fixes before `lo[i]` are unreachable for every later
/// frame too, which keeps the table linear in the stream length.
fn match_optimal(images: &[Epoch], fixes: &[Epoch], tol: i64) -> Vec<Option<usize>> {
    let n = images.len();
    if n == 0 {
        return Vec::new();
    }
    let lo: Vec<usize> = images
        .iter()
        .map(|&t| fixes.partition_point(|&f| f < t - tol))
        .collect();
    let hi: Vec<usize> = images
        .iter()
        .map(|&t| fixes.partition_point(|&f| f <= t + tol))
        .collect();

    // Score ordering: more pairs first, then smaller total dt.
    #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
    struct Score(u32, std::cmp::Reverse<u64>);
    #[derive(Clone, Copy)]
    enum Step {
        Match,
        SkipImage,
        SkipFix,
    }

    let zero = Score(0, std::cmp::Reverse(0));
    // rows[i][k] holds the best score for frames i.. and fixes (lo[i] + k)..
    let mut rows: Vec<Vec<(Score, Step)>> = vec![Vec::new(); n];
    let value = |rows: &Vec<Vec<(Score, Step)>>, i: usize, j: usize| -> Score {
        if i == n {
            return zero;
        }
        let j = j.max(lo[i]);
        rows[i][j - lo[i]].0
    };

    for i in (0..n).rev() {
        let width = hi[i] - lo[i] + 1;
        let mut row = vec![(zero, Step::SkipImage); width];
        for k in (0..width).rev() {
            let j = lo[i] + k;
            let mut best = (value(&rows, i + 1, j), Step::SkipImage);
            if j < hi[i] {
                let skip_fix = row[k + 1].0;
                if skip_fix > best.0 {
                    best = (skip_fix, Step::SkipFix);
                }
                let dt = (images[i] - fixes[j]).unsigned_abs();
                let rest = value(&rows, i + 1, j + 1);
                let take = Score(rest.0 + 1, std::cmp::Reverse(rest.1 .0 + dt));
                if take >= best.0 {
                    best = (take, Step::Match);
                }
            }
            row[k] = best;
        }
        rows[i] = row;
    }

    let mut out = vec![None; n];
    let (mut i, mut j) = (0, lo[0]);
    while i < n {
        j = j.max(lo[i]);
        match rows[i][j - lo[i]].1 {
            Step::Match => {
                out[i] = Some(j);
                i += 1;
                j += 1;
            }
            Step::SkipImage => i += 1,
            Step::SkipFix => j += 1,
        }
    }
    out
}

/// `window_start,mean_bpm,n_samples` debug export.
pub fn windows_to_csv(windows: &[HrWindow]) -> String {
    let mut out = String::from("window_start,mean_bpm,n_samples\n");
    for w in windows {
        out.push_str(&format!("{},{:.6},{}\n", w.start, w.mean_bpm, w.n_samples));
    }
    out
}
