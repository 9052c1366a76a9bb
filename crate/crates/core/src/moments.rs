//! Special-moment detection.
//!
//! A window is flagged when its mean heart rate jumps from the previous
//! adjacent window by at least `max(abs_delta, z_threshold * sigma)`, where
//! `sigma` is the sample standard deviation of the preceding `baseline_len`
//! deltas (floored at 1 bpm). Flagged runs close together are merged, padded
//! with context and turned into episodes.

use serde::{Deserialize, Serialize};

use crate::fusion::{AlignedFrame, HrWindow};
use crate::{Epoch, Error, Result};

/// Lower bound on the baseline deviation, in bpm.
pub const SIGMA_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentParams {
    /// Absolute jump in bpm that always counts as sudden.
    pub abs_delta: f64,
    pub z_threshold: f64,
    /// Trailing deltas forming the baseline, in windows.
    pub baseline_len: usize,
    /// Unflagged windows allowed between two runs that still merge.
    pub merge_gap: usize,
    /// Windows of context added on each side of a run.
    pub context_pad: usize,
}

impl Default for MomentParams {
    fn default() -> Self {
        Self {
            abs_delta: 12.0,
            z_threshold: 2.5,
            baseline_len: 20,
            merge_gap: 2,
            context_pad: 2,
        }
    }
}

impl MomentParams {
    pub fn validate(&self) -> Result<()> {
        let positive = self.abs_delta > 0.0
            && self.abs_delta.is_finite()
            && self.z_threshold > 0.0
            && self.z_threshold.is_finite()
            && self.merge_gap > 0
            && self.context_pad > 0;
        if !positive {
            return Err(Error::InvalidParam(format!(
                "moment parameters must be strictly positive: {self:?}"
            )));
        }
        if self.baseline_len < 2 {
            return Err(Error::InvalidParam(
                "baseline_len must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub start: Epoch,
    /// End of the last window; `end > start`.
    pub end: Epoch,
    pub window_starts: Vec<Epoch>,
    /// Largest |delta| among the episode's windows.
    pub peak_delta: f64,
    /// Threshold that flagged the strongest window.
    pub trigger_threshold: f64,
    /// Aligned frames with `start <= t <= end`.
    pub frames: Vec<String>,
    pub label: Option<String>,
}

/// Change of mean bpm from the previous window, for windows directly
/// following another one. Returns `(window index, delta)`.
fn indexed_deltas(windows: &[HrWindow]) -> Vec<(usize, f64)> {
    windows
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| pair[1].start - pair[0].start <= i64::from(pair[0].len))
        .map(|(i, pair)| (i + 1, pair[1].mean_bpm - pair[0].mean_bpm))
        .collect()
}

/// `(window_start, delta_bpm)` for consecutive adjacent windows.
pub fn deltas(windows: &[HrWindow]) -> Vec<(Epoch, f64)> {
    indexed_deltas(windows)
        .into_iter()
        .map(|(i, d)| (windows[i].start, d))
        .collect()
}

/// Per-window flag decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flag {
    pub window: usize,
    pub delta: f64,
    pub threshold: f64,
}

/// Windows whose delta meets the hybrid absolute/z-score threshold.
pub fn flag_windows(windows: &[HrWindow], params: &MomentParams) -> Result<Vec<Flag>> {
    params.validate()?;
    let deltas = indexed_deltas(windows);
    let mut flags = Vec::new();
    for (k, &(window, delta)) in deltas.iter().enumerate() {
        let baseline = &deltas[k.saturating_sub(params.baseline_len)..k];
        let sigma = sample_std(baseline.iter().map(|&(_, d)| d)).max(SIGMA_FLOOR);
        let threshold = params.abs_delta.max(params.z_threshold * sigma);
        if delta.abs() >= threshold {
            flags.push(Flag {
                window,
                delta,
                threshold,
            });
        }
    }
    Ok(flags)
}

fn sample_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

pub fn detect_special_moments(windows: &[HrWindow], params: &MomentParams) -> Result<Vec<Episode>> {
    if windows.windows(2).any(|w| w[1].start < w[0].end()) {
        return Err(Error::Unsorted("windows must be sorted and disjoint"));
    }
    let flags = flag_windows(windows, params)?;
    if flags.is_empty() {
        return Ok(Vec::new());
    }

    // Runs of flagged window indices, merged across short unflagged gaps.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for f in &flags {
        match runs.last_mut() {
            Some((_, hi)) if f.window - *hi - 1 <= params.merge_gap => *hi = f.window,
            _ => runs.push((f.window, f.window)),
        }
    }

    let last = windows.len() - 1;
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for (lo, hi) in runs {
        let lo = lo.saturating_sub(params.context_pad);
        let hi = (hi + params.context_pad).min(last);
        match spans.last_mut() {
            Some((_, prev_hi)) if lo <= *prev_hi => *prev_hi = (*prev_hi).max(hi),
            _ => spans.push((lo, hi)),
        }
    }

    let deltas = indexed_deltas(windows);
    Ok(spans
        .into_iter()
        .map(|(lo, hi)| {
            let in_span = |w: usize| (lo..=hi).contains(&w);
            let peak_delta = deltas
                .iter()
                .filter(|(w, _)| in_span(*w))
                .map(|(_, d)| d.abs())
                .fold(0.0, f64::max);
            let strongest = flags
                .iter()
                .filter(|f| in_span(f.window))
                .max_by(|a, b| a.delta.abs().total_cmp(&b.delta.abs()))
                .expect("every span holds a flagged window");
            Episode {
                start: windows[lo].start,
                end: windows[hi].end(),
                window_starts: windows[lo..=hi].iter().map(|w| w.start).collect(),
                peak_delta,
                trigger_threshold: strongest.threshold,
                frames: Vec::new(),
                label: None,
            }
        })
        .collect())
}

/// Fills each episode's frame list with the aligned frames whose time lies
/// in the closed interval `[start, end]`.
pub fn attach_frames(mut episodes: Vec<Episode>, frames: &[AlignedFrame]) -> Vec<Episode> {
    for ep in &mut episodes {
        let from = frames.partition_point(|f| f.t < ep.start);
        ep.frames = frames[from..]
            .iter()
            .take_while(|f| f.t <= ep.end)
            .map(|f| f.image_id.clone())
            .collect();
    }
    episodes
}

pub fn label_episode(episodes: &[Episode], index: usize, text: &str) -> Result<Vec<Episode>> {
    if index >= episodes.len() {
        return Err(Error::EpisodeIndex {
            index,
            len: episodes.len(),
        });
    }
    let mut out = episodes.to_vec();
    out[index].label = Some(text.to_owned());
    Ok(out)
}

/// `start,end,peak_delta,n_frames,label` export.
pub fn episodes_to_csv(episodes: &[Episode]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["start", "end", "peak_delta", "n_frames", "label"])
        .expect("in-memory write");
    for ep in episodes {
        w.write_record([
            ep.start.to_string(),
            ep.end.to_string(),
            format!("{:.6}", ep.peak_delta),
            ep.frames.len().to_string(),
            ep.label.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn windows(means: &[f64]) -> Vec<HrWindow> {
        means
            .iter()
            .enumerate()
            .map(|(i, &m)| HrWindow {
                start: 1_000 + 30 * i as i64,
                len: 30,
                mean_bpm: m,
                n_samples: 30,
            })
            .collect()
    }

    #[test]
    fn constant_deltas() {
        let d: Vec<f64> = deltas(&windows(&[70.0, 70.0, 70.0]))
            .iter()
            .map(|x| x.1)
            .collect();
        assert_eq!(d, [0.0, 0.0]);
    }

    #[test]
    fn single_step_delta() {
        assert_eq!(deltas(&windows(&[70.0, 90.0])), [(1_030, 20.0)]);
        assert!(deltas(&windows(&[70.0])).is_empty());
    }

    #[test]
    fn gap_produces_no_delta() {
        let mut w = windows(&[70.0, 90.0, 95.0]);
        w[2].start += 60;
        assert_eq!(deltas(&w), [(1_030, 20.0)]);
    }

    #[test]
    fn constant_stream_has_no_episodes() {
        let eps = detect_special_moments(&windows(&[70.0; 50]), &MomentParams::default()).unwrap();
        assert!(eps.is_empty());
    }

    #[test]
    fn single_spike_gives_one_padded_episode() {
        let mut means = vec![70.0; 40];
        means[20] = 95.0;
        let w = windows(&means);
        let eps = detect_special_moments(&w, &MomentParams::default()).unwrap();
        assert_eq!(eps.len(), 1);
        let ep = &eps[0];
        // Up-step at 20 and down-step at 21 are both flagged.
        assert_eq!(ep.window_starts.first(), Some(&w[18].start));
        assert_eq!(ep.window_starts.last(), Some(&w[23].start));
        assert!(ep.window_starts.contains(&w[20].start));
        assert_eq!(ep.start, w[18].start);
        assert_eq!(ep.end, w[23].start + 30);
        assert_eq!(ep.peak_delta, 25.0);
        assert!(ep.peak_delta >= ep.trigger_threshold);
    }

    #[test]
    fn nearby_spikes_merge() {
        let mut means = vec![70.0; 40];
        means[20] = 95.0;
        // Down-step at 21 flagged, 22 unflagged, up-step at 23 flagged.
        means[23] = 95.0;
        let params = MomentParams {
            merge_gap: 2,
            context_pad: 1,
            ..MomentParams::default()
        };
        let eps = detect_special_moments(&windows(&means), &params).unwrap();
        assert_eq!(eps.len(), 1);
    }

    #[test]
    fn padding_is_clipped_to_stream() {
        let mut means = vec![70.0; 6];
        means[1] = 95.0;
        let w = windows(&means);
        let eps = detect_special_moments(&w, &MomentParams::default()).unwrap();
        assert_eq!(eps[0].start, w[0].start);
        assert_eq!(eps[0].window_starts.len(), 5);
    }

    #[test]
    fn invalid_params_rejected() {
        let w = windows(&[70.0, 80.0]);
        for bad in [
            MomentParams {
                abs_delta: 0.0,
                ..Default::default()
            },
            MomentParams {
                baseline_len: 1,
                ..Default::default()
            },
            MomentParams {
                merge_gap: 0,
                ..Default::default()
            },
            MomentParams {
                z_threshold: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(detect_special_moments(&w, &bad).is_err());
        }
    }

    #[test]
    fn frames_use_closed_interval() {
        let ep = Episode {
            start: 100,
            end: 190,
            window_starts: vec![100, 130, 160],
            peak_delta: 20.0,
            trigger_threshold: 12.0,
            frames: vec![],
            label: None,
        };
        let frame = |id: &str, t| AlignedFrame {
            image_id: id.into(),
            t,
            window_start: t - t % 30,
            mean_bpm: 70.0,
        };
        let frames = [
            frame("before", 99),
            frame("a", 100),
            frame("b", 130),
            frame("c", 160),
            frame("at_end", 190),
            frame("after", 191),
        ];
        let eps = attach_frames(vec![ep], &frames);
        assert_eq!(eps[0].frames, ["a", "b", "c", "at_end"]);
    }

    #[test]
    fn labels_are_pure_updates() {
        let mut means = vec![70.0; 40];
        means[20] = 95.0;
        let eps = detect_special_moments(&windows(&means), &MomentParams::default()).unwrap();
        let labeled = label_episode(&eps, 0, "breakfast").unwrap();
        assert_eq!(labeled[0].label.as_deref(), Some("breakfast"));
        assert_eq!(eps[0].label, None);
        let relabeled = label_episode(&labeled, 0, "lunch").unwrap();
        assert_eq!(relabeled[0].label.as_deref(), Some("lunch"));
        assert!(matches!(
            label_episode(&eps, 1, "x"),
            Err(Error::EpisodeIndex { index: 1, len: 1 })
        ));
    }

    #[test]
    fn csv_export_quotes_labels() {
        let ep = Episode {
            start: 0,
            end: 30,
            window_starts: vec![0],
            peak_delta: 20.0,
            trigger_threshold: 12.0,
            frames: vec!["a".into()],
            label: Some("coffee, then bus".into()),
        };
        assert_eq!(
            episodes_to_csv(&[ep]),
            "start,end,peak_delta,n_frames,label\n0,30,20.000000,1,\"coffee, then bus\"\n"
        );
    }
}
