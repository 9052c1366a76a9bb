//! Deterministic synthetic recordings with known ground truth.
//!
//! Used by the test suites and the `synth` CLI command to produce datasets
//! whose heart-rate spikes, GPS gaps and blurry frames are known in advance.

use std::path::Path;

use chrono::NaiveDate;
use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{write_gps_csv, write_heart_rate_csv, GpsFix, HeartRateSample};
use crate::{Epoch, Error, Result};

/// Seconds between camera captures.
pub const CAPTURE_INTERVAL: i64 = 30;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Local recording days as `(date, start hour, hours)`.
    pub days: Vec<(NaiveDate, u32, u32)>,
    pub tz_offset: i64,
    pub baseline_bpm: f64,
    /// Standard deviation of the 1 Hz samples around the baseline.
    pub noise_sd: f64,
    pub spikes_per_day: usize,
    /// Smallest injected jump in bpm.
    pub spike_min: f64,
    pub spike_max: f64,
    pub image_size: (u32, u32),
    pub blurry_fraction: f64,
    /// Number of sensor glitch rows (bpm outside the plausible range).
    pub glitches_per_day: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 20170402,
            days: vec![
                (NaiveDate::from_ymd_opt(2017, 4, 2).unwrap(), 9, 8),
                (NaiveDate::from_ymd_opt(2017, 4, 3).unwrap(), 9, 8),
            ],
            tz_offset: 9 * 3600,
            baseline_bpm: 72.0,
            noise_sd: 3.0,
            spikes_per_day: 5,
            spike_min: 20.0,
            spike_max: 32.0,
            image_size: (32, 24),
            blurry_fraction: 0.05,
            glitches_per_day: 3,
        }
    }
}

/// A heart-rate excursion placed by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectedSpike {
    pub start: Epoch,
    pub end: Epoch,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct SynthFrame {
    pub name: String,
    pub t: Epoch,
    pub blurry: bool,
    pub pixels: GrayImage,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub config: SynthConfig,
    pub hr: Vec<HeartRateSample>,
    /// Rows emitted but expected to be rejected by the parser.
    pub glitches: Vec<(Epoch, u16)>,
    pub fixes: Vec<GpsFix>,
    pub frames: Vec<SynthFrame>,
    pub spikes: Vec<InjectedSpike>,
}

/// Places visited during a day: `(lat, lon, gps available)`.
const PLACES: &[(f64, f64, bool)] = &[
    (33.8878, 130.7089, false), // lab, indoors
    (33.8921, 130.7162, true),  // station
    (33.8834, 130.7040, true),  // park
    (33.8855, 130.8790, true),  // city centre
    (33.8902, 130.7121, true),  // cafe terrace
];

pub fn generate(config: &SynthConfig) -> SynthDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_sd).expect("finite sd");
    let jitter = Normal::new(0.0, 0.00015).expect("finite sd");

    let mut hr = Vec::new();
    let mut glitches = Vec::new();
    let mut fixes = Vec::new();
    let mut frames = Vec::new();
    let mut spikes = Vec::new();

    for &(date, hour, hours) in &config.days {
        let local = date
            .and_hms_opt(hour, 0, 0)
            .expect("valid hour")
            .and_utc()
            .timestamp();
        let day_start = local - config.tz_offset;
        let day_len = i64::from(hours) * 3600;
        let n_windows = day_len / CAPTURE_INTERVAL;

        // Spikes: window-aligned, 1..=4 windows long, well separated.
        let slot = n_windows / config.spikes_per_day.max(1) as i64;
        let mut day_spikes = Vec::new();
        for k in 0..config.spikes_per_day as i64 {
            let lo = k * slot + 30;
            let hi = (k + 1) * slot - 30;
            let w = rng.random_range(lo..hi.max(lo + 1));
            let len = rng.random_range(1..=4);
            let magnitude = rng.random_range(config.spike_min..config.spike_max);
            let spike = InjectedSpike {
                start: day_start + w * CAPTURE_INTERVAL,
                end: day_start + (w + len) * CAPTURE_INTERVAL,
                magnitude,
            };
            day_spikes.push(spike);
        }

        for s in 0..day_len {
            let t = day_start + s;
            let drift = 4.0 * (s as f64 / 7200.0 * std::f64::consts::TAU).sin();
            let spike: f64 = day_spikes
                .iter()
                .filter(|sp| sp.start <= t && t < sp.end)
                .map(|sp| sp.magnitude)
                .sum();
            let bpm = (config.baseline_bpm + drift + spike + noise.sample(&mut rng)).round();
            hr.push(HeartRateSample {
                t,
                bpm: bpm.clamp(40.0, 200.0) as u16,
            });
        }
        for _ in 0..config.glitches_per_day {
            let s = rng.random_range(0..day_len);
            let bpm = if rng.random_bool(0.5) { 0 } else { 300 };
            glitches.push((day_start + s, bpm));
        }
        spikes.extend(day_spikes);

        // Itinerary: the day is split into stays of 20..90 minutes.
        let mut stays = Vec::new();
        let mut s = 0;
        while s < day_len {
            let len = rng.random_range(20..=90) * 60;
            stays.push((s, (s + len).min(day_len), rng.random_range(0..PLACES.len())));
            s += len;
        }

        for k in 0..n_windows {
            let t = day_start + k * CAPTURE_INTERVAL + 7;
            let blurry = rng.random_bool(config.blurry_fraction);
            let pixels = frame_pixels(&mut rng, config.image_size, blurry);
            let local_t = chrono::DateTime::from_timestamp(t + config.tz_offset, 0)
                .expect("in range")
                .naive_utc();
            frames.push(SynthFrame {
                name: format!("{}.png", local_t.format("%Y%m%d_%H%M%S")),
                t,
                blurry,
                pixels,
            });

            let offset = t - day_start;
            let &(_, _, place) = stays
                .iter()
                .find(|&&(a, b, _)| a <= offset && offset < b)
                .expect("stays cover the day");
            let (lat, lon, outdoor) = PLACES[place];
            let available = if outdoor {
                rng.random_bool(0.9)
            } else {
                rng.random_bool(0.05)
            };
            if available {
                fixes.push(GpsFix {
                    t: t + rng.random_range(-3..=3),
                    lat: round6(lat + jitter.sample(&mut rng)),
                    lon: round6(lon + jitter.sample(&mut rng)),
                });
            }
        }
    }

    SynthDataset {
        config: config.clone(),
        hr,
        glitches,
        fixes,
        frames,
        spikes,
    }
}

fn round6(v: f64) -> f64 {
    format!("{v:.6}").parse().expect("formatted float parses")
}

fn frame_pixels(rng: &mut ChaCha8Rng, (w, h): (u32, u32), blurry: bool) -> GrayImage {
    if blurry {
        let base: u8 = rng.random_range(60..180);
        GrayImage::from_fn(w, h, |x, _| Luma([base.saturating_add((x / 4) as u8)]))
    } else {
        GrayImage::from_fn(w, h, |_, _| Luma([rng.random()]))
    }
}

impl SynthDataset {
    /// Heart-rate CSV including the glitch rows, in local time.
    pub fn heart_rate_csv(&self) -> String {
        let mut csv = write_heart_rate_csv(&self.hr, self.config.tz_offset);
        for &(t, bpm) in &self.glitches {
            let local = chrono::DateTime::from_timestamp(t + self.config.tz_offset, 0)
                .expect("in range")
                .naive_utc();
            csv.push_str(&format!(
                "{},{bpm}\n",
                local.format(crate::ingest::DEFAULT_TIME_FORMAT)
            ));
        }
        csv
    }

    pub fn gps_csv(&self) -> String {
        write_gps_csv(&self.fixes, self.config.tz_offset)
    }

    /// Writes `hr.csv`, `gps.csv`, `images/` and `truth.json` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let images = dir.join("images");
        std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
        let write = |name: &str, body: &[u8]| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(path, e))
        };
        write("hr.csv", self.heart_rate_csv().as_bytes())?;
        write("gps.csv", self.gps_csv().as_bytes())?;
        let truth = serde_json::json!({
            "config": self.config,
            "spikes": self.spikes,
            "glitch_rows": self.glitches.len(),
            "frames": self.frames.len(),
            "blurry_frames": self.frames.iter().filter(|f| f.blurry).count(),
            "fixes": self.fixes.len(),
        });
        write(
            "truth.json",
            serde_json::to_string_pretty(&truth)
                .expect("plain JSON")
                .as_bytes(),
        )?;
        for f in &self.frames {
            let path = images.join(&f.name);
            f.pixels.save(&path).map_err(|e| Error::Encode {
                what: "synthetic frame",
                message: format!("{}: {e}", path.display()),
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let a = generate(&SynthConfig::default());
        let b = generate(&SynthConfig::default());
        assert_eq!(a.hr, b.hr);
        assert_eq!(a.fixes, b.fixes);
        assert_eq!(a.spikes, b.spikes);
    }

    #[test]
    fn shape_of_default_dataset() {
        let d = generate(&SynthConfig::default());
        assert_eq!(d.hr.len(), 2 * 8 * 3600);
        assert_eq!(d.frames.len(), 2 * 960);
        assert_eq!(d.spikes.len(), 10);
        assert!(d.spikes.iter().all(|s| s.magnitude >= 20.0));
        assert!(d.fixes.windows(2).all(|w| w[0].t < w[1].t));
        assert!(d.fixes.len() < d.frames.len());
    }
}
