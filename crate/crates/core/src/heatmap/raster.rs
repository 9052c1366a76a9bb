use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Error;
use crate::Result;

/// Peak contribution of a single stamp, at its centre cell.
pub const KERNEL_PEAK: u32 = 255;

/// Radial falloff of a stamped point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Falloff {
    /// `round(255 * max(0, 1 - d / radius))`.
    #[default]
    Linear,
}

impl Falloff {
    /// Contribution at integer cell offset `(dx, dy)` from the centre cell.
    pub fn weight(self, dx: i64, dy: i64, radius: u32) -> u32 {
        match self {
            Falloff::Linear => {
                let d = ((dx * dx + dy * dy) as f64).sqrt();
                let w = f64::from(KERNEL_PEAK) * (1.0 - d / f64::from(radius)).max(0.0);
                w.round() as u32
            }
        }
    }
}

/// Precomputed `(2r + 1)^2` stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    radius: u32,
    weights: Vec<u64>,
}

impl Kernel {
    pub fn new(radius: u32, falloff: Falloff) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidParam("radius_px must be at least 1".into()));
        }
        let r = i64::from(radius);
        let mut weights = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
        for dy in -r..=r {
            for dx in -r..=r {
                weights.push(u64::from(falloff.weight(dx, dy, radius)));
            }
        }
        Ok(Self { radius, weights })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    fn row(&self, dy: i64) -> &[u64] {
        let side = self.side();
        let i = (dy + i64::from(self.radius)) as usize;
        &self.weights[i * side..(i + 1) * side]
    }
}

/// Unclamped accumulation raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayBuffer {
    pub width: u32,
    pub height: u32,
    pub cells: Vec<u64>,
}

impl GrayBuffer {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            cells: vec![0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u64 {
        self.cells[y as usize * self.width as usize + x as usize]
    }

    pub fn max(&self) -> u64 {
        self.cells.iter().copied().max().unwrap_or(0)
    }

    /// Cellwise sum of two equally sized buffers.
    pub fn add(&mut self, other: &GrayBuffer) {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "buffer sizes differ"
        );
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
        }
    }
}

/// Raster cell holding a continuous pixel position.
pub fn cell_of(x: f64, y: f64) -> (i64, i64) {
    (x.floor() as i64, y.floor() as i64)
}

/// Rows per parallel band.
const BAND_ROWS: usize = 16;

/// Stamps `kernel` at every cell in `centers` and sums without clamping.
///
/// Bands of rows are filled in parallel; each band walks only the centres
/// whose stamp reaches it. Integer addition makes the result independent of
/// the thread count.
pub fn accumulate_cells(
    width: u32,
    height: u32,
    centers: &[(i64, i64)],
    kernel: &Kernel,
) -> GrayBuffer {
    let mut buf = GrayBuffer::new(width, height);
    if centers.is_empty() || width == 0 || height == 0 {
        return buf;
    }
    let mut sorted = centers.to_vec();
    sorted.sort_unstable_by_key(|&(x, y)| (y, x));
    let r = i64::from(kernel.radius);
    let w = width as usize;
    let (wi, hi) = (i64::from(width), i64::from(height));

    buf.cells
        .par_chunks_mut(w * BAND_ROWS)
        .enumerate()
        .for_each(|(band, rows)| {
            let y0 = (band * BAND_ROWS) as i64;
            let y1 = (y0 + (rows.len() / w) as i64).min(hi);
            let first = sorted.partition_point(|&(_, cy)| cy < y0 - r);
            for &(cx, cy) in sorted[first..]
                .iter()
                .take_while(|&&(_, cy)| cy <= y1 - 1 + r)
            {
                let x_lo = (cx - r).max(0);
                let x_hi = (cx + r).min(wi - 1);
                if x_lo > x_hi {
                    continue;
                }
                let k_lo = (x_lo - (cx - r)) as usize;
                let k_hi = (x_hi - (cx - r)) as usize;
                for y in (cy - r).max(y0)..=(cy + r).min(y1 - 1) {
                    let weights = &kernel.row(y - cy)[k_lo..=k_hi];
                    let start = (y - y0) as usize * w + x_lo as usize;
                    let dst = &mut rows[start..start + weights.len()];
                    for (d, k) in dst.iter_mut().zip(weights) {
                        *d += k;
                    }
                }
            }
        });
    buf
}
