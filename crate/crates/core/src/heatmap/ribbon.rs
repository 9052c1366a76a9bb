use serde::{Deserialize, Serialize};

use super::raster::GrayBuffer;
use crate::{Error, Result};

/// Largest alpha of the default ribbon.
const RAINBOW_ALPHA: u8 = 200;
/// Index from which the default ribbon is fully ramped up.
const RAINBOW_ALPHA_KNEE: usize = 64;

/// 256-entry RGBA colormap. Entry 0 is transparent and alpha never
/// decreases with index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ribbon {
    entries: [[u8; 4]; 256],
}

impl Ribbon {
    pub fn new(entries: [[u8; 4]; 256]) -> Result<Self> {
        if entries[0][3] != 0 {
            return Err(Error::InvalidParam(
                "ribbon entry 0 must be transparent".into(),
            ));
        }
        if entries.windows(2).any(|w| w[1][3] < w[0][3]) {
            return Err(Error::InvalidParam(
                "ribbon alpha must be non-decreasing".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// Blue to red hue sweep (240 to 0 degrees) at full saturation and value;
    /// alpha ramps linearly to 200 over the first 64 entries.
    pub fn rainbow() -> Self {
        let mut entries = [[0u8; 4]; 256];
        for (i, e) in entries.iter_mut().enumerate() {
            let hue = 240.0 * (255 - i) as f64 / 255.0;
            let [r, g, b] = hsv_to_rgb(hue);
            let alpha = if i >= RAINBOW_ALPHA_KNEE {
                RAINBOW_ALPHA
            } else {
                (f64::from(RAINBOW_ALPHA) * i as f64 / RAINBOW_ALPHA_KNEE as f64).round() as u8
            };
            *e = [r, g, b, alpha];
        }
        Self::new(entries).expect("rainbow satisfies ribbon invariants")
    }

    pub fn get(&self, index: u8) -> [u8; 4] {
        self.entries[usize::from(index)]
    }

    pub fn entries(&self) -> &[[u8; 4]; 256] {
        &self.entries
    }

    /// `index,r,g,b,a` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,r,g,b,a\n");
        for (i, [r, g, b, a]) in self.entries.iter().enumerate() {
            out.push_str(&format!("{i},{r},{g},{b},{a}\n"));
        }
        out
    }
}

impl Default for Ribbon {
    fn default() -> Self {
        Self::rainbow()
    }
}

/// Full saturation and value.
fn hsv_to_rgb(hue: f64) -> [u8; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let q = |c: f64| (255.0 * c).round() as u8;
    [q(r), q(g), q(b)]
}

/// How accumulated cells map to ribbon indices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "max")]
pub enum Normalization {
    /// Scale by the buffer's own maximum.
    #[default]
    Max,
    /// Scale by a fixed ceiling so renders of different days compare.
    Fixed(u64),
}

/// 8-bit RGBA raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaRaster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

/// `round(255 * cell / max)` clamped to 0..=255, half rounding up; 0 when
/// `max` is 0.
pub fn ribbon_index(cell: u64, max: u64) -> u8 {
    if max == 0 {
        return 0;
    }
    let (c, m) = (u128::from(cell), u128::from(max));
    ((510 * c + m) / (2 * m)).min(255) as u8
}

pub fn colorize(buf: &GrayBuffer, ribbon: &Ribbon, norm: Normalization) -> RgbaRaster {
    let max = match norm {
        Normalization::Max => buf.max(),
        Normalization::Fixed(m) => m,
    };
    let mut data = Vec::with_capacity(buf.cells.len() * 4);
    for &c in &buf.cells {
        data.extend_from_slice(&ribbon.get(ribbon_index(c, max)));
    }
    RgbaRaster {
        width: buf.width,
        height: buf.height,
        data,
    }
}

/// Non-interlaced 8-bit RGBA PNG.
pub fn encode_png(raster: &RgbaRaster) -> Result<Vec<u8>> {
    use image::codecs::png::{CompressionType, FilterType, PngEncoder};
    use image::ImageEncoder;

    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(
            &raster.data,
            raster.width,
            raster.height,
            image::ExtendedColorType::Rgba8,
        )
        .map_err(|e| Error::Encode {
            what: "heat map PNG",
            message: e.to_string(),
        })?;
    Ok(out)
}
