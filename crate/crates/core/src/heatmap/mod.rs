//! Visit-frequency heat map.
//!
//! GPS-matched frames are projected with Web Mercator, each stamps a radial
//! kernel into an unclamped integer buffer, and the summed buffer is mapped
//! through a 256-entry ribbon. Clamping only happens at colorize time, so
//! `accumulate(A ∪ B) == accumulate(A) + accumulate(B)` holds exactly.

mod projection;
mod raster;
mod ribbon;
mod spots;

use serde::{Deserialize, Serialize};

pub use projection::{
    fit_projection, BBox, Projection, DEFAULT_PADDING, MAX_LATITUDE, MIN_SPAN_DEG,
};
pub use raster::{accumulate_cells, cell_of, Falloff, GrayBuffer, Kernel, KERNEL_PEAK};
pub use ribbon::{colorize, encode_png, ribbon_index, Normalization, RgbaRaster, Ribbon};
pub use spots::{build_spot_index, Spot, SpotIndex, DEFAULT_SPOT_CELL_PX};

use crate::fusion::GeoImage;
use crate::ingest::GpsFix;
use crate::{Error, Result};

pub const DEFAULT_RADIUS_PX: u32 = 16;
pub const DEFAULT_SIZE: (u32, u32) = (1024, 768);

/// Stamps one kernel per point at the raster cell its projection falls in.
/// Stamps partly outside the raster keep their in-raster part.
pub fn accumulate(
    p: &Projection,
    points: &[GeoImage],
    radius_px: u32,
    falloff: Falloff,
) -> Result<GrayBuffer> {
    let kernel = Kernel::new(radius_px, falloff)?;
    let centers = points
        .iter()
        .map(|g| p.project(g.fix.lat, g.fix.lon).map(|(x, y)| cell_of(x, y)))
        .collect::<Result<Vec<_>>>()?;
    Ok(accumulate_cells(p.width, p.height, &centers, &kernel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapParams {
    pub width: u32,
    pub height: u32,
    pub padding: f64,
    pub radius_px: u32,
    pub falloff: Falloff,
    pub normalization: Normalization,
    pub spot_cell_px: u32,
}

impl Default for HeatmapParams {
    fn default() -> Self {
        Self {
            width: DEFAULT_SIZE.0,
            height: DEFAULT_SIZE.1,
            padding: DEFAULT_PADDING,
            radius_px: DEFAULT_RADIUS_PX,
            falloff: Falloff::Linear,
            normalization: Normalization::Max,
            spot_cell_px: DEFAULT_SPOT_CELL_PX,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Heatmap {
    pub projection: Projection,
    pub buffer: GrayBuffer,
    pub raster: RgbaRaster,
    pub spots: SpotIndex,
}

impl Heatmap {
    pub fn png(&self) -> Result<Vec<u8>> {
        encode_png(&self.raster)
    }
}

/// Fit, accumulate, colorize and index in one pass.
pub fn render_heatmap(
    geos: &[GeoImage],
    params: &HeatmapParams,
    ribbon: &Ribbon,
) -> Result<Heatmap> {
    if geos.is_empty() {
        return Err(Error::NoGeoImages);
    }
    let fixes: Vec<GpsFix> = geos.iter().map(|g| g.fix).collect();
    let projection = fit_projection(&fixes, params.width, params.height, params.padding)?;
    let buffer = accumulate(&projection, geos, params.radius_px, params.falloff)?;
    let raster = colorize(&buffer, ribbon, params.normalization);
    let spots = build_spot_index(&projection, geos, params.spot_cell_px)?;
    Ok(Heatmap {
        projection,
        buffer,
        raster,
        spots,
    })
}
