use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::ingest::GpsFix;
use crate::{Error, Result};

/// Web Mercator is undefined at the poles; fixes must stay inside this.
pub const MAX_LATITUDE: f64 = 85.051;
/// Smallest bbox side in degrees; a single fix gets this neighbourhood.
pub const MIN_SPAN_DEG: f64 = 0.001;
pub const DEFAULT_PADDING: f64 = 0.05;

/// Spherical Mercator northing in radians.
fn merc_y(lat: f64) -> f64 {
    (FRAC_PI_4 + lat.to_radians() / 2.0).tan().ln()
}

fn inv_merc_y(y: f64) -> f64 {
    y.sinh().atan().to_degrees()
}

/// Viewport mapping lat/lon to raster pixels, y pointing down.
///
/// Easting is kept relative to `lon_ref` so the mapping of a point depends
/// only on its offset from the data, not on absolute longitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub width: u32,
    pub height: u32,
    pub padding: f64,
    /// Westmost fix longitude, degrees.
    pub lon_ref: f64,
    /// Easting of the raster centre relative to `lon_ref`, radians.
    pub center_x: f64,
    /// Northing of the raster centre, radians.
    pub center_y: f64,
    /// Pixels per radian on both axes.
    pub scale: f64,
}

/// Degrees bounding box of a projection's full raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

fn check_lat(lat: f64) -> Result<()> {
    if lat.is_finite() && lat.abs() < MAX_LATITUDE {
        Ok(())
    } else {
        Err(Error::LatitudeOutOfRange(lat))
    }
}

/// Fits the fixes into a `width` x `height` raster.
///
/// The Mercator bounding box of the fixes is widened to at least
/// [`MIN_SPAN_DEG`] per side, grown so the extremes sit `padding` of the
/// raster inside its edges, then the short axis is widened symmetrically to
/// match the raster aspect.
pub fn fit_projection(
    fixes: &[GpsFix],
    width: u32,
    height: u32,
    padding: f64,
) -> Result<Projection> {
    let first = fixes.first().ok_or(Error::NoFixes)?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidParam("raster size must be non-zero".into()));
    }
    if !(0.0..0.5).contains(&padding) {
        return Err(Error::InvalidParam(format!(
            "padding {padding} outside [0, 0.5)"
        )));
    }
    let (mut lat_lo, mut lat_hi) = (first.lat, first.lat);
    let (mut lon_lo, mut lon_hi) = (first.lon, first.lon);
    for f in fixes {
        check_lat(f.lat)?;
        lat_lo = lat_lo.min(f.lat);
        lat_hi = lat_hi.max(f.lat);
        lon_lo = lon_lo.min(f.lon);
        lon_hi = lon_hi.max(f.lon);
    }

    let lon_span = lon_hi - lon_lo;
    let center_x = (lon_span / 2.0).to_radians();
    let half_x = (lon_span.max(MIN_SPAN_DEG) / 2.0).to_radians();

    let (y_lo, y_hi) = (merc_y(lat_lo), merc_y(lat_hi));
    let center_y = (y_lo + y_hi) / 2.0;
    let mut half_y = (y_hi - y_lo) / 2.0;
    if lat_hi - lat_lo < MIN_SPAN_DEG {
        let mid = (lat_lo + lat_hi) / 2.0;
        let lo = (mid - MIN_SPAN_DEG / 2.0).max(-MAX_LATITUDE);
        let hi = (mid + MIN_SPAN_DEG / 2.0).min(MAX_LATITUDE);
        half_y = half_y.max((merc_y(hi) - merc_y(lo)) / 2.0);
    }

    let grow = 1.0 / (1.0 - 2.0 * padding);
    let (half_x, half_y) = (half_x * grow, half_y * grow);
    let scale = (f64::from(width) / (2.0 * half_x)).min(f64::from(height) / (2.0 * half_y));

    Ok(Projection {
        width,
        height,
        padding,
        lon_ref: lon_lo,
        center_x,
        center_y,
        scale,
    })
}

impl Projection {
    /// Continuous pixel coordinates of a point; `(0, 0)` is the top-left
    /// corner of the raster.
    pub fn project(&self, lat: f64, lon: f64) -> Result<(f64, f64)> {
        check_lat(lat)?;
        let east = (lon - self.lon_ref).to_radians() - self.center_x;
        let north = merc_y(lat) - self.center_y;
        Ok((
            f64::from(self.width) / 2.0 + east * self.scale,
            f64::from(self.height) / 2.0 - north * self.scale,
        ))
    }

    pub fn unproject(&self, x: f64, y: f64) -> (f64, f64) {
        let east = (x - f64::from(self.width) / 2.0) / self.scale + self.center_x;
        let north = self.center_y - (y - f64::from(self.height) / 2.0) / self.scale;
        (inv_merc_y(north), self.lon_ref + east.to_degrees())
    }

    pub fn bbox(&self) -> BBox {
        let (max_lat, min_lon) = self.unproject(0.0, 0.0);
        let (min_lat, max_lon) = self.unproject(f64::from(self.width), f64::from(self.height));
        BBox {
            min_lat,
            min_lon,
            max_lat,
            max_lon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fix(lat: f64, lon: f64) -> GpsFix {
        GpsFix { t: 0, lat, lon }
    }

    /// Textbook spherical Mercator on a unit sphere, independent of the
    /// implementation above.
    fn textbook(lat: f64, lon: f64) -> (f64, f64) {
        let phi = lat * std::f64::consts::PI / 180.0;
        let lambda = lon * std::f64::consts::PI / 180.0;
        (lambda, ((1.0 + phi.sin()) / (1.0 - phi.sin())).ln() / 2.0)
    }

    #[test]
    fn single_fix_sits_at_centre() {
        let p = fit_projection(&[fix(33.894, 130.84)], 512, 512, 0.05).unwrap();
        let (x, y) = p.project(33.894, 130.84).unwrap();
        assert_eq!((x, y), (256.0, 256.0));
        let b = p.bbox();
        assert!(b.max_lon - b.min_lon >= MIN_SPAN_DEG);
        assert!(b.max_lat - b.min_lat >= MIN_SPAN_DEG * 0.99);
    }

    #[test]
    fn symmetric_bbox_maps_origin_to_centre() {
        let p = fit_projection(&[fix(-1.0, -1.0), fix(1.0, 1.0)], 400, 400, 0.0).unwrap();
        let (x, y) = p.project(0.0, 0.0).unwrap();
        assert!((x - 200.0).abs() < 1e-9 && (y - 200.0).abs() < 1e-9);
    }

    #[test]
    fn opposite_corners_hit_raster_corners() {
        let (sw, ne) = ((33.80, 130.70), (33.95, 130.90));
        let (x0, y0) = textbook(sw.0, sw.1);
        let (x1, y1) = textbook(ne.0, ne.1);
        // Raster sized to the Mercator aspect so no axis is widened.
        let width = 1000u32;
        let height_f = 1000.0 * (y1 - y0) / (x1 - x0);
        let p = fit_projection(
            &[fix(sw.0, sw.1), fix(ne.0, ne.1)],
            width,
            height_f.ceil() as u32,
            0.0,
        )
        .unwrap();
        let (ax, ay) = p.project(sw.0, sw.1).unwrap();
        let (bx, by) = p.project(ne.0, ne.1).unwrap();
        assert!(ax.abs() < 1e-6, "{ax}");
        assert!((bx - 1000.0).abs() < 1e-6, "{bx}");
        // Short axis centred: equal slack above and below.
        let h = f64::from(p.height);
        assert!((ay - (h - (h - height_f) / 2.0)).abs() < 1e-6, "{ay}");
        assert!((by - (h - height_f) / 2.0).abs() < 1e-6, "{by}");
    }

    #[test]
    fn padding_puts_extremes_inside_long_axis() {
        let p = fit_projection(&[fix(33.9, 130.80), fix(33.9001, 130.90)], 800, 600, 0.05).unwrap();
        let (ax, _) = p.project(33.9, 130.80).unwrap();
        let (bx, _) = p.project(33.9001, 130.90).unwrap();
        assert!((ax - 40.0).abs() < 1e-6, "{ax}");
        assert!((bx - 760.0).abs() < 1e-6, "{bx}");
    }

    #[test]
    fn matches_textbook_formula() {
        let fixes = [fix(33.80, 130.70), fix(33.95, 130.90)];
        let p = fit_projection(&fixes, 640, 480, 0.05).unwrap();
        let (lat, lon) = (33.8761, 130.8123);
        let (ex, ey) = textbook(lat, lon);
        let (rx, _) = textbook(0.0, p.lon_ref);
        let expect_x = 320.0 + (ex - rx - p.center_x) * p.scale;
        let expect_y = 240.0 - (ey - p.center_y) * p.scale;
        let (x, y) = p.project(lat, lon).unwrap();
        assert!((x - expect_x).abs() < 1e-6, "{x} vs {expect_x}");
        assert!((y - expect_y).abs() < 1e-6, "{y} vs {expect_y}");
    }

    #[test]
    fn round_trip() {
        let p = fit_projection(&[fix(33.80, 130.70), fix(33.95, 130.90)], 640, 480, 0.05).unwrap();
        let (x, y) = p.project(33.9, 130.85).unwrap();
        let (lat, lon) = p.unproject(x, y);
        assert!((lat - 33.9).abs() < 1e-9 && (lon - 130.85).abs() < 1e-9);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            fit_projection(&[], 10, 10, 0.05),
            Err(Error::NoFixes)
        ));
        assert!(fit_projection(&[fix(86.0, 0.0)], 10, 10, 0.05).is_err());
        assert!(fit_projection(&[fix(0.0, 0.0)], 10, 10, 0.5).is_err());
        let p = fit_projection(&[fix(0.0, 0.0)], 10, 10, 0.05).unwrap();
        assert!(matches!(
            p.project(85.06, 0.0),
            Err(Error::LatitudeOutOfRange(_))
        ));
    }
}
