use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::projection::Projection;
use crate::fusion::GeoImage;
use crate::{Epoch, Error, Result};

pub const DEFAULT_SPOT_CELL_PX: u32 = 8;

/// One frame recallable from a heat-map spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spot {
    pub image_id: String,
    pub t: Epoch,
    pub lat: f64,
    pub lon: f64,
}

/// Pixel-grid lookup from a heat-map location to the frames taken there.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotIndex {
    pub cell_px: u32,
    cells: BTreeMap<(i64, i64), Vec<Spot>>,
}

impl SpotIndex {
    pub fn new(cell_px: u32) -> Self {
        Self {
            cell_px,
            cells: BTreeMap::new(),
        }
    }

    /// Grid cell containing pixel position `(x, y)`.
    pub fn cell_at(&self, x: f64, y: f64) -> (i64, i64) {
        let c = f64::from(self.cell_px);
        ((x / c).floor() as i64, (y / c).floor() as i64)
    }

    /// Adds a frame to a cell, keeping the cell ordered by `(t, id)`.
    pub fn insert(&mut self, cell: (i64, i64), spot: Spot) {
        let list = self.cells.entry(cell).or_default();
        let pos = list.partition_point(|s| (s.t, &s.image_id) <= (spot.t, &spot.image_id));
        list.insert(pos, spot);
    }

    /// Frames in a cell, ordered by time.
    pub fn lookup(&self, cell: (i64, i64)) -> &[Spot] {
        self.cells.get(&cell).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Frames under a pixel position.
    pub fn lookup_px(&self, x: f64, y: f64) -> &[Spot] {
        self.lookup(self.cell_at(x, y))
    }

    /// Cells in row-major order with their frames.
    pub fn cells(&self) -> impl Iterator<Item = ((i64, i64), &[Spot])> {
        let mut keys: Vec<_> = self.cells.keys().copied().collect();
        keys.sort_by_key(|&(cx, cy)| (cy, cx));
        keys.into_iter()
            .map(move |k| (k, self.cells[&k].as_slice()))
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn image_count(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }
}

pub fn build_spot_index(p: &Projection, geos: &[GeoImage], cell_px: u32) -> Result<SpotIndex> {
    if cell_px == 0 {
        return Err(Error::InvalidParam(
            "spot_cell_px must be at least 1".into(),
        ));
    }
    let mut index = SpotIndex::new(cell_px);
    for g in geos {
        let (x, y) = p.project(g.fix.lat, g.fix.lon)?;
        index.insert(
            index.cell_at(x, y),
            Spot {
                image_id: g.image_id.clone(),
                t: g.image_t,
                lat: g.fix.lat,
                lon: g.fix.lon,
            },
        );
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::fit_projection;
    use crate::ingest::GpsFix;

    fn geo(id: &str, t: i64, lat: f64, lon: f64) -> GeoImage {
        GeoImage {
            image_id: id.into(),
            image_t: t,
            fix: GpsFix { t, lat, lon },
            dt: 0,
        }
    }

    #[test]
    fn one_image_one_cell() {
        let g = [geo("a", 0, 33.9, 130.8)];
        let p = fit_projection(&[g[0].fix], 256, 256, 0.05).unwrap();
        let idx = build_spot_index(&p, &g, 8).unwrap();
        assert_eq!(idx.cell_count(), 1);
        assert_eq!(idx.lookup((16, 16))[0].image_id, "a");
        assert_eq!(idx.lookup_px(130.0, 129.0).len(), 1);
    }

    #[test]
    fn close_pair_shares_cell_in_time_order() {
        let fixes = [
            GpsFix {
                t: 0,
                lat: 33.90,
                lon: 130.80,
            },
            GpsFix {
                t: 0,
                lat: 33.91,
                lon: 130.81,
            },
        ];
        let p = fit_projection(&fixes, 512, 512, 0.05).unwrap();
        // Pick two positions exactly one pixel apart inside one 8 px cell.
        let (lat_a, lon_a) = p.unproject(100.5, 100.5);
        let (lat_b, lon_b) = p.unproject(101.5, 100.5);
        let g = [
            geo("later", 60, lat_a, lon_a),
            geo("earlier", 30, lat_b, lon_b),
        ];
        let idx = build_spot_index(&p, &g, 8).unwrap();
        let ids: Vec<&str> = idx
            .lookup((12, 12))
            .iter()
            .map(|s| s.image_id.as_str())
            .collect();
        assert_eq!(ids, ["earlier", "later"]);
    }

    #[test]
    fn zero_cell_size_rejected() {
        let g = [geo("a", 0, 33.9, 130.8)];
        let p = fit_projection(&[g[0].fix], 16, 16, 0.05).unwrap();
        assert!(build_spot_index(&p, &g, 0).is_err());
    }
}
