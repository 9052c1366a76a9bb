use std::collections::HashMap;

use lifelog_core::fusion::GeoImage;
use lifelog_core::heatmap::{
    accumulate, accumulate_cells, build_spot_index, colorize, fit_projection, render_heatmap,
    ribbon_index, Falloff, GrayBuffer, HeatmapParams, Kernel, Normalization, Ribbon,
};
use lifelog_core::ingest::GpsFix;
use proptest::prelude::*;

fn cells(w: u32, h: u32) -> impl Strategy<Value = Vec<(i64, i64)>> {
    let (w, h) = (i64::from(w), i64::from(h));
    prop::collection::vec((-20..w + 20, -20..h + 20), 0..60)
}

fn geo(i: usize, lat: f64, lon: f64) -> GeoImage {
    GeoImage {
        image_id: format!("f{i:03}"),
        image_t: i as i64 * 30,
        fix: GpsFix {
            t: i as i64 * 30,
            lat,
            lon,
        },
        dt: 0,
    }
}

/// Coordinates on a 2^-20 degree lattice so sums with lattice shifts are
/// exact in f64.
fn lattice_geos() -> impl Strategy<Value = Vec<GeoImage>> {
    prop::collection::vec((-40_000i64..40_000, -40_000i64..40_000), 1..40).prop_map(|pts| {
        let q = (2f64).powi(-20);
        pts.iter()
            .enumerate()
            .map(|(i, &(a, b))| geo(i, 35.0 + a as f64 * q, 135.0 + b as f64 * q))
            .collect()
    })
}

proptest! {
    #[test]
    fn accumulation_is_additive(
        (w, h, a, b) in (8u32..96, 8u32..96)
            .prop_flat_map(|(w, h)| (Just(w), Just(h), cells(w, h), cells(w, h))),
        r in 1u32..20,
    ) {
        let k = Kernel::new(r, Falloff::Linear).unwrap();
        let both: Vec<_> = a.iter().chain(&b).copied().collect();
        let mut sum = accumulate_cells(w, h, &a, &k);
        sum.add(&accumulate_cells(w, h, &b, &k));
        prop_assert_eq!(accumulate_cells(w, h, &both, &k), sum);
    }

    #[test]
    fn kernel_is_radial_and_dihedral(r in 1u32..40) {
        let ri = i64::from(r);
        let side = 2 * r + 1;
        let buf = accumulate_cells(side, side, &[(ri, ri)], &Kernel::new(r, Falloff::Linear).unwrap());
        let at = |dx: i64, dy: i64| buf.get((ri + dx) as u32, (ri + dy) as u32);
        prop_assert_eq!(at(0, 0), 255);
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                let v = at(dx, dy);
                for (sx, sy) in [(dx, -dy), (-dx, dy), (-dx, -dy), (dy, dx), (-dy, dx), (dy, -dx), (-dy, -dx)] {
                    prop_assert_eq!(v, at(sx, sy));
                }
                if dx * dx + dy * dy >= ri * ri {
                    prop_assert_eq!(v, 0);
                }
                // Moving one step outward never increases the weight.
                if dx >= 0 && dx < ri {
                    prop_assert!(at(dx + 1, dy) <= v);
                }
                if dy >= 0 && dy < ri {
                    prop_assert!(at(dx, dy + 1) <= v);
                }
            }
        }
    }

    #[test]
    fn colorize_is_a_per_cell_lookup(
        cells in prop::collection::vec(0u64..5_000, 1..300),
        fixed in prop::option::of(0u64..6_000),
    ) {
        let buf = GrayBuffer { width: cells.len() as u32, height: 1, cells: cells.clone() };
        let ribbon = Ribbon::rainbow();
        let norm = fixed.map_or(Normalization::Max, Normalization::Fixed);
        let out = colorize(&buf, &ribbon, norm);
        let max = fixed.unwrap_or_else(|| *cells.iter().max().unwrap());
        for (i, &c) in cells.iter().enumerate() {
            // Nearest k/255 of the clamped ratio, ties upward.
            let idx = if max == 0 {
                0
            } else {
                let target = 255 * i128::from(c.min(max));
                (0..=255i128)
                    .min_by_key(|&k| ((target - k * i128::from(max)).abs(), -k))
                    .unwrap() as usize
            };
            prop_assert_eq!(&out.data[i * 4..i * 4 + 4], &ribbon.entries()[idx][..]);
            prop_assert_eq!(usize::from(ribbon_index(c, max)), idx);
        }
    }

    #[test]
    fn projection_round_trips(
        pts in prop::collection::vec((-85.0f64..85.0, -180.0f64..180.0), 1..20),
        w in 16u32..2048,
        h in 16u32..2048,
        pad in 0.0f64..0.45,
    ) {
        let fixes: Vec<GpsFix> = pts.iter().map(|&(lat, lon)| GpsFix { t: 0, lat, lon }).collect();
        let p = fit_projection(&fixes, w, h, pad).unwrap();
        for f in &fixes {
            let (x, y) = p.project(f.lat, f.lon).unwrap();
            prop_assert!(x >= -1e-6 && x <= f64::from(w) + 1e-6);
            prop_assert!(y >= -1e-6 && y <= f64::from(h) + 1e-6);
            let (lat, lon) = p.unproject(x, y);
            prop_assert!((lat - f.lat).abs() < 1e-9, "lat {} vs {}", lat, f.lat);
            prop_assert!((lon - f.lon).abs() < 1e-9, "lon {} vs {}", lon, f.lon);
        }
    }

    #[test]
    fn longitude_translation_keeps_the_raster(geos in lattice_geos(), shift in -1_000_000i64..1_000_000) {
        let params = HeatmapParams { width: 160, height: 120, ..HeatmapParams::default() };
        let d = shift as f64 * (2f64).powi(-20);
        let moved: Vec<GeoImage> = geos
            .iter()
            .map(|g| GeoImage { fix: GpsFix { lon: g.fix.lon + d, ..g.fix }, ..g.clone() })
            .collect();
        let a = render_heatmap(&geos, &params, &Ribbon::rainbow()).unwrap();
        let b = render_heatmap(&moved, &params, &Ribbon::rainbow()).unwrap();
        prop_assert_eq!(&a.buffer, &b.buffer);
        prop_assert_eq!(a.png().unwrap(), b.png().unwrap());
    }

    #[test]
    fn spot_index_partitions_frames(geos in lattice_geos(), cell in 1u32..32) {
        let fixes: Vec<GpsFix> = geos.iter().map(|g| g.fix).collect();
        let p = fit_projection(&fixes, 200, 150, 0.05).unwrap();
        let index = build_spot_index(&p, &geos, cell).unwrap();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (_, spots) in index.cells() {
            for s in spots {
                *seen.entry(s.image_id.as_str()).or_default() += 1;
            }
        }
        prop_assert_eq!(seen.len(), geos.len());
        prop_assert!(seen.values().all(|&n| n == 1));
        for g in &geos {
            let (x, y) = p.project(g.fix.lat, g.fix.lon).unwrap();
            prop_assert!(index.lookup_px(x, y).iter().any(|s| s.image_id == g.image_id));
        }
    }
}

#[test]
fn accumulate_stamps_projected_cells() {
    let geos = [geo(0, 35.0, 135.0), geo(1, 35.0005, 135.0005)];
    let fixes: Vec<GpsFix> = geos.iter().map(|g| g.fix).collect();
    let p = fit_projection(&fixes, 64, 64, 0.1).unwrap();
    let buf = accumulate(&p, &geos, 4, Falloff::Linear).unwrap();
    for g in &geos {
        let (x, y) = p.project(g.fix.lat, g.fix.lon).unwrap();
        assert!(buf.get(x.floor() as u32, y.floor() as u32) >= 255);
    }
}

#[test]
fn ribbon_table_matches_docs() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/ribbon.csv");
    let csv = Ribbon::rainbow().to_csv();
    if std::env::var_os("LIFELOG_BLESS").is_some() {
        std::fs::write(path, &csv).unwrap();
    }
    assert_eq!(std::fs::read_to_string(path).unwrap(), csv);
}
