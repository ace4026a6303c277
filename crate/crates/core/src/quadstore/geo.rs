//! Fixed-grid geographic index with exact k-nearest search.
//!
//! Points are bucketed into 0.01 degree cells. A query first expands rings of
//! cells around the query cell until it holds k candidates, then rescans the
//! spherical bounding box of the k-th candidate distance so the answer is
//! exact. Distances are great-circle (haversine).

use std::collections::{BTreeSet, HashMap};

use super::GeoPoint;

pub const EARTH_RADIUS_M: f64 = 6_371_008.8;
pub const CELL_DEG: f64 = 0.01;

const LAT_CELLS: i32 = 18_000;
const LON_CELLS: i32 = 36_000;
const MAX_RING_PROBES: i32 = 8;

/// Great-circle distance in metres between two WGS84 points.
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat().to_radians(), b.lat().to_radians());
    let dphi = p2 - p1;
    let dlambda = (b.long() - a.long()).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

type Cell = (i32, i32);

fn cell_of(p: GeoPoint) -> Cell {
    let row = ((p.lat() + 90.0) / CELL_DEG).floor() as i32;
    let col = ((p.long() + 180.0) / CELL_DEG).floor() as i32;
    (row.clamp(0, LAT_CELLS - 1), col.rem_euclid(LON_CELLS))
}

#[derive(Debug, Default, Clone)]
pub struct GeoGrid {
    cells: HashMap<Cell, BTreeSet<u32>>,
    points: HashMap<u32, GeoPoint>,
}

impl GeoGrid {
    #[cfg(test)]
    fn len(&self) -> usize {
        self.points.len()
    }

    pub fn point(&self, id: u32) -> Option<GeoPoint> {
        self.points.get(&id).copied()
    }

    pub fn set(&mut self, id: u32, point: Option<GeoPoint>) {
        if let Some(old) = self.points.remove(&id) {
            let cell = cell_of(old);
            if let Some(bucket) = self.cells.get_mut(&cell) {
                bucket.remove(&id);
                if bucket.is_empty() {
                    self.cells.remove(&cell);
                }
            }
        }
        if let Some(p) = point {
            self.points.insert(id, p);
            self.cells.entry(cell_of(p)).or_default().insert(id);
        }
    }

    /// Ids within `max_distance` of `query` accepted by `keep`, with their
    /// distances. Unordered; the caller ranks. At least the `k` nearest are
    /// guaranteed to be present.
    pub fn candidates(
        &self,
        query: GeoPoint,
        k: usize,
        max_distance: f64,
        keep: &dyn Fn(u32) -> bool,
    ) -> Vec<(u32, f64)> {
        if self.points.is_empty() || k == 0 {
            return Vec::new();
        }
        let center = cell_of(query);
        let mut seen: BTreeSet<Cell> = BTreeSet::new();
        let mut found: Vec<(u32, f64)> = Vec::new();

        let visit = |cell: Cell, seen: &mut BTreeSet<Cell>, found: &mut Vec<(u32, f64)>| {
            if !seen.insert(cell) {
                return;
            }
            if let Some(bucket) = self.cells.get(&cell) {
                for &id in bucket {
                    if !keep(id) {
                        continue;
                    }
                    let d = haversine_m(query, self.points[&id]);
                    if d <= max_distance {
                        found.push((id, d));
                    }
                }
            }
        };

        // Phase 1: a few rings to seed a distance bound.
        for r in 0..=MAX_RING_PROBES {
            for cell in ring(center, r) {
                visit(cell, &mut seen, &mut found);
            }
            if found.len() >= k {
                break;
            }
        }

        // Phase 2: bound = k-th best so far (or max_distance); scan its box.
        let bound = if found.len() >= k {
            let mut ds: Vec<f64> = found.iter().map(|&(_, d)| d).collect();
            ds.sort_by(f64::total_cmp);
            ds[k - 1].min(max_distance)
        } else {
            max_distance
        };

        match bounding_cells(query, bound) {
            Some((rows, cols)) => {
                let box_cells = (rows.1 - rows.0 + 1) as u64 * cols.len() as u64;
                if box_cells <= self.cells.len() as u64 {
                    for row in rows.0..=rows.1 {
                        for &col in &cols {
                            visit((row, col), &mut seen, &mut found);
                        }
                    }
                } else {
                    let col_set: BTreeSet<i32> = cols.into_iter().collect();
                    let occupied: Vec<Cell> = self
                        .cells
                        .keys()
                        .filter(|(r, c)| *r >= rows.0 && *r <= rows.1 && col_set.contains(c))
                        .copied()
                        .collect();
                    for cell in occupied {
                        visit(cell, &mut seen, &mut found);
                    }
                }
            }
            None => {
                let all: Vec<Cell> = self.cells.keys().copied().collect();
                for cell in all {
                    visit(cell, &mut seen, &mut found);
                }
            }
        }
        found
    }
}

fn ring(center: Cell, r: i32) -> Vec<Cell> {
    let mut cells = Vec::new();
    let (row0, col0) = center;
    for dr in -r..=r {
        let row = row0 + dr;
        if !(0..LAT_CELLS).contains(&row) {
            continue;
        }
        if dr.abs() == r {
            for dc in -r..=r {
                cells.push((row, (col0 + dc).rem_euclid(LON_CELLS)));
            }
        } else {
            cells.push((row, (col0 - r).rem_euclid(LON_CELLS)));
            cells.push((row, (col0 + r).rem_euclid(LON_CELLS)));
        }
    }
    cells
}

/// Cell rows and columns covering every point within `distance` of `query`,
/// padded by one cell for rounding. `None` when the box is unbounded.
fn bounding_cells(query: GeoPoint, distance: f64) -> Option<((i32, i32), Vec<i32>)> {
    if !distance.is_finite() {
        return None;
    }
    let angular = distance / EARTH_RADIUS_M;
    if angular >= std::f64::consts::PI {
        return None;
    }
    let lat = query.lat().to_radians();
    let lat_min = (lat - angular).to_degrees();
    let lat_max = (lat + angular).to_degrees();
    let row_lo = (((lat_min.max(-90.0) + 90.0) / CELL_DEG).floor() as i32 - 1).max(0);
    let row_hi = (((lat_max.min(90.0) + 90.0) / CELL_DEG).floor() as i32 + 1).min(LAT_CELLS - 1);

    let all_cols = || (0..LON_CELLS).collect::<Vec<_>>();
    if lat_min <= -90.0 || lat_max >= 90.0 {
        return Some(((row_lo, row_hi), all_cols()));
    }
    let ratio = angular.sin() / lat.cos();
    if ratio >= 1.0 {
        return Some(((row_lo, row_hi), all_cols()));
    }
    let dlon = ratio.asin().to_degrees();
    let span_cells = (2.0 * dlon / CELL_DEG).ceil() as i32 + 3;
    if span_cells >= LON_CELLS {
        return Some(((row_lo, row_hi), all_cols()));
    }
    let col_lo = ((query.long() - dlon + 180.0) / CELL_DEG).floor() as i32 - 1;
    let cols = (0..span_cells).map(|i| (col_lo + i).rem_euclid(LON_CELLS)).collect();
    Some(((row_lo, row_hi), cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, long: f64) -> GeoPoint {
        GeoPoint::new(lat, long).unwrap()
    }

    #[test]
    fn one_degree_on_the_equator() {
        // On the equator the haversine reduces to the arc length R * dlambda.
        let d = haversine_m(p(0.0, 0.0), p(0.0, 1.0));
        let arc = 6_371_008.8 * std::f64::consts::PI / 180.0;
        assert!((d - arc).abs() < 1e-6, "{d}");
        assert!((d - 111_195.08).abs() < 0.01, "{d}");
        assert_eq!(haversine_m(p(43.77, 11.25), p(43.77, 11.25)), 0.0);
    }

    #[test]
    fn antimeridian_neighbours_are_found() {
        let mut grid = GeoGrid::default();
        grid.set(1, Some(p(0.0, 179.999)));
        grid.set(2, Some(p(0.0, 10.0)));
        let found = grid.candidates(p(0.0, -179.999), 1, f64::INFINITY, &|_| true);
        let best = found.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_eq!(best.0, 1);
    }

    #[test]
    fn moving_a_point_updates_buckets() {
        let mut grid = GeoGrid::default();
        grid.set(7, Some(p(10.0, 10.0)));
        grid.set(7, Some(p(-10.0, -10.0)));
        assert_eq!(grid.len(), 1);
        let found = grid.candidates(p(10.0, 10.0), 1, 1000.0, &|_| true);
        assert!(found.is_empty());
        grid.set(7, None);
        assert!((grid.len() == 0));
    }
}
