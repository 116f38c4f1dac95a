//! Value-space geometry: the image points `u(x) ∈ R^D` of a field and a
//! unit-cell hash grid over them, so interactions of range 1 in L∞ only
//! touch the 3^D surrounding cells.

use crate::error::{Error, Result};
use crate::lattice::FieldConfig;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

/// Hash-grid support tops out here; higher-dimensional images fall back to
/// all-pairs scans.
pub const MAX_HASH_DIM: usize = 4;

/// Cell coordinates must stay within this magnitude; values this large mean
/// the simulation has diverged.
const MAX_CELL_COORD: i64 = 1 << 30;

/// The image point set of a field: one point in `R^D` per lattice site,
/// stored interleaved in lexicographic site order.
#[derive(Clone, Debug, PartialEq)]
pub struct ValuePoints {
    dim: usize,
    coords: Vec<f64>,
}

impl ValuePoints {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        if coords.len() % dim != 0 {
            return Err(Error::LengthMismatch {
                expected: coords.len().div_ceil(dim) * dim,
                found: coords.len(),
            });
        }
        Ok(ValuePoints { dim, coords })
    }

    pub fn from_field(field: &FieldConfig) -> Self {
        let d = field.components();
        let n = field.domain.site_count();
        let mut coords = vec![0.0; n * d];
        for (i, comp) in field.components.iter().enumerate() {
            for (site, &v) in comp.values.iter().enumerate() {
                coords[site * d + i] = v;
            }
        }
        ValuePoints { dim: d, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn set_point(&mut self, i: usize, values: &[f64]) {
        self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(values);
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Scales every coordinate in place.
    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coords {
            *c *= s;
        }
    }
}

/// Multiply-fold hasher for the packed cell keys; quality is ample for
/// integer grid coordinates and much cheaper than the default hasher.
#[derive(Default)]
pub struct CellHasher(u64);

impl Hasher for CellHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x100_0000_01b3);
        }
    }

    fn write_u128(&mut self, v: u128) {
        let lo = v as u64;
        let hi = (v >> 64) as u64;
        let mut h = lo.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 32;
        h = h.wrapping_add(hi).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 32;
        self.0 = h;
    }
}

type CellMap = HashMap<u128, Vec<u32>, BuildHasherDefault<CellHasher>>;

/// Unit-cell spatial hash over value-space points. Two points at L∞
/// distance < 1 always land in the same or adjacent cells, so range-1
/// queries need only the 3^D neighborhood.
#[derive(Clone, Debug, Default)]
pub struct ValueGrid {
    dim: usize,
    cells: CellMap,
}

impl ValueGrid {
    pub fn build(points: &ValuePoints) -> Result<Self> {
        if points.dim() > MAX_HASH_DIM {
            return Err(Error::Config(format!(
                "hash grid supports at most {MAX_HASH_DIM} value dimensions, got {}",
                points.dim()
            )));
        }
        let mut grid = ValueGrid { dim: points.dim(), cells: CellMap::default() };
        for i in 0..points.len() {
            grid.insert(i as u32, points.point(i));
        }
        Ok(grid)
    }

    pub fn insert(&mut self, idx: u32, p: &[f64]) {
        let key = cell_key(&p[..self.dim]);
        self.cells.entry(key).or_default().push(idx);
    }

    /// Removes `idx` from the cell containing `p`; the point must have been
    /// inserted there.
    pub fn remove(&mut self, idx: u32, p: &[f64]) {
        let key = cell_key(&p[..self.dim]);
        let cell = self.cells.get_mut(&key).expect("removal from an occupied cell");
        let pos = cell.iter().position(|&j| j == idx).expect("index present in its cell");
        cell.swap_remove(pos);
        if cell.is_empty() {
            self.cells.remove(&key);
        }
    }

    /// Appends every stored index in the 3^D cells around `p` to `out`
    /// (including, when present, the index of `p` itself).
    pub fn collect_near(&self, p: &[f64], out: &mut Vec<u32>) {
        let d = self.dim;
        let mut base = [0i64; MAX_HASH_DIM];
        for (b, &c) in base.iter_mut().zip(p) {
            *b = checked_cell(c);
        }
        let reps = 3usize.pow(d as u32);
        for code in 0..reps {
            let mut key = 0u128;
            let mut rem = code;
            for b in base.iter().take(d) {
                let off = (rem % 3) as i64 - 1;
                rem /= 3;
                key = (key << 32) | pack_coord(b + off) as u128;
            }
            if let Some(cell) = self.cells.get(&key) {
                out.extend_from_slice(cell);
            }
        }
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.len()
    }
}

fn checked_cell(c: f64) -> i64 {
    let cell = c.floor();
    assert!(
        cell.abs() < MAX_CELL_COORD as f64,
        "value coordinate {c} outside the supported range"
    );
    cell as i64
}

fn pack_coord(c: i64) -> u32 {
    (c + (1i64 << 31)) as u32
}

fn cell_key(p: &[f64]) -> u128 {
    let mut key = 0u128;
    for &c in p {
        key = (key << 32) | pack_coord(checked_cell(c)) as u128;
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;

    #[test]
    fn from_field_interleaves_site_major() {
        let bx = LatticeBox::new(1, 1).unwrap();
        let mut field = FieldConfig::zeros(bx);
        field.components[0].values = vec![1.0, 2.0, 3.0];
        let pts = ValuePoints::from_field(&field);
        assert_eq!(pts.len(), 3);
        assert_eq!(pts.dim(), 1);
        assert_eq!(pts.point(1), &[2.0]);
    }

    #[test]
    fn neighborhood_queries_find_exactly_the_close_points() {
        let pts = ValuePoints::new(
            2,
            vec![
                0.2, 0.2, //
                0.9, 0.9, //
                2.5, 0.0, //
                -0.4, 0.1, //
                10.0, 10.0,
            ],
        )
        .unwrap();
        let grid = ValueGrid::build(&pts).unwrap();
        let mut near = Vec::new();
        grid.collect_near(pts.point(0), &mut near);
        near.sort_unstable();
        // Points 0,1,3 lie in the 3x3 cell block around (0.2, 0.2); point 2
        // sits two cells away in x, point 4 far off.
        assert_eq!(near, vec![0, 1, 3]);
    }

    #[test]
    fn superset_of_unit_linf_balls() {
        let mut state = 1234567u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 8.0
        };
        let n = 80;
        let dim = 3;
        let coords: Vec<f64> = (0..n * dim).map(|_| next()).collect();
        let pts = ValuePoints::new(dim, coords).unwrap();
        let grid = ValueGrid::build(&pts).unwrap();
        let mut near = Vec::new();
        for i in 0..n {
            near.clear();
            grid.collect_near(pts.point(i), &mut near);
            for j in 0..n {
                let linf = pts
                    .point(i)
                    .iter()
                    .zip(pts.point(j))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if linf < 1.0 {
                    assert!(near.contains(&(j as u32)), "missing pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn insert_remove_roundtrip() {
        let pts = ValuePoints::new(1, vec![0.5, 1.5, 0.7]).unwrap();
        let mut grid = ValueGrid::build(&pts).unwrap();
        grid.remove(1, &[1.5]);
        let mut near = Vec::new();
        grid.collect_near(&[1.0], &mut near);
        near.sort_unstable();
        assert_eq!(near, vec![0, 2]);
        grid.insert(1, &[1.5]);
        near.clear();
        grid.collect_near(&[1.0], &mut near);
        near.sort_unstable();
        assert_eq!(near, vec![0, 1, 2]);
    }

    #[test]
    fn negative_and_positive_zero_share_a_cell() {
        let pts = ValuePoints::new(1, vec![-0.0, 0.0]).unwrap();
        let grid = ValueGrid::build(&pts).unwrap();
        let mut near = Vec::new();
        grid.collect_near(&[0.0], &mut near);
        assert_eq!(near.len(), 2);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let pts = ValuePoints::new(5, vec![0.0; 10]).unwrap();
        assert!(matches!(ValueGrid::build(&pts), Err(Error::Config(_))));
    }
}
