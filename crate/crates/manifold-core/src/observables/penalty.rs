//! The self-repulsion penalty in closed form. The occupation density of a
//! field is a sum of indicator boxes of side 1 centered at the image points;
//! its squared integral is therefore the pairwise sum of box-overlap volumes
//! `Π_i max(0, 1-|u_i(x)-u_i(x')|)`, with a diagonal equal to the site count.

use crate::error::{Error, Result};
use crate::lattice::FieldConfig;
use crate::observables::radius::diameter;
use crate::parallel;
use crate::values::{MAX_HASH_DIM, ValueGrid, ValuePoints};
use serde::{Deserialize, Serialize};

/// Exact penalty value split into its diagonal and interaction parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBreakdown {
    pub total: f64,
    /// Always the number of points.
    pub diagonal: f64,
    /// Twice the sum of pairwise overlap volumes.
    pub off_diagonal: f64,
    /// Unordered pairs with positive overlap.
    pub overlap_pairs: usize,
}

/// Overlap volume of the unit boxes centered at `p` and `q`; `None` when
/// they do not intersect. Factors multiply in coordinate order so every
/// caller produces bit-identical values.
#[inline]
pub(crate) fn overlap(p: &[f64], q: &[f64]) -> Option<f64> {
    let mut w = 1.0;
    for (a, b) in p.iter().zip(q) {
        let f = 1.0 - (a - b).abs();
        if f <= 0.0 {
            return None;
        }
        w *= f;
    }
    Some(w)
}

/// Partial sum over partners `j > i`, enumerated in ascending `j` so the
/// grid path and the naive path add in the same order.
fn partial_near(points: &ValuePoints, grid: &ValueGrid, i: usize) -> (f64, usize) {
    let mut cand = Vec::new();
    grid.collect_near(points.point(i), &mut cand);
    cand.retain(|&j| j as usize > i);
    cand.sort_unstable();
    let p = points.point(i);
    let mut sum = 0.0;
    let mut pairs = 0;
    for &j in &cand {
        if let Some(w) = overlap(p, points.point(j as usize)) {
            sum += w;
            pairs += 1;
        }
    }
    (sum, pairs)
}

fn partial_all(points: &ValuePoints, i: usize) -> (f64, usize) {
    let p = points.point(i);
    let mut sum = 0.0;
    let mut pairs = 0;
    for j in i + 1..points.len() {
        if let Some(w) = overlap(p, points.point(j)) {
            sum += w;
            pairs += 1;
        }
    }
    (sum, pairs)
}

fn assemble(n: usize, partials: Vec<(f64, usize)>) -> PenaltyBreakdown {
    let mut half_sum = 0.0;
    let mut pairs = 0;
    for (s, c) in partials {
        half_sum += s;
        pairs += c;
    }
    let off_diagonal = 2.0 * half_sum;
    PenaltyBreakdown {
        total: n as f64 + off_diagonal,
        diagonal: n as f64,
        off_diagonal,
        overlap_pairs: pairs,
    }
}

/// Exact penalty of a point set; hash-grid enumeration when the value
/// dimension supports it, all-pairs otherwise.
pub fn penalty_of_points(points: &ValuePoints) -> PenaltyBreakdown {
    if points.dim() <= MAX_HASH_DIM {
        let grid = ValueGrid::build(points).expect("dimension just checked");
        assemble(
            points.len(),
            parallel::map_indexed(points.len(), |i| partial_near(points, &grid, i)),
        )
    } else {
        penalty_of_points_naive(points)
    }
}

/// Same algorithm as [`penalty_of_points`], forced onto one thread.
pub fn penalty_of_points_sequential(points: &ValuePoints) -> PenaltyBreakdown {
    if points.dim() <= MAX_HASH_DIM {
        let grid = ValueGrid::build(points).expect("dimension just checked");
        assemble(
            points.len(),
            parallel::map_indexed_seq(points.len(), |i| partial_near(points, &grid, i)),
        )
    } else {
        assemble(points.len(), parallel::map_indexed_seq(points.len(), |i| partial_all(points, i)))
    }
}

/// All-pairs reference path; bit-identical to the grid path by construction.
pub fn penalty_of_points_naive(points: &ValuePoints) -> PenaltyBreakdown {
    assemble(points.len(), parallel::map_indexed(points.len(), |i| partial_all(points, i)))
}

/// Exact penalty of a field's image points.
pub fn penalty_integral(field: &FieldConfig) -> Result<PenaltyBreakdown> {
    field.check()?;
    Ok(penalty_of_points(&ValuePoints::from_field(field)))
}

/// Independent oracle: midpoint quadrature of the squared occupation density
/// over the arrangement of its discontinuity planes `{u_i(x) ± 1/2}`. The
/// integrand is piecewise constant on that arrangement, so the quadrature
/// carries no resolution error; it never touches the overlap closed form.
pub fn penalty_by_quadrature(points: &ValuePoints) -> f64 {
    let n = points.len();
    let d = points.dim();
    if n == 0 {
        return 0.0;
    }

    let mut mids: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut widths: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut cuts: Vec<f64> = Vec::with_capacity(2 * n);
        for i in 0..n {
            let v = points.point(i)[j];
            cuts.push(v - 0.5);
            cuts.push(v + 0.5);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut axis_mids = Vec::with_capacity(cuts.len());
        let mut axis_widths = Vec::with_capacity(cuts.len());
        for pair in cuts.windows(2) {
            let w = pair[1] - pair[0];
            if w > 0.0 {
                axis_mids.push(0.5 * (pair[0] + pair[1]));
                axis_widths.push(w);
            }
        }
        mids.push(axis_mids);
        widths.push(axis_widths);
    }

    let cell_counts: Vec<usize> = mids.iter().map(Vec::len).collect();
    let mut index = vec![0usize; d];
    let mut total = 0.0;
    'cells: loop {
        let mut volume = 1.0;
        for j in 0..d {
            volume *= widths[j][index[j]];
        }
        let mut occupancy = 0usize;
        for i in 0..n {
            let p = points.point(i);
            if (0..d).all(|j| (mids[j][index[j]] - p[j]).abs() <= 0.5) {
                occupancy += 1;
            }
        }
        total += (occupancy * occupancy) as f64 * volume;

        for j in (0..d).rev() {
            index[j] += 1;
            if index[j] < cell_counts[j] {
                continue 'cells;
            }
            index[j] = 0;
        }
        break;
    }
    total
}

/// Outcome of the clustering lower bound: when every image point stays
/// inside `[-εN, εN]^d` and the diameter is below `εN`, the penalty must be
/// at least `2^d N^d / ε^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenCheck {
    /// Both preconditions held, so the bound applies.
    pub applicable: bool,
    /// `lhs ≥ rhs`; false whenever not applicable.
    pub holds: bool,
    /// Penalty total.
    pub lhs: f64,
    /// `2^d N^d / ε^d`.
    pub rhs: f64,
    /// Observed diameter, reported for diagnostics.
    pub radius: f64,
}

pub fn penalty_jensen_check(field: &FieldConfig, eps: f64) -> Result<JensenCheck> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("eps must be positive and finite, got {eps}")));
    }
    field.check()?;
    let n_half = field.domain.n_half() as f64;
    let dim = field.domain.dim() as f64;
    let bound = eps * n_half;
    let points = ValuePoints::from_field(field);
    let radius = diameter(&points);
    let inside = points.coords().iter().all(|v| v.abs() <= bound);
    let applicable = radius < bound && inside;
    let lhs = penalty_of_points(&points).total;
    let rhs = 2f64.powf(dim) * n_half.powf(dim) / eps.powf(dim);
    Ok(JensenCheck { applicable, holds: applicable && lhs >= rhs, lhs, rhs, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeBox, ScalarField};

    fn pseudo_random(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed | 1;
        move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    #[test]
    fn coincident_points_square_the_count() {
        for n in [1usize, 4, 9] {
            let pts = ValuePoints::new(2, vec![0.0; 2 * n]).unwrap();
            let b = penalty_of_points(&pts);
            assert_eq!(b.total, (n * n) as f64);
            assert_eq!(b.diagonal, n as f64);
            assert_eq!(b.off_diagonal, (n * n - n) as f64);
            assert_eq!(b.overlap_pairs, n * (n - 1) / 2);
        }
    }

    #[test]
    fn distant_points_only_keep_the_diagonal() {
        let pts = ValuePoints::new(2, vec![0.0, 0.0, 1.0, 5.0]).unwrap();
        let b = penalty_of_points(&pts);
        assert_eq!(b.total, 2.0);
        assert_eq!(b.overlap_pairs, 0);
    }

    #[test]
    fn half_shifted_pair_gives_two_point_five() {
        let pts = ValuePoints::new(2, vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        let b = penalty_of_points(&pts);
        assert!((b.total - 2.5).abs() < 1e-15);
        assert!((b.off_diagonal - 0.5).abs() < 1e-15);
        let quad = penalty_by_quadrature(&pts);
        assert!((quad - 2.5).abs() < 1e-12);
    }

    #[test]
    fn grid_naive_and_sequential_paths_are_bit_identical() {
        let mut next = pseudo_random(42);
        for dim in 1..=3usize {
            for n in [1usize, 2, 17, 120] {
                let coords: Vec<f64> = (0..n * dim).map(|_| next() * 6.0).collect();
                let pts = ValuePoints::new(dim, coords).unwrap();
                let a = penalty_of_points(&pts);
                let b = penalty_of_points_naive(&pts);
                let c = penalty_of_points_sequential(&pts);
                assert_eq!(a, b, "dim {dim} n {n}");
                assert_eq!(a, c, "dim {dim} n {n}");
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature_on_random_sets() {
        let mut next = pseudo_random(7);
        for dim in 1..=2usize {
            for n in [3usize, 10, 25] {
                let coords: Vec<f64> = (0..n * dim).map(|_| next() * 4.0).collect();
                let pts = ValuePoints::new(dim, coords).unwrap();
                let closed = penalty_of_points(&pts).total;
                let quad = penalty_by_quadrature(&pts);
                assert!(
                    (closed - quad).abs() < 1e-9 * closed.max(1.0),
                    "dim {dim} n {n}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn total_is_count_exactly_when_all_gaps_reach_one() {
        let spread = ValuePoints::new(1, vec![0.0, 1.0, 2.5]).unwrap();
        assert_eq!(penalty_of_points(&spread).total, 3.0);
        let tight = ValuePoints::new(1, vec![0.0, 0.999, 2.5]).unwrap();
        assert!(penalty_of_points(&tight).total > 3.0);
    }

    #[test]
    fn field_interface_checks_and_scores() {
        let bx = LatticeBox::new(1, 2).unwrap();
        let field = FieldConfig::zeros(bx);
        let b = penalty_integral(&field).unwrap();
        assert_eq!(b.total, 81.0);

        let bx = LatticeBox::new(1, 2).unwrap();
        let mut bad = FieldConfig::zeros(bx);
        bad.components[0] = ScalarField::new(vec![1.0; 9]);
        assert!(penalty_integral(&bad).is_err());
    }

    #[test]
    fn jensen_bound_on_the_constant_field() {
        let bx = LatticeBox::new(2, 2).unwrap();
        let field = FieldConfig::zeros(bx);
        let check = penalty_jensen_check(&field, 0.5).unwrap();
        assert!(check.applicable);
        assert!(check.holds);
        assert_eq!(check.lhs, (25 * 25) as f64);
        assert_eq!(check.rhs, 4.0 * 4.0 / 0.25);
    }

    #[test]
    fn jensen_gate_rejects_wide_fields() {
        let bx = LatticeBox::new(2, 1).unwrap();
        let mut field = FieldConfig::zeros(bx);
        field.components[0] = ScalarField::new(vec![-6.0, -3.0, 0.0, 3.0, 6.0]);
        let check = penalty_jensen_check(&field, 0.5).unwrap();
        assert!(!check.applicable);
        assert!(!check.holds);
    }
}
