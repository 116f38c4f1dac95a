//! Effective radius: the exact Euclidean diameter of a field's image point
//! set. All-pairs at desk scale; for large planar sets the diameter survives
//! restriction to convex-hull vertices, which shrinks the quadratic step.

use crate::error::Result;
use crate::lattice::FieldConfig;
use crate::parallel;
use crate::values::ValuePoints;

/// Point counts up to this go straight to the all-pairs scan.
pub const ALL_PAIRS_CAP: usize = 4096;

#[inline]
fn dist2(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Exact diameter of the image point set of a field.
pub fn effective_radius(field: &FieldConfig) -> Result<f64> {
    field.check()?;
    Ok(diameter(&ValuePoints::from_field(field)))
}

/// Exact diameter of a point set. Hull reduction applies only to planar
/// sets above the cap; other dimensions use the all-pairs scan at any size.
pub fn diameter(points: &ValuePoints) -> f64 {
    if points.len() > ALL_PAIRS_CAP && points.dim() == 2 {
        diameter_hull_2d(points)
    } else {
        diameter_all_pairs(points)
    }
}

pub fn diameter_all_pairs(points: &ValuePoints) -> f64 {
    let n = points.len();
    let maxima = parallel::map_indexed(n, |i| {
        let p = points.point(i);
        let mut best = 0.0f64;
        for j in i + 1..n {
            best = best.max(dist2(p, points.point(j)));
        }
        best
    });
    maxima.into_iter().fold(0.0f64, f64::max).sqrt()
}

/// Same scan, forced onto one thread; max-reductions are order-independent so
/// the result is identical.
pub fn diameter_all_pairs_sequential(points: &ValuePoints) -> f64 {
    let n = points.len();
    let maxima = parallel::map_indexed_seq(n, |i| {
        let p = points.point(i);
        let mut best = 0.0f64;
        for j in i + 1..n {
            best = best.max(dist2(p, points.point(j)));
        }
        best
    });
    maxima.into_iter().fold(0.0f64, f64::max).sqrt()
}

/// Indices of the convex hull of a planar point set, counterclockwise,
/// collinear interior points dropped (monotone chain).
pub fn convex_hull_2d(points: &ValuePoints) -> Vec<usize> {
    assert_eq!(points.dim(), 2, "hull reduction is planar only");
    let n = points.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let pa = points.point(a);
        let pb = points.point(b);
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });

    let cross = |o: usize, a: usize, b: usize| -> f64 {
        let po = points.point(o);
        let pa = points.point(a);
        let pb = points.point(b);
        (pa[0] - po[0]) * (pb[1] - po[1]) - (pa[1] - po[1]) * (pb[0] - po[0])
    };

    let mut hull: Vec<usize> = Vec::with_capacity(2 * n);
    for &i in &order {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in order.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

/// Diameter via hull vertices; the farthest pair of a set is always a pair
/// of extreme points, so the restriction is exact.
pub fn diameter_hull_2d(points: &ValuePoints) -> f64 {
    let hull = convex_hull_2d(points);
    let mut best = 0.0f64;
    for (a, &i) in hull.iter().enumerate() {
        for &j in &hull[a + 1..] {
            best = best.max(dist2(points.point(i), points.point(j)));
        }
    }
    best.sqrt()
}

/// Largest single-coordinate range, the lower bound companion to the
/// diameter.
pub fn max_component_range(points: &ValuePoints) -> f64 {
    let mut best = 0.0f64;
    for j in 0..points.dim() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..points.len() {
            let v = points.point(i)[j];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if points.len() > 0 {
            best = best.max(hi - lo);
        }
    }
    best
}
