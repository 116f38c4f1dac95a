//! Deterministic balance study on the dilation family `u_a(x) = a·x`: exact
//! elastic energy against exact repulsion penalty as functions of the slope,
//! and the slope minimizing their weighted sum.

use crate::error::{Error, Result};
use crate::harness::report::median;
use crate::lattice::LatticeBox;
use crate::observables::effective_radius;
use crate::sampling::{GibbsParams, free_field::drift_field};
use serde::{Deserialize, Serialize};

const GOLDEN_ITERS: usize = 200;
const SEARCH_HI: f64 = 1.5;

/// Balance point for one box size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloryRow {
    pub n_half: u32,
    pub dim: u32,
    pub a_star: f64,
    pub energy: f64,
    pub penalty: f64,
    pub cost: f64,
    pub radius: f64,
    pub radius_over_n: f64,
}

/// Elastic energy of the slope-`a` dilation family, summed over components.
/// Each bond along axis `i` contributes `a²` to component `i` alone, so the
/// total is `a² · d · 2N · (2N+1)^{d-1}`.
pub fn energy_of_slope(n_half: u32, dim: u32, a: f64) -> f64 {
    let m = 2 * n_half as u64 + 1;
    let bonds_per_axis = (2 * n_half as u64) * m.pow(dim - 1);
    a * a * dim as f64 * bonds_per_axis as f64
}

/// Overlap sum of `2N+1` points spaced `a` apart on a line:
/// `Σ_{x,x'} max(0, 1 - a|x - x'|)`.
pub fn line_overlap_sum(n_half: u32, a: f64) -> f64 {
    let m = 2 * n_half as u64 + 1;
    let mut s = m as f64;
    for k in 1..m {
        let f = 1.0 - a * k as f64;
        if f <= 0.0 {
            break;
        }
        s += 2.0 * (m - k) as f64 * f;
    }
    s
}

/// Repulsion penalty of the dilation family. The box overlap factorizes over
/// coordinates, so the penalty is the `d`-th power of the line sum.
pub fn penalty_of_slope(n_half: u32, dim: u32, a: f64) -> f64 {
    line_overlap_sum(n_half, a).powi(dim as i32)
}

/// `β H + γ ∫ℓ²` on the dilation family.
pub fn cost_of_slope(n_half: u32, dim: u32, params: &GibbsParams, a: f64) -> f64 {
    params.beta * energy_of_slope(n_half, dim, a)
        + params.gamma * penalty_of_slope(n_half, dim, a)
}

/// Golden-section minimization on `[lo, hi]` for a unimodal objective.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iters {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    (lo + hi) / 2.0
}

/// Minimizes the slope cost and reports the balance point, with the radius
/// measured on the actual centered configuration rather than a formula.
pub fn flory_optimum(n_half: u32, dim: u32, params: &GibbsParams) -> Result<FloryRow> {
    params.check()?;
    let bx = LatticeBox::new(n_half, dim)?;
    let a_star = if params.gamma == 0.0 {
        // No repulsion: the energy alone is minimized by the flat field.
        0.0
    } else {
        golden_section(|a| cost_of_slope(n_half, dim, params, a), 0.0, SEARCH_HI, GOLDEN_ITERS)
    };
    let radius = effective_radius(&drift_field(&bx, a_star))?;
    Ok(FloryRow {
        n_half,
        dim,
        a_star,
        energy: energy_of_slope(n_half, dim, a_star),
        penalty: penalty_of_slope(n_half, dim, a_star),
        cost: cost_of_slope(n_half, dim, params, a_star),
        radius,
        radius_over_n: radius / n_half as f64,
    })
}

/// Balance table over a size grid.
pub fn run_flory_balance(
    n_grid: &[u32],
    dim: u32,
    params: &GibbsParams,
) -> Result<Vec<FloryRow>> {
    if n_grid.is_empty() {
        return Err(Error::Config("flory balance needs at least one box size".into()));
    }
    n_grid.iter().map(|&n| flory_optimum(n, dim, params)).collect()
}

/// Samples `(a, energy, penalty)` along a slope sweep, for plotting.
pub fn cost_curve(
    n_half: u32,
    dim: u32,
    lo: f64,
    hi: f64,
    count: usize,
) -> Vec<(f64, f64, f64)> {
    assert!(count >= 2 && hi > lo);
    (0..count)
        .map(|i| {
            let a = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            (a, energy_of_slope(n_half, dim, a), penalty_of_slope(n_half, dim, a))
        })
        .collect()
}

/// Median of the `R(a*)/N` column, a one-number summary of the table.
pub fn radius_ratio_summary(rows: &[FloryRow]) -> f64 {
    median(&rows.iter().map(|r| r.radius_over_n).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::dirichlet_energy;
    use crate::observables::penalty_integral;

    #[test]
    fn energy_formula_matches_the_bond_sum() {
        for (n, d) in [(2u32, 1u32), (3, 2), (2, 3)] {
            let bx = LatticeBox::new(n, d).unwrap();
            for a in [0.0, 0.3, 1.7] {
                let f = drift_field(&bx, a);
                let direct: f64 = f
                    .components
                    .iter()
                    .map(|c| dirichlet_energy(c, c, &bx).unwrap())
                    .sum();
                let closed = energy_of_slope(n, d, a);
                assert!((direct - closed).abs() <= 1e-10 * closed.max(1.0), "{n} {d} {a}");
            }
        }
    }

    #[test]
    fn penalty_formula_matches_the_pair_sum() {
        for (n, d) in [(3u32, 1u32), (2, 2), (1, 3)] {
            let bx = LatticeBox::new(n, d).unwrap();
            for a in [0.0, 0.21, 0.6, 0.99] {
                let direct = penalty_integral(&drift_field(&bx, a)).unwrap().total;
                let closed = penalty_of_slope(n, d, a);
                assert!(
                    (direct - closed).abs() <= 1e-9 * closed.max(1.0),
                    "{n} {d} {a}: {direct} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn unit_gaps_leave_only_the_diagonal() {
        for a in [1.0, 1.25, 3.0] {
            assert_eq!(penalty_of_slope(4, 2, a), 81.0);
            assert_eq!(line_overlap_sum(4, a), 9.0);
        }
        // a = 0 collapses every point: penalty is the squared site count.
        assert_eq!(penalty_of_slope(2, 2, 0.0), (25.0f64).powi(2));
    }

    #[test]
    fn golden_section_finds_a_parabola_minimum() {
        let x = golden_section(|x| (x - 0.3) * (x - 0.3), 0.0, 1.5, 200);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn equal_weights_balance_at_unit_slope() {
        // At β = γ = 1 the cost kinks exactly where the penalty hits its
        // floor, and the minimum sits on the kink.
        let p = GibbsParams::new(1.0, 1.0).unwrap();
        let row = flory_optimum(8, 2, &p).unwrap();
        assert!((row.a_star - 1.0).abs() < 1e-6, "a* = {}", row.a_star);
        assert_eq!(row.penalty, 17.0 * 17.0);
        let expected_r = row.a_star * 16.0 * 2.0f64.sqrt();
        assert!((row.radius - expected_r).abs() < 1e-9);
    }

    #[test]
    fn weaker_repulsion_contracts_the_optimum() {
        let strong = flory_optimum(8, 2, &GibbsParams::new(1.0, 1.0).unwrap()).unwrap();
        let weak = flory_optimum(8, 2, &GibbsParams::new(1.0, 0.5).unwrap()).unwrap();
        assert!(weak.a_star < strong.a_star);
        assert!(weak.a_star > 0.5, "a* = {}", weak.a_star);
        let free = flory_optimum(8, 2, &GibbsParams::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(free.a_star, 0.0);
        assert_eq!(free.radius, 0.0);
    }

    #[test]
    fn balance_ratio_stays_in_a_constant_window() {
        let p = GibbsParams::new(1.0, 1.0).unwrap();
        let rows = run_flory_balance(&[8, 16], 2, &p).unwrap();
        for row in &rows {
            assert!(
                row.radius_over_n > 0.25 && row.radius_over_n < 4.0,
                "N={} ratio={}",
                row.n_half,
                row.radius_over_n
            );
        }
        assert!(radius_ratio_summary(&rows) > 0.25);
    }

    #[test]
    fn curve_endpoints_are_exact() {
        let curve = cost_curve(4, 2, 0.0, 1.0, 11);
        assert_eq!(curve.len(), 11);
        assert_eq!(curve[0].0, 0.0);
        assert_eq!(curve[10].0, 1.0);
        assert_eq!(curve[0].1, 0.0);
        assert_eq!(curve[10].2, 81.0);
    }
}
