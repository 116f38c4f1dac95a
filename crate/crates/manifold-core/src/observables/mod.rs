//! Exact observables of a field configuration: the self-repulsion penalty,
//! the effective radius, the pairwise-variance oracle, and reflected-walk
//! return-probability diagnostics.

pub mod penalty;
pub mod radius;
pub mod semigroup;
pub mod variance;

pub use penalty::{
    JensenCheck, PenaltyBreakdown, penalty_by_quadrature, penalty_integral, penalty_jensen_check,
    penalty_of_points,
};
pub use radius::{diameter, effective_radius};
pub use semigroup::{SemigroupRow, log_spaced_grid, return_probability_at, semigroup_diagnostics};
pub use variance::{
    VarianceReport, VarianceScan, variance_bounds_scan, variance_pair, variance_pair_spectral,
};
