//! Lattice elastic manifolds with a self-repulsion penalty: exact Gaussian
//! samplers, Metropolis dynamics, geometric and spectral observables, and the
//! experiment harness that drives scaling studies over them.

pub mod error;
pub mod fitting;
pub mod harness;
pub mod lattice;
pub mod observables;
pub mod parallel;
pub mod sampling;
pub mod spectral;
pub mod values;

pub use error::{Error, Result};
pub use lattice::{FieldConfig, LatticeBox, ScalarField};
pub use sampling::GibbsParams;
pub use spectral::SpectralBasis;
pub use values::ValuePoints;
