//! Classical numerical laboratory for quantum operator-valued kernels.
//!
//! The crate builds and evaluates quantum kernels whose values are operators
//! rather than scalars, simulates the swap-test circuits that realize them,
//! and uses them in operator-valued kernel ridge regression to estimate
//! quantum channels from noisy state pairs.

pub mod channels;
pub mod experiment;
pub mod ovkrr;
pub mod circuit;
pub mod clinalg;
pub mod qkernels;
pub mod qstates;

pub use clinalg::{ComplexMatrix, Tolerance, C64};
pub use qstates::{DensityMatrix, PureState};
