//! Lattice Dirac and two-component Klein-Gordon Hamiltonians in static
//! external potentials, with Krein-space spectral analysis, smooth
//! functional calculus, two-point kernels and quasi-free state
//! diagnostics — all at dense-matrix desk scale.
//!
//! The narrative guide lives in `book/`; its chapters are also mounted
//! as rustdoc pages under [`guide`] so the code snippets run as
//! doc-tests.

extern crate blas_src;

pub mod dense;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod funcalc;
pub mod functions;
pub mod guide;
pub mod interval;
pub mod krein;
pub mod lattice;
pub mod models;
pub mod propagator;
pub mod scenario;
pub mod states;
pub mod tolerances;

pub use dense::{DenseOperator, Space};
pub use error::{Error, Result};
pub use interval::IntervalUnion;
pub use tolerances::Tolerances;
