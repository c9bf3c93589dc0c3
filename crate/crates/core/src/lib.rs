//! Frustration-free lattice Hamiltonians and numerical checks of local-gap
//! inequalities: operator assembly, spectral solvers, detectability-lemma
//! operators, coarse graining and Chebyshev step polynomials.

pub mod bounds;
pub mod chebyshev;
pub mod coarse;
pub mod detectability;
mod error;
pub mod layering;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
