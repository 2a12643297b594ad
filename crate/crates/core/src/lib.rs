//! Random block operators and the numerical machinery around them.
//!
//! The crate builds lattice orbital models (block Anderson, Wegner orbital),
//! deformed block-Gaussian matrices and Gaussian band matrices, computes exact
//! dense spectral quantities for them, and runs reproducible Monte Carlo
//! experiments on eigenvalue counts and resolvent fractional moments.
//!
//! Module map:
//!
//! - [`ensembles`]: Gaussian samplers, shape functions, seeded random streams.
//! - [`operators`]: lattice boxes and Hamiltonian constructors.
//! - [`spectra`]: dense eigensolves, counting, resolvent blocks, interlacing.
//! - [`walk_expansion`]: self-avoiding-walk expansion of resolvent blocks.
//! - [`repformula`]: block representation of eigenvalue counts via Schur pieces.
//! - [`estimators`]: Monte Carlo experiment drivers.

pub mod ensembles;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod operators;
pub mod repformula;
pub mod spectra;
pub mod walk_expansion;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use num_complex::Complex64;
