//! Factorization of positive semidefinite operators as U U^* with U upper
//! triangular with respect to an ordered index lattice: elimination from the
//! last entry, feasibility of tensor-order zero patterns, column
//! augmentation when square factors cannot exist, Toeplitz spectral
//! factorization, truncation convergence studies, and the reproducing-kernel
//! side of the same data.

pub mod blockop;
pub mod error;
pub mod factor;
pub mod index;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod pattern;
pub mod range;
pub mod rkhs;
pub mod tol;
pub mod toeplitz;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
