//! Numerical laboratory for the L² theory of periodizations over rotated integer lattices.

pub mod corpus;
pub mod error;
pub mod fit;
pub mod functions;
pub mod haar;
pub mod kernels;
pub mod lattice;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod shells;
pub mod sos;
pub mod special;
pub mod theorems;

pub use error::{LabError, Result};
pub use functions::{make_band_limited, make_gaussian, make_plate, Symmetry, TestFunction};
