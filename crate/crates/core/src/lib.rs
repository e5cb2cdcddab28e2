//! Hybrid numerical-asymptotic boundary element solver for 2D sound-soft
//! scattering by a convex polygon together with small obstacles.

pub mod basis;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod postprocess;
pub mod quadrature;
pub mod scenes;
pub mod solver;
pub mod special_functions;

pub use error::{HnaError, Result};
