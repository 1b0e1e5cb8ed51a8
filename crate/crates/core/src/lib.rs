//! Weak Galerkin discretisation of the clamped singularly perturbed plate
//! problem `eps^2 Δ²u - Δu = f` on triangular meshes, with a residual a
//! posteriori error estimator and a solve-estimate-mark-refine loop.

pub mod adaptivity;
pub mod assembly;
pub mod basis;
pub mod cases;
pub mod error;
pub mod estimator;
pub mod linsolve;
pub mod mesh;
pub mod par;
pub mod quadrature;
pub mod weak_ops;

pub use error::{Error, Result};
