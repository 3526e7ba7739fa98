//! Numerical toolkit for anisotropic surface energies: Wulff shapes built from
//! elliptic integrands, anisotropic curvature deficits of perturbed surfaces,
//! the stability operator and its translation kernel, centering of radial
//! graphs, and the eigenvalue algebra behind quasi-Einstein stability.

pub mod cli;
pub mod curvature;
pub mod einstein;
pub mod error;
pub mod geom;
pub mod io;
pub mod integrand;
pub mod mesh;
pub mod optim;
pub mod real;
pub mod sh;
pub mod stability;
pub mod surface;

pub use error::{Error, Result};
