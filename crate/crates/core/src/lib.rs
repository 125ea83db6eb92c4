//! Numerical laboratory for polynomial harmonic measures.
//!
//! The crate computes the measures associated to harmonic polynomials
//! (surface density |grad h| on the zero set), evaluates them on centered
//! balls by sphere quadrature, discretizes them as weighted particle clouds,
//! and measures distances between Radon measures with the Lipschitz
//! transport semi-metric solved as a linear program. On top of those
//! primitives it runs doubling-exponent scans, degree classification,
//! cone-distance searches and blow-up experiments.

pub mod blowup;
pub mod error;
pub mod measure;
pub mod metric;
pub mod particle;
pub mod poly;
pub mod sphere;
pub mod univariate;

pub use error::{Error, Result};
