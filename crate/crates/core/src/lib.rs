//! Time-harmonic elastic scattering by rigid bodies and penetrable media, and
//! two-stage reconstruction of an unknown scatterer: localization by direct
//! sampling indicators at a low frequency, then shape identification by
//! matching against a precomputed dictionary at a regular frequency.

pub mod dictionary;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod geometry;
pub mod harmonics;
pub mod imaging;
pub mod incident;
pub mod kernels;
pub mod linalg;
pub mod material;
pub mod medium;
pub mod quadrature;
pub mod rigid;

pub use error::{Error, Result};

/// Real 3-vector.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex 3-vector.
pub type CVec3 = nalgebra::Vector3<num_complex::Complex64>;
/// Complex 3×3 matrix.
pub type CMat3 = nalgebra::Matrix3<num_complex::Complex64>;

/// Real scalar as a complex number.
#[inline]
pub(crate) fn re(x: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(x, 0.0)
}
