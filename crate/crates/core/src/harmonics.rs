//! Degree-one vector spherical harmonics.
//!
//! `Y₁^m` uses the Condon–Shortley phase. Each `Y₁^m` is the restriction of a
//! linear form `a_m · x̂` to the sphere, so its surface gradient is the
//! tangential part of `a_m`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{re, CVec3, Vec3};

fn coefficient_vector(m: i32) -> Result<CVec3> {
    let c0 = (3.0 / (4.0 * PI)).sqrt();
    let c1 = (3.0 / (8.0 * PI)).sqrt();
    let z = Complex64::default();
    match m {
        0 => Ok(CVec3::new(z, z, Complex64::new(c0, 0.0))),
        1 => Ok(CVec3::new(Complex64::new(-c1, 0.0), Complex64::new(0.0, -c1), z)),
        -1 => Ok(CVec3::new(Complex64::new(c1, 0.0), Complex64::new(0.0, -c1), z)),
        _ => Err(Error::InvalidParameter(format!("order m must be -1, 0 or 1, got {m}"))),
    }
}

/// Scalar harmonic `Y₁^m(x̂)`.
pub fn scalar_harmonic(m: i32, xhat: &Vec3) -> Result<Complex64> {
    let a = coefficient_vector(m)?;
    Ok(a[0] * xhat[0] + a[1] * xhat[1] + a[2] * xhat[2])
}

/// `(U₁^m, V₁^m) = (½ Grad Y₁^m, ½ x̂ × Grad Y₁^m)` at a unit direction.
pub fn vector_spherical_harmonics(m: i32, xhat: &Vec3) -> Result<(CVec3, CVec3)> {
    if (xhat.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("direction not unit: {}", xhat.norm())));
    }
    let a = coefficient_vector(m)?;
    let xc = xhat.map(|v| Complex64::new(v, 0.0));
    let radial = xc * xc.dot(&a);
    let grad = a - radial;
    let u = grad * re(0.5);
    let v = xc.cross(&grad) * re(0.5);
    Ok((u, v))
}
