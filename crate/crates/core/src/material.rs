//! Isotropic elastic material parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Lamé coefficients `(λ, μ)` from Young's modulus and Poisson ratio.
pub fn lame_from_engineering(e: f64, nu: f64) -> Result<(f64, f64)> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::InvalidParameter(format!("Young's modulus must be positive, got {e}")));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "Poisson ratio must lie in (-1, 0.5), got {nu}"
        )));
    }
    let lambda = nu * e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    Ok((lambda, mu))
}

/// Inverse of [`lame_from_engineering`]: returns `(E, ν)`.
pub fn engineering_from_lame(lambda: f64, mu: f64) -> (f64, f64) {
    let e = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
    let nu = lambda / (2.0 * (lambda + mu));
    (e, nu)
}

/// Homogeneous isotropic background with unit density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticMaterial {
    pub omega: f64,
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
    pub k_s: f64,
    pub k_p: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ElasticMaterial {
    /// Material at angular frequency `omega` (zero selects the static regime).
    pub fn new(omega: f64, lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("shear modulus must be positive, got {mu}")));
        }
        if !(lambda > -mu) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must exceed -mu, got {lambda}")));
        }
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("omega must be >= 0, got {omega}")));
        }
        let denom = lambda + 3.0 * mu;
        Ok(Self {
            omega,
            rho: 1.0,
            lambda,
            mu,
            k_s: omega / mu.sqrt(),
            k_p: omega / (2.0 * mu + lambda).sqrt(),
            alpha: mu * (lambda + mu) / denom,
            beta: (lambda + mu) * (lambda + 2.0 * mu) / denom,
        })
    }

    pub fn from_engineering(omega: f64, e: f64, nu: f64) -> Result<Self> {
        let (lambda, mu) = lame_from_engineering(e, nu)?;
        Self::new(omega, lambda, mu)
    }

    /// Same Lamé coefficients at another frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(omega, self.lambda, self.mu)
    }

    /// Same frequency and shear modulus with a different `λ`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.omega, lambda, self.mu)
    }

    pub fn is_static(&self) -> bool {
        self.omega == 0.0
    }

    /// P-wave modulus `λ + 2μ`.
    pub fn p_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }
}

/// Plane-wave incidence: unit travelling direction `d` and polarization `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarization {
    pub d: Vec3,
    pub p: Vec3,
}

impl Polarization {
    /// Requires `|d| = 1` to 1e-12.
    pub fn new(d: Vec3, p: Vec3) -> Result<Self> {
        if (d.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("direction not unit: |d| = {}", d.norm())));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("polarization not finite".into()));
        }
        Ok(Self { d, p })
    }

    /// Normalizes `d` before construction.
    pub fn towards(d: Vec3, p: Vec3) -> Result<Self> {
        let n = d.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidParameter("zero direction".into()));
        }
        Self::new(d / n, p)
    }
}
