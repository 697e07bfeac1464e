//! Elastodynamic kernels: fundamental solution, traction, incident waves and
//! far-field asymptotics.
//!
//! The dynamic kernel is written as `Γ(r) = f(r) I + g(r) r̂ r̂ᵀ` with
//! `r = x − y`. For `k_s r` below [`SERIES_THRESHOLD`] the profile is summed
//! from the power series of `(e^{ik_s r} − e^{ik_p r}) / (4π r ω²)`, which
//! avoids the cancellation of the closed form and reduces to the static
//! kernel when `ω = 0`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::material::{ElasticMaterial, Polarization};
use crate::{re, CMat3, CVec3, Vec3};

/// `k_s r` below which the radial profile is evaluated by series.
pub const SERIES_THRESHOLD: f64 = 1.5;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Radial profile of `Γ` and its first derivatives in `r`.
#[derive(Debug, Clone, Copy)]
pub struct RadialProfile {
    pub f: Complex64,
    pub g: Complex64,
    pub df: Complex64,
    pub dg: Complex64,
}

/// `e^{ikr}/(4πr)` with its first three radial derivatives.
fn helmholtz_derivatives(k: f64, r: f64) -> [Complex64; 4] {
    let phi = (I * k * r).exp() / (4.0 * PI * r);
    let a = I * k - 1.0 / r;
    let r2 = r * r;
    [
        phi,
        phi * a,
        phi * (a * a + 1.0 / r2),
        phi * (a * a * a + 3.0 * a / r2 - 2.0 / (r2 * r)),
    ]
}

/// Radial profile at distance `r > 0`.
pub fn radial_profile(mat: &ElasticMaterial, r: f64) -> RadialProfile {
    let [phs, dphs, _, _] = helmholtz_derivatives(mat.k_s, r);
    if mat.k_s * r < SERIES_THRESHOLD {
        let (a, gg, da, dgg) = series_terms(mat, r);
        let c = 1.0 / (4.0 * PI);
        RadialProfile {
            f: phs / mat.mu + a * c,
            g: gg * c,
            df: dphs / mat.mu + da * c,
            dg: dgg * c,
        }
    } else {
        let s = helmholtz_derivatives(mat.k_s, r);
        let p = helmholtz_derivatives(mat.k_p, r);
        let w2 = mat.omega * mat.omega;
        let d1 = (s[1] - p[1]) / w2;
        let d2 = (s[2] - p[2]) / w2;
        let d3 = (s[3] - p[3]) / w2;
        RadialProfile {
            f: s[0] / mat.mu + d1 / r,
            g: d2 - d1 / r,
            df: s[1] / mat.mu + d2 / r - d1 / (r * r),
            dg: d3 - d2 / r + d1 / (r * r),
        }
    }
}

/// Sums `Σ a_n (n−1) r^{n−3}`, `Σ a_n (n−1)(n−3) r^{n−3}` and their
/// r-derivatives, where `4π ψ/ω² = Σ_{n≥2} a_n r^{n−1}`.
fn series_terms(mat: &ElasticMaterial, r: f64) -> (Complex64, Complex64, Complex64, Complex64) {
    let s = 1.0 / mat.mu.sqrt();
    let t = 1.0 / mat.p_modulus().sqrt();
    let w = mat.omega;
    // u_n = i^n ω^{n−2} s^n r^{n−3} / n!, likewise v_n with t.
    let mut u = Complex64::new(-s * s / (2.0 * r), 0.0);
    let mut v = Complex64::new(-t * t / (2.0 * r), 0.0);
    let (mut a, mut g, mut da, mut dg) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
    let mut n = 2usize;
    loop {
        let term = u - v;
        let nf = n as f64;
        let p1 = nf - 1.0;
        let p3 = nf - 3.0;
        a += term * p1;
        g += term * (p1 * p3);
        da += term * (p1 * p3 / r);
        dg += term * (p1 * p3 * p3 / r);
        n += 1;
        u *= I * (w * s * r / n as f64);
        v *= I * (w * t * r / n as f64);
        let mag = u.norm() * (n as f64).powi(3);
        if mag <= 1e-18 * (a.norm() + g.norm()) || n > 120 {
            break;
        }
    }
    (a, g, da, dg)
}

/// `Γ(r)` for `r ≠ 0` and any `ω ≥ 0`.
pub fn gamma(mat: &ElasticMaterial, r: &Vec3) -> CMat3 {
    let rn = r.norm();
    let rh = r / rn;
    let prof = radial_profile(mat, rn);
    assemble_gamma(&prof, &rh)
}

fn assemble_gamma(prof: &RadialProfile, rh: &Vec3) -> CMat3 {
    let mut m = CMat3::zeros();
    for j in 0..3 {
        for k in 0..3 {
            let delta = if j == k { prof.f } else { Complex64::default() };
            m[(j, k)] = delta + prof.g * (rh[j] * rh[k]);
        }
    }
    m
}

/// `Γ(r)` and its gradient `[∂₁Γ, ∂₂Γ, ∂₃Γ]` with respect to `r`.
pub fn gamma_with_gradient(mat: &ElasticMaterial, r: &Vec3) -> (CMat3, [CMat3; 3]) {
    let rn = r.norm();
    let rh = r / rn;
    let prof = radial_profile(mat, rn);
    let gm = assemble_gamma(&prof, &rh);
    let c3 = prof.dg - prof.g * (2.0 / rn);
    let gr = prof.g / rn;
    let mut grad = [CMat3::zeros(); 3];
    for (l, dl) in grad.iter_mut().enumerate() {
        for j in 0..3 {
            for k in 0..3 {
                let mut v = c3 * (rh[l] * rh[j] * rh[k]);
                if j == k {
                    v += prof.df * rh[l];
                }
                if l == j {
                    v += gr * rh[k];
                }
                if l == k {
                    v += gr * rh[j];
                }
                dl[(j, k)] = v;
            }
        }
    }
    (gm, grad)
}

/// Fundamental solution `Γ(x, y)` of the Navier equation.
pub fn fundamental_solution(mat: &ElasticMaterial, x: &Vec3, y: &Vec3) -> Result<CMat3> {
    if mat.is_static() {
        return Err(Error::InvalidParameter("dynamic kernel requires omega > 0".into()));
    }
    let r = x - y;
    if r.norm() == 0.0 {
        return Err(Error::Singular("fundamental solution at x = y".into()));
    }
    Ok(gamma(mat, &r))
}

/// Static kernel `Γ⁰(x)` evaluated from the Hessian of `|x|`.
pub fn static_fundamental_solution(mat: &ElasticMaterial, x: &Vec3) -> Result<Matrix3<f64>> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Singular("static kernel at the origin".into()));
    }
    let c = (mat.lambda + mat.mu) / (8.0 * PI * mat.mu * mat.p_modulus());
    let mut m = Matrix3::zeros();
    for j in 0..3 {
        for k in 0..3 {
            let delta = if j == k { 1.0 } else { 0.0 };
            let hess = (delta - x[j] * x[k] / (r * r)) / r;
            m[(j, k)] = delta / (4.0 * PI * mat.mu * r) - c * hess;
        }
    }
    Ok(m)
}

/// Value and Jacobian `J[(j, l)] = ∂u_j/∂x_l` of a vector field at a point.
#[derive(Debug, Clone, Copy)]
pub struct FieldJet {
    pub value: CVec3,
    pub jacobian: CMat3,
}

impl FieldJet {
    pub fn divergence(&self) -> Complex64 {
        self.jacobian.trace()
    }

    pub fn curl(&self) -> CVec3 {
        let j = &self.jacobian;
        CVec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
    }
}

/// Traction `(α+μ)(ν·∇)u + βν div u + α ν × curl u`.
pub fn traction(mat: &ElasticMaterial, u: &FieldJet, normal: &Vec3) -> CVec3 {
    let nu = normal.map(|v| Complex64::new(v, 0.0));
    let directional = u.jacobian * nu;
    directional * re(mat.alpha + mat.mu) + nu * (u.divergence() * mat.beta) + nu.cross(&u.curl()) * re(mat.alpha)
}

/// `Π(x, y)` from `r = x − y`, given `Γ` derivatives with respect to `r`.
fn pi_from_gradient(mat: &ElasticMaterial, grad: &[CMat3; 3], normal: &Vec3) -> CMat3 {
    let n = grad[0] * re(normal[0]) + grad[1] * re(normal[1]) + grad[2] * re(normal[2]);
    let nu = normal.map(|v| Complex64::new(v, 0.0));
    // div[k] = Σ_l (∂_l Γ)_{lk}
    let mut div = CVec3::zeros();
    for (l, g) in grad.iter().enumerate() {
        for k in 0..3 {
            div[k] += g[(l, k)];
        }
    }
    // Columns of A are tractions (in y) of Γ(x − y) e_k; derivatives in y flip sign.
    let mut a = CMat3::zeros();
    for j in 0..3 {
        let djn = grad[j] * nu;
        for k in 0..3 {
            a[(j, k)] = -(n[(j, k)] * mat.mu + djn[k] * mat.alpha + nu[j] * div[k] * mat.beta);
        }
    }
    a.transpose()
}

/// `Γ(x − y)` and `Π(x, y)` for the normal `normal` at `y`; `r = x − y ≠ 0`.
pub fn gamma_and_pi(mat: &ElasticMaterial, r: &Vec3, normal: &Vec3) -> (CMat3, CMat3) {
    let (g, grad) = gamma_with_gradient(mat, r);
    (g, pi_from_gradient(mat, &grad, normal))
}

/// Double-layer kernel `Π(x, y)` with `Π(x, y)ᵀP` the traction in `y` of `Γ(x, y)P`.
pub fn traction_kernel(mat: &ElasticMaterial, x: &Vec3, y: &Vec3, nu_y: &Vec3) -> Result<CMat3> {
    let r = x - y;
    if r.norm() == 0.0 {
        return Err(Error::Singular("traction kernel at x = y".into()));
    }
    let (_, grad) = gamma_with_gradient(mat, &r);
    Ok(pi_from_gradient(mat, &grad, nu_y))
}

fn to_c(v: &Vec3) -> CVec3 {
    v.map(|a| Complex64::new(a, 0.0))
}

/// Pressure and shear plane waves `(u_p^i, u_s^i)` at `x`.
pub fn plane_wave(mat: &ElasticMaterial, pol: &Polarization, x: &Vec3) -> (CVec3, CVec3) {
    let d = pol.d;
    let p = pol.p;
    let w2 = mat.omega * mat.omega;
    let (cp, cs) = if mat.is_static() {
        (1.0 / mat.p_modulus(), 1.0 / mat.mu)
    } else {
        (mat.k_p * mat.k_p / w2, mat.k_s * mat.k_s / w2)
    };
    let xd = x.dot(&d);
    let up = to_c(&(d * (cp * d.dot(&p)))) * (I * mat.k_p * xd).exp();
    let us = to_c(&(d.cross(&p).cross(&d) * cs)) * (I * mat.k_s * xd).exp();
    (up, us)
}

/// Jacobians of the pressure and shear plane waves at `x`.
pub fn plane_wave_jacobians(mat: &ElasticMaterial, pol: &Polarization, x: &Vec3) -> (CMat3, CMat3) {
    let (up, us) = plane_wave(mat, pol, x);
    let d = to_c(&pol.d);
    (up * d.transpose() * (I * mat.k_p), us * d.transpose() * (I * mat.k_s))
}

/// Point-source field `Γ(x, y)p`.
pub fn point_source(mat: &ElasticMaterial, p: &Vec3, x: &Vec3, y: &Vec3) -> Result<CVec3> {
    Ok(fundamental_solution(mat, x, y)? * to_c(p))
}

/// Far-field coefficients of `Γ(x, y)` as `|x| → ∞` along `x̂`:
/// `Γ ≈ e^{ik_s|x|}/|x| · shear + e^{ik_p|x|}/|x| · pressure`.
pub fn gamma_far_field(mat: &ElasticMaterial, xhat: &Vec3, y: &Vec3) -> (CMat3, CMat3) {
    let pp = xhat * xhat.transpose();
    let ps = Matrix3::identity() - pp;
    let es = (-I * mat.k_s * xhat.dot(y)).exp() / (4.0 * PI * mat.mu);
    let ep = (-I * mat.k_p * xhat.dot(y)).exp() / (4.0 * PI * mat.p_modulus());
    (ps.map(|v| es * v), pp.map(|v| ep * v))
}

/// Outgoing spherical factor `e^{ikr}/r`.
pub fn spherical_wave(k: f64, r: f64) -> Complex64 {
    (I * k * r).exp() / r
}

/// Radial projection `x̂ x̂ᵀ v`.
pub fn project_radial_vec(xhat: &Vec3, v: &CVec3) -> CVec3 {
    let xc = to_c(xhat);
    xc * xc.dot(v)
}

/// Tangential projection `(I − x̂ x̂ᵀ) v`.
pub fn project_tangential_vec(xhat: &Vec3, v: &CVec3) -> CVec3 {
    v - project_radial_vec(xhat, v)
}
