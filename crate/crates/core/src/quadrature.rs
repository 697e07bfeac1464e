//! Quadrature rules: Gauss–Legendre, triangle rules, sphere product rules,
//! and the closed-form integrals of `1/r` kernels over flat triangles and
//! cubes used by the singular self terms.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::Vec3;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(&w).map(|(xi, wi)| (mid + half * xi, half * wi)).collect()
}

/// Barycentric points and weights (summing to 1) of a triangle rule.
pub type TriangleRule = &'static [([f64; 3], f64)];

pub const TRIANGLE_CENTROID: TriangleRule = &[([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];

const A1: f64 = 0.059_715_871_789_770;
const B1: f64 = 0.470_142_064_105_115;
const W1: f64 = 0.132_394_152_788_506;
const A2: f64 = 0.797_426_985_353_087;
const B2: f64 = 0.101_286_507_323_456;
const W2: f64 = 0.125_939_180_544_827;

/// Seven-point rule exact for polynomials of degree 5.
pub const TRIANGLE_SEVEN: TriangleRule = &[
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A1, B1, B1], W1),
    ([B1, A1, B1], W1),
    ([B1, B1, A1], W1),
    ([A2, B2, B2], W2),
    ([B2, A2, B2], W2),
    ([B2, B2, A2], W2),
];

/// Physical points and area-scaled weights of `rule` on triangle `v`.
pub fn map_triangle_rule(rule: TriangleRule, v: &[Vec3; 3], area: f64) -> Vec<(Vec3, f64)> {
    rule.iter()
        .map(|(b, w)| (v[0] * b[0] + v[1] * b[1] + v[2] * b[2], w * area))
        .collect()
}

/// Polar rule about an interior point `x` of triangle `v`: the triangle is
/// split into three sub-triangles with apex `x`, each integrated in polar
/// coordinates, which absorbs a `1/|y − x|` singularity into the Jacobian.
pub fn polar_triangle_rule(x: &Vec3, v: &[Vec3; 3], n_angle: usize, n_radial: usize) -> Vec<(Vec3, f64)> {
    let mut out = Vec::with_capacity(3 * n_angle * n_radial);
    let radial = gauss_legendre_interval(n_radial, 0.0, 1.0);
    for e in 0..3 {
        let a = v[e];
        let b = v[(e + 1) % 3];
        let ab = b - a;
        let len = ab.norm();
        if len == 0.0 {
            continue;
        }
        let t = ab / len;
        let foot = a + t * (x - a).dot(&t);
        let hvec = foot - x;
        let h = hvec.norm();
        if h < 1e-14 * len {
            continue;
        }
        let n = hvec / h;
        let phi_a = ((a - foot).dot(&t)).atan2(h);
        let phi_b = ((b - foot).dot(&t)).atan2(h);
        for (phi, wphi) in gauss_legendre_interval(n_angle, phi_a, phi_b) {
            let rmax = h / phi.cos();
            let dir = n * phi.cos() + t * phi.sin();
            for &(s, ws) in &radial {
                let rho = s * rmax;
                out.push((x + dir * rho, wphi * ws * rmax * rho));
            }
        }
    }
    out
}

/// Exact `∫_T 1/r dA` and `∫_T r̂ r̂ᵀ/r dA` for an interior point `x` of the
/// flat triangle `v`, with `r = |y − x|`.
pub fn flat_triangle_static_integrals(x: &Vec3, v: &[Vec3; 3]) -> (f64, Matrix3<f64>) {
    let mut scalar = 0.0;
    let mut tensor = Matrix3::zeros();
    let lsec = |phi: f64| phi.tan().asinh();
    for e in 0..3 {
        let a = v[e];
        let b = v[(e + 1) % 3];
        let ab = b - a;
        let len = ab.norm();
        let t = ab / len;
        let foot = a + t * (x - a).dot(&t);
        let hvec = foot - x;
        let h = hvec.norm();
        if h < 1e-14 * len {
            continue;
        }
        let n = hvec / h;
        let p1 = ((a - foot).dot(&t)).atan2(h);
        let p2 = ((b - foot).dot(&t)).atan2(h);
        let l = lsec(p2) - lsec(p1);
        let ds = p2.sin() - p1.sin();
        let dc = -(p2.cos() - p1.cos());
        scalar += h * l;
        let nn = n * n.transpose();
        let nt = n * t.transpose() + t * n.transpose();
        let tt = t * t.transpose();
        tensor += (nn * ds + nt * dc + tt * (l - ds)) * h;
    }
    (scalar, tensor)
}

/// `∫_{[-½,½]³} 1/|y| dy`, reduced by the pyramid decomposition to
/// `(3/2) ∫_{[-½,½]²} (¼ + u² + v²)^{-1/2} du dv` and evaluated by
/// Gauss–Legendre on the smooth integrand.
pub fn unit_cube_inverse_distance() -> f64 {
    let rule = gauss_legendre_interval(48, 0.0, 0.5);
    let mut s = 0.0;
    for &(u, wu) in &rule {
        for &(v, wv) in &rule {
            s += wu * wv / (0.25 + u * u + v * v).sqrt();
        }
    }
    1.5 * 4.0 * s
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ` and a uniform
/// rule in `φ` with `2 n_theta` nodes. Weights sum to `4π`.
pub fn sphere_product_rule(n_theta: usize) -> Vec<(Vec3, f64)> {
    let (ct, wt) = gauss_legendre(n_theta);
    let n_phi = 2 * n_theta;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (c, w) in ct.iter().zip(&wt) {
        let s = (1.0 - c * c).sqrt();
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            out.push((Vec3::new(s * phi.cos(), s * phi.sin(), *c), w * dphi));
        }
    }
    out
}
