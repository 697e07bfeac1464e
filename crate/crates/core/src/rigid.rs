//! Combined-layer boundary integral solver for rigid obstacles.
//!
//! The scattered field is `u^s = (K + iS)φ` with
//! `(Kφ)(x) = 2∫ Π(x, y)φ(y) ds(y)` and `(Sφ)(x) = 2∫ Γ(x, y)φ(y) ds(y)`,
//! and the density solves `(I + K + iS)φ = −u^i` on the boundary. Densities
//! are piecewise constant on flat triangles and collocated at centroids.
//!
//! On the self panel the static kernels are split off: `∫Γ⁰` is integrated
//! exactly, `Π⁰` vanishes for in-plane `x − y`, and the bounded remainders
//! `Γ − Γ⁰`, `Π − Π⁰` use a polar rule centred at the collocation point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Panel, SurfaceMesh};
use crate::incident::{FarFieldSample, Incident};
use crate::kernels::gamma_and_pi;
use crate::linalg::{check_residual, gmres, relative_residual, stack, unstack, DenseLu, SolverMethod};
use crate::material::ElasticMaterial;
use crate::quadrature::{
    flat_triangle_static_integrals, map_triangle_rule, polar_triangle_rule, TRIANGLE_CENTROID, TRIANGLE_SEVEN,
};
use crate::{re, CMat3, CVec3, Vec3};

/// Default panel budget (`3P` unknowns).
pub const DEFAULT_MAX_PANELS: usize = 1500;

/// Panels whose centroid lies within this many diameters of the
/// collocation point are integrated adaptively; the rest use the centroid.
pub const NEAR_PANEL_FACTOR: f64 = 2.0;

/// Levels of panel bisection available for near panels and receivers.
pub const NEAR_FIELD_DEPTH: u32 = 5;

const POLAR_ANGLE_POINTS: usize = 8;
const POLAR_RADIAL_POINTS: usize = 8;

/// Layer matrices `K` and `S` (factor 2 included), each `3P × 3P`.
pub struct LayerMatrices {
    pub double_layer: DMatrix<Complex64>,
    pub single_layer: DMatrix<Complex64>,
}

/// Collocation matrix of `I + K + iS`.
pub struct BoundaryOperator {
    pub material: ElasticMaterial,
    pub mesh: SurfaceMesh,
    pub matrix: DMatrix<Complex64>,
}

/// Piecewise-constant density with the incident trace it was solved for.
#[derive(Debug, Clone)]
pub struct SurfaceDensity {
    pub density: Vec<CVec3>,
    pub trace: Vec<CVec3>,
    pub residual: f64,
}

fn static_single_layer_self(mat: &ElasticMaterial, x: &Vec3, v: &[Vec3; 3]) -> Matrix3<f64> {
    let c = (mat.lambda + mat.mu) / (8.0 * PI * mat.mu * mat.p_modulus());
    let (scalar, tensor) = flat_triangle_static_integrals(x, v);
    Matrix3::identity() * ((1.0 / (4.0 * PI * mat.mu) - c) * scalar) + tensor * c
}

/// `(∫_T Π(x, y) dy, ∫_T Γ(x − y) dy)` for `x` the centroid of `panel`.
fn self_panel_blocks(mat: &ElasticMaterial, panel: &Panel) -> (CMat3, CMat3) {
    let x = panel.centroid;
    let stat_s = static_single_layer_self(mat, &x, &panel.vertices);
    let mut k = CMat3::zeros();
    let mut s = stat_s.map(re);
    if mat.is_static() {
        return (k, s);
    }
    let stat = mat.with_omega(0.0).expect("static material from a valid one");
    for (y, w) in polar_triangle_rule(&x, &panel.vertices, POLAR_ANGLE_POINTS, POLAR_RADIAL_POINTS) {
        let r = x - y;
        let (g, p) = gamma_and_pi(mat, &r, &panel.normal);
        let (g0, p0) = gamma_and_pi(&stat, &r, &panel.normal);
        k += (p - p0) * re(w);
        s += (g - g0) * re(w);
    }
    (k, s)
}

fn regular_blocks(mat: &ElasticMaterial, x: &Vec3, panel: &Panel, rule: &[(Vec3, f64)]) -> (CMat3, CMat3) {
    let mut k = CMat3::zeros();
    let mut s = CMat3::zeros();
    for (y, w) in rule {
        let (g, p) = gamma_and_pi(mat, &(x - y), &panel.normal);
        k += p * re(*w);
        s += g * re(*w);
    }
    (k, s)
}

/// Ties at the threshold count as near, so the choice is stable under translation.
fn is_near(x: &Vec3, panel: &Panel) -> bool {
    (x - panel.centroid).norm() < NEAR_PANEL_FACTOR * panel.diameter * (1.0 + 1e-9)
}

fn subdivide(v: &[Vec3; 3]) -> [[Vec3; 3]; 4] {
    let m01 = (v[0] + v[1]) * 0.5;
    let m12 = (v[1] + v[2]) * 0.5;
    let m20 = (v[2] + v[0]) * 0.5;
    [[v[0], m01, m20], [m01, v[1], m12], [m20, m12, v[2]], [m01, m12, m20]]
}

/// `(∫_T Π(x, y) dy, ∫_T Γ(x − y) dy)` by the 7-point rule, bisecting the
/// triangle while `x` lies within one diameter of the piece.
fn near_blocks(mat: &ElasticMaterial, x: &Vec3, v: &[Vec3; 3], normal: &Vec3, depth: u32) -> (CMat3, CMat3) {
    let piece = Panel::new(*v);
    if depth < NEAR_FIELD_DEPTH && piece.distance_to(x) < piece.diameter * (1.0 + 1e-9) {
        return subdivide(v).iter().fold((CMat3::zeros(), CMat3::zeros()), |(k, s), t| {
            let (dk, ds) = near_blocks(mat, x, t, normal, depth + 1);
            (k + dk, s + ds)
        });
    }
    regular_blocks(mat, x, &piece, &map_triangle_rule(TRIANGLE_SEVEN, v, piece.area))
}

fn check_panel_budget(mesh: &SurfaceMesh, max_panels: usize) -> Result<()> {
    if mesh.len() > max_panels {
        return Err(Error::Budget { unknowns: 3 * mesh.len(), budget: 3 * max_panels });
    }
    if mesh.is_empty() {
        return Err(Error::InvalidParameter("empty mesh".into()));
    }
    Ok(())
}

/// Assembles `K` and `S` separately; `ω = 0` gives the static layers.
pub fn assemble_layers_with_budget(mat: &ElasticMaterial, mesh: &SurfaceMesh, max_panels: usize) -> Result<LayerMatrices> {
    check_panel_budget(mesh, max_panels)?;
    if !mesh.is_watertight() {
        return Err(Error::InvalidParameter("mesh is not watertight".into()));
    }
    let n = mesh.len();
    let centroid_rules: Vec<Vec<(Vec3, f64)>> =
        mesh.panels.iter().map(|p| map_triangle_rule(TRIANGLE_CENTROID, &p.vertices, p.area)).collect();
    let rows: Vec<Vec<(CMat3, CMat3)>> = mesh
        .panels
        .par_iter()
        .enumerate()
        .map(|(a, pa)| {
            let x = pa.centroid;
            mesh.panels
                .iter()
                .enumerate()
                .map(|(b, pb)| {
                    if a == b {
                        self_panel_blocks(mat, pb)
                    } else if is_near(&x, pb) {
                        near_blocks(mat, &x, &pb.vertices, &pb.normal, 0)
                    } else {
                        regular_blocks(mat, &x, pb, &centroid_rules[b])
                    }
                })
                .collect()
        })
        .collect();
    let mut double_layer = DMatrix::zeros(3 * n, 3 * n);
    let mut single_layer = DMatrix::zeros(3 * n, 3 * n);
    for (a, row) in rows.iter().enumerate() {
        for (b, (k, s)) in row.iter().enumerate() {
            double_layer.view_mut((3 * a, 3 * b), (3, 3)).copy_from(&(k * re(2.0)));
            single_layer.view_mut((3 * a, 3 * b), (3, 3)).copy_from(&(s * re(2.0)));
        }
    }
    Ok(LayerMatrices { double_layer, single_layer })
}

pub fn assemble_layers(mat: &ElasticMaterial, mesh: &SurfaceMesh) -> Result<LayerMatrices> {
    assemble_layers_with_budget(mat, mesh, DEFAULT_MAX_PANELS)
}

impl LayerMatrices {
    /// `I + K + iS`.
    pub fn combined(&self) -> DMatrix<Complex64> {
        let n = self.double_layer.nrows();
        DMatrix::<Complex64>::identity(n, n) + &self.double_layer + &self.single_layer * Complex64::i()
    }
}

/// Assembles `I + K + iS`. Fails if the mesh exceeds `max_panels`.
pub fn assemble_boundary_operator_with_budget(
    mat: &ElasticMaterial,
    mesh: &SurfaceMesh,
    max_panels: usize,
) -> Result<BoundaryOperator> {
    if mat.is_static() {
        return Err(Error::InvalidParameter("boundary operator requires omega > 0".into()));
    }
    let layers = assemble_layers_with_budget(mat, mesh, max_panels)?;
    Ok(BoundaryOperator { material: *mat, mesh: mesh.clone(), matrix: layers.combined() })
}

pub fn assemble_boundary_operator(mat: &ElasticMaterial, mesh: &SurfaceMesh) -> Result<BoundaryOperator> {
    assemble_boundary_operator_with_budget(mat, mesh, DEFAULT_MAX_PANELS)
}

impl BoundaryOperator {
    /// Incident field at the panel centroids.
    pub fn sample_incident(&self, incident: &Incident) -> Result<Vec<CVec3>> {
        if let Some(s) = incident.source() {
            if self.mesh.contains_point(&s) || self.mesh.panels.iter().any(|p| p.distance_to(&s) == 0.0) {
                return Err(Error::InvalidParameter(format!("point source {s:?} is not outside the obstacle")));
            }
        }
        Ok(self.mesh.panels.iter().map(|p| incident.evaluate(&self.material, &p.centroid)).collect())
    }

    pub fn factorize(&self) -> Result<FactorizedBoundary<'_>> {
        Ok(FactorizedBoundary { op: self, lu: DenseLu::new(self.matrix.clone())? })
    }
}

/// `I + K + iS` with its LU factors, for repeated right-hand sides.
pub struct FactorizedBoundary<'a> {
    pub op: &'a BoundaryOperator,
    lu: DenseLu,
}

impl FactorizedBoundary<'_> {
    pub fn solve(&self, incident: &Incident) -> Result<SurfaceDensity> {
        let trace = self.op.sample_incident(incident)?;
        self.solve_trace(trace)
    }

    /// Solves for an explicitly sampled incident trace.
    pub fn solve_trace(&self, trace: Vec<CVec3>) -> Result<SurfaceDensity> {
        let b = -stack(&trace);
        let x = self.lu.solve(&b)?;
        let residual = relative_residual(&self.op.matrix, &x, &b);
        check_residual(residual)?;
        Ok(SurfaceDensity { density: unstack(&x), trace, residual })
    }
}

/// Solves `(I + K + iS)φ = −u^i` by the configured method.
pub fn solve_density(op: &BoundaryOperator, incident: &Incident, method: SolverMethod) -> Result<SurfaceDensity> {
    match method {
        SolverMethod::Direct => op.factorize()?.solve(incident),
        SolverMethod::Gmres { restart, tolerance, max_iterations } => {
            let trace = op.sample_incident(incident)?;
            let b = -stack(&trace);
            let report = gmres(|x| &op.matrix * x, &b, restart, tolerance.min(crate::linalg::SOLVE_TOLERANCE), max_iterations)?;
            let residual = relative_residual(&op.matrix, &report.solution, &b);
            check_residual(residual)?;
            Ok(SurfaceDensity { density: unstack(&report.solution), trace, residual })
        }
    }
}

/// `∫_T (2Π(x, y) + 2iΓ(x − y)) dy` over one panel.
fn layer_integral(mat: &ElasticMaterial, x: &Vec3, panel: &Panel) -> CMat3 {
    let (k, s) = near_blocks(mat, x, &panel.vertices, &panel.normal, 0);
    (k + s * Complex64::i()) * re(2.0)
}

/// Smallest allowed distance from a receiver to a panel of diameter `d`.
pub fn minimum_receiver_distance(d: f64) -> f64 {
    d / f64::powi(2.0, NEAR_FIELD_DEPTH as i32 + 1)
}

/// Scattered field `(K + iS)φ` at exterior receivers.
pub fn scattered_field_rigid(op: &BoundaryOperator, density: &SurfaceDensity, receivers: &[Vec3]) -> Result<Vec<CVec3>> {
    for x in receivers {
        if op.mesh.panels.iter().any(|p| p.distance_to(x) < minimum_receiver_distance(p.diameter)) {
            return Err(Error::InvalidParameter(format!("receiver {x:?} is too close to the boundary")));
        }
        if op.mesh.contains_point(x) {
            return Err(Error::InvalidParameter(format!("receiver {x:?} lies inside the obstacle")));
        }
    }
    Ok(receivers
        .par_iter()
        .map(|x| {
            let mut acc = CVec3::zeros();
            for (p, phi) in op.mesh.panels.iter().zip(&density.density) {
                acc += layer_integral(&op.material, x, p) * phi;
            }
            acc
        })
        .collect())
}

/// Traction in `y` of `c e^{−ik x̂·y}`, divided by the exponential.
fn plane_traction(mat: &ElasticMaterial, k: f64, xhat: &Vec3, normal: &Vec3, c: &Vec3) -> CVec3 {
    let v = c * (mat.mu * xhat.dot(normal)) + normal * (mat.beta * xhat.dot(c)) + xhat * (mat.alpha * c.dot(normal));
    v.map(|a| Complex64::new(0.0, -k * a))
}

/// Far-field patterns `(F_s φ, F_p φ)`, with
/// `F_s φ = (1/2πμ) ∫ {i E_s + [P_y E_s]ᵀ} φ`, `E_s = (I − x̂x̂ᵀ) e^{−ik_s x̂·y}`,
/// and the analogous pressure part with `x̂x̂ᵀ` and `1/2π(λ+2μ)`.
pub fn far_field_rigid(op: &BoundaryOperator, density: &SurfaceDensity, directions: &[Vec3]) -> Vec<FarFieldSample> {
    let mat = &op.material;
    let rules: Vec<Vec<(Vec3, f64)>> =
        op.mesh.panels.iter().map(|p| map_triangle_rule(TRIANGLE_SEVEN, &p.vertices, p.area)).collect();
    directions
        .par_iter()
        .map(|xhat| {
            let pp = xhat * xhat.transpose();
            let ps = Matrix3::identity() - pp;
            let mut ms = CMat3::zeros();
            let mut mp = CMat3::zeros();
            let mut shear = CVec3::zeros();
            let mut pressure = CVec3::zeros();
            for ((panel, rule), phi) in op.mesh.panels.iter().zip(&rules).zip(&density.density) {
                // Traction of each column, arranged as rows of the transpose.
                for k in 0..3 {
                    let ts = plane_traction(mat, mat.k_s, xhat, &panel.normal, &ps.column(k).into_owned());
                    let tp = plane_traction(mat, mat.k_p, xhat, &panel.normal, &pp.column(k).into_owned());
                    ms.set_row(k, &ts.transpose());
                    mp.set_row(k, &tp.transpose());
                }
                let bs = ps.map(|a| Complex64::new(0.0, a)) + ms;
                let bp = pp.map(|a| Complex64::new(0.0, a)) + mp;
                let mut es = Complex64::default();
                let mut ep = Complex64::default();
                for (y, w) in rule {
                    let t = xhat.dot(y);
                    es += Complex64::from_polar(*w, -mat.k_s * t);
                    ep += Complex64::from_polar(*w, -mat.k_p * t);
                }
                shear += bs * phi * es;
                pressure += bp * phi * ep;
            }
            FarFieldSample {
                direction: *xhat,
                shear: shear * re(1.0 / (2.0 * PI * mat.mu)),
                pressure: pressure * re(1.0 / (2.0 * PI * mat.p_modulus())),
            }
        })
        .collect()
}
