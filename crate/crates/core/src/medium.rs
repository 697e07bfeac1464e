//! Lippmann–Schwinger solver for a penetrable medium.
//!
//! The total field solves `(I − Ṽ)u = u^i` with
//! `(Ṽu)(x) = −ω² ∫ Γ(x, y) n(y) u(y) dy`, discretized by the midpoint rule
//! on voxel centres. The self cell integrates the static kernel over the cube
//! in closed form and adds the centre value of the smooth remainder `Γ − Γ⁰`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ContrastGrid;
use crate::incident::{FarFieldSample, Incident};
use crate::kernels::{gamma, gamma_far_field};
use crate::linalg::{check_residual, gmres, relative_residual, stack, unstack, DenseLu, SolverMethod};
use crate::material::ElasticMaterial;
use crate::quadrature::unit_cube_inverse_distance;
use crate::{re, CMat3, CVec3, Vec3};

/// Default voxel budget (`20³`).
pub const DEFAULT_MAX_VOXELS: usize = 8000;

pub use crate::linalg::SOLVE_TOLERANCE;

/// Dense discretization of `Ṽ` on a contrast grid.
pub struct VolumeOperator {
    pub material: ElasticMaterial,
    pub grid: ContrastGrid,
    /// `3V × 3V` matrix of `Ṽ`.
    pub matrix: DMatrix<Complex64>,
}

/// `∫_cell Γ⁰ + h³ lim_{r→0}(Γ − Γ⁰)` for a cube of edge `h` (a multiple of `I`).
pub fn self_cell_integral(mat: &ElasticMaterial, h: f64) -> Complex64 {
    let c = (mat.lambda + mat.mu) / (8.0 * PI * mat.mu * mat.p_modulus());
    // ∫ r̂r̂ᵀ/r over the cube is a third of ∫ 1/r by symmetry.
    let static_part = h * h * unit_cube_inverse_distance() * (1.0 / (4.0 * PI * mat.mu) - c * 2.0 / 3.0);
    let remainder = if mat.is_static() {
        Complex64::default()
    } else {
        let w2 = mat.omega * mat.omega;
        Complex64::new(
            0.0,
            mat.k_s / (4.0 * PI * mat.mu) - (mat.k_s.powi(3) - mat.k_p.powi(3)) / (12.0 * PI * w2),
        )
    };
    re(static_part) + remainder * h.powi(3)
}

/// Assembles `Ṽ`. Fails if the grid exceeds `max_voxels`.
pub fn assemble_volume_operator_with_budget(
    mat: &ElasticMaterial,
    grid: &ContrastGrid,
    max_voxels: usize,
) -> Result<VolumeOperator> {
    if mat.is_static() {
        return Err(Error::InvalidParameter("volume operator requires omega > 0".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty contrast grid".into()));
    }
    let v = grid.len();
    if v > max_voxels {
        return Err(Error::Budget { unknowns: 3 * v, budget: 3 * max_voxels });
    }
    let w2 = mat.omega * mat.omega;
    let h3 = grid.h.powi(3);
    let selfval = self_cell_integral(mat, grid.h);
    let rows: Vec<Vec<CMat3>> = (0..v)
        .into_par_iter()
        .map(|a| {
            (0..v)
                .map(|b| {
                    let n = grid.values[b];
                    if n == 0.0 {
                        CMat3::zeros()
                    } else if a == b {
                        CMat3::identity() * (selfval * (-w2 * n))
                    } else {
                        gamma(mat, &(grid.centers[a] - grid.centers[b])) * re(-w2 * h3 * n)
                    }
                })
                .collect()
        })
        .collect();
    let mut matrix = DMatrix::<Complex64>::zeros(3 * v, 3 * v);
    for (a, row) in rows.iter().enumerate() {
        for (b, blk) in row.iter().enumerate() {
            matrix.view_mut((3 * a, 3 * b), (3, 3)).copy_from(blk);
        }
    }
    Ok(VolumeOperator { material: *mat, grid: grid.clone(), matrix })
}

pub fn assemble_volume_operator(mat: &ElasticMaterial, grid: &ContrastGrid) -> Result<VolumeOperator> {
    assemble_volume_operator_with_budget(mat, grid, DEFAULT_MAX_VOXELS)
}

/// Total field on the voxel centres.
#[derive(Debug, Clone)]
pub struct TotalFieldSolution {
    pub field: Vec<CVec3>,
    pub incident: Vec<CVec3>,
    pub residual: f64,
}

impl VolumeOperator {
    /// `I − Ṽ`.
    pub fn system_matrix(&self) -> DMatrix<Complex64> {
        let n = self.matrix.nrows();
        DMatrix::<Complex64>::identity(n, n) - &self.matrix
    }

    /// Incident field sampled at the voxel centres.
    pub fn sample_incident(&self, incident: &Incident) -> Result<Vec<CVec3>> {
        if let Some(s) = incident.source() {
            if self.grid.contains_point(&s) {
                return Err(Error::InvalidParameter("point source inside the medium support".into()));
            }
        }
        Ok(self.grid.centers.iter().map(|c| incident.evaluate(&self.material, c)).collect())
    }

    /// Factorizes `I − Ṽ` for repeated solves.
    pub fn factorize(&self) -> Result<FactorizedVolume<'_>> {
        let sys = self.system_matrix();
        Ok(FactorizedVolume { op: self, lu: DenseLu::new(sys.clone())?, sys })
    }
}

/// `I − Ṽ` with its LU factors.
pub struct FactorizedVolume<'a> {
    pub op: &'a VolumeOperator,
    sys: DMatrix<Complex64>,
    lu: DenseLu,
}

impl FactorizedVolume<'_> {
    pub fn solve(&self, incident: &Incident) -> Result<TotalFieldSolution> {
        let ui = self.op.sample_incident(incident)?;
        let b = stack(&ui);
        let x = self.lu.solve(&b)?;
        let residual = relative_residual(&self.sys, &x, &b);
        check_residual(residual)?;
        Ok(TotalFieldSolution { field: unstack(&x), incident: ui, residual })
    }
}

/// Solves `(I − Ṽ)u = u^i` by the configured method.
pub fn solve_total_field(op: &VolumeOperator, incident: &Incident, method: SolverMethod) -> Result<TotalFieldSolution> {
    match method {
        SolverMethod::Direct => op.factorize()?.solve(incident),
        SolverMethod::Gmres { restart, tolerance, max_iterations } => {
            let ui = op.sample_incident(incident)?;
            let b = stack(&ui);
            let sys = op.system_matrix();
            let report = gmres(|x| &sys * x, &b, restart, tolerance.min(SOLVE_TOLERANCE), max_iterations)?;
            let residual = relative_residual(&sys, &report.solution, &b);
            check_residual(residual)?;
            Ok(TotalFieldSolution { field: unstack(&report.solution), incident: ui, residual })
        }
    }
}

/// Scattered field `−ω² Σ h³ n Γ(x − y) u` at receivers outside the support.
pub fn scattered_field_medium(op: &VolumeOperator, sol: &TotalFieldSolution, receivers: &[Vec3]) -> Result<Vec<CVec3>> {
    for x in receivers {
        if op.grid.contains_point(x) {
            return Err(Error::InvalidParameter(format!("receiver {x:?} lies inside the medium support")));
        }
    }
    let w2 = op.material.omega * op.material.omega;
    let h3 = op.grid.h.powi(3);
    Ok(receivers
        .par_iter()
        .map(|x| {
            let mut acc = CVec3::zeros();
            for ((y, n), u) in op.grid.centers.iter().zip(&op.grid.values).zip(&sol.field) {
                if *n != 0.0 {
                    acc += gamma(&op.material, &(x - y)) * u * re(-w2 * h3 * n);
                }
            }
            acc
        })
        .collect())
}

/// Far-field patterns `−ω² F^m_s u` and `−ω² F^m_p u` in the given directions.
pub fn far_field_medium(op: &VolumeOperator, sol: &TotalFieldSolution, directions: &[Vec3]) -> Vec<FarFieldSample> {
    let w2 = op.material.omega * op.material.omega;
    let h3 = op.grid.h.powi(3);
    directions
        .par_iter()
        .map(|xhat| {
            let mut s = CVec3::zeros();
            let mut p = CVec3::zeros();
            for ((y, n), u) in op.grid.centers.iter().zip(&op.grid.values).zip(&sol.field) {
                if *n != 0.0 {
                    let (gs, gp) = gamma_far_field(&op.material, xhat, y);
                    let nu = u * re(-w2 * h3 * n);
                    s += gs * nu;
                    p += gp * nu;
                }
            }
            FarFieldSample { direction: *xhat, shear: s, pressure: p }
        })
        .collect()
}
