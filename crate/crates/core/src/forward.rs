//! One interface over the rigid and medium solvers: discretize a reference
//! shape at a location, solve for an incident field, evaluate near and far
//! fields.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{mesh_shape, voxelize_shape, voxels_per_edge_for_budget, ReferenceShape};
use crate::incident::{FarFieldSample, Incident};
use crate::linalg::SolverMethod;
use crate::material::ElasticMaterial;
use crate::medium::{
    assemble_volume_operator, far_field_medium, scattered_field_medium, solve_total_field, FactorizedVolume,
    TotalFieldSolution, VolumeOperator,
};
use crate::rigid::{
    assemble_boundary_operator, far_field_rigid, scattered_field_rigid, solve_density, BoundaryOperator,
    FactorizedBoundary, SurfaceDensity,
};
use crate::{CVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScattererKind {
    Rigid,
    Medium,
}

impl ScattererKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScattererKind::Rigid => "rigid",
            ScattererKind::Medium => "medium",
        }
    }
}

impl std::str::FromStr for ScattererKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rigid" => Ok(ScattererKind::Rigid),
            "medium" => Ok(ScattererKind::Medium),
            _ => Err(crate::Error::Config(format!("unknown scatterer kind {s:?}"))),
        }
    }
}

/// Resolution of one forward model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    /// Upper bound on boundary panels (rigid).
    pub panel_target: usize,
    /// Upper bound on voxels (medium).
    pub voxel_budget: usize,
    /// Constant contrast `n` on the medium support.
    pub contrast: f64,
    pub solver: SolverMethod,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { panel_target: 300, voxel_budget: 512, contrast: -4.0, solver: SolverMethod::Direct }
    }
}

/// Discretized scatterer `D + z`.
pub enum ForwardModel {
    Rigid(BoundaryOperator),
    Medium(VolumeOperator),
}

/// Solution of one forward problem.
#[derive(Debug, Clone)]
pub enum ForwardSolution {
    Rigid(SurfaceDensity),
    Medium(TotalFieldSolution),
}

impl ForwardSolution {
    pub fn residual(&self) -> f64 {
        match self {
            ForwardSolution::Rigid(d) => d.residual,
            ForwardSolution::Medium(s) => s.residual,
        }
    }
}

impl ForwardModel {
    /// Discretizes `shape` with its centroid at `z`.
    pub fn build(
        kind: ScattererKind,
        shape: &ReferenceShape,
        z: &Vec3,
        mat: &ElasticMaterial,
        disc: &Discretization,
    ) -> Result<Self> {
        match kind {
            ScattererKind::Rigid => {
                let mesh = mesh_shape(shape, disc.panel_target)?.translate(z);
                Ok(ForwardModel::Rigid(assemble_boundary_operator(mat, &mesh)?))
            }
            ScattererKind::Medium => {
                let m = voxels_per_edge_for_budget(shape, disc.voxel_budget)?;
                let grid = voxelize_shape(shape, shape.scale / m as f64, disc.contrast)?.translate(z);
                Ok(ForwardModel::Medium(assemble_volume_operator(mat, &grid)?))
            }
        }
    }

    pub fn kind(&self) -> ScattererKind {
        match self {
            ForwardModel::Rigid(_) => ScattererKind::Rigid,
            ForwardModel::Medium(_) => ScattererKind::Medium,
        }
    }

    pub fn material(&self) -> &ElasticMaterial {
        match self {
            ForwardModel::Rigid(op) => &op.material,
            ForwardModel::Medium(op) => &op.material,
        }
    }

    /// Number of complex unknowns.
    pub fn unknowns(&self) -> usize {
        match self {
            ForwardModel::Rigid(op) => op.matrix.nrows(),
            ForwardModel::Medium(op) => op.matrix.nrows(),
        }
    }

    pub fn solve(&self, incident: &Incident, method: SolverMethod) -> Result<ForwardSolution> {
        match self {
            ForwardModel::Rigid(op) => Ok(ForwardSolution::Rigid(solve_density(op, incident, method)?)),
            ForwardModel::Medium(op) => Ok(ForwardSolution::Medium(solve_total_field(op, incident, method)?)),
        }
    }

    pub fn factorize(&self) -> Result<FactorizedModel<'_>> {
        match self {
            ForwardModel::Rigid(op) => Ok(FactorizedModel::Rigid(op.factorize()?)),
            ForwardModel::Medium(op) => Ok(FactorizedModel::Medium(op.factorize()?)),
        }
    }

    pub fn scattered_field(&self, sol: &ForwardSolution, receivers: &[Vec3]) -> Result<Vec<CVec3>> {
        match (self, sol) {
            (ForwardModel::Rigid(op), ForwardSolution::Rigid(d)) => scattered_field_rigid(op, d, receivers),
            (ForwardModel::Medium(op), ForwardSolution::Medium(s)) => scattered_field_medium(op, s, receivers),
            _ => Err(crate::Error::InvalidParameter("solution does not belong to this model".into())),
        }
    }

    pub fn far_field(&self, sol: &ForwardSolution, directions: &[Vec3]) -> Result<Vec<FarFieldSample>> {
        match (self, sol) {
            (ForwardModel::Rigid(op), ForwardSolution::Rigid(d)) => Ok(far_field_rigid(op, d, directions)),
            (ForwardModel::Medium(op), ForwardSolution::Medium(s)) => Ok(far_field_medium(op, s, directions)),
            _ => Err(crate::Error::InvalidParameter("solution does not belong to this model".into())),
        }
    }
}

/// A forward model with its LU factors.
pub enum FactorizedModel<'a> {
    Rigid(FactorizedBoundary<'a>),
    Medium(FactorizedVolume<'a>),
}

impl FactorizedModel<'_> {
    pub fn solve(&self, incident: &Incident) -> Result<ForwardSolution> {
        match self {
            FactorizedModel::Rigid(f) => Ok(ForwardSolution::Rigid(f.solve(incident)?)),
            FactorizedModel::Medium(f) => Ok(ForwardSolution::Medium(f.solve(incident)?)),
        }
    }
}
