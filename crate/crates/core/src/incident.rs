//! Incident fields: plane waves and point sources.

use serde::{Deserialize, Serialize};

use crate::kernels::{gamma, plane_wave};
use crate::material::{ElasticMaterial, Polarization};
use crate::{re, CVec3, Vec3};

/// Which parts of a plane wave to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavePart {
    Pressure,
    Shear,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Incident {
    PlaneWave { polarization: Polarization, part: WavePart },
    /// `Γ(x, source) p`.
    PointSource { p: Vec3, source: Vec3 },
}

impl Incident {
    pub fn shear_plane_wave(d: Vec3, p: Vec3) -> crate::Result<Self> {
        Ok(Incident::PlaneWave { polarization: Polarization::new(d, p)?, part: WavePart::Shear })
    }

    pub fn evaluate(&self, mat: &ElasticMaterial, x: &Vec3) -> CVec3 {
        match self {
            Incident::PlaneWave { polarization, part } => {
                let (up, us) = plane_wave(mat, polarization, x);
                match part {
                    WavePart::Pressure => up,
                    WavePart::Shear => us,
                    WavePart::Both => up + us,
                }
            }
            Incident::PointSource { p, source } => gamma(mat, &(x - source)) * p.map(re),
        }
    }

    /// Point-source location, if any.
    pub fn source(&self) -> Option<Vec3> {
        match self {
            Incident::PointSource { source, .. } => Some(*source),
            _ => None,
        }
    }
}

/// Far-field sample split into its tangential (shear) and radial (pressure) parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldSample {
    pub direction: Vec3,
    pub shear: CVec3,
    pub pressure: CVec3,
}

impl FarFieldSample {
    pub fn total(&self) -> CVec3 {
        self.shear + self.pressure
    }
}
