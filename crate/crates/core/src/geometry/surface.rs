use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::sphere_product_rule;
use crate::Vec3;

/// Receivers on a square aperture in the plane `x¹ = 0`, centred at the
/// origin, with trapezoid weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSurface {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub side: f64,
    pub per_side: usize,
}

impl MeasurementSurface {
    /// `per_side × per_side` grid on a square of edge `side`.
    pub fn square(side: f64, per_side: usize) -> Result<Self> {
        if per_side < 2 || !(side > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "aperture needs side > 0 and at least 2 points per side, got {side}, {per_side}"
            )));
        }
        let step = side / (per_side - 1) as f64;
        let mut points = Vec::with_capacity(per_side * per_side);
        let mut weights = Vec::with_capacity(per_side * per_side);
        let edge_w = |i: usize| if i == 0 || i + 1 == per_side { 0.5 * step } else { step };
        for i in 0..per_side {
            for j in 0..per_side {
                points.push(Vec3::new(0.0, -0.5 * side + i as f64 * step, -0.5 * side + j as f64 * step));
                weights.push(edge_w(i) * edge_w(j));
            }
        }
        Ok(Self { points, weights, side, per_side })
    }

    /// Unit square with 11 × 11 receivers.
    pub fn unit_square() -> Self {
        Self::square(1.0, 11).expect("valid default aperture")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `x/|x|` for each receiver; `None` for a receiver at the origin.
    pub fn viewing_directions(&self) -> Vec<Option<Vec3>> {
        self.points.iter().map(|p| if p.norm() > 0.0 { Some(p / p.norm()) } else { None }).collect()
    }

    /// Unit directions `(x − z)/|x − z|` seen from a point `z`.
    pub fn directions_from(&self, z: &Vec3) -> Vec<Vec3> {
        self.points.iter().map(|p| (p - z).normalize()).collect()
    }
}

/// Unit directions with quadrature weights (a discretized patch of `S²`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl DirectionSet {
    /// Full sphere by the product rule with `n_theta` polar nodes.
    pub fn sphere(n_theta: usize) -> Self {
        let rule = sphere_product_rule(n_theta);
        Self { directions: rule.iter().map(|r| r.0).collect(), weights: rule.iter().map(|r| r.1).collect() }
    }

    /// Viewing directions `x/|x|` of the receivers, weighted by the solid
    /// angle each receiver subtends; receivers at the origin are skipped.
    pub fn from_aperture(surface: &MeasurementSurface) -> Self {
        let mut directions = Vec::new();
        let mut weights = Vec::new();
        for (p, w) in surface.points.iter().zip(&surface.weights) {
            let r = p.norm();
            if r > 0.0 {
                directions.push(p / r);
                weights.push(*w / (r * r));
            }
        }
        Self { directions, weights }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Regular cubic grid of candidate points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub center: Vec3,
    pub spacing: f64,
    /// Points per axis (odd, so the centre is a grid point).
    pub per_axis: usize,
}

impl SamplingGrid {
    pub fn new(center: Vec3, spacing: f64, per_axis: usize) -> Result<Self> {
        if !(spacing > 0.0) || per_axis == 0 {
            return Err(Error::InvalidParameter(format!(
                "sampling grid needs spacing > 0 and points, got {spacing}, {per_axis}"
            )));
        }
        Ok(Self { center, spacing, per_axis })
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.per_axis == 0
    }

    /// Half-width of the covered box.
    pub fn half_extent(&self) -> f64 {
        0.5 * self.spacing * (self.per_axis - 1) as f64
    }

    /// Points in lexicographic order (first coordinate slowest).
    pub fn points(&self) -> Vec<Vec3> {
        let n = self.per_axis;
        let off = self.half_extent();
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(Vec3::new(
                        self.center[0] - off + i as f64 * self.spacing,
                        self.center[1] - off + j as f64 * self.spacing,
                        self.center[2] - off + k as f64 * self.spacing,
                    ));
                }
            }
        }
        out
    }

    pub fn contains(&self, z: &Vec3) -> bool {
        let h = self.half_extent() + 1e-12;
        (0..3).all(|k| (z[k] - self.center[k]).abs() <= h)
    }
}
