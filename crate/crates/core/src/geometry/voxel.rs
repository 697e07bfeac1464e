use super::shapes::ReferenceShape;
use crate::error::{Error, Result};
use crate::Vec3;

/// Piecewise-constant contrast on a uniform voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastGrid {
    /// Voxel centres of the support.
    pub centers: Vec<Vec3>,
    /// Contrast value on each support voxel.
    pub values: Vec<f64>,
    /// Voxel edge length.
    pub h: f64,
}

impl ContrastGrid {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// True when every contrast value is zero.
    pub fn has_empty_support(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn translate(&self, z: &Vec3) -> Self {
        Self { centers: self.centers.iter().map(|c| c + z).collect(), values: self.values.clone(), h: self.h }
    }

    pub fn volume(&self) -> f64 {
        self.centers.len() as f64 * self.h.powi(3)
    }

    /// Whether `x` lies in the closed union of the voxels.
    pub fn contains_point(&self, x: &Vec3) -> bool {
        let half = 0.5 * self.h * (1.0 + 1e-12);
        self.centers.iter().any(|c| (0..3).all(|k| (x[k] - c[k]).abs() <= half))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { centers: self.centers.clone(), values: self.values.iter().map(|v| v * factor).collect(), h: self.h }
    }
}

/// Voxelizes the shape at spacing `h`, which must divide the cube edge.
pub fn voxelize_shape(shape: &ReferenceShape, h: f64, contrast_value: f64) -> Result<ContrastGrid> {
    let ratio = shape.scale / h;
    let m = ratio.round();
    if !(h > 0.0) || m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "voxel size {h} does not divide the cube edge {}",
            shape.scale
        )));
    }
    let m = m as usize;
    let h = shape.scale / m as f64;
    let mut centers = Vec::with_capacity(shape.cubes.len() * m * m * m);
    for q in &shape.cubes {
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let l = Vec3::new(
                        q[0] as f64 + (i as f64 + 0.5) / m as f64,
                        q[1] as f64 + (j as f64 + 0.5) / m as f64,
                        q[2] as f64 + (k as f64 + 0.5) / m as f64,
                    );
                    centers.push(shape.to_physical(&l));
                }
            }
        }
    }
    let values = vec![contrast_value; centers.len()];
    Ok(ContrastGrid { centers, values, h })
}

/// Largest voxels-per-cube-edge `m` with `cubes · m³ ≤ budget`.
pub fn voxels_per_edge_for_budget(shape: &ReferenceShape, budget: usize) -> Result<usize> {
    let c = shape.cubes.len();
    if budget < c {
        return Err(Error::InvalidParameter(format!("voxel budget {budget} below cube count {c}")));
    }
    let mut m: usize = 1;
    while c * (m + 1).pow(3) <= budget {
        m += 1;
    }
    Ok(m)
}
