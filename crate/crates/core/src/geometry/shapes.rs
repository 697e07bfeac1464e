use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

pub const SHAPE_SET_VERSION: u32 = 1;

/// Union of closed lattice cubes, centred at its centroid and scaled so that
/// the farthest corner lies at distance one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceShape {
    pub id: usize,
    pub cubes: Vec<[i32; 3]>,
    /// Physical edge length of one lattice cube.
    pub scale: f64,
}

impl ReferenceShape {
    /// Builds a shape and fixes `scale` so that `max |x| = 1`.
    pub fn from_cubes(id: usize, cubes: Vec<[i32; 3]>) -> Result<Self> {
        if cubes.is_empty() {
            return Err(Error::InvalidParameter("shape without cubes".into()));
        }
        let mut shape = Self { id, cubes, scale: 1.0 };
        if !shape.is_connected() {
            return Err(Error::InvalidParameter(format!("shape {id} is not face-connected")));
        }
        shape.scale = 1.0 / shape.max_radius_lattice();
        Ok(shape)
    }

    /// Centroid in lattice units.
    pub fn lattice_centroid(&self) -> Vec3 {
        let mut c = Vec3::zeros();
        for q in &self.cubes {
            c += Vec3::new(q[0] as f64 + 0.5, q[1] as f64 + 0.5, q[2] as f64 + 0.5);
        }
        c / self.cubes.len() as f64
    }

    fn max_radius_lattice(&self) -> f64 {
        let c = self.lattice_centroid();
        let mut best: f64 = 0.0;
        for q in &self.cubes {
            for corner in 0..8 {
                let p = Vec3::new(
                    (q[0] + (corner & 1)) as f64,
                    (q[1] + ((corner >> 1) & 1)) as f64,
                    (q[2] + ((corner >> 2) & 1)) as f64,
                );
                best = best.max((p - c).norm());
            }
        }
        best
    }

    /// Physical position of a lattice point.
    pub fn to_physical(&self, lattice: &Vec3) -> Vec3 {
        (lattice - self.lattice_centroid()) * self.scale
    }

    /// `max_{x∈D} |x|` in physical units.
    pub fn max_radius(&self) -> f64 {
        self.max_radius_lattice() * self.scale
    }

    pub fn volume(&self) -> f64 {
        self.cubes.len() as f64 * self.scale.powi(3)
    }

    pub fn contains_cube(&self, q: &[i32; 3]) -> bool {
        self.cubes.iter().any(|c| c == q)
    }

    /// Whether the physical point lies in the closed union.
    pub fn contains_point(&self, x: &Vec3) -> bool {
        let l = x / self.scale + self.lattice_centroid();
        let eps = 1e-12;
        self.cubes.iter().any(|q| {
            (0..3).all(|i| l[i] >= q[i] as f64 - eps && l[i] <= q[i] as f64 + 1.0 + eps)
        })
    }

    fn is_connected(&self) -> bool {
        let n = self.cubes.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] {
                    let d: i32 = (0..3).map(|k| (self.cubes[i][k] - self.cubes[j][k]).abs()).sum();
                    if d == 1 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Cube set translated so that its minimum corner is at the origin and
    /// sorted; equal keys mean identical (not merely congruent) shapes.
    pub fn normalized_cubes(&self) -> Vec<[i32; 3]> {
        let mut min = [i32::MAX; 3];
        for q in &self.cubes {
            for k in 0..3 {
                min[k] = min[k].min(q[k]);
            }
        }
        let mut out: Vec<[i32; 3]> =
            self.cubes.iter().map(|q| [q[0] - min[0], q[1] - min[1], q[2] - min[2]]).collect();
        out.sort();
        out
    }
}

/// Versioned shape collection, ordered by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSet {
    pub version: u32,
    pub shapes: Vec<ReferenceShape>,
}

impl ShapeSet {
    pub fn new(mut shapes: Vec<ReferenceShape>) -> Self {
        shapes.sort_by_key(|s| s.id);
        Self { version: SHAPE_SET_VERSION, shapes }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let set: Self = serde_json::from_str(s)?;
        if set.version != SHAPE_SET_VERSION {
            return Err(Error::Config(format!("unsupported shape set version {}", set.version)));
        }
        Ok(Self::new(set.shapes))
    }

    pub fn get(&self, id: usize) -> Option<&ReferenceShape> {
        self.shapes.iter().find(|s| s.id == id)
    }
}

/// The six dictionary shapes: single cube, 1×2 bar, 1×3 bar, L-tromino,
/// 2×2 slab and T-tetromino. Bars and planar pieces are laid along different
/// axes so that no two shapes share an orientation.
pub fn build_dictionary_shapes() -> Vec<ReferenceShape> {
    let defs: [Vec<[i32; 3]>; 6] = [
        vec![[0, 0, 0]],
        vec![[0, 0, 0], [0, 0, 1]],
        vec![[0, 0, 0], [0, 1, 0], [0, 2, 0]],
        vec![[0, 0, 0], [1, 0, 0], [0, 1, 0]],
        vec![[0, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 1]],
        vec![[0, 0, 0], [1, 0, 0], [2, 0, 0], [1, 0, 1]],
    ];
    defs.into_iter()
        .enumerate()
        .map(|(i, c)| ReferenceShape::from_cubes(i + 1, c).expect("dictionary shapes are valid"))
        .collect()
}
