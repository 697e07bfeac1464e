use std::collections::HashMap;

use super::shapes::ReferenceShape;
use crate::error::{Error, Result};
use crate::Vec3;

/// Flat triangular panel with outward normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub vertices: [Vec3; 3],
    pub centroid: Vec3,
    pub normal: Vec3,
    pub area: f64,
    pub diameter: f64,
}

impl Panel {
    pub fn new(vertices: [Vec3; 3]) -> Self {
        let [a, b, c] = vertices;
        let cross = (b - a).cross(&(c - a));
        let area = 0.5 * cross.norm();
        let diameter = (b - a).norm().max((c - b).norm()).max((a - c).norm());
        Self { vertices, centroid: (a + b + c) / 3.0, normal: cross.normalize(), area, diameter }
    }

    /// Euclidean distance from `x` to the closed triangle.
    pub fn distance_to(&self, x: &Vec3) -> f64 {
        (closest_point_on_triangle(x, &self.vertices) - x).norm()
    }

    /// Signed solid angle subtended at `x` (van Oosterom–Strackee).
    pub fn solid_angle(&self, x: &Vec3) -> f64 {
        let a = self.vertices[0] - x;
        let b = self.vertices[1] - x;
        let c = self.vertices[2] - x;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
        2.0 * num.atan2(den)
    }

    fn translated(&self, z: &Vec3) -> Self {
        Self {
            vertices: [self.vertices[0] + z, self.vertices[1] + z, self.vertices[2] + z],
            centroid: self.centroid + z,
            normal: self.normal,
            area: self.area,
            diameter: self.diameter,
        }
    }
}

/// Closed triangulated surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub panels: Vec<Panel>,
    /// Sub-squares per cube edge.
    pub subdivisions: usize,
    /// Integer vertex keys shared by coincident vertices.
    topology: Vec<[[i64; 3]; 3]>,
}

impl SurfaceMesh {
    /// Mesh from explicit triangles; vertices closer than 1e-9 are identified.
    pub fn from_triangles(triangles: &[[Vec3; 3]]) -> Self {
        let key = |v: &Vec3| v.map(|c| (c * 1e9).round() as i64).into();
        Self {
            panels: triangles.iter().map(|t| Panel::new(*t)).collect(),
            subdivisions: 0,
            topology: triangles.iter().map(|t| [key(&t[0]), key(&t[1]), key(&t[2])]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn translate(&self, z: &Vec3) -> Self {
        Self {
            panels: self.panels.iter().map(|p| p.translated(z)).collect(),
            subdivisions: self.subdivisions,
            topology: self.topology.clone(),
        }
    }

    pub fn total_area(&self) -> f64 {
        self.panels.iter().map(|p| p.area).sum()
    }

    /// Enclosed volume from the divergence theorem; positive for outward normals.
    pub fn signed_volume(&self) -> f64 {
        self.panels
            .iter()
            .map(|p| p.vertices[0].dot(&p.vertices[1].cross(&p.vertices[2])) / 6.0)
            .sum()
    }

    pub fn max_diameter(&self) -> f64 {
        self.panels.iter().map(|p| p.diameter).fold(0.0, f64::max)
    }

    /// Winding number of the surface about `x`: 1 inside, 0 outside.
    pub fn winding_number(&self, x: &Vec3) -> f64 {
        self.panels.iter().map(|p| p.solid_angle(x)).sum::<f64>() / (4.0 * std::f64::consts::PI)
    }

    pub fn contains_point(&self, x: &Vec3) -> bool {
        self.winding_number(x) > 0.5
    }

    /// Every edge is shared by exactly two panels traversing it in opposite
    /// directions.
    pub fn is_watertight(&self) -> bool {
        let mut count: HashMap<([i64; 3], [i64; 3]), i32> = HashMap::new();
        for t in &self.topology {
            for e in 0..3 {
                *count.entry((t[e], t[(e + 1) % 3])).or_default() += 1;
            }
        }
        count.iter().all(|(&(a, b), &c)| c == 1 && count.get(&(b, a)) == Some(&1))
    }
}

fn closest_point_on_triangle(p: &Vec3, v: &[Vec3; 3]) -> Vec3 {
    let [a, b, c] = *v;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

fn exposed_faces(shape: &ReferenceShape) -> Vec<([i32; 3], usize, i32)> {
    let mut faces = Vec::new();
    for q in &shape.cubes {
        for axis in 0..3 {
            for sign in [-1, 1] {
                let mut nb = *q;
                nb[axis] += sign;
                if !shape.contains_cube(&nb) {
                    faces.push((*q, axis, sign));
                }
            }
        }
    }
    faces
}

/// Largest subdivision `n` with `4 n² · (exposed faces) ≤ target`.
pub fn mesh_subdivisions(shape: &ReferenceShape, target_panel_count: usize) -> Result<usize> {
    let per_level = 4 * exposed_faces(shape).len();
    if target_panel_count < per_level || target_panel_count < 24 {
        return Err(Error::InvalidParameter(format!(
            "panel budget {target_panel_count} below the minimum {per_level} for shape {}",
            shape.id
        )));
    }
    let mut n = 1;
    while per_level * (n + 1) * (n + 1) <= target_panel_count {
        n += 1;
    }
    Ok(n)
}

/// Watertight mesh of the exposed cube faces; each face is cut into `n × n`
/// squares and each square into four triangles meeting at its centre.
pub fn mesh_shape(shape: &ReferenceShape, target_panel_count: usize) -> Result<SurfaceMesh> {
    let n = mesh_subdivisions(shape, target_panel_count)?;
    Ok(mesh_with_subdivisions(shape, n))
}

pub(crate) fn mesh_with_subdivisions(shape: &ReferenceShape, n: usize) -> SurfaceMesh {
    let n = n as i64;
    let unit = (2 * n) as f64;
    let mut panels = Vec::new();
    let mut topology = Vec::new();
    for (q, axis, sign) in exposed_faces(shape) {
        let b = (axis + 1) % 3;
        let c = (axis + 2) % 3;
        let plane = 2 * n * (q[axis] as i64 + if sign > 0 { 1 } else { 0 });
        let key = |u: i64, v: i64| {
            let mut k = [0i64; 3];
            k[axis] = plane;
            k[b] = 2 * n * q[b] as i64 + u;
            k[c] = 2 * n * q[c] as i64 + v;
            k
        };
        for i in 0..n {
            for j in 0..n {
                let p00 = key(2 * i, 2 * j);
                let p10 = key(2 * i + 2, 2 * j);
                let p11 = key(2 * i + 2, 2 * j + 2);
                let p01 = key(2 * i, 2 * j + 2);
                let mid = key(2 * i + 1, 2 * j + 1);
                for (s, e) in [(p00, p10), (p10, p11), (p11, p01), (p01, p00)] {
                    let tri = if sign > 0 { [s, e, mid] } else { [e, s, mid] };
                    let verts = tri.map(|k| {
                        shape.to_physical(&Vec3::new(k[0] as f64 / unit, k[1] as f64 / unit, k[2] as f64 / unit))
                    });
                    panels.push(Panel::new(verts));
                    topology.push(tri);
                }
            }
        }
    }
    SurfaceMesh { panels, subdivisions: n as usize, topology }
}
