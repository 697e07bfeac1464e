//! Reference shapes, surface meshes, voxel grids, measurement apertures and
//! sampling regions.

mod mesh;
mod shapes;
mod surface;
mod voxel;

pub use mesh::{mesh_shape, mesh_subdivisions, Panel, SurfaceMesh};
pub use shapes::{build_dictionary_shapes, ReferenceShape, ShapeSet, SHAPE_SET_VERSION};
pub use surface::{DirectionSet, MeasurementSurface, SamplingGrid};
pub use voxel::{voxelize_shape, voxels_per_edge_for_budget, ContrastGrid};
