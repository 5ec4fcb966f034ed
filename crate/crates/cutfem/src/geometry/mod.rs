//! Background meshes, level-set classification and cut-cell geometry.

mod cut;
mod mesh;

pub use cut::{
    classify_elements, intersect_element, perturbed_vertex_values, random_ccw_triangle,
    random_mixed_signs, CutClassification, CutError, CutGeometry, CutMesh, ElementLabel,
    InterfaceSegment, GEOM_EPS_REL, TINY_CUT_FRACTION,
};
pub use mesh::{
    barycentric_coords, build_background_mesh, build_background_mesh_with_cells, cross, dist, dot,
    grid_cells_for_target, norm, normalize, p1_gradients, rot90, signed_area, sub, Face, Mesh,
    MeshError, Point2, Rect,
};
