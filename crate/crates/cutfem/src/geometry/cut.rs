//! Level-set classification of elements and exact intersection of
//! triangles with the piecewise-linear interface.
//!
//! The interface is the zero set of the vertexwise linear interpolant of
//! the level-set function, so every cut is a straight segment per element
//! and the inside region is a triangle or a quadrilateral.

use std::collections::BTreeMap;

use thiserror::Error;

use super::mesh::{dist, normalize, p1_gradients, signed_area, Mesh, Point2};

/// Relative perturbation applied to vertex level-set values that are
/// exactly zero; scaled by the largest |phi| over the mesh vertices.
pub const GEOM_EPS_REL: f64 = 1e-12;

/// Cut elements whose inside area falls below this fraction of the element
/// area are reclassified as outside.
pub const TINY_CUT_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementLabel {
    /// All vertex values negative: fully in the physical domain.
    Inside,
    /// All vertex values positive: carries no degrees of freedom.
    Outside,
    /// Mixed vertex signs: crossed by the interface.
    Cut,
}

/// Per-element labels plus the derived active, cut and ghost-face sets.
#[derive(Debug, Clone)]
pub struct CutClassification {
    pub label: Vec<ElementLabel>,
    /// Sorted indices of inside and cut elements (the active mesh).
    pub active: Vec<usize>,
    /// Sorted indices of cut elements.
    pub cut_set: Vec<usize>,
    /// Sorted face indices on which the ghost penalty acts: faces of cut
    /// elements that are interior to the active domain.
    pub ghost_faces: Vec<usize>,
}

impl CutClassification {
    pub fn is_active(&self, t: usize) -> bool {
        self.label[t] != ElementLabel::Outside
    }
}

/// A straight interface segment inside one element.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceSegment {
    pub endpoints: [Point2; 2],
    /// Unit normal pointing from the negative (inside) region to the
    /// positive one.
    pub normal: Point2,
}

impl InterfaceSegment {
    pub fn length(&self) -> f64 {
        dist(self.endpoints[0], self.endpoints[1])
    }
}

/// Decomposition of a cut element: the part of the element inside the
/// domain, triangulated, plus the interface segment.
#[derive(Debug, Clone)]
pub struct CutGeometry {
    pub parent: usize,
    /// One or two counterclockwise triangles covering the inside polygon.
    pub inside_subtriangles: Vec<[Point2; 3]>,
    pub interface_segments: Vec<InterfaceSegment>,
}

impl CutGeometry {
    pub fn inside_area(&self) -> f64 {
        self.inside_subtriangles
            .iter()
            .map(|t| signed_area(t[0], t[1], t[2]))
            .sum()
    }

    pub fn interface_length(&self) -> f64 {
        self.interface_segments.iter().map(|s| s.length()).sum()
    }
}

#[derive(Debug, Error)]
pub enum CutError {
    #[error("element vertex values {0:?} do not change sign")]
    UniformSign([f64; 3]),
}

/// Random counterclockwise triangle with vertices in the unit square and
/// area bounded away from zero; used by the built-in check suite and by
/// randomized tests.
pub fn random_ccw_triangle(rng: &mut impl rand::Rng) -> [Point2; 3] {
    loop {
        let mut tri = [[0.0; 2]; 3];
        for v in &mut tri {
            *v = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        }
        let area = signed_area(tri[0], tri[1], tri[2]);
        if area.abs() >= 0.05 {
            if area < 0.0 {
                tri.swap(1, 2);
            }
            return tri;
        }
    }
}

/// Random vertex values of mixed sign, each bounded away from zero.
pub fn random_mixed_signs(rng: &mut impl rand::Rng) -> [f64; 3] {
    loop {
        let mut values = [0.0; 3];
        for v in &mut values {
            *v = rng.random_range(0.05..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        }
        let n_neg = values.iter().filter(|&&v| v < 0.0).count();
        if n_neg == 1 || n_neg == 2 {
            return values;
        }
    }
}

/// Level-set values at the mesh vertices with exact zeros pushed to the
/// positive side.
///
/// The perturbation is applied per vertex, so elements sharing a vertex
/// always see the same value and the reconstructed interface stays
/// watertight.
pub fn perturbed_vertex_values(mesh: &Mesh, phi: impl Fn(Point2) -> f64) -> Vec<f64> {
    let mut values: Vec<f64> = mesh.vertices.iter().map(|&v| phi(v)).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = GEOM_EPS_REL * if scale > 0.0 { scale } else { 1.0 };
    for v in &mut values {
        if *v == 0.0 {
            *v = eps;
        }
    }
    values
}

fn edge_crossing(a: Point2, fa: f64, b: Point2, fb: f64) -> Point2 {
    let t = fa / (fa - fb);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Intersects one triangle with the zero set of the linear interpolant of
/// the vertex values, which must change sign.
///
/// Returns the inside (negative) polygon triangulated into one or two
/// counterclockwise sub-triangles and the interface segment with its unit
/// normal aligned with the interpolant gradient. The construction is
/// symmetric: negating all values yields the complementary polygon with
/// bitwise-identical segment endpoints and a flipped normal.
pub fn intersect_element(
    parent: usize,
    tri: &[Point2; 3],
    values: &[f64; 3],
) -> Result<CutGeometry, CutError> {
    let neg = [values[0] < 0.0, values[1] < 0.0, values[2] < 0.0];
    let n_neg = neg.iter().filter(|&&b| b).count();
    if n_neg == 0 || n_neg == 3 {
        return Err(CutError::UniformSign(*values));
    }
    // Rotate so the vertex whose sign differs from the other two comes
    // first; the rotation preserves orientation.
    let lone = (0..3)
        .find(|&k| neg[k] != neg[(k + 1) % 3] && neg[k] != neg[(k + 2) % 3])
        .expect("mixed signs imply a lone vertex");
    let p = [tri[lone], tri[(lone + 1) % 3], tri[(lone + 2) % 3]];
    let f = [values[lone], values[(lone + 1) % 3], values[(lone + 2) % 3]];
    let c01 = edge_crossing(p[0], f[0], p[1], f[1]);
    let c02 = edge_crossing(p[0], f[0], p[2], f[2]);
    let inside_subtriangles = if f[0] < 0.0 {
        vec![[p[0], c01, c02]]
    } else {
        vec![[c01, p[1], p[2]], [c01, p[2], c02]]
    };
    let grad = {
        let grads = p1_gradients(tri);
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += values[k] * grads[k][0];
            g[1] += values[k] * grads[k][1];
        }
        g
    };
    Ok(CutGeometry {
        parent,
        inside_subtriangles,
        interface_segments: vec![InterfaceSegment {
            endpoints: [c01, c02],
            normal: normalize(grad),
        }],
    })
}

fn classify_impl(
    mesh: &Mesh,
    phi: impl Fn(Point2) -> f64,
) -> (CutClassification, BTreeMap<usize, CutGeometry>) {
    let values = perturbed_vertex_values(mesh, phi);
    let mut label = Vec::with_capacity(mesh.n_triangles());
    let mut cut_geometry = BTreeMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let f = [values[tri[0]], values[tri[1]], values[tri[2]]];
        let n_neg = f.iter().filter(|&&v| v < 0.0).count();
        let l = match n_neg {
            3 => ElementLabel::Inside,
            0 => ElementLabel::Outside,
            _ => {
                let verts = mesh.triangle_vertices(t);
                let geom = intersect_element(t, &verts, &f)
                    .expect("mixed signs always intersect");
                if geom.inside_area() < TINY_CUT_FRACTION * mesh.triangle_area(t) {
                    // Sub-roundoff slivers only inject noise.
                    ElementLabel::Outside
                } else {
                    cut_geometry.insert(t, geom);
                    ElementLabel::Cut
                }
            }
        };
        label.push(l);
    }
    let active: Vec<usize> = (0..label.len())
        .filter(|&t| label[t] != ElementLabel::Outside)
        .collect();
    let cut_set: Vec<usize> = (0..label.len())
        .filter(|&t| label[t] == ElementLabel::Cut)
        .collect();
    let ghost_faces: Vec<usize> = mesh
        .faces
        .iter()
        .enumerate()
        .filter_map(|(i, face)| {
            let right = face.right?;
            let left = face.left;
            let touches_cut = label[left] == ElementLabel::Cut || label[right] == ElementLabel::Cut;
            let both_active =
                label[left] != ElementLabel::Outside && label[right] != ElementLabel::Outside;
            (touches_cut && both_active).then_some(i)
        })
        .collect();
    (
        CutClassification {
            label,
            active,
            cut_set,
            ghost_faces,
        },
        cut_geometry,
    )
}

/// Labels every element against the level set and derives the active,
/// cut and ghost-face sets.
pub fn classify_elements(mesh: &Mesh, phi: impl Fn(Point2) -> f64) -> CutClassification {
    classify_impl(mesh, phi).0
}

/// A background mesh bundled with its classification and the cut geometry
/// of every cut element. Immutable after construction.
#[derive(Debug, Clone)]
pub struct CutMesh {
    pub mesh: Mesh,
    pub classification: CutClassification,
    pub cut_geometry: BTreeMap<usize, CutGeometry>,
}

impl CutMesh {
    pub fn build(mesh: Mesh, phi: impl Fn(Point2) -> f64) -> Self {
        let (classification, cut_geometry) = classify_impl(&mesh, phi);
        CutMesh {
            mesh,
            classification,
            cut_geometry,
        }
    }

    pub fn label(&self, t: usize) -> ElementLabel {
        self.classification.label[t]
    }

    pub fn active_elements(&self) -> &[usize] {
        &self.classification.active
    }

    pub fn cut(&self, t: usize) -> Option<&CutGeometry> {
        self.cut_geometry.get(&t)
    }

    /// Area of the discrete physical domain (sum over active elements of
    /// their inside parts).
    pub fn inside_area(&self) -> f64 {
        self.classification
            .active
            .iter()
            .map(|&t| match self.cut(t) {
                Some(geom) => geom.inside_area(),
                None => self.mesh.triangle_area(t),
            })
            .sum()
    }

    /// Writes the per-element classification as `element_index,label` CSV.
    pub fn write_classification_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "element_index,label")?;
        for (t, label) in self.classification.label.iter().enumerate() {
            let name = match label {
                ElementLabel::Inside => "inside",
                ElementLabel::Outside => "outside",
                ElementLabel::Cut => "cut",
            };
            writeln!(w, "{},{}", t, name)?;
        }
        Ok(())
    }
}
