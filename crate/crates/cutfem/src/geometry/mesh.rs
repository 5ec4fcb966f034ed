//! Structured triangular background meshes and basic planar geometry.
//!
//! The background mesh is a uniform grid of rectangles over an axis-aligned
//! bounding box, each cell split into two triangles by the diagonal running
//! from its lower-left to its upper-right corner. The split direction is the
//! same in every cell, which makes the geometry fully deterministic.

use std::collections::HashMap;

use thiserror::Error;

/// A point (or vector) in the plane.
pub type Point2 = [f64; 2];

#[inline]
pub fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// 2D cross product `a.x*b.y - a.y*b.x`.
#[inline]
pub fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point2) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point2, b: Point2) -> f64 {
    norm(sub(a, b))
}

/// Rotates a vector by -90 degrees: `(y, -x)`.
#[inline]
pub fn rot90(a: Point2) -> Point2 {
    [a[1], -a[0]]
}

#[inline]
pub fn normalize(a: Point2) -> Point2 {
    let n = norm(a);
    [a[0] / n, a[1] / n]
}

/// Signed area of the triangle `(a, b, c)`; positive when counterclockwise.
#[inline]
pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

/// Barycentric coordinates of `p` with respect to the triangle `tri`.
#[inline]
pub fn barycentric_coords(tri: &[Point2; 3], p: Point2) -> [f64; 3] {
    let det = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let l1 = cross(sub(p, tri[0]), sub(tri[2], tri[0])) / det;
    let l2 = cross(sub(tri[1], tri[0]), sub(p, tri[0])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Gradients of the three P1 barycentric basis functions on `tri`.
///
/// The gradients are constant over the triangle and sum to zero.
#[inline]
pub fn p1_gradients(tri: &[Point2; 3]) -> [Point2; 3] {
    let ab = sub(tri[1], tri[0]);
    let ac = sub(tri[2], tri[0]);
    let det = cross(ab, ac);
    let g1 = [ac[1] / det, -ac[0] / det];
    let g2 = [-ab[1] / det, ab[0] / det];
    [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
}

/// An axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Rect { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn shortest_side(&self) -> f64 {
        self.width().min(self.height())
    }
}

/// A mesh face (edge) with its adjacent triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    /// Endpoint vertex indices, smaller index first.
    pub vertices: [usize; 2],
    /// First adjacent triangle.
    pub left: usize,
    /// Second adjacent triangle; `None` on the mesh boundary.
    pub right: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("target mesh size must be positive, got {0}")]
    NonPositiveTargetH(f64),
    #[error("bounds must have positive width and height, got {0}x{1}")]
    DegenerateBounds(f64, f64),
    #[error(
        "target mesh size {target_h} implies a cell wider than the shortest side {side} of the bounds"
    )]
    TargetHTooCoarse { target_h: f64, side: f64 },
    #[error("triangle {index} has non-positive signed area {area}")]
    NonPositiveArea { index: usize, area: f64 },
    #[error("triangle {index} references vertex {vertex} out of range")]
    VertexOutOfRange { index: usize, vertex: usize },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
}

/// A triangulation with face adjacency.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point2>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// All edges, sorted by vertex pair.
    pub faces: Vec<Face>,
    /// Maximum element diameter (longest edge over all triangles).
    pub h_max: f64,
}

impl Mesh {
    /// Builds a mesh from raw vertices and triangles, deriving face
    /// adjacency and `h_max`. Rejects inverted triangles and non-manifold
    /// edges.
    pub fn from_triangles(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Mesh, MeshError> {
        let mut edge_map: HashMap<[usize; 2], (usize, Option<usize>)> = HashMap::new();
        let mut h_max = 0.0f64;
        for (index, tri) in triangles.iter().enumerate() {
            for &vertex in tri {
                if vertex >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange { index, vertex });
                }
            }
            let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let area = signed_area(a, b, c);
            if area <= 0.0 {
                return Err(MeshError::NonPositiveArea { index, area });
            }
            h_max = h_max.max(dist(a, b)).max(dist(b, c)).max(dist(c, a));
            for (i, j) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                let key = [i.min(j), i.max(j)];
                match edge_map.entry(key).or_insert((index, None)) {
                    (first, second) if *first != index => {
                        if second.is_some() {
                            return Err(MeshError::NonManifoldEdge(key[0], key[1]));
                        }
                        *second = Some(index);
                    }
                    _ => {}
                }
            }
        }
        let mut faces: Vec<Face> = edge_map
            .into_iter()
            .map(|(vertices, (left, right))| Face {
                vertices,
                left,
                right,
            })
            .collect();
        faces.sort_unstable_by_key(|f| f.vertices);
        Ok(Mesh {
            vertices,
            triangles,
            faces,
            h_max,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Vertex coordinates of triangle `t`.
    pub fn triangle_vertices(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(t);
        signed_area(a, b, c)
    }

    /// Longest edge of triangle `t`.
    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }
}

/// Cell counts of the uniform grid whose triangle diameter does not exceed
/// `target_h`, minimal per direction.
pub fn grid_cells_for_target(bounds: Rect, target_h: f64) -> Result<(usize, usize), MeshError> {
    if !(target_h > 0.0) {
        return Err(MeshError::NonPositiveTargetH(target_h));
    }
    let (w, h) = (bounds.width(), bounds.height());
    if w <= 0.0 || h <= 0.0 {
        return Err(MeshError::DegenerateBounds(w, h));
    }
    let side = bounds.shortest_side();
    if target_h > std::f64::consts::SQRT_2 * side * (1.0 + 1e-12) {
        return Err(MeshError::TargetHTooCoarse { target_h, side });
    }
    // Guard the ceil against an argument landing a hair above an integer
    // from rounding when target_h divides the diagonal exactly.
    let cells = |len: f64| -> usize {
        let x = len * std::f64::consts::SQRT_2 / target_h;
        ((x * (1.0 - 1e-12)).ceil() as usize).max(1)
    };
    Ok((cells(w), cells(h)))
}

/// Uniform grid of `nx` by `ny` cells over `bounds`, each cell split into
/// two triangles by its lower-left/upper-right diagonal.
pub fn build_background_mesh_with_cells(bounds: Rect, nx: usize, ny: usize) -> Mesh {
    assert!(nx > 0 && ny > 0, "cell counts must be positive");
    let wx = bounds.width() / nx as f64;
    let wy = bounds.height() / ny as f64;
    let nvx = nx + 1;
    let mut vertices = Vec::with_capacity(nvx * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                bounds.min[0] + i as f64 * wx,
                bounds.min[1] + j as f64 * wy,
            ]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = j * nvx + i;
            let v10 = v00 + 1;
            let v01 = v00 + nvx;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut mesh = Mesh::from_triangles(vertices, triangles)
        .expect("structured grid is always a valid triangulation");
    // The longest edge is the cell diagonal; computing it from the cell
    // widths keeps h_max halving bitwise-exact under cell doubling.
    mesh.h_max = (wx * wx + wy * wy).sqrt();
    mesh
}

/// Structured background mesh over `bounds` with maximum element diameter
/// at most `target_h`, using the minimal uniform cell count per direction.
pub fn build_background_mesh(bounds: Rect, target_h: f64) -> Result<Mesh, MeshError> {
    let (nx, ny) = grid_cells_for_target(bounds, target_h)?;
    Ok(build_background_mesh_with_cells(bounds, nx, ny))
}
