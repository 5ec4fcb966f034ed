//! Continuous piecewise-linear finite element space on the active mesh.
//!
//! Degrees of freedom live on every vertex of an active element, including
//! vertices of cut elements that lie outside the physical domain: discrete
//! functions extend over the whole active region and the ghost penalty
//! controls their exterior part.

use thiserror::Error;

use crate::geometry::{barycentric_coords, p1_gradients, CutMesh, Mesh, Point2};

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("element {0} is outside the active mesh")]
    InactiveElement(usize),
    #[error("coefficient vector has length {got}, space has {expected} dofs")]
    DimensionMismatch { got: usize, expected: usize },
}

/// Degree-of-freedom numbering over the active vertices, in ascending
/// vertex order.
#[derive(Debug, Clone)]
pub struct FeSpace {
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
}

impl FeSpace {
    pub fn build(dom: &CutMesh) -> FeSpace {
        let mut has_dof = vec![false; dom.mesh.n_vertices()];
        for &t in dom.active_elements() {
            for &v in &dom.mesh.triangles[t] {
                has_dof[v] = true;
            }
        }
        let mut dof_of_vertex = vec![None; has_dof.len()];
        let mut vertex_of_dof = Vec::new();
        for (v, &active) in has_dof.iter().enumerate() {
            if active {
                dof_of_vertex[v] = Some(vertex_of_dof.len());
                vertex_of_dof.push(v);
            }
        }
        FeSpace {
            dof_of_vertex,
            vertex_of_dof,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn vertex_of_dof(&self, dof: usize) -> usize {
        self.vertex_of_dof[dof]
    }

    /// Dof indices of the three vertices of an active element.
    pub fn element_dofs(&self, mesh: &Mesh, t: usize) -> [usize; 3] {
        let tri = mesh.triangles[t];
        [
            self.dof_of_vertex[tri[0]].expect("active element vertex carries a dof"),
            self.dof_of_vertex[tri[1]].expect("active element vertex carries a dof"),
            self.dof_of_vertex[tri[2]].expect("active element vertex carries a dof"),
        ]
    }

    pub fn zero_function(&self) -> FeFunction {
        FeFunction {
            coefficients: vec![0.0; self.n_dofs()],
        }
    }

    pub fn function_from_coefficients(
        &self,
        coefficients: Vec<f64>,
    ) -> Result<FeFunction, SpaceError> {
        if coefficients.len() != self.n_dofs() {
            return Err(SpaceError::DimensionMismatch {
                got: coefficients.len(),
                expected: self.n_dofs(),
            });
        }
        Ok(FeFunction { coefficients })
    }

    /// Nodal interpolant: coefficients are the values of `g` at the active
    /// vertices.
    pub fn interpolate_nodal(&self, mesh: &Mesh, g: impl Fn(Point2) -> f64) -> FeFunction {
        FeFunction {
            coefficients: self
                .vertex_of_dof
                .iter()
                .map(|&v| g(mesh.vertices[v]))
                .collect(),
        }
    }

    /// Value and (per-element constant) gradient of `f` at `point` inside
    /// active element `element`.
    pub fn evaluate(
        &self,
        dom: &CutMesh,
        f: &FeFunction,
        element: usize,
        point: Point2,
    ) -> Result<(f64, Point2), SpaceError> {
        if !dom.classification.is_active(element) {
            return Err(SpaceError::InactiveElement(element));
        }
        if f.coefficients.len() != self.n_dofs() {
            return Err(SpaceError::DimensionMismatch {
                got: f.coefficients.len(),
                expected: self.n_dofs(),
            });
        }
        let tri = dom.mesh.triangle_vertices(element);
        let dofs = self.element_dofs(&dom.mesh, element);
        let lam = barycentric_coords(&tri, point);
        let grads = p1_gradients(&tri);
        let mut value = 0.0;
        let mut gradient = [0.0; 2];
        for k in 0..3 {
            let c = f.coefficients[dofs[k]];
            value += lam[k] * c;
            gradient[0] += c * grads[k][0];
            gradient[1] += c * grads[k][1];
        }
        Ok((value, gradient))
    }
}

/// A function of the space, stored as its nodal coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    pub coefficients: Vec<f64>,
}

impl FeFunction {
    /// Writes `vertex,x,y,value` CSV rows for every dof.
    pub fn write_nodal_csv(
        &self,
        mesh: &Mesh,
        space: &FeSpace,
        mut w: impl std::io::Write,
    ) -> std::io::Result<()> {
        writeln!(w, "vertex,x,y,value")?;
        for (dof, &c) in self.coefficients.iter().enumerate() {
            let v = space.vertex_of_dof(dof);
            let p = mesh.vertices[v];
            writeln!(w, "{},{},{},{}", v, p[0], p[1], c)?;
        }
        Ok(())
    }
}
