//! Plain-text artifact writers: legacy ASCII VTK for solutions on the
//! active mesh, plus small CSV helpers live on their respective types.

use std::io::Write;

use crate::geometry::CutMesh;
use crate::space::{FeFunction, FeSpace};

/// Writes the active part of the mesh with nodal values of `u` as a
/// legacy ASCII VTK unstructured grid with one point scalar field.
pub fn write_vtk_solution(
    mut w: impl Write,
    dom: &CutMesh,
    space: &FeSpace,
    u: &FeFunction,
    field_name: &str,
) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "cutfem solution")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    // Points are the active vertices, listed in dof order so cell
    // connectivity can reuse dof indices.
    writeln!(w, "POINTS {} double", space.n_dofs())?;
    for dof in 0..space.n_dofs() {
        let p = dom.mesh.vertices[space.vertex_of_dof(dof)];
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    let active = dom.active_elements();
    writeln!(w, "CELLS {} {}", active.len(), 4 * active.len())?;
    for &t in active {
        let dofs = space.element_dofs(&dom.mesh, t);
        writeln!(w, "3 {} {} {}", dofs[0], dofs[1], dofs[2])?;
    }
    writeln!(w, "CELL_TYPES {}", active.len())?;
    for _ in active {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", space.n_dofs())?;
    writeln!(w, "SCALARS {} double 1", field_name)?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &c in &u.coefficients {
        writeln!(w, "{}", c)?;
    }
    Ok(())
}
