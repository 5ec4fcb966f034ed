//! Assembly of the discrete operators: the Nitsche form (volume stiffness
//! plus symmetric boundary terms), the ghost penalty acting on normal
//! gradient jumps across faces of cut elements, load vectors, and the
//! residual/Jacobian contributions of the power nonlinearity.

use thiserror::Error;

use crate::geometry::{
    barycentric_coords, dist, dot, normalize, p1_gradients, rot90, sub, CutMesh, Point2,
};
use crate::quadrature::{
    element_volume_points, physical_interface_points, segment_rule, triangle_rule, QuadratureError,
    SegmentRule, TriangleRule,
};
use crate::space::{FeFunction, FeSpace};
use crate::sparse::{CooBuilder, SparseOperator};

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("penalty parameters must be positive, got gamma_d = {0}")]
    NonPositiveGammaD(f64),
    #[error("ghost penalty parameter must be nonnegative, got gamma_1 = {0}")]
    NegativeGamma1(f64),
    #[error("nonlinearity exponent must satisfy p >= 2, got p = {0}")]
    ExponentTooSmall(f64),
    #[error("mesh parameter must be positive, got h = {0}")]
    NonPositiveH(f64),
}

/// Which length scale enters the penalty terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyLengthScale {
    /// The global mesh parameter `h` everywhere (the default).
    #[default]
    GlobalH,
    /// Element diameter in the boundary penalty, face length in the ghost
    /// penalty.
    Local,
}

/// Parameters of the discrete problem.
#[derive(Debug, Clone, Copy)]
pub struct ProblemParams {
    /// Exponent of the nonlinearity |u|^(p-2) u.
    pub p: f64,
    /// Nitsche boundary penalty.
    pub gamma_d: f64,
    /// Ghost penalty strength.
    pub gamma_1: f64,
    /// Global mesh parameter.
    pub h: f64,
    pub length_scale: PenaltyLengthScale,
}

impl ProblemParams {
    pub fn new(p: f64, gamma_d: f64, gamma_1: f64, h: f64) -> Result<Self, ParamError> {
        let params = ProblemParams {
            p,
            gamma_d,
            gamma_1,
            h,
            length_scale: PenaltyLengthScale::GlobalH,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.gamma_d > 0.0) {
            return Err(ParamError::NonPositiveGammaD(self.gamma_d));
        }
        if !(self.gamma_1 >= 0.0) {
            return Err(ParamError::NegativeGamma1(self.gamma_1));
        }
        if !(self.p >= 2.0) {
            return Err(ParamError::ExponentTooSmall(self.p));
        }
        if !(self.h > 0.0) {
            return Err(ParamError::NonPositiveH(self.h));
        }
        Ok(())
    }

    fn boundary_length(&self, element_diameter: f64) -> f64 {
        match self.length_scale {
            PenaltyLengthScale::GlobalH => self.h,
            PenaltyLengthScale::Local => element_diameter,
        }
    }

    fn face_length_scale(&self, face_length: f64) -> f64 {
        match self.length_scale {
            PenaltyLengthScale::GlobalH => self.h,
            PenaltyLengthScale::Local => face_length,
        }
    }
}

/// Quadrature rules shared by the assembly routines.
#[derive(Debug, Clone)]
pub struct QuadratureSet {
    pub volume: TriangleRule,
    pub interface: SegmentRule,
}

impl QuadratureSet {
    pub fn with_degrees(volume: u32, interface: u32) -> Result<Self, QuadratureError> {
        Ok(QuadratureSet {
            volume: triangle_rule(volume)?,
            interface: segment_rule(interface)?,
        })
    }

    /// Degree 4 volume and degree 2 interface rules: exact for all terms
    /// of the p = 4 problem with P1 elements.
    pub fn default_degrees() -> Self {
        Self::with_degrees(4, 2).expect("default degrees are supported")
    }
}

/// The power nonlinearity |u|^(p-2) u. IEEE pow semantics give the
/// continuous extension 0 at u = 0 for every p > 2 and reduce to the
/// identity for p = 2.
#[inline]
pub fn power_reaction(u: f64, p: f64) -> f64 {
    u.abs().powf(p - 2.0) * u
}

/// Derivative (p-1) |u|^(p-2) of the power nonlinearity.
#[inline]
pub fn power_reaction_derivative(u: f64, p: f64) -> f64 {
    (p - 1.0) * u.abs().powf(p - 2.0)
}

/// Assembles the Nitsche bilinear form: stiffness over the physical part
/// of the active elements, the two symmetric consistency terms on the
/// interface, and the boundary penalty `gamma_d / h`.
pub fn assemble_ah(
    space: &FeSpace,
    dom: &CutMesh,
    params: &ProblemParams,
    quad: &QuadratureSet,
) -> SparseOperator {
    let mut coo = CooBuilder::with_capacity(space.n_dofs(), 9 * dom.active_elements().len());
    for &t in dom.active_elements() {
        let tri = dom.mesh.triangle_vertices(t);
        let dofs = space.element_dofs(&dom.mesh, t);
        let grads = p1_gradients(&tri);
        // The P1 gradients are constant, so the stiffness contribution is
        // the physical area times grad_i . grad_j.
        let area: f64 = element_volume_points(dom, t, &quad.volume)
            .iter()
            .map(|&(_, w)| w)
            .sum();
        for i in 0..3 {
            for j in 0..3 {
                coo.push(dofs[i], dofs[j], area * dot(grads[i], grads[j]));
            }
        }
    }
    for (&t, cut) in &dom.cut_geometry {
        let tri = dom.mesh.triangle_vertices(t);
        let dofs = space.element_dofs(&dom.mesh, t);
        let grads = p1_gradients(&tri);
        let penalty = params.gamma_d / params.boundary_length(dom.mesh.triangle_diameter(t));
        for (x, w, n) in physical_interface_points(cut, &quad.interface) {
            let lam = barycentric_coords(&tri, x);
            let dn = [dot(grads[0], n), dot(grads[1], n), dot(grads[2], n)];
            for i in 0..3 {
                for j in 0..3 {
                    let v = -lam[i] * dn[j] - dn[i] * lam[j] + penalty * lam[i] * lam[j];
                    coo.push(dofs[i], dofs[j], w * v);
                }
            }
        }
    }
    coo.build(true)
}

/// Assembles the ghost penalty: for each face in the ghost set,
/// `gamma_1 * h * |F| * [[n . grad u]] [[n . grad v]]` with the jump taken
/// between the two adjacent elements (constant for P1, so no quadrature
/// rule is needed).
pub fn assemble_ghost_penalty(
    space: &FeSpace,
    dom: &CutMesh,
    params: &ProblemParams,
) -> SparseOperator {
    let mut coo =
        CooBuilder::with_capacity(space.n_dofs(), 16 * dom.classification.ghost_faces.len());
    for &fi in &dom.classification.ghost_faces {
        let face = dom.mesh.faces[fi];
        let pa = dom.mesh.vertices[face.vertices[0]];
        let pb = dom.mesh.vertices[face.vertices[1]];
        let face_len = dist(pa, pb);
        let nf = normalize(rot90(sub(pb, pa)));
        let neighbors = [
            face.left,
            face.right.expect("ghost faces are interior faces"),
        ];
        // Jump coefficients per dof over the union of the two elements'
        // vertices (four in a conforming mesh).
        let mut dofs = [0usize; 4];
        let mut jump = [0.0f64; 4];
        let mut count = 0;
        for (side, &t) in neighbors.iter().enumerate() {
            let sign = if side == 0 { 1.0 } else { -1.0 };
            let tri = dom.mesh.triangle_vertices(t);
            let grads = p1_gradients(&tri);
            for (local, &v) in dom.mesh.triangles[t].iter().enumerate() {
                let dof = space
                    .dof_of_vertex(v)
                    .expect("ghost face neighbors are active");
                let slot = match dofs[..count].iter().position(|&d| d == dof) {
                    Some(k) => k,
                    None => {
                        dofs[count] = dof;
                        count += 1;
                        count - 1
                    }
                };
                jump[slot] += sign * dot(nf, grads[local]);
            }
        }
        let scale = params.gamma_1 * params.face_length_scale(face_len) * face_len;
        for a in 0..count {
            for b in 0..count {
                coo.push(dofs[a], dofs[b], scale * jump[a] * jump[b]);
            }
        }
    }
    coo.build(true)
}

/// Assembles the load vector of a scalar force over the physical domain.
pub fn assemble_load(
    space: &FeSpace,
    dom: &CutMesh,
    quad: &QuadratureSet,
    f2: impl Fn(Point2) -> f64,
) -> Vec<f64> {
    let mut b = vec![0.0; space.n_dofs()];
    for &t in dom.active_elements() {
        let tri = dom.mesh.triangle_vertices(t);
        let dofs = space.element_dofs(&dom.mesh, t);
        for (x, w) in element_volume_points(dom, t, &quad.volume) {
            let lam = barycentric_coords(&tri, x);
            let f = f2(x);
            for i in 0..3 {
                b[dofs[i]] += w * f * lam[i];
            }
        }
    }
    b
}

/// Nitsche-consistent right-hand-side terms for nonhomogeneous Dirichlet
/// data `g`: `-int_Gamma g (n . grad v) + gamma_d / h int_Gamma g v`.
/// With g = 0 this vanishes and the plain load reproduces the
/// homogeneous problem.
pub fn assemble_dirichlet_data(
    space: &FeSpace,
    dom: &CutMesh,
    params: &ProblemParams,
    quad: &QuadratureSet,
    g: impl Fn(Point2) -> f64,
) -> Vec<f64> {
    let mut b = vec![0.0; space.n_dofs()];
    for (&t, cut) in &dom.cut_geometry {
        let tri = dom.mesh.triangle_vertices(t);
        let dofs = space.element_dofs(&dom.mesh, t);
        let grads = p1_gradients(&tri);
        let penalty = params.gamma_d / params.boundary_length(dom.mesh.triangle_diameter(t));
        for (x, w, n) in physical_interface_points(cut, &quad.interface) {
            let lam = barycentric_coords(&tri, x);
            let gv = g(x);
            for i in 0..3 {
                b[dofs[i]] += w * gv * (penalty * lam[i] - dot(grads[i], n));
            }
        }
    }
    b
}

/// Residual contribution of the nonlinearity: entries
/// `int_Omega |u_h|^(p-2) u_h phi_i`.
pub fn assemble_f1_residual(
    space: &FeSpace,
    dom: &CutMesh,
    quad: &QuadratureSet,
    u: &FeFunction,
    p: f64,
) -> Vec<f64> {
    let mut b = vec![0.0; space.n_dofs()];
    for &t in dom.active_elements() {
        let tri = dom.mesh.triangle_vertices(t);
        let dofs = space.element_dofs(&dom.mesh, t);
        let coeffs = [
            u.coefficients[dofs[0]],
            u.coefficients[dofs[1]],
            u.coefficients[dofs[2]],
        ];
        for (x, w) in element_volume_points(dom, t, &quad.volume) {
            let lam = barycentric_coords(&tri, x);
            let uh = coeffs[0] * lam[0] + coeffs[1] * lam[1] + coeffs[2] * lam[2];
            let f = power_reaction(uh, p);
            for i in 0..3 {
                b[dofs[i]] += w * f * lam[i];
            }
        }
    }
    b
}

/// Jacobian of the nonlinearity residual: entries
/// `int_Omega (p-1) |u_h|^(p-2) phi_j phi_i`. Symmetric positive
/// semidefinite; for p = 2 this is the mass matrix of the physical domain.
pub fn assemble_f1_jacobian(
    space: &FeSpace,
    dom: &CutMesh,
    quad: &QuadratureSet,
    u: &FeFunction,
    p: f64,
) -> SparseOperator {
    let mut coo = CooBuilder::with_capacity(space.n_dofs(), 9 * dom.active_elements().len());
    for &t in dom.active_elements() {
        let tri = dom.mesh.triangle_vertices(t);
        let dofs = space.element_dofs(&dom.mesh, t);
        let coeffs = [
            u.coefficients[dofs[0]],
            u.coefficients[dofs[1]],
            u.coefficients[dofs[2]],
        ];
        for (x, w) in element_volume_points(dom, t, &quad.volume) {
            let lam = barycentric_coords(&tri, x);
            let uh = coeffs[0] * lam[0] + coeffs[1] * lam[1] + coeffs[2] * lam[2];
            let fp = power_reaction_derivative(uh, p);
            for i in 0..3 {
                for j in 0..3 {
                    coo.push(dofs[i], dofs[j], w * fp * lam[i] * lam[j]);
                }
            }
        }
    }
    coo.build(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_background_mesh_with_cells, CutMesh, Mesh, Rect};
    use approx::assert_relative_eq;

    fn single_inside_triangle() -> (CutMesh, FeSpace) {
        let mesh = Mesh::from_triangles(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let dom = CutMesh::build(mesh, |_| -1.0);
        let space = FeSpace::build(&dom);
        (dom, space)
    }

    fn dense(a: &SparseOperator, n: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        for (i, j, v) in a.triplets() {
            m[i][j] += v;
        }
        m
    }

    #[test]
    fn local_stiffness_of_unit_right_triangle() {
        let (dom, space) = single_inside_triangle();
        let params = ProblemParams::new(4.0, 1.0, 0.1, 1.0).unwrap();
        let a = assemble_ah(&space, &dom, &params, &QuadratureSet::default_degrees());
        let m = dense(&a, 3);
        let expected = [
            [1.0, -0.5, -0.5],
            [-0.5, 0.5, 0.0],
            [-0.5, 0.0, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[i][j], expected[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn load_of_unit_force() {
        let (dom, space) = single_inside_triangle();
        let quad = QuadratureSet::default_degrees();
        let b = assemble_load(&space, &dom, &quad, |_| 1.0);
        for &entry in &b {
            assert_relative_eq!(entry, 1.0 / 6.0, max_relative = 1e-14);
        }
        let zero = assemble_load(&space, &dom, &quad, |_| 0.0);
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gamma_d_enters_linearly() {
        let mesh = build_background_mesh_with_cells(Rect::new([0.0, 0.0], [1.0, 1.0]), 1, 1);
        let dom = CutMesh::build(mesh, |p| p[0] - 0.5);
        let space = FeSpace::build(&dom);
        let quad = QuadratureSet::default_degrees();
        let assemble = |gamma_d: f64| {
            let params = ProblemParams::new(4.0, gamma_d, 0.1, 1.0).unwrap();
            assemble_ah(&space, &dom, &params, &quad)
        };
        let (a1, a2, a3) = (assemble(1.0), assemble(2.0), assemble(3.0));
        let d21 = a2.add(&a1.scaled(-1.0));
        let d32 = a3.add(&a2.scaled(-1.0));
        let diff = d32.add(&d21.scaled(-1.0));
        assert!(diff.max_abs() <= 1e-13 * a1.max_abs());
        // The difference is the scaled boundary mass matrix: nonzero.
        assert!(d21.max_abs() > 0.0);
    }

    #[test]
    fn ghost_penalty_hand_value() {
        // Two triangles of the unit square cut near x = 0.9; the shared
        // diagonal is the only ghost face. Nodal values (0, 1, 0, 1/2) at
        // (0,0), (1,0), (0,1), (1,1) give gradient (1,0) on the lower
        // triangle and a vanishing normal jump contribution from the upper
        // one, so j(u, u) = gamma_1 * h * sqrt(2) * (1/sqrt(2))^2.
        let mesh = build_background_mesh_with_cells(Rect::new([0.0, 0.0], [1.0, 1.0]), 1, 1);
        let dom = CutMesh::build(mesh, |p| p[0] - 0.9);
        assert_eq!(dom.classification.ghost_faces.len(), 1);
        let space = FeSpace::build(&dom);
        let params = ProblemParams::new(4.0, 1.0, 0.1, 1.0).unwrap();
        let j = assemble_ghost_penalty(&space, &dom, &params);

        // dof order follows vertex order (0,0), (1,0), (0,1), (1,1).
        let mut x = vec![0.0; 4];
        x[space.dof_of_vertex(0).unwrap()] = 0.0;
        x[space.dof_of_vertex(1).unwrap()] = 1.0;
        x[space.dof_of_vertex(2).unwrap()] = 0.0;
        x[space.dof_of_vertex(3).unwrap()] = 0.5;
        assert_relative_eq!(
            j.quadratic_form(&x),
            0.1 / std::f64::consts::SQRT_2,
            max_relative = 1e-13
        );
        assert_relative_eq!(j.quadratic_form(&x), 0.070710678, max_relative = 1e-7);
    }

    #[test]
    fn local_length_scale_switch() {
        // Same setup as the hand-value test; with face-local scaling the
        // ghost term uses |F| = sqrt(2) instead of h = 1, giving
        // gamma_1 * sqrt(2) * sqrt(2) * (1/sqrt(2))^2 = 0.1.
        let mesh = build_background_mesh_with_cells(Rect::new([0.0, 0.0], [1.0, 1.0]), 1, 1);
        let dom = CutMesh::build(mesh, |p| p[0] - 0.9);
        let space = FeSpace::build(&dom);
        let mut params = ProblemParams::new(4.0, 1.0, 0.1, 1.0).unwrap();
        params.length_scale = PenaltyLengthScale::Local;
        let j = assemble_ghost_penalty(&space, &dom, &params);
        let mut x = vec![0.0; 4];
        x[space.dof_of_vertex(1).unwrap()] = 1.0;
        x[space.dof_of_vertex(3).unwrap()] = 0.5;
        assert_relative_eq!(j.quadratic_form(&x), 0.1, max_relative = 1e-13);

        // The Nitsche penalty divides by the element diameter instead of
        // the global h, so halving h no longer changes it.
        let a_local = assemble_ah(&space, &dom, &params, &QuadratureSet::default_degrees());
        params.h = 0.5;
        let a_local_half = assemble_ah(&space, &dom, &params, &QuadratureSet::default_degrees());
        let defect = a_local_half.add(&a_local.scaled(-1.0)).max_abs();
        assert!(defect <= 1e-13 * a_local.max_abs());
    }

    #[test]
    fn ghost_penalty_vanishes_on_linears() {
        let mesh = build_background_mesh_with_cells(Rect::new([0.0, 0.0], [1.0, 1.0]), 4, 4);
        let dom = CutMesh::build(mesh, |p| p[0] + 0.3 * p[1] - 0.52);
        let space = FeSpace::build(&dom);
        let params = ProblemParams::new(4.0, 1.0, 0.1, 0.5).unwrap();
        let j = assemble_ghost_penalty(&space, &dom, &params);
        assert!(!dom.classification.ghost_faces.is_empty());
        let linear = space.interpolate_nodal(&dom.mesh, |p| 2.0 - 3.0 * p[0] + 0.7 * p[1]);
        assert!(j.quadratic_form(&linear.coefficients).abs() <= 1e-13);

        let zero_gamma = ProblemParams::new(4.0, 1.0, 0.0, 0.5).unwrap();
        let j0 = assemble_ghost_penalty(&space, &dom, &zero_gamma);
        assert_eq!(j0.max_abs(), 0.0);
    }

    #[test]
    fn reaction_residual_cases() {
        let (dom, space) = single_inside_triangle();
        let quad = QuadratureSet::default_degrees();

        let zero = space.zero_function();
        let r0 = assemble_f1_residual(&space, &dom, &quad, &zero, 4.0);
        assert!(r0.iter().all(|&v| v == 0.0));

        // f1 is odd, so the residual is exactly antisymmetric in u.
        let u = space
            .function_from_coefficients(vec![0.3, -1.7, 0.9])
            .unwrap();
        let minus_u = space
            .function_from_coefficients(u.coefficients.iter().map(|c| -c).collect())
            .unwrap();
        let r = assemble_f1_residual(&space, &dom, &quad, &u, 3.5);
        let rm = assemble_f1_residual(&space, &dom, &quad, &minus_u, 3.5);
        for (a, b) in r.iter().zip(&rm) {
            assert_eq!(*a, -*b);
        }

        // u = 1 with p = 4 reduces to the unit load.
        let one = space
            .function_from_coefficients(vec![1.0, 1.0, 1.0])
            .unwrap();
        let r1 = assemble_f1_residual(&space, &dom, &quad, &one, 4.0);
        for &entry in &r1 {
            assert_relative_eq!(entry, 1.0 / 6.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn reaction_jacobian_cases() {
        let (dom, space) = single_inside_triangle();
        let quad = QuadratureSet::default_degrees();

        let zero = space.zero_function();
        let j0 = assemble_f1_jacobian(&space, &dom, &quad, &zero, 4.0);
        assert_eq!(j0.max_abs(), 0.0);

        // p = 2: the Jacobian is the mass matrix, independent of u.
        let u = space
            .function_from_coefficients(vec![2.0, -0.4, 1.1])
            .unwrap();
        let j = assemble_f1_jacobian(&space, &dom, &quad, &u, 2.0);
        let j_other = assemble_f1_jacobian(&space, &dom, &quad, &zero, 2.0);
        let mass = dense(&j, 3);
        let expect = dense(&j_other, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(mass[i][j], expect[i][j], epsilon = 1e-15);
                let analytic = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert_relative_eq!(mass[i][j], analytic, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn params_are_validated() {
        assert!(ProblemParams::new(4.0, 0.0, 0.1, 1.0).is_err());
        assert!(ProblemParams::new(4.0, 1.0, -0.1, 1.0).is_err());
        assert!(ProblemParams::new(1.5, 1.0, 0.1, 1.0).is_err());
        assert!(ProblemParams::new(4.0, 1.0, 0.1, 0.0).is_err());
        assert!(ProblemParams::new(2.0, 10.0, 0.0, 0.25).is_ok());
    }

    #[test]
    fn power_reaction_values() {
        assert_eq!(power_reaction(0.0, 4.0), 0.0);
        assert_eq!(power_reaction(0.0, 2.0), 0.0);
        assert_eq!(power_reaction(2.0, 4.0), 8.0);
        assert_eq!(power_reaction(-2.0, 4.0), -8.0);
        // p = 2 reduces to the identity, including at u = 0.
        assert_eq!(power_reaction_derivative(0.0, 2.0), 1.0);
        assert_eq!(power_reaction_derivative(0.0, 4.0), 0.0);
        assert_relative_eq!(power_reaction_derivative(2.0, 4.0), 12.0);
    }
}
