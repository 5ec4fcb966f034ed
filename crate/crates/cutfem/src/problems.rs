//! Built-in manufactured problems on level-set domains.

use crate::geometry::Point2;

pub type ScalarField = Box<dyn Fn(Point2) -> f64 + Send + Sync>;
pub type VectorField = Box<dyn Fn(Point2) -> Point2 + Send + Sync>;

/// A model problem `-laplace(u) + |u|^(p-2) u = f2` with homogeneous or
/// prescribed Dirichlet data on the zero set of `level_set`, together
/// with the exact solution fields used for error measurement.
pub struct ManufacturedProblem {
    pub name: &'static str,
    pub p: f64,
    pub level_set: ScalarField,
    pub u_exact: ScalarField,
    pub grad_u_exact: VectorField,
    pub laplacian_u_exact: ScalarField,
    pub f2: ScalarField,
    /// Boundary data for the Nitsche right-hand side; `None` means the
    /// homogeneous problem u = 0 on the interface.
    pub dirichlet_data: Option<ScalarField>,
}

impl ManufacturedProblem {
    /// Pointwise defect `-laplace(u) + |u|^(p-2) u - f2`; zero for a
    /// consistent problem definition.
    pub fn residual_defect(&self, x: Point2) -> f64 {
        let u = (self.u_exact)(x);
        -(self.laplacian_u_exact)(x) + u.abs().powf(self.p - 2.0) * u - (self.f2)(x)
    }

    /// Paraboloid solution `u = (1 - X^2 - Y^2) / 2` on the unit disc
    /// centered at `center`, with the force
    /// `f2 = 2 + |u|^(p-2) u` that makes it exact for any exponent.
    /// For p = 4 the force reduces to `(1 - X^2 - Y^2)^3 / 8 + 2`.
    pub fn disc(p: f64, center: Point2) -> Self {
        let u = move |x: Point2| {
            let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
            0.5 * (1.0 - dx * dx - dy * dy)
        };
        ManufacturedProblem {
            name: "disc",
            p,
            level_set: Box::new(disc_level_set(center, 1.0)),
            u_exact: Box::new(u),
            grad_u_exact: Box::new(move |x| [-(x[0] - center[0]), -(x[1] - center[1])]),
            laplacian_u_exact: Box::new(|_| -2.0),
            f2: Box::new(move |x| {
                let v = u(x);
                2.0 + v.abs().powf(p - 1.0).copysign(v)
            }),
            dirichlet_data: None,
        }
    }

    /// Zero solution with zero force on the unit disc.
    pub fn disc_zero_force(p: f64, center: Point2) -> Self {
        ManufacturedProblem {
            name: "zero",
            p,
            level_set: Box::new(disc_level_set(center, 1.0)),
            u_exact: Box::new(|_| 0.0),
            grad_u_exact: Box::new(|_| [0.0, 0.0]),
            laplacian_u_exact: Box::new(|_| 0.0),
            f2: Box::new(|_| 0.0),
            dirichlet_data: None,
        }
    }

    /// Affine solution `u = c0 + c1 x + c2 y` on the unit disc, enforced
    /// through nonhomogeneous boundary data. P1 elements represent it
    /// exactly, so every error norm should vanish up to solver tolerance.
    pub fn affine_patch(p: f64, coeffs: [f64; 3], center: Point2) -> Self {
        let u = move |x: Point2| coeffs[0] + coeffs[1] * x[0] + coeffs[2] * x[1];
        ManufacturedProblem {
            name: "affine-patch",
            p,
            level_set: Box::new(disc_level_set(center, 1.0)),
            u_exact: Box::new(u),
            grad_u_exact: Box::new(move |_| [coeffs[1], coeffs[2]]),
            laplacian_u_exact: Box::new(|_| 0.0),
            f2: Box::new(move |x| {
                let v = u(x);
                v.abs().powf(p - 1.0).copysign(v)
            }),
            dirichlet_data: Some(Box::new(u)),
        }
    }
}

/// Level set of a disc: `(x - cx)^2 + (y - cy)^2 - r^2`, negative inside.
pub fn disc_level_set(center: Point2, radius: f64) -> impl Fn(Point2) -> f64 + Clone {
    move |x: Point2| {
        let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
        dx * dx + dy * dy - radius * radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_point_inside(rng: &mut ChaCha8Rng, center: Point2) -> Point2 {
        loop {
            let x = [
                center[0] + rng.random_range(-1.0..1.0),
                center[1] + rng.random_range(-1.0..1.0),
            ];
            if disc_level_set(center, 1.0)(x) < 0.0 {
                return x;
            }
        }
    }

    #[test]
    fn disc_problem_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &(p, center) in &[(4.0, [0.0, 0.0]), (2.0, [0.0, 0.0]), (3.0, [0.07, -0.02])] {
            let problem = ManufacturedProblem::disc(p, center);
            for _ in 0..1000 {
                let x = random_point_inside(&mut rng, center);
                assert!(
                    problem.residual_defect(x).abs() <= 1e-10,
                    "defect at {:?} for p = {}",
                    x,
                    p
                );
            }
        }
    }

    #[test]
    fn disc_p4_force_matches_closed_form() {
        let problem = ManufacturedProblem::disc(4.0, [0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = random_point_inside(&mut rng, [0.0, 0.0]);
            let r2 = x[0] * x[0] + x[1] * x[1];
            let closed_form = 0.125 * (1.0 - r2).powi(3) + 2.0;
            assert!(((problem.f2)(x) - closed_form).abs() <= 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let problem = ManufacturedProblem::disc(4.0, [0.1, -0.3]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eps = 1e-6;
        for _ in 0..100 {
            let x = random_point_inside(&mut rng, [0.1, -0.3]);
            let g = (problem.grad_u_exact)(x);
            let fd_x = ((problem.u_exact)([x[0] + eps, x[1]])
                - (problem.u_exact)([x[0] - eps, x[1]]))
                / (2.0 * eps);
            let fd_y = ((problem.u_exact)([x[0], x[1] + eps])
                - (problem.u_exact)([x[0], x[1] - eps]))
                / (2.0 * eps);
            assert!((g[0] - fd_x).abs() <= 1e-8);
            assert!((g[1] - fd_y).abs() <= 1e-8);
        }
    }

    #[test]
    fn affine_patch_is_consistent() {
        let problem = ManufacturedProblem::affine_patch(4.0, [0.4, -0.8, 1.3], [0.0, 0.0]);
        assert!(problem.dirichlet_data.is_some());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let x = random_point_inside(&mut rng, [0.0, 0.0]);
            assert!(problem.residual_defect(x).abs() <= 1e-12);
        }
    }

    #[test]
    fn unit_disc_level_set_is_exact() {
        let phi = disc_level_set([0.0, 0.0], 1.0);
        assert_eq!(phi([0.5, 0.5]), 0.5 * 0.5 + 0.5 * 0.5 - 1.0);
        assert_eq!(phi([2.0, 0.0]), 3.0);
    }
}
