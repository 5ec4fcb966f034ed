//! Shared test oracles: Monte-Carlo cut areas and exact polynomial
//! moments over triangles. Both are independent of the library's
//! quadrature and cut-geometry code paths.
#![allow(dead_code)] // each test binary uses its own subset

use cutfem::geometry::{signed_area, Point2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Monte-Carlo estimate of the area of `{phi_h < 0}` inside a triangle,
/// where `phi_h` is the linear interpolant of the vertex values. Samples
/// barycentric coordinates directly; affine maps preserve area fractions.
pub fn mc_inside_area(tri: &[Point2; 3], values: &[f64; 3], samples: usize, seed: u64) -> f64 {
    use rand::Rng;
    let mut rng = seeded_rng(seed);
    let area = signed_area(tri[0], tri[1], tri[2]);
    let mut hits = 0usize;
    for _ in 0..samples {
        let mut u: f64 = rng.random();
        let mut v: f64 = rng.random();
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let phi = (1.0 - u - v) * values[0] + u * values[1] + v * values[2];
        if phi < 0.0 {
            hits += 1;
        }
    }
    area * hits as f64 / samples as f64
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_pow(p: &[f64], n: u32) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = poly_mul(&out, p);
    }
    out
}

/// Exact integral of `x^a y^b` over a counterclockwise triangle via
/// Green's theorem: the area integral becomes edge integrals of
/// one-dimensional polynomials, which are integrated coefficientwise.
pub fn triangle_monomial_integral(tri: &[Point2; 3], a: u32, b: u32) -> f64 {
    let mut total = 0.0;
    for k in 0..3 {
        let p = tri[k];
        let q = tri[(k + 1) % 3];
        let dy = q[1] - p[1];
        if dy == 0.0 {
            continue;
        }
        let x_t = [p[0], q[0] - p[0]];
        let y_t = [p[1], q[1] - p[1]];
        let integrand = poly_mul(&poly_pow(&x_t, a + 1), &poly_pow(&y_t, b));
        let edge_integral: f64 = integrand
            .iter()
            .enumerate()
            .map(|(k, &c)| c / (k as f64 + 1.0))
            .sum();
        total += edge_integral * dy / (a as f64 + 1.0);
    }
    total
}

/// Exact integral of a polynomial `sum c_ab x^a y^b` over a triangle; the
/// coefficient list pairs exponents with coefficients.
pub fn triangle_polynomial_integral(tri: &[Point2; 3], terms: &[(u32, u32, f64)]) -> f64 {
    terms
        .iter()
        .map(|&(a, b, c)| c * triangle_monomial_integral(tri, a, b))
        .sum()
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod self_tests {
    use super::*;

    #[test]
    fn moments_on_reference_triangle() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for a in 0..=4u32 {
            for b in 0..=4u32 {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let green = triangle_monomial_integral(&tri, a, b);
                assert!(
                    (green - exact).abs() <= 1e-15 * exact.max(1.0),
                    "a={a} b={b}: {green} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn moments_are_translation_consistent() {
        // Area and centroid of a shifted triangle.
        let tri = [[2.0, 1.0], [3.5, 1.2], [2.3, 2.4]];
        let area = signed_area(tri[0], tri[1], tri[2]);
        assert!((triangle_monomial_integral(&tri, 0, 0) - area).abs() < 1e-14);
        let cx = (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0;
        assert!((triangle_monomial_integral(&tri, 1, 0) - cx * area).abs() < 1e-13);
    }
}
