//! Quadrature on the reference triangle and the unit segment, with
//! mappings onto full elements, cut-element sub-triangulations and
//! interface segments.

use thiserror::Error;

use crate::geometry::{cross, dist, sub, CutGeometry, CutMesh, ElementLabel, Point2};

/// A fixed quadrature rule; `P` is the reference point type.
#[derive(Debug, Clone)]
pub struct QuadRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree the rule integrates exactly.
    pub exact_degree: u32,
}

impl<P> QuadRule<P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Rule on the reference triangle {x >= 0, y >= 0, x + y <= 1};
/// weights sum to 1/2.
pub type TriangleRule = QuadRule<[f64; 2]>;

/// Rule on [0, 1]; weights sum to 1.
pub type SegmentRule = QuadRule<f64>;

/// Highest request degree served by [`triangle_rule`] and [`segment_rule`].
pub const MAX_DEGREE: u32 = 6;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("unsupported quadrature degree {0}, supported range is 1..={MAX_DEGREE}")]
    UnsupportedDegree(u32),
    #[error("cut element requires its cut geometry for volume quadrature")]
    MissingCutGeometry,
}

/// Appends the three permutations of the barycentric orbit (a, b, b).
fn push_orbit3(points: &mut Vec<[f64; 2]>, weights: &mut Vec<f64>, a: f64, b: f64, w: f64) {
    // Barycentric (l0, l1, l2) maps to reference coordinates (l1, l2).
    points.push([b, b]);
    points.push([a, b]);
    points.push([b, a]);
    weights.extend_from_slice(&[w, w, w]);
}

/// Appends all six permutations of the barycentric orbit (a, b, c).
fn push_orbit6(points: &mut Vec<[f64; 2]>, weights: &mut Vec<f64>, a: f64, b: f64, c: f64, w: f64) {
    for (x, y) in [(b, c), (c, b), (a, c), (c, a), (a, b), (b, a)] {
        points.push([x, y]);
        weights.push(w);
    }
}

/// Symmetric positive-weight rule on the reference triangle with
/// `exact_degree >= degree`. Requests for degree 3 are served by the
/// six-point degree-4 rule, which is the smallest symmetric rule with
/// positive weights beyond degree 2.
pub fn triangle_rule(degree: u32) -> Result<TriangleRule, QuadratureError> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let exact_degree = match degree {
        1 => {
            points.push([1.0 / 3.0, 1.0 / 3.0]);
            weights.push(0.5);
            1
        }
        2 => {
            // Edge midpoints.
            push_orbit3(&mut points, &mut weights, 0.0, 0.5, 1.0 / 6.0);
            2
        }
        3 | 4 => {
            push_orbit3(
                &mut points,
                &mut weights,
                0.108_103_018_168_070,
                0.445_948_490_915_965,
                0.223_381_589_678_011 / 2.0,
            );
            push_orbit3(
                &mut points,
                &mut weights,
                0.816_847_572_980_459,
                0.091_576_213_509_771,
                0.109_951_743_655_322 / 2.0,
            );
            4
        }
        5 => {
            points.push([1.0 / 3.0, 1.0 / 3.0]);
            weights.push(0.225 / 2.0);
            push_orbit3(
                &mut points,
                &mut weights,
                0.059_715_871_789_770,
                0.470_142_064_105_115,
                0.132_394_152_788_506 / 2.0,
            );
            push_orbit3(
                &mut points,
                &mut weights,
                0.797_426_985_353_087,
                0.101_286_507_323_456,
                0.125_939_180_544_827 / 2.0,
            );
            5
        }
        6 => {
            push_orbit3(
                &mut points,
                &mut weights,
                0.501_426_509_658_179,
                0.249_286_745_170_910,
                0.116_786_275_726_379 / 2.0,
            );
            push_orbit3(
                &mut points,
                &mut weights,
                0.873_821_971_016_996,
                0.063_089_014_491_502,
                0.050_844_906_370_207 / 2.0,
            );
            push_orbit6(
                &mut points,
                &mut weights,
                0.053_145_049_844_816,
                0.310_352_451_033_785,
                0.636_502_499_121_399,
                0.082_851_075_618_374 / 2.0,
            );
            6
        }
        other => return Err(QuadratureError::UnsupportedDegree(other)),
    };
    Ok(TriangleRule {
        points,
        weights,
        exact_degree,
    })
}

/// Gauss-Legendre rule on [0, 1] with `exact_degree >= degree`.
pub fn segment_rule(degree: u32) -> Result<SegmentRule, QuadratureError> {
    // Nodes and weights on [-1, 1], mapped to [0, 1].
    let (nodes, weights_ref, exact_degree): (&[f64], &[f64], u32) = match degree {
        1 => (&[0.0], &[2.0], 1),
        2 | 3 => {
            const X: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
            (&[-X, X], &[1.0, 1.0], 3)
        }
        4 | 5 => {
            const X: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
            (&[-X, 0.0, X], &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0], 5)
        }
        6 => {
            const X1: f64 = 0.339_981_043_584_856_26;
            const X2: f64 = 0.861_136_311_594_052_6;
            const W1: f64 = 0.652_145_154_862_546_1;
            const W2: f64 = 0.347_854_845_137_453_9;
            (&[-X2, -X1, X1, X2], &[W2, W1, W1, W2], 7)
        }
        other => return Err(QuadratureError::UnsupportedDegree(other)),
    };
    Ok(SegmentRule {
        points: nodes.iter().map(|&x| 0.5 * (x + 1.0)).collect(),
        weights: weights_ref.iter().map(|&w| 0.5 * w).collect(),
        exact_degree,
    })
}

/// Maps a reference-triangle rule onto a physical triangle; the weights
/// then sum to the triangle area.
pub fn map_rule_to_triangle(tri: &[Point2; 3], rule: &TriangleRule) -> Vec<(Point2, f64)> {
    let a = tri[0];
    let ab = sub(tri[1], a);
    let ac = sub(tri[2], a);
    let det = cross(ab, ac);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&[u, v], &w)| {
            (
                [a[0] + u * ab[0] + v * ac[0], a[1] + u * ab[1] + v * ac[1]],
                w * det,
            )
        })
        .collect()
}

/// Quadrature points of one element restricted to the physical domain:
/// the full element if it is inside, its inside sub-triangles if it is
/// cut, nothing if it is outside.
pub fn physical_volume_points(
    element: &[Point2; 3],
    label: ElementLabel,
    cut: Option<&CutGeometry>,
    rule: &TriangleRule,
) -> Result<Vec<(Point2, f64)>, QuadratureError> {
    match label {
        ElementLabel::Outside => Ok(Vec::new()),
        ElementLabel::Inside => Ok(map_rule_to_triangle(element, rule)),
        ElementLabel::Cut => {
            let cut = cut.ok_or(QuadratureError::MissingCutGeometry)?;
            let mut points = Vec::with_capacity(rule.len() * cut.inside_subtriangles.len());
            for sub_tri in &cut.inside_subtriangles {
                points.extend(map_rule_to_triangle(sub_tri, rule));
            }
            Ok(points)
        }
    }
}

/// Quadrature points on the interface segments of a cut element, each
/// carrying the segment's unit normal; the weights sum to the total
/// segment length.
pub fn physical_interface_points(
    cut: &CutGeometry,
    rule: &SegmentRule,
) -> Vec<(Point2, f64, Point2)> {
    let mut points = Vec::with_capacity(rule.len() * cut.interface_segments.len());
    for seg in &cut.interface_segments {
        let [p0, p1] = seg.endpoints;
        let len = dist(p0, p1);
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            points.push((
                [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])],
                w * len,
                seg.normal,
            ));
        }
    }
    points
}

/// Volume quadrature points of element `t` of a cut mesh.
pub fn element_volume_points(
    dom: &CutMesh,
    t: usize,
    rule: &TriangleRule,
) -> Vec<(Point2, f64)> {
    let tri = dom.mesh.triangle_vertices(t);
    physical_volume_points(&tri, dom.label(t), dom.cut(t), rule)
        .expect("cut mesh stores geometry for every cut element")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::intersect_element;
    use approx::assert_relative_eq;

    const UNIT_RIGHT: [Point2; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    /// Integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
    fn reference_monomial(a: u32, b: u32) -> f64 {
        fn fact(n: u32) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn centroid_rule() {
        let rule = triangle_rule(1).unwrap();
        assert_eq!(rule.len(), 1);
        assert_eq!(rule.points[0], [1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(rule.weights[0], 0.5);
        assert_eq!(rule.exact_degree, 1);
    }

    #[test]
    fn midpoint_rule_weights() {
        let rule = triangle_rule(2).unwrap();
        assert_eq!(rule.len(), 3);
        for &w in &rule.weights {
            assert_relative_eq!(w, 1.0 / 6.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn reference_rules_are_exact() {
        for degree in 1..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            assert!(rule.exact_degree >= degree);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert_relative_eq!(rule.total_weight(), 0.5, max_relative = 1e-13);
            for a in 0..=rule.exact_degree {
                for b in 0..=(rule.exact_degree - a) {
                    let quad: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&[x, y], &w)| w * x.powi(a as i32) * y.powi(b as i32))
                        .sum();
                    assert_relative_eq!(
                        quad,
                        reference_monomial(a, b),
                        max_relative = 1e-13,
                        epsilon = 1e-16
                    );
                }
            }
        }
    }

    #[test]
    fn degree_four_integrates_x2y() {
        let rule = triangle_rule(4).unwrap();
        let quad: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&[x, y], &w)| w * x * x * y)
            .sum();
        assert_relative_eq!(quad, 1.0 / 60.0, max_relative = 1e-13);
    }

    #[test]
    fn segment_rules() {
        let mid = segment_rule(1).unwrap();
        assert_eq!(mid.points, vec![0.5]);
        assert_eq!(mid.weights, vec![1.0]);

        let gauss2 = segment_rule(3).unwrap();
        assert_eq!(gauss2.len(), 2);
        let offset = 0.5 / 3.0f64.sqrt();
        assert_relative_eq!(gauss2.points[0], 0.5 - offset, max_relative = 1e-15);
        assert_relative_eq!(gauss2.points[1], 0.5 + offset, max_relative = 1e-15);
        let cubic: f64 = gauss2
            .points
            .iter()
            .zip(&gauss2.weights)
            .map(|(&t, &w)| w * t * t * t)
            .sum();
        assert_relative_eq!(cubic, 0.25, max_relative = 1e-14);

        for degree in 1..=MAX_DEGREE {
            let rule = segment_rule(degree).unwrap();
            assert!(rule.exact_degree >= degree);
            assert_relative_eq!(rule.total_weight(), 1.0, max_relative = 1e-14);
            for k in 0..=rule.exact_degree {
                let quad: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&t, &w)| w * t.powi(k as i32))
                    .sum();
                assert_relative_eq!(quad, 1.0 / (k + 1) as f64, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn unsupported_degrees_rejected() {
        assert!(triangle_rule(0).is_err());
        assert!(triangle_rule(7).is_err());
        assert!(segment_rule(0).is_err());
        assert!(segment_rule(9).is_err());
    }

    #[test]
    fn inside_element_maps_whole_triangle() {
        let rule = triangle_rule(1).unwrap();
        let pts = physical_volume_points(&UNIT_RIGHT, ElementLabel::Inside, None, &rule).unwrap();
        assert_eq!(pts.len(), 1);
        assert_relative_eq!(pts[0].0[0], 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(pts[0].0[1], 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(pts[0].1, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn outside_element_is_empty() {
        let rule = triangle_rule(4).unwrap();
        let pts = physical_volume_points(&UNIT_RIGHT, ElementLabel::Outside, None, &rule).unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn cut_element_weights_sum_to_inside_area() {
        let geom = intersect_element(0, &UNIT_RIGHT, &[-0.5, 0.5, -0.5]).unwrap();
        for degree in 1..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            let pts =
                physical_volume_points(&UNIT_RIGHT, ElementLabel::Cut, Some(&geom), &rule).unwrap();
            let total: f64 = pts.iter().map(|&(_, w)| w).sum();
            assert_relative_eq!(total, 0.375, max_relative = 1e-13);
        }
    }

    #[test]
    fn cut_element_requires_geometry() {
        let rule = triangle_rule(2).unwrap();
        assert!(matches!(
            physical_volume_points(&UNIT_RIGHT, ElementLabel::Cut, None, &rule),
            Err(QuadratureError::MissingCutGeometry)
        ));
    }

    #[test]
    fn interface_points_carry_normal_and_length() {
        let geom = intersect_element(0, &UNIT_RIGHT, &[-0.5, 0.5, -0.5]).unwrap();
        let rule = segment_rule(1).unwrap();
        let pts = physical_interface_points(&geom, &rule);
        assert_eq!(pts.len(), 1);
        let (x, w, n) = pts[0];
        assert_relative_eq!(x[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(x[1], 0.25, max_relative = 1e-14);
        assert_relative_eq!(w, 0.5, max_relative = 1e-14);
        assert_relative_eq!(n[0], 1.0, max_relative = 1e-14);

        for degree in 1..=MAX_DEGREE {
            let rule = segment_rule(degree).unwrap();
            let total: f64 = physical_interface_points(&geom, &rule)
                .iter()
                .map(|&(_, w, _)| w)
                .sum();
            assert_relative_eq!(total, 0.5, max_relative = 1e-13);
        }
    }
}
