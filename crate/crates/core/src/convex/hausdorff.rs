//! Hausdorff distances between bodies and between finite point sets.

use super::{ConvexBody, Shape, UnitSphereSamples};
use crate::error::{Error, Result};
use crate::linalg::{cross3, dist, dot, normalize, sub, Point};

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let l2 = dot(&ab, &ab);
    let t = if l2 > 0.0 {
        (dot(&sub(p, a), &ab) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q: Point = a.iter().zip(&ab).map(|(x, y)| x + t * y).collect();
    dist(p, &q)
}

fn triangle_distance(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let n = cross3(&sub(b, a), &sub(c, a));
    if let Some(n) = normalize(&n) {
        let h = dot(&sub(p, a), &n);
        let q: Point = p.iter().zip(&n).map(|(x, y)| x - h * y).collect();
        // Barycentric sign test for the projection.
        let inside = [(a, b), (b, c), (c, a)]
            .iter()
            .all(|(u, v)| dot(&cross3(&sub(v, u), &sub(&q, u)), &n) >= 0.0);
        if inside {
            return h.abs();
        }
    }
    segment_distance(p, a, b)
        .min(segment_distance(p, b, c))
        .min(segment_distance(p, c, a))
}

/// Euclidean distance from `x` to the body (zero inside).
pub fn distance_to_body(body: &ConvexBody, x: &[f64]) -> f64 {
    match body.shape() {
        Shape::Ball { center, radius } => (dist(x, center) - radius).max(0.0),
        Shape::Polytope { vertices, facets, .. } => {
            if body.contains(x, 0.0) {
                return 0.0;
            }
            match body.dim() {
                2 => facets
                    .iter()
                    .map(|f| segment_distance(x, &vertices[f[0]], &vertices[f[1]]))
                    .fold(f64::INFINITY, f64::min),
                _ => facets
                    .iter()
                    .flat_map(|f| (1..f.len() - 1).map(move |i| (f[0], f[i], f[i + 1])))
                    .map(|(a, b, c)| triangle_distance(x, &vertices[a], &vertices[b], &vertices[c]))
                    .fold(f64::INFINITY, f64::min),
            }
        }
    }
}

/// Hausdorff distance between two bodies. Polytope pairs are exact via
/// vertex projections; pairs of balls are exact in closed form; a ball
/// against a polytope compares support functions over 4096 sampled
/// directions plus facet normals and the directions joining the ball
/// center to the vertices, which is exact in the plane.
pub fn hausdorff_distance(a: &ConvexBody, b: &ConvexBody) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    match (a.shape(), b.shape()) {
        (Shape::Polytope { vertices: va, .. }, Shape::Polytope { vertices: vb, .. }) => {
            let ab = va.iter().map(|v| distance_to_body(b, v)).fold(0.0, f64::max);
            let ba = vb.iter().map(|v| distance_to_body(a, v)).fold(0.0, f64::max);
            Ok(ab.max(ba))
        }
        (Shape::Ball { center: c1, radius: r1 }, Shape::Ball { center: c2, radius: r2 }) => {
            Ok(dist(c1, c2) + (r1 - r2).abs())
        }
        (
            Shape::Ball { center, .. },
            Shape::Polytope {
                vertices, halfspaces, ..
            },
        )
        | (
            Shape::Polytope {
                vertices, halfspaces, ..
            },
            Shape::Ball { center, .. },
        ) => {
            let mut dirs = UnitSphereSamples::fibonacci(a.dim(), 4096).points;
            dirs.extend(halfspaces.iter().map(|h| h.normal.clone()));
            for v in vertices {
                if let Some(u) = normalize(&sub(v, center)) {
                    dirs.push(u.iter().map(|x| -x).collect());
                    dirs.push(u);
                }
            }
            Ok(dirs
                .iter()
                .map(|u| (a.support_function(u) - b.support_function(u)).abs())
                .fold(0.0, f64::max))
        }
    }
}

/// Hausdorff distance after moving both Chebyshev centers to the origin.
/// Only translations are factored out; rotations are not searched.
pub fn weak_hausdorff_translation_reduced(a: &ConvexBody, b: &ConvexBody) -> Result<f64> {
    hausdorff_distance(&a.centered().0, &b.centered().0)
}

/// Hausdorff distance between finite point sets; infinite if exactly one
/// is empty, zero if both are.
pub fn hausdorff_point_sets(a: &[Point], b: &[Point]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let one_sided = |p: &[Point], q: &[Point]| {
        let per: Vec<f64> = crate::par::map_slice(p, |x| {
            q.iter()
                .map(|y| x.iter().zip(y).map(|(s, t)| (s - t) * (s - t)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        });
        per.into_iter().fold(0.0, f64::max).sqrt()
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn nested_squares() {
        let a = ConvexBody::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let b = ConvexBody::cuboid(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
        assert!((hausdorff_distance(&a, &b).unwrap() - SQRT_2).abs() < 1e-14);
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn polygon_against_disk_is_sagitta() {
        let disk = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        for k in [3usize, 4, 7, 64] {
            let p = ConvexBody::regular_polygon(k, 1.0, [0.0, 0.0]).unwrap();
            let want = 1.0 - (PI / k as f64).cos();
            assert!((hausdorff_distance(&p, &disk).unwrap() - want).abs() < 1e-9, "k={k}");
            assert!((hausdorff_distance(&disk, &p).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let b = ConvexBody::ball(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            hausdorff_distance(&a, &b),
            Err(Error::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn spatial_distance_to_cube() {
        let c = ConvexBody::cuboid(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((distance_to_body(&c, &[2.0, 2.0, 2.0]) - 3f64.sqrt()).abs() < 1e-12);
        assert!((distance_to_body(&c, &[0.5, 0.5, 3.0]) - 2.0).abs() < 1e-12);
        assert!((distance_to_body(&c, &[0.5, 2.0, 2.0]) - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn translation_reduced_ignores_shift() {
        let a = ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let b = a.translated(&[5.0, -3.0]);
        assert!(weak_hausdorff_translation_reduced(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn point_sets() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0, 0.0]];
        assert_eq!(hausdorff_point_sets(&a, &b), 1.0);
        assert_eq!(hausdorff_point_sets(&[], &[]), 0.0);
    }
}
