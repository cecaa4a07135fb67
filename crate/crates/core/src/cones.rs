//! Tangent cones of polytopes, solid angles, and the exact isoperimetric
//! profile of a convex cone.

use crate::convex::{planar, ConvexBody, Estimate, Halfspace, Shape, VolumeMethod};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalize, sphere_area, sub, Point};
use crate::par;
use crate::profile::grid::{Domain, HalfspaceDomain};
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleMethod {
    Exact2D,
    Exact3D,
    MonteCarlo { samples: usize, seed: u64 },
}

impl AngleMethod {
    pub fn exact_for(dim: usize) -> Option<Self> {
        match dim {
            2 => Some(AngleMethod::Exact2D),
            3 => Some(AngleMethod::Exact3D),
            _ => None,
        }
    }
}

impl From<VolumeMethod> for AngleMethod {
    fn from(m: VolumeMethod) -> Self {
        match m {
            VolumeMethod::Exact2D => AngleMethod::Exact2D,
            VolumeMethod::Triangulate3D => AngleMethod::Exact3D,
            VolumeMethod::MonteCarlo { samples, seed } => AngleMethod::MonteCarlo { samples, seed },
        }
    }
}

/// A polyhedral convex cone `{x : <n_i, x> <= <n_i, p>}` with apex `p`.
#[derive(Clone, Debug)]
pub struct Cone {
    pub dim: usize,
    pub apex: Point,
    pub halfspaces: Vec<Halfspace>,
    pub solid_angle: Option<f64>,
}

impl Cone {
    pub fn new(apex: Point, normals: &[Point]) -> Result<Self> {
        let dim = apex.len();
        if normals.is_empty() {
            return Err(Error::InvalidInput("a cone needs at least one constraint".into()));
        }
        let mut halfspaces = Vec::with_capacity(normals.len());
        for n in normals {
            if n.len() != dim {
                return Err(Error::DimensionMismatch(n.len(), dim));
            }
            let u = normalize(n).ok_or_else(|| Error::InvalidInput("zero normal".into()))?;
            let offset = dot(&u, &apex);
            halfspaces.push(Halfspace { normal: u, offset });
        }
        Ok(Self {
            dim,
            apex,
            halfspaces,
            solid_angle: None,
        })
    }

    /// Planar cone with apex at the origin, symmetric about the positive
    /// x-axis, of opening angle `alpha` in `(0, π]`.
    pub fn planar_sector(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= PI) {
            return Err(Error::NonpositiveAngle(alpha));
        }
        let h = alpha / 2.0;
        let normals = if (alpha - PI).abs() < 1e-15 {
            vec![vec![-1.0, 0.0]]
        } else {
            vec![vec![-h.sin(), h.cos()], vec![-h.sin(), -h.cos()]]
        };
        let mut c = Self::new(vec![0.0, 0.0], &normals)?;
        c.solid_angle = Some(alpha);
        Ok(c)
    }

    /// The cone with its solid angle cached.
    pub fn with_angle(mut self, method: AngleMethod) -> Result<Self> {
        self.solid_angle = Some(solid_angle(&self, method)?.value);
        Ok(self)
    }

    pub fn angle(&self) -> Result<f64> {
        match self.solid_angle {
            Some(a) => Ok(a),
            None => match AngleMethod::exact_for(self.dim) {
                Some(m) => Ok(solid_angle(self, m)?.value),
                None => Err(Error::Unsupported("solid angle not computed for this cone".into())),
            },
        }
    }

    /// Isoperimetric profile of this cone.
    pub fn profile(&self, v: f64) -> Result<f64> {
        cone_profile(self.angle()?, self.dim - 1, v)
    }

    pub fn geodesic_ball(&self, v: f64) -> Result<(f64, f64)> {
        geodesic_ball_in_cone(self.angle()?, self.dim - 1, v)
    }

    pub fn domain(&self) -> HalfspaceDomain {
        HalfspaceDomain {
            dim: self.dim,
            halfspaces: self.halfspaces.clone(),
        }
    }
}

impl Domain for Cone {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) >= 0.0)
    }
    fn exit_fraction(&self, a: &[f64], b: &[f64]) -> f64 {
        self.domain().exit_fraction(a, b)
    }
    fn project(&self, x: &[f64]) -> Point {
        self.domain().project(x)
    }
}

/// The tangent cone of the body at boundary point `p`: the constraints
/// active at `p` within `1e-9` times the circumradius.
pub fn tangent_cone(body: &ConvexBody, p: &[f64]) -> Result<Cone> {
    if p.len() != body.dim() {
        return Err(Error::DimensionMismatch(p.len(), body.dim()));
    }
    let tol = 1e-9 * body.circumradius();
    if body.violation(p) > tol {
        return Err(Error::InvalidInput("point lies outside the body".into()));
    }
    match body.shape() {
        Shape::Ball { center, radius } => {
            let d = sub(p, center);
            if (norm(&d) - radius).abs() > tol {
                return Err(Error::InteriorPoint);
            }
            Cone::new(p.to_vec(), &[d])
        }
        Shape::Polytope { halfspaces, .. } => {
            let normals: Vec<Point> = halfspaces
                .iter()
                .filter(|h| h.slack(p).abs() <= tol)
                .map(|h| h.normal.clone())
                .collect();
            if normals.is_empty() {
                return Err(Error::InteriorPoint);
            }
            Cone::new(p.to_vec(), &normals)
        }
    }
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

fn monte_carlo_angle(cone: &Cone, samples: usize, seed: u64) -> Estimate {
    let d = cone.dim;
    let batch = 1 << 16;
    let batches = samples.div_ceil(batch);
    let hits: usize = par::map_range(batches, |b| {
        let mut rng = par::rng_for(seed, b as u64);
        let n = batch.min(samples - b * batch);
        (0..n)
            .filter(|_| {
                let u: Point = (0..d)
                    .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect();
                cone.halfspaces.iter().all(|h| dot(&h.normal, &u) < 0.0)
            })
            .count()
    })
    .into_iter()
    .sum();
    let p = hits as f64 / samples as f64;
    let area = sphere_area(d);
    Estimate {
        value: p * area,
        error: 3.0 * (p * (1.0 - p) / samples as f64).sqrt() * area,
    }
}

/// Measure of the unit directions in the cone's interior.
pub fn solid_angle(cone: &Cone, method: AngleMethod) -> Result<Estimate> {
    let d = cone.dim;
    match method {
        AngleMethod::Exact2D => {
            if d != 2 {
                return Err(Error::MethodDimensionMismatch {
                    method: "Exact2D",
                    dim: d,
                });
            }
            Ok(Estimate::exact(planar::circle_length_in_halfplanes(
                &cone.halfspaces,
                &cone.apex,
                1.0,
            )))
        }
        AngleMethod::Exact3D => {
            if d != 3 {
                return Err(Error::MethodDimensionMismatch {
                    method: "Exact3D",
                    dim: d,
                });
            }
            let normals: Vec<&Point> = cone.halfspaces.iter().map(|h| &h.normal).collect();
            match normals.len() {
                1 => Ok(Estimate::exact(2.0 * PI)),
                2 => Ok(Estimate::exact(2.0 * (PI - angle_between(normals[0], normals[1])))),
                _ => {
                    // The cross-section is the polar of the spherical polygon of
                    // normals, so its area is 2π minus that polygon's perimeter.
                    let sum: Point = (0..3).map(|k| normals.iter().map(|n| n[k]).sum()).collect();
                    let Some(axis) = normalize(&sum) else {
                        return Ok(monte_carlo_angle(cone, 1_000_000, 0xC0E));
                    };
                    let tmp = if axis[0].abs() < 0.9 {
                        vec![1.0, 0.0, 0.0]
                    } else {
                        vec![0.0, 1.0, 0.0]
                    };
                    let e1 = normalize(&crate::linalg::cross3(&axis, &tmp)).unwrap();
                    let e2 = crate::linalg::cross3(&axis, &e1);
                    let mut order: Vec<(f64, &Point)> =
                        normals.iter().map(|n| (dot(n, &e2).atan2(dot(n, &e1)), *n)).collect();
                    order.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let k = order.len();
                    let coplanar = order.iter().any(|(_, n)| dot(n, &axis) < 1e-9);
                    if coplanar {
                        return Ok(monte_carlo_angle(cone, 1_000_000, 0xC0E));
                    }
                    let perimeter: f64 = (0..k).map(|i| angle_between(order[i].1, order[(i + 1) % k].1)).sum();
                    Ok(Estimate::exact(2.0 * PI - perimeter))
                }
            }
        }
        AngleMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
            }
            Ok(monte_carlo_angle(cone, samples, seed))
        }
    }
}

/// `α^{1/(n+1)} (n+1)^{n/(n+1)} v^{n/(n+1)}`: the perimeter of a geodesic
/// ball of volume `v` about the apex of a cone of solid angle `α`.
pub fn cone_profile(alpha: f64, n: usize, v: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::NonpositiveAngle(alpha));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if !(v >= 0.0) {
        return Err(Error::InvalidVolume(format!("volume must be nonnegative, got {v}")));
    }
    let m = n as f64 + 1.0;
    Ok(alpha.powf(1.0 / m) * m.powf(n as f64 / m) * v.powf(n as f64 / m))
}

/// Radius and perimeter of the apex ball of volume `v`: `α ρ^{n+1}/(n+1) = v`.
pub fn geodesic_ball_in_cone(alpha: f64, n: usize, v: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::NonpositiveAngle(alpha));
    }
    if !(v > 0.0) {
        return Err(Error::NonpositiveVolume(v));
    }
    let m = n as f64 + 1.0;
    let rho = (m * v / alpha).powf(1.0 / m);
    Ok((rho, alpha * rho.powi(n as i32)))
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexAngle {
    pub index: usize,
    pub vertex: Point,
    pub alpha: f64,
}

/// The vertex of smallest solid angle, with every vertex's angle.
#[derive(Clone, Debug, Serialize)]
pub struct MinCone {
    pub index: usize,
    pub vertex: Point,
    pub alpha: f64,
    pub n: usize,
    pub angles: Vec<VertexAngle>,
}

impl MinCone {
    /// `I_{C_min}(v)`.
    pub fn profile(&self, v: f64) -> Result<f64> {
        cone_profile(self.alpha, self.n, v)
    }

    pub fn is_min(&self, i: usize) -> bool {
        (self.angles[i].alpha - self.alpha).abs() <= 1e-12 * self.alpha
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Minimises the solid angle over the vertices of a polytope. Ties within
/// a relative `1e-12` go to the lexicographically smallest vertex. The
/// restriction to vertices is checked against 32 seeded facet and edge
/// points, and an `AssumptionViolated` error is raised if one beats it.
pub fn min_solid_angle_vertex(body: &ConvexBody) -> Result<MinCone> {
    let d = body.dim();
    let method = AngleMethod::exact_for(d).ok_or(Error::MethodDimensionMismatch {
        method: "min_solid_angle_vertex",
        dim: d,
    })?;
    let verts = body.vertices();
    if verts.is_empty() {
        return Err(Error::Unsupported("a ball has no vertices".into()));
    }
    let angles = par::map_range(verts.len(), |i| {
        tangent_cone(body, &verts[i])
            .and_then(|c| solid_angle(&c, method))
            .map(|e| VertexAngle {
                index: i,
                vertex: verts[i].clone(),
                alpha: e.value,
            })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for i in 1..angles.len() {
        let (a, b) = (angles[i].alpha, angles[best].alpha);
        let tie = (a - b).abs() <= 1e-12 * b;
        if (!tie && a < b) || (tie && lex_less(&angles[i].vertex, &angles[best].vertex)) {
            best = i;
        }
    }
    let alpha = angles[best].alpha;

    let mut probes = body.boundary_points(16);
    let mut rng = par::rng_for(0xED6E, verts.len() as u64);
    for _ in 0..16 {
        let f = &body.facets()[rng.random_range(0..body.facets().len())];
        let k = rng.random_range(0..f.len());
        let (a, b) = (&verts[f[k]], &verts[f[(k + 1) % f.len()]]);
        let t = 0.05 + 0.9 * rng.random::<f64>();
        probes.push(a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect());
    }
    for q in &probes {
        let a = solid_angle(&tangent_cone(body, q)?, method)?.value;
        if a < alpha * (1.0 - 1e-12) {
            return Err(Error::AssumptionViolated(format!(
                "boundary point {q:?} has solid angle {a} below the vertex minimum {alpha}"
            )));
        }
    }
    Ok(MinCone {
        index: angles[best].index,
        vertex: angles[best].vertex.clone(),
        alpha,
        n: d - 1,
        angles,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SemicontinuityReport {
    pub alpha_limit: f64,
    pub alphas: Vec<f64>,
    pub tail_min: f64,
    pub pass: bool,
}

/// Compares `α(p)` with the angles along a sequence converging to `p`;
/// passes when `α(p)` does not exceed the minimum over the last half of
/// the sequence (plus `1e-9`).
pub fn semicontinuity_probe(body: &ConvexBody, p: &[f64], approach: &[Point]) -> Result<SemicontinuityReport> {
    let method = AngleMethod::exact_for(body.dim()).ok_or(Error::MethodDimensionMismatch {
        method: "semicontinuity_probe",
        dim: body.dim(),
    })?;
    let alpha_limit = solid_angle(&tangent_cone(body, p)?, method)?.value;
    let alphas = approach
        .iter()
        .map(|q| solid_angle(&tangent_cone(body, q)?, method).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let tail = &alphas[alphas.len() / 2..];
    let tail_min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SemicontinuityReport {
        alpha_limit,
        pass: tail.is_empty() || alpha_limit <= tail_min + 1e-9,
        alphas,
        tail_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ConvexBody {
        ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn square_tangent_cones() {
        let s = unit_square();
        let c = tangent_cone(&s, &[0.0, 0.0]).unwrap();
        assert_eq!(c.halfspaces.len(), 2);
        assert!((solid_angle(&c, AngleMethod::Exact2D).unwrap().value - PI / 2.0).abs() < 1e-15);
        let e = tangent_cone(&s, &[0.5, 0.0]).unwrap();
        assert_eq!(e.halfspaces.len(), 1);
        assert!((solid_angle(&e, AngleMethod::Exact2D).unwrap().value - PI).abs() < 1e-15);
        assert!(matches!(tangent_cone(&s, &[0.5, 0.5]), Err(Error::InteriorPoint)));
    }

    #[test]
    fn octant_and_wedges() {
        let cube = ConvexBody::cuboid(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        let c = tangent_cone(&cube, &[0.0, 0.0, 0.0]).unwrap();
        assert!((solid_angle(&c, AngleMethod::Exact3D).unwrap().value - PI / 2.0).abs() < 1e-14);
        let e = tangent_cone(&cube, &[0.5, 0.0, 0.0]).unwrap();
        assert!((solid_angle(&e, AngleMethod::Exact3D).unwrap().value - PI).abs() < 1e-14);
        let f = tangent_cone(&cube, &[0.5, 0.5, 0.0]).unwrap();
        assert!((solid_angle(&f, AngleMethod::Exact3D).unwrap().value - 2.0 * PI).abs() < 1e-14);
        assert!(matches!(
            solid_angle(&c, AngleMethod::Exact2D),
            Err(Error::MethodDimensionMismatch { .. })
        ));
    }

    #[test]
    fn tetrahedron_corner_matches_monte_carlo() {
        let t = ConvexBody::polytope(&[
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        for v in t.vertices() {
            let c = tangent_cone(&t, v).unwrap();
            let exact = solid_angle(&c, AngleMethod::Exact3D).unwrap().value;
            let mc = solid_angle(
                &c,
                AngleMethod::MonteCarlo {
                    samples: 400_000,
                    seed: 2,
                },
            )
            .unwrap();
            assert!((mc.value - exact).abs() <= mc.error, "{} vs {}", mc.value, exact);
        }
    }

    #[test]
    fn cone_profile_examples() {
        assert!((cone_profile(PI, 1, 1.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((cone_profile(PI / 2.0, 1, PI / 4.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(cone_profile(1.0, 1, 0.0).unwrap(), 0.0);
        assert!(matches!(cone_profile(0.0, 1, 1.0), Err(Error::NonpositiveAngle(_))));
    }

    #[test]
    fn geodesic_ball_examples() {
        let (r, p) = geodesic_ball_in_cone(PI / 2.0, 1, PI / 4.0).unwrap();
        assert!((r - 1.0).abs() < 1e-15 && (p - PI / 2.0).abs() < 1e-15);
        let (r, p) = geodesic_ball_in_cone(PI, 1, PI / 2.0).unwrap();
        assert!((r - 1.0).abs() < 1e-15 && (p - PI).abs() < 1e-15);
        assert!(matches!(
            geodesic_ball_in_cone(1.0, 1, 0.0),
            Err(Error::NonpositiveVolume(_))
        ));
    }

    #[test]
    fn min_angle_vertices() {
        let m = min_solid_angle_vertex(&unit_square()).unwrap();
        assert!((m.alpha - PI / 2.0).abs() < 1e-15);
        assert_eq!(m.vertex, vec![0.0, 0.0]);
        assert_eq!((0..4).filter(|&i| m.is_min(i)).count(), 4);
        let t = ConvexBody::polytope(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let m = min_solid_angle_vertex(&t).unwrap();
        assert_eq!(m.vertex, vec![4.0, 0.0]);
        assert!((m.alpha - 0.75f64.atan()).abs() < 1e-14);
        let hex = ConvexBody::regular_polygon(6, 1.0, [0.0, 0.0]).unwrap();
        assert!((min_solid_angle_vertex(&hex).unwrap().alpha - 2.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn semicontinuity_examples() {
        let s = unit_square();
        let approach: Vec<Point> = (1..10).map(|j| vec![0.5f64.powi(j), 0.0]).collect();
        let r = semicontinuity_probe(&s, &[0.0, 0.0], &approach).unwrap();
        assert!(r.pass && r.tail_min == PI);
        let same: Vec<Point> = (0..5).map(|_| vec![0.0, 0.0]).collect();
        assert!(semicontinuity_probe(&s, &[0.0, 0.0], &same).unwrap().pass);
        let facet: Vec<Point> = (1..10).map(|j| vec![0.5 + 0.5f64.powi(j), 0.0]).collect();
        assert!(semicontinuity_probe(&s, &[0.5, 0.0], &facet).unwrap().pass);
    }

    #[test]
    fn sector_angles() {
        for a in [PI / 6.0, PI / 2.0, PI] {
            let c = Cone::planar_sector(a).unwrap();
            assert!((solid_angle(&c, AngleMethod::Exact2D).unwrap().value - a).abs() < 1e-14);
        }
    }
}
