//! Convex bodies and the classical primitives built on them: membership,
//! support and radial functions, polar duality, inscribed and circumscribed
//! radii, volumes, metric balls relative to a body, Hausdorff distance.

mod hausdorff;
mod hull;
pub mod planar;
mod volume;

pub use hausdorff::{distance_to_body, hausdorff_distance, hausdorff_point_sets, weak_hausdorff_translation_reduced};
pub use volume::{
    ball_free_boundary, metric_ball_volume, volume, Estimate, MetricBall, UnitBallSamples, UnitSphereSamples,
    VolumeMethod, DEFAULT_MC_SAMPLES,
};

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, Point};
use serde::{Deserialize, Serialize};

/// `{x : <normal, x> <= offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

impl Halfspace {
    #[inline]
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyKind {
    Polytope,
    Ball,
}

#[derive(Clone, Debug)]
pub(crate) enum Shape {
    Polytope {
        vertices: Vec<Point>,
        halfspaces: Vec<Halfspace>,
        facets: Vec<Vec<usize>>,
    },
    Ball {
        center: Point,
        radius: f64,
    },
}

/// A compact convex set with nonempty interior. Immutable once built.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
    chebyshev_center: Point,
    inradius: f64,
    circumradius: f64,
}

/// Bodies thinner than this fraction of their circumradius are rejected.
pub const DEGENERACY_RATIO: f64 = 1e-6;

impl ConvexBody {
    /// Convex hull of `points` with half-space description, Chebyshev
    /// center, inradius, and circumradius about that center.
    pub fn polytope(points: &[Point]) -> Result<Self> {
        let h = hull::hull(points)?;
        let dim = points[0].len();
        let scale = h
            .vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, x| a.max(x.abs()))
            .max(1e-300);
        let (center, inradius) = hull::chebyshev(&h.halfspaces, dim, scale)?;
        let circumradius = h.vertices.iter().map(|v| dist(v, &center)).fold(0.0, f64::max);
        if inradius < DEGENERACY_RATIO * circumradius {
            return Err(Error::DegenerateInput(format!(
                "inradius {inradius:e} is negligible against circumradius {circumradius:e}"
            )));
        }
        Ok(Self {
            dim,
            shape: Shape::Polytope {
                vertices: h.vertices,
                halfspaces: h.halfspaces,
                facets: h.facets,
            },
            chebyshev_center: center,
            inradius,
            circumradius,
        })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        let dim = center.len();
        if dim < 2 {
            return Err(Error::DegenerateInput("ambient dimension must be at least 2".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateInput(format!("invalid ball radius {radius}")));
        }
        Ok(Self {
            dim,
            chebyshev_center: center.clone(),
            inradius: radius,
            circumradius: radius,
            shape: Shape::Ball { center, radius },
        })
    }

    /// Regular `k`-gon inscribed in the circle of radius `radius` about
    /// `center`, with a vertex at angle zero.
    pub fn regular_polygon(k: usize, radius: f64, center: [f64; 2]) -> Result<Self> {
        if k < 3 {
            return Err(Error::DegenerateInput(format!("a polygon needs 3 vertices, got {k}")));
        }
        let pts: Vec<Point> = (0..k)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / k as f64;
                vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Self::polytope(&pts)
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        let pts: Vec<Point> = (0..1usize << d)
            .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] }).collect())
            .collect();
        Self::polytope(&pts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> BodyKind {
        match self.shape {
            Shape::Polytope { .. } => BodyKind::Polytope,
            Shape::Ball { .. } => BodyKind::Ball,
        }
    }

    pub(crate) fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Vertices of a polytope; empty for a ball.
    pub fn vertices(&self) -> &[Point] {
        match &self.shape {
            Shape::Polytope { vertices, .. } => vertices,
            Shape::Ball { .. } => &[],
        }
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        match &self.shape {
            Shape::Polytope { halfspaces, .. } => halfspaces,
            Shape::Ball { .. } => &[],
        }
    }

    pub fn facets(&self) -> &[Vec<usize>] {
        match &self.shape {
            Shape::Polytope { facets, .. } => facets,
            Shape::Ball { .. } => &[],
        }
    }

    /// `(center, radius)` of a ball body.
    pub fn as_ball(&self) -> Option<(&[f64], f64)> {
        match &self.shape {
            Shape::Ball { center, radius } => Some((center, *radius)),
            Shape::Polytope { .. } => None,
        }
    }

    pub fn chebyshev_center(&self) -> &[f64] {
        &self.chebyshev_center
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Largest distance from the Chebyshev center to a point of the body.
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// Signed violation: positive outside, nonpositive inside. For polytopes
    /// the largest half-space excess, for balls `|x - c| - radius`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Polytope { halfspaces, .. } => {
                halfspaces.iter().map(|h| -h.slack(x)).fold(f64::NEG_INFINITY, f64::max)
            }
            Shape::Ball { center, radius } => dist(x, center) - radius,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match &self.shape {
            Shape::Polytope { halfspaces, .. } => halfspaces.iter().all(|h| h.slack(x) >= -tol),
            Shape::Ball { center, radius } => {
                let r = radius + tol;
                crate::linalg::sub(x, center).iter().map(|v| v * v).sum::<f64>() <= r * r
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.shape {
            Shape::Polytope { vertices, .. } => {
                let lo = (0..self.dim)
                    .map(|k| vertices.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min))
                    .collect();
                let hi = (0..self.dim)
                    .map(|k| vertices.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max))
                    .collect();
                (lo, hi)
            }
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// `max_{x in body} <u, x>`.
    pub fn support_function(&self, u: &[f64]) -> f64 {
        match &self.shape {
            Shape::Polytope { vertices, .. } => vertices.iter().map(|v| dot(u, v)).fold(f64::NEG_INFINITY, f64::max),
            Shape::Ball { center, radius } => dot(u, center) + radius * norm(u),
        }
    }

    fn origin_interior(&self) -> bool {
        let tol = 1e-12 * self.circumradius;
        match &self.shape {
            Shape::Polytope { halfspaces, .. } => halfspaces.iter().all(|h| h.offset > tol),
            Shape::Ball { center, radius } => norm(center) < radius - tol,
        }
    }

    /// `max{t >= 0 : t u in body}` for a unit vector `u`; the origin must be
    /// an interior point.
    pub fn radial_function(&self, u: &[f64]) -> Result<f64> {
        if !self.origin_interior() {
            return Err(Error::OriginNotInterior);
        }
        Ok(self.radial_unchecked(u))
    }

    pub(crate) fn radial_unchecked(&self, u: &[f64]) -> f64 {
        match &self.shape {
            Shape::Polytope { halfspaces, .. } => {
                let mut best = f64::INFINITY;
                for h in halfspaces {
                    let den = dot(&h.normal, u);
                    if den > 0.0 {
                        best = best.min(h.offset / den);
                    }
                }
                best
            }
            Shape::Ball { center, radius } => {
                let b = dot(u, center);
                let uu = dot(u, u);
                let c = dot(center, center) - radius * radius;
                (b + (b * b - uu * c).max(0.0).sqrt()) / uu
            }
        }
    }

    /// Polar body `{y : <x, y> <= 1 for all x in body}`.
    pub fn polar_body(&self) -> Result<Self> {
        if !self.origin_interior() {
            return Err(Error::OriginNotInterior);
        }
        match &self.shape {
            Shape::Polytope { halfspaces, .. } => {
                let pts: Vec<Point> = halfspaces
                    .iter()
                    .map(|h| h.normal.iter().map(|x| x / h.offset).collect())
                    .collect();
                Self::polytope(&pts)
            }
            Shape::Ball { center, radius } => {
                if norm(center) > 1e-12 * radius {
                    return Err(Error::Unsupported(
                        "the polar of an off-center ball is an ellipsoid".into(),
                    ));
                }
                Self::ball(vec![0.0; self.dim], 1.0 / radius)
            }
        }
    }

    /// `(r, R)` with `B(0, r) ⊂ body ⊂ B(0, R)`, both tight.
    pub fn radii_about_origin(&self) -> Result<(f64, f64)> {
        if !self.origin_interior() {
            return Err(Error::OriginNotInterior);
        }
        Ok(match &self.shape {
            Shape::Polytope {
                vertices, halfspaces, ..
            } => (
                halfspaces.iter().map(|h| h.offset).fold(f64::INFINITY, f64::min),
                vertices.iter().map(|v| norm(v)).fold(0.0, f64::max),
            ),
            Shape::Ball { center, radius } => (radius - norm(center), radius + norm(center)),
        })
    }

    /// Lipschitz constant `R^2 / r` of the radial function on the sphere.
    pub fn radial_lipschitz_bound(&self) -> Result<f64> {
        let (r, big_r) = self.radii_about_origin()?;
        Ok(big_r * big_r / r)
    }

    /// The body translated by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let mv = |p: &[f64]| crate::linalg::add(p, shift);
        let shape = match &self.shape {
            Shape::Polytope {
                vertices,
                halfspaces,
                facets,
            } => Shape::Polytope {
                vertices: vertices.iter().map(|v| mv(v)).collect(),
                halfspaces: halfspaces
                    .iter()
                    .map(|h| Halfspace {
                        normal: h.normal.clone(),
                        offset: h.offset + dot(&h.normal, shift),
                    })
                    .collect(),
                facets: facets.clone(),
            },
            Shape::Ball { center, radius } => Shape::Ball {
                center: mv(center),
                radius: *radius,
            },
        };
        Self {
            dim: self.dim,
            shape,
            chebyshev_center: mv(&self.chebyshev_center),
            inradius: self.inradius,
            circumradius: self.circumradius,
        }
    }

    /// Translate so the Chebyshev center sits at the origin. Returns the body
    /// and the shift that was subtracted.
    pub fn centered(&self) -> (Self, Point) {
        let c = self.chebyshev_center.clone();
        let neg: Point = c.iter().map(|x| -x).collect();
        (self.translated(&neg), c)
    }

    /// The dilation `lambda * body` about the origin.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "scale factor must be positive, got {lambda}"
            )));
        }
        let sc = |p: &[f64]| crate::linalg::scale(p, lambda);
        let shape = match &self.shape {
            Shape::Polytope {
                vertices,
                halfspaces,
                facets,
            } => Shape::Polytope {
                vertices: vertices.iter().map(|v| sc(v)).collect(),
                halfspaces: halfspaces
                    .iter()
                    .map(|h| Halfspace {
                        normal: h.normal.clone(),
                        offset: h.offset * lambda,
                    })
                    .collect(),
                facets: facets.clone(),
            },
            Shape::Ball { center, radius } => Shape::Ball {
                center: sc(center),
                radius: radius * lambda,
            },
        };
        Ok(Self {
            dim: self.dim,
            shape,
            chebyshev_center: sc(&self.chebyshev_center),
            inradius: self.inradius * lambda,
            circumradius: self.circumradius * lambda,
        })
    }

    /// Exact volume where a closed form or triangulation exists (planar
    /// bodies, spatial polytopes, balls in any dimension).
    pub fn exact_volume(&self) -> Result<f64> {
        match (&self.shape, self.dim) {
            (Shape::Ball { radius, .. }, d) => Ok(crate::linalg::ball_volume(d) * radius.powi(d as i32)),
            (_, 2) => Ok(volume(self, VolumeMethod::Exact2D)?.value),
            (_, 3) => Ok(volume(self, VolumeMethod::Triangulate3D)?.value),
            (_, d) => Err(Error::MethodDimensionMismatch {
                method: "exact volume",
                dim: d,
            }),
        }
    }

    /// `count` deterministic points spread over the boundary. Planar bodies
    /// use equal arclength starting at the first vertex (or angle zero for a
    /// disk); spatial bodies use seeded area-weighted facet sampling.
    pub fn boundary_points(&self, count: usize) -> Vec<Point> {
        match (&self.shape, self.dim) {
            (Shape::Polytope { vertices, .. }, 2) => {
                let k = vertices.len();
                let lens: Vec<f64> = (0..k).map(|i| dist(&vertices[i], &vertices[(i + 1) % k])).collect();
                let total: f64 = lens.iter().sum();
                let mut out = Vec::with_capacity(count);
                let mut edge = 0;
                let mut start = 0.0;
                for j in 0..count {
                    let s = total * j as f64 / count as f64;
                    while edge + 1 < k && start + lens[edge] <= s {
                        start += lens[edge];
                        edge += 1;
                    }
                    let t = ((s - start) / lens[edge]).clamp(0.0, 1.0);
                    let a = &vertices[edge];
                    let b = &vertices[(edge + 1) % k];
                    out.push(vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                }
                out
            }
            (Shape::Ball { center, radius }, _) => UnitSphereSamples::fibonacci(self.dim, count)
                .points
                .iter()
                .map(|u| center.iter().zip(u).map(|(c, x)| c + radius * x).collect())
                .collect(),
            (Shape::Polytope { vertices, facets, .. }, _) => {
                use rand::Rng;
                let mut rng = crate::par::rng_for(0x0B0D_A27, count as u64);
                let tris: Vec<[usize; 3]> = facets
                    .iter()
                    .flat_map(|f| (1..f.len() - 1).map(move |i| [f[0], f[i], f[i + 1]]))
                    .collect();
                let areas: Vec<f64> = tris
                    .iter()
                    .map(|t| {
                        let a = crate::linalg::sub(&vertices[t[1]], &vertices[t[0]]);
                        let b = crate::linalg::sub(&vertices[t[2]], &vertices[t[0]]);
                        0.5 * norm(&crate::linalg::cross3(&a, &b))
                    })
                    .collect();
                let total: f64 = areas.iter().sum();
                (0..count)
                    .map(|_| {
                        let mut pick = rng.random::<f64>() * total;
                        let mut ti = 0;
                        while ti + 1 < tris.len() && pick > areas[ti] {
                            pick -= areas[ti];
                            ti += 1;
                        }
                        let (mut s, mut t): (f64, f64) = (rng.random(), rng.random());
                        if s + t > 1.0 {
                            s = 1.0 - s;
                            t = 1.0 - t;
                        }
                        let [a, b, c] = tris[ti];
                        (0..3)
                            .map(|k| {
                                vertices[a][k]
                                    + s * (vertices[b][k] - vertices[a][k])
                                    + t * (vertices[c][k] - vertices[a][k])
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// Nearest point of the body to `x` when `x` is outside by at most a
    /// few tolerances; exact projection for balls, radial retraction toward
    /// the Chebyshev center for polytopes.
    pub(crate) fn pull_inside(&self, x: &[f64]) -> Point {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let d = dist(x, center);
                if d <= *radius {
                    x.to_vec()
                } else {
                    center.iter().zip(x).map(|(c, xi)| c + (xi - c) * radius / d).collect()
                }
            }
            Shape::Polytope { halfspaces, .. } => {
                let c = &self.chebyshev_center;
                let w = crate::linalg::sub(x, c);
                let mut t: f64 = 1.0;
                for h in halfspaces {
                    let den = dot(&h.normal, &w);
                    if den > 0.0 {
                        t = t.min(h.slack(c) / den);
                    }
                }
                c.iter().zip(&w).map(|(ci, wi)| ci + t * wi).collect()
            }
        }
    }
}
