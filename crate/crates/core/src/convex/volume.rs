//! Volumes of bodies and of metric balls `B(x, ρ) ∩ C`.

use super::{planar, ConvexBody, Shape};
use crate::error::{Error, Result};
use crate::linalg::{ball_volume, cross3, dist, dot, norm, sphere_area, sub, Point};
use crate::par;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
const MC_BATCH: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VolumeMethod {
    Exact2D,
    Triangulate3D,
    MonteCarlo { samples: usize, seed: u64 },
}

/// A value with an error estimate; exact methods report zero error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

fn mismatch(method: &'static str, dim: usize) -> Error {
    Error::MethodDimensionMismatch { method, dim }
}

/// Counts `pred` hits over `samples` draws, split into fixed batches with
/// one RNG stream each so the count does not depend on the worker count.
fn count_hits<F>(samples: usize, seed: u64, pred: F) -> usize
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync + Send,
{
    let batches = samples.div_ceil(MC_BATCH);
    par::map_range(batches, |b| {
        let n = MC_BATCH.min(samples - b * MC_BATCH);
        let mut rng = par::rng_for(seed, b as u64);
        (0..n).filter(|_| pred(&mut rng)).count()
    })
    .into_iter()
    .sum()
}

fn binomial(hits: usize, samples: usize, scale: f64) -> Estimate {
    let p = hits as f64 / samples as f64;
    Estimate {
        value: p * scale,
        error: 3.0 * (p * (1.0 - p) / samples as f64).sqrt() * scale,
    }
}

pub fn volume(body: &ConvexBody, method: VolumeMethod) -> Result<Estimate> {
    let d = body.dim();
    match method {
        VolumeMethod::Exact2D => {
            if d != 2 {
                return Err(mismatch("Exact2D", d));
            }
            Ok(Estimate::exact(match body.shape() {
                Shape::Polytope { vertices, .. } => planar::polygon_area(vertices),
                Shape::Ball { radius, .. } => std::f64::consts::PI * radius * radius,
            }))
        }
        VolumeMethod::Triangulate3D => {
            if d != 3 {
                return Err(mismatch("Triangulate3D", d));
            }
            match body.shape() {
                Shape::Polytope { vertices, facets, .. } => {
                    let c = body.chebyshev_center();
                    let mut total = 0.0;
                    for f in facets {
                        for i in 1..f.len() - 1 {
                            let a = sub(&vertices[f[0]], c);
                            let b = sub(&vertices[f[i]], c);
                            let e = sub(&vertices[f[i + 1]], c);
                            total += dot(&a, &cross3(&b, &e)).abs() / 6.0;
                        }
                    }
                    Ok(Estimate::exact(total))
                }
                Shape::Ball { radius, .. } => Ok(Estimate::exact(ball_volume(3) * radius.powi(3))),
            }
        }
        VolumeMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
            }
            let (lo, hi) = body.bounding_box();
            let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let hits = count_hits(samples, seed, |rng| {
                let x: Point = lo
                    .iter()
                    .zip(&hi)
                    .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                    .collect();
                body.contains(&x, 0.0)
            });
            Ok(binomial(hits, samples, box_vol))
        }
    }
}

/// `B(x, ρ) ∩ C` for a center inside the body.
#[derive(Clone, Debug)]
pub struct MetricBall<'a> {
    pub body: &'a ConvexBody,
    pub center: Point,
    pub radius: f64,
}

impl<'a> MetricBall<'a> {
    pub fn new(body: &'a ConvexBody, center: &[f64], radius: f64) -> Result<Self> {
        if center.len() != body.dim() {
            return Err(Error::DimensionMismatch(center.len(), body.dim()));
        }
        if !body.contains(center, 1e-9 * body.circumradius()) {
            return Err(Error::CenterOutsideBody);
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            body,
            center: center.to_vec(),
            radius,
        })
    }

    pub fn volume(&self, method: VolumeMethod) -> Result<Estimate> {
        metric_ball_volume(self, method)
    }

    /// Measure of `∂B(x, ρ) ∩ int C`, the free boundary of the metric ball.
    pub fn free_boundary(&self, sphere: Option<&UnitSphereSamples>) -> f64 {
        ball_free_boundary(self.body, &self.center, self.radius, sphere)
    }
}

/// Volume of `B(x, ρ) ∩ C`: exact for planar bodies (and for two balls in
/// space), Monte Carlo over `B(x, ρ)` otherwise.
pub fn metric_ball_volume(ball: &MetricBall, method: VolumeMethod) -> Result<Estimate> {
    let body = ball.body;
    let d = body.dim();
    let (x, r) = (&ball.center, ball.radius);
    match method {
        VolumeMethod::Exact2D => {
            if d != 2 {
                return Err(mismatch("Exact2D", d));
            }
            Ok(Estimate::exact(match body.shape() {
                Shape::Polytope { vertices, .. } => planar::polygon_disk_area(vertices, x, r),
                Shape::Ball { center, radius } => planar::disk_disk_area(center, *radius, x, r),
            }))
        }
        VolumeMethod::Triangulate3D => match body.shape() {
            Shape::Ball { center, radius } if d == 3 => {
                Ok(Estimate::exact(lens_volume_3d(dist(center, x), *radius, r)))
            }
            _ => Err(mismatch("Triangulate3D (metric ball)", d)),
        },
        VolumeMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
            }
            let hits = count_hits(samples, seed, |rng| {
                let p = random_in_ball(rng, d);
                let y: Point = x.iter().zip(&p).map(|(a, b)| a + r * b).collect();
                body.contains(&y, 0.0)
            });
            Ok(binomial(hits, samples, ball_volume(d) * r.powi(d as i32)))
        }
    }
}

/// Volume of the intersection of two balls in space with center distance `d`.
fn lens_volume_3d(d: f64, r1: f64, r2: f64) -> f64 {
    use std::f64::consts::PI;
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        return 4.0 / 3.0 * PI * r1.min(r2).powi(3);
    }
    PI * (r1 + r2 - d).powi(2) * (d * d + 2.0 * d * r2 - 3.0 * r2 * r2 + 2.0 * d * r1 + 6.0 * r1 * r2 - 3.0 * r1 * r1)
        / (12.0 * d)
}

fn random_direction<R: Rng>(rng: &mut R, d: usize) -> Point {
    loop {
        let g: Point = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&g);
        if n > 1e-12 {
            return g.iter().map(|v| v / n).collect();
        }
    }
}

fn random_in_ball<R: Rng>(rng: &mut R, d: usize) -> Point {
    let u = random_direction(rng, d);
    let s = rng.random::<f64>().powf(1.0 / d as f64);
    u.iter().map(|v| v * s).collect()
}

/// A fixed cloud of unit vectors. Reusing one cloud across radii makes
/// sampled ball measures monotone in the radius, which keeps bisection
/// well-behaved.
#[derive(Clone, Debug)]
pub struct UnitSphereSamples {
    pub dim: usize,
    pub points: Vec<Point>,
}

impl UnitSphereSamples {
    /// Evenly spread directions: equal angles in the plane, a Fibonacci
    /// lattice in space, seeded Gaussian directions above that.
    pub fn fibonacci(dim: usize, count: usize) -> Self {
        let points = match dim {
            2 => (0..count)
                .map(|j| {
                    let t = std::f64::consts::TAU * j as f64 / count as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            3 => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|j| {
                        let z = 1.0 - (2.0 * j as f64 + 1.0) / count as f64;
                        let s = (1.0 - z * z).sqrt();
                        let t = golden * j as f64;
                        vec![s * t.cos(), s * t.sin(), z]
                    })
                    .collect()
            }
            _ => return Self::random(dim, count, 0x5EED),
        };
        Self { dim, points }
    }

    pub fn random(dim: usize, count: usize, seed: u64) -> Self {
        let mut rng = par::rng_for(seed, 0);
        Self {
            dim,
            points: (0..count).map(|_| random_direction(&mut rng, dim)).collect(),
        }
    }
}

/// A fixed cloud of points uniform in the unit ball.
#[derive(Clone, Debug)]
pub struct UnitBallSamples {
    pub dim: usize,
    pub points: Vec<Point>,
}

impl UnitBallSamples {
    pub fn random(dim: usize, count: usize, seed: u64) -> Self {
        let mut rng = par::rng_for(seed, 1);
        Self {
            dim,
            points: (0..count).map(|_| random_in_ball(&mut rng, dim)).collect(),
        }
    }

    /// `|B(x, ρ) ∩ C|` estimated on this cloud, with its 3σ error.
    pub fn metric_ball_volume(&self, body: &ConvexBody, x: &[f64], rho: f64) -> Estimate {
        let hits = self
            .points
            .iter()
            .filter(|p| {
                let y: Point = x.iter().zip(p.iter()).map(|(a, b)| a + rho * b).collect();
                body.contains(&y, 0.0)
            })
            .count();
        binomial(
            hits,
            self.points.len(),
            ball_volume(self.dim) * rho.powi(self.dim as i32),
        )
    }
}

/// Measure of `∂B(x, ρ) ∩ int C`. Exact for planar bodies; otherwise the
/// fraction of `sphere` directions landing inside the body, times the
/// sphere's area.
pub fn ball_free_boundary(body: &ConvexBody, x: &[f64], rho: f64, sphere: Option<&UnitSphereSamples>) -> f64 {
    let d = body.dim();
    if d == 2 {
        return match body.shape() {
            Shape::Polytope { halfspaces, .. } => planar::circle_length_in_halfplanes(halfspaces, x, rho),
            Shape::Ball { center, radius } => planar::circle_length_in_disk(center, *radius, x, rho),
        };
    }
    let owned;
    let sphere = match sphere {
        Some(s) => s,
        None => {
            owned = UnitSphereSamples::fibonacci(d, 4096);
            &owned
        }
    };
    let inside = sphere
        .points
        .iter()
        .filter(|u| {
            let y: Point = x.iter().zip(u.iter()).map(|(a, b)| a + rho * b).collect();
            body.violation(&y) < 0.0
        })
        .count();
    inside as f64 / sphere.points.len() as f64 * sphere_area(d) * rho.powi(d as i32 - 1)
}
