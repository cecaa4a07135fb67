//! Upper bounds from explicit competitor sets, lower bounds transferred
//! from the ball, and whole sampled curves.

use super::grid::Stencil;
use super::oracle::{AnnealSchedule, OracleProblem, OracleStrategy};
use super::{ProfileCurve, Provenance, Sample};
use crate::convex::{planar, ConvexBody, Shape, UnitSphereSamples};
use crate::error::{Error, Result};
use crate::linalg::{ball_volume, dot, sphere_area, sub, Point};
use crate::par;
use crate::transport::build_map;
use serde::{Deserialize, Serialize};
use std::fmt;

const BISECTION_MAX_ITERS: usize = 200;

/// The competitor set realizing an upper bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Witness {
    /// `B(center, radius) ∩ C`, or its complement in `C`.
    Ball {
        center: Point,
        radius: f64,
        complement: bool,
    },
    /// `{x ∈ C : <normal, x> <= offset}`.
    Chord { normal: Point, offset: f64 },
    /// `{x ∈ C : x[axis] <= offset}` in a box.
    Slab { axis: usize, offset: f64 },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pt = |p: &[f64]| p.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" ");
        match self {
            Witness::Ball {
                center,
                radius,
                complement,
            } => {
                let kind = if *complement { "complement-ball" } else { "ball" };
                write!(f, "{kind}(center={};radius={radius:.12})", pt(center))
            }
            Witness::Chord { normal, offset } => write!(f, "chord(normal={};offset={offset:.12})", pt(normal)),
            Witness::Slab { axis, offset } => write!(f, "slab(axis={axis};offset={offset:.12})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperBoundOptions {
    /// Boundary points used as ball centers, besides the vertices.
    pub boundary_points: usize,
    /// Chord directions added to the edge normals and edge directions.
    pub directions: usize,
    /// Direction count of the radial quadrature used above the plane.
    pub sphere_directions: usize,
}

impl Default for UpperBoundOptions {
    fn default() -> Self {
        Self {
            boundary_points: 64,
            directions: 64,
            sphere_directions: 16384,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpperBound {
    pub value: f64,
    /// Zero in the plane; above it, the disagreement of the winner's
    /// perimeter between two independent direction sets.
    pub uncertainty: f64,
    pub witness: Witness,
}

fn check_volume(v: f64, total: f64) -> Result<()> {
    if v > 0.0 && v < total {
        Ok(())
    } else {
        Err(Error::VolumeOutOfRange { v, total })
    }
}

/// Largest `t` with `x + t u` in the body, for `x` in the body.
fn radial_from(body: &ConvexBody, x: &[f64], u: &[f64]) -> f64 {
    match body.shape() {
        Shape::Polytope { halfspaces, .. } => {
            let mut best = f64::INFINITY;
            for h in halfspaces {
                let a = dot(&h.normal, u);
                if a > 0.0 {
                    best = best.min(h.slack(x).max(0.0) / a);
                }
            }
            best
        }
        Shape::Ball { center, radius } => {
            let w = sub(x, center);
            let b = dot(u, &w);
            let c = (dot(&w, &w) - radius * radius).min(0.0);
            -b + (b * b - c).sqrt()
        }
    }
}

/// Volume and free boundary of `B(x, ρ) ∩ C` by integrating the radial
/// function of `C` seen from `x` over a fixed set of directions.
struct RadialQuadrature {
    dim: usize,
    weight: f64,
    radial: Vec<f64>,
}

impl RadialQuadrature {
    fn new(body: &ConvexBody, x: &[f64], dirs: &UnitSphereSamples) -> Self {
        Self {
            dim: body.dim(),
            weight: sphere_area(body.dim()) / dirs.points.len() as f64,
            radial: dirs.points.iter().map(|u| radial_from(body, x, u)).collect(),
        }
    }

    fn volume(&self, rho: f64) -> f64 {
        let d = self.dim as i32;
        self.weight * self.radial.iter().map(|&r| r.min(rho).powi(d)).sum::<f64>() / self.dim as f64
    }

    fn free_boundary(&self, rho: f64) -> f64 {
        let inside = self.radial.iter().filter(|&&r| r > rho).count();
        self.weight * inside as f64 * rho.powi(self.dim as i32 - 1)
    }
}

/// Smallest `t` in `[lo, hi]` with `f(t) >= target` for nondecreasing `f`,
/// bisected until the bracket stops shrinking.
fn bisect<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn ball_centers(body: &ConvexBody, count: usize) -> Vec<Point> {
    let mut centers: Vec<Point> = body.vertices().to_vec();
    centers.extend(body.boundary_points(count));
    centers
}

/// Unit chord normals: edge normals, edge directions, and `extra` evenly
/// spread directions, each with both signs.
fn chord_directions(body: &ConvexBody, extra: usize) -> Vec<Point> {
    let mut dirs = Vec::new();
    for h in body.halfspaces() {
        dirs.push(h.normal.clone());
        dirs.push(vec![-h.normal[1], h.normal[0]]);
    }
    dirs.extend(UnitSphereSamples::fibonacci(2, extra).points);
    let neg: Vec<Point> = dirs.iter().map(|u| vec![-u[0], -u[1]]).collect();
    dirs.extend(neg);
    dirs
}

fn planar_ball(body: &ConvexBody, x: &[f64], w: f64) -> (f64, f64) {
    let area = |r: f64| match body.shape() {
        Shape::Polytope { vertices, .. } => planar::polygon_disk_area(vertices, x, r),
        Shape::Ball { center, radius } => planar::disk_disk_area(center, *radius, x, r),
    };
    let r = bisect(area, w, 0.0, 2.0 * body.circumradius() * (1.0 + 1e-9));
    let p = match body.shape() {
        Shape::Polytope { halfspaces, .. } => planar::circle_length_in_halfplanes(halfspaces, x, r),
        Shape::Ball { center, radius } => planar::circle_length_in_disk(center, *radius, x, r),
    };
    (r, p)
}

fn planar_chord(body: &ConvexBody, u: &[f64], v: f64) -> (f64, f64) {
    match body.shape() {
        Shape::Polytope {
            vertices, halfspaces, ..
        } => {
            let lo = vertices.iter().map(|p| dot(u, p)).fold(f64::INFINITY, f64::min);
            let hi = vertices.iter().map(|p| dot(u, p)).fold(f64::NEG_INFINITY, f64::max);
            let s = bisect(|s| planar::polygon_halfplane_area(vertices, u, s), v, lo, hi);
            (s, planar::polygon_chord_length(halfspaces, u, s))
        }
        Shape::Ball { center, radius } => {
            let c = dot(u, center);
            let s = bisect(
                |s| planar::disk_halfplane_area(center, *radius, u, s),
                v,
                c - radius,
                c + radius,
            );
            (s, planar::disk_chord_length(center, *radius, u, s))
        }
    }
}

/// `(lo, hi)` when the body is an axis-aligned box.
fn as_box(body: &ConvexBody) -> Option<(Point, Point)> {
    let d = body.dim();
    if body.as_ball().is_some() || body.halfspaces().len() != 2 * d {
        return None;
    }
    let axis_aligned = body
        .halfspaces()
        .iter()
        .all(|h| h.normal.iter().filter(|c| c.abs() > 1e-12).count() == 1);
    axis_aligned.then(|| body.bounding_box())
}

/// Least relative perimeter among the candidate competitors of volume `v`
/// (or whose complement has volume `|C| - v`).
pub fn upper_bound(body: &ConvexBody, v: f64) -> Result<(f64, Witness)> {
    let ub = upper_bound_with(body, v, &UpperBoundOptions::default())?;
    Ok((ub.value, ub.witness))
}

pub fn upper_bound_with(body: &ConvexBody, v: f64, opts: &UpperBoundOptions) -> Result<UpperBound> {
    let total = body.exact_volume()?;
    check_volume(v, total)?;
    let centers = ball_centers(body, opts.boundary_points);
    let targets = [(v, false), (total - v, true)];
    let jobs: Vec<(usize, usize)> = (0..centers.len()).flat_map(|c| (0..2).map(move |t| (c, t))).collect();
    let planar = body.dim() == 2;
    let dirs = (!planar).then(|| UnitSphereSamples::fibonacci(body.dim(), opts.sphere_directions));

    let mut candidates: Vec<(f64, Witness)> = par::map_slice(&jobs, |&(c, t)| {
        let x = &centers[c];
        let (w, complement) = targets[t];
        let (r, p) = match &dirs {
            None => planar_ball(body, x, w),
            Some(dirs) => {
                let q = RadialQuadrature::new(body, x, dirs);
                let r = bisect(|r| q.volume(r), w, 0.0, 2.0 * body.circumradius() * (1.0 + 1e-9));
                (r, q.free_boundary(r))
            }
        };
        (
            p,
            Witness::Ball {
                center: x.clone(),
                radius: r,
                complement,
            },
        )
    });

    if planar {
        let dirs = chord_directions(body, opts.directions);
        candidates.extend(par::map_slice(&dirs, |u| {
            let (s, p) = planar_chord(body, u, v);
            (
                p,
                Witness::Chord {
                    normal: u.clone(),
                    offset: s,
                },
            )
        }));
    } else if let Some((lo, hi)) = as_box(body) {
        for axis in 0..body.dim() {
            let section: f64 = (0..body.dim()).filter(|&k| k != axis).map(|k| hi[k] - lo[k]).product();
            candidates.push((
                section,
                Witness::Slab {
                    axis,
                    offset: lo[axis] + v / section,
                },
            ));
        }
    }

    let mut best = 0;
    for (k, c) in candidates.iter().enumerate() {
        if c.0 < candidates[best].0 {
            best = k;
        }
    }
    let (value, witness) = candidates.swap_remove(best);
    let uncertainty = match (&witness, planar) {
        (Witness::Ball { center, radius, .. }, false) => {
            let other = UnitSphereSamples::random(body.dim(), opts.sphere_directions, 0xD1CE);
            (RadialQuadrature::new(body, center, &other).free_boundary(*radius) - value).abs()
        }
        _ => 0.0,
    };
    Ok(UpperBound {
        value,
        uncertainty,
        witness,
    })
}

/// `I_B(|B|/2) / (|B|/2)^{n/(n+1)}` for a Euclidean ball `B` in dimension
/// `n + 1`: the flat disk through the center against half the volume.
pub fn ball_profile_constant(n: usize) -> f64 {
    let e = n as f64 / (n as f64 + 1.0);
    ball_volume(n) / (ball_volume(n + 1) / 2.0).powf(e)
}

/// Lower bound `M min{v, |C| - v}^{n/(n+1)}` with
/// `M = M_ball / (Lip f Lip f^-1)^n` for the radial map from the body onto
/// its circumscribed ball about the Chebyshev center.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallTransfer {
    pub m: f64,
    pub m_ball: f64,
    pub lip_forward: f64,
    pub lip_inverse: f64,
    pub total_volume: f64,
    pub n: usize,
}

impl BallTransfer {
    pub fn new(body: &ConvexBody, lip_pairs: usize, seed: u64) -> Result<Self> {
        let ball = ConvexBody::ball(body.chebyshev_center().to_vec(), body.circumradius())?;
        let map = build_map(body, &ball)?;
        let (lf, li) = map.empirical_lip(lip_pairs, seed);
        let n = body.dim() - 1;
        let m_ball = ball_profile_constant(n);
        Ok(Self {
            m: m_ball / (lf * li).powi(n as i32),
            m_ball,
            lip_forward: lf,
            lip_inverse: li,
            total_volume: body.exact_volume()?,
            n,
        })
    }

    pub fn value(&self, v: f64) -> Result<f64> {
        check_volume(v, self.total_volume)?;
        let e = self.n as f64 / (self.n as f64 + 1.0);
        Ok(self.m * v.min(self.total_volume - v).powf(e))
    }
}

pub const DEFAULT_LIP_PAIRS: usize = 20_000;

pub fn lower_bound_ball_transfer(body: &ConvexBody, v: f64) -> Result<f64> {
    BallTransfer::new(body, DEFAULT_LIP_PAIRS, 0)?.value(v)
}

/// `(I_half / (|C|/2)^{n/(n+1)}) min{v, |C| - v}^{n/(n+1)}` from a trusted
/// value `I_half` of the profile at half volume.
pub fn lower_bound_half_profile(body: &ConvexBody, v: f64, i_half: f64) -> Result<f64> {
    let total = body.exact_volume()?;
    check_volume(v, total)?;
    let n = (body.dim() - 1) as f64;
    let e = n / (n + 1.0);
    Ok(i_half / (total / 2.0).powf(e) * v.min(total - v).powf(e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Upper,
    Lower,
    Oracle,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "upper" => Some(Method::Upper),
            "lower" => Some(Method::Lower),
            "oracle" => Some(Method::Oracle),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CurveOptions {
    pub resolution: usize,
    pub seed: u64,
    pub lip_pairs: usize,
    pub stencil: Option<Stencil>,
    pub schedule: AnnealSchedule,
    pub upper: UpperBoundOptions,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            resolution: 64,
            seed: 0,
            lip_pairs: DEFAULT_LIP_PAIRS,
            stencil: None,
            schedule: AnnealSchedule::default(),
            upper: UpperBoundOptions::default(),
        }
    }
}

/// Samples the requested methods at every `v`. Each `v` is handled
/// independently and the results are merged in `v` order. Oracle samples
/// carry `h` times the witness perimeter as a heuristic error bar.
pub fn profile_curve(
    body: &ConvexBody,
    body_id: &str,
    v_grid: &[f64],
    methods: &[Method],
    opts: &CurveOptions,
) -> Result<ProfileCurve> {
    let total = body.exact_volume()?;
    for &v in v_grid {
        check_volume(v, total)?;
    }
    let mut curve = ProfileCurve::new(body_id, total, body.dim() - 1)?;
    let transfer = if methods.contains(&Method::Lower) {
        Some(BallTransfer::new(
            body,
            opts.lip_pairs,
            par::derive_seed(opts.seed, 0x11),
        )?)
    } else {
        None
    };
    let oracle = if methods.contains(&Method::Oracle) {
        let stencil = opts.stencil.unwrap_or(Stencil::default_for(body.dim()));
        Some(OracleProblem::for_body(body, opts.resolution, stencil)?)
    } else {
        None
    };
    let per_v = par::map_slice(v_grid, |&v| -> Result<Vec<Sample>> {
        let mut out = Vec::new();
        if methods.contains(&Method::Upper) {
            let ub = upper_bound_with(body, v, &opts.upper)?;
            out.push(Sample {
                v,
                value: ub.value,
                provenance: Provenance::UpperBound,
                uncertainty: ub.uncertainty,
                witness: ub.witness.to_string(),
            });
        }
        if let Some(t) = &transfer {
            out.push(Sample {
                v,
                value: t.value(v)?,
                provenance: Provenance::LowerBound,
                uncertainty: 0.0,
                witness: format!("ball-transfer(M={:.12})", t.m),
            });
        }
        if let Some(problem) = &oracle {
            let strategy = OracleStrategy::Anneal {
                seed: opts.seed,
                schedule: opts.schedule,
            };
            let res = problem.solve_volume(v, strategy)?;
            out.push(Sample {
                v,
                value: res.perimeter,
                provenance: Provenance::Oracle,
                uncertainty: problem.grid.h * res.perimeter,
                witness: format!("grid({} cells)", res.target_cells),
            });
        }
        Ok(out)
    });
    for samples in per_v {
        for s in samples? {
            curve.push(s)?;
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square() -> ConvexBody {
        ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    fn square_profile(v: f64) -> f64 {
        (PI * v).sqrt().min(1.0).min((PI * (1.0 - v)).sqrt())
    }

    #[test]
    fn square_candidates_reproduce_the_profile() {
        let sq = square();
        for k in 1..50 {
            let v = k as f64 / 50.0;
            let (value, _) = upper_bound(&sq, v).unwrap();
            assert!((value - square_profile(v)).abs() < 1e-9, "v={v}: {value}");
        }
        let (_, w) = upper_bound(&sq, 0.1).unwrap();
        match w {
            Witness::Ball { radius, complement, .. } => {
                assert!(!complement);
                assert!((radius - (0.4 / PI).sqrt()).abs() < 1e-12);
            }
            other => panic!("expected a corner ball, got {other}"),
        }
        assert!(matches!(upper_bound(&sq, 0.5).unwrap().1, Witness::Chord { .. }));
    }

    #[test]
    fn volume_range_is_checked() {
        let sq = square();
        assert!(matches!(upper_bound(&sq, 0.0), Err(Error::VolumeOutOfRange { .. })));
        assert!(matches!(upper_bound(&sq, 1.0), Err(Error::VolumeOutOfRange { .. })));
        assert!(upper_bound(&sq, 1.0 - 1e-6).unwrap().0 < 1e-2);
    }

    #[test]
    fn disk_upper_bound_is_symmetric() {
        let disk = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let (half, _) = upper_bound(&disk, PI / 2.0).unwrap();
        assert!((half - 2.0).abs() < 1e-9);
        for k in 1..10 {
            let v = PI * k as f64 / 20.0;
            let a = upper_bound(&disk, v).unwrap().0;
            let b = upper_bound(&disk, PI - v).unwrap().0;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ball_constant() {
        assert!((ball_profile_constant(1) - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-15);
        // n = 2: π / (2π/3)^{2/3}
        assert!((ball_profile_constant(2) - PI / (2.0 * PI / 3.0).powf(2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn transfer_is_exact_on_the_disk() {
        let disk = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let t = BallTransfer::new(&disk, 2000, 3).unwrap();
        assert_eq!((t.lip_forward, t.lip_inverse), (1.0, 1.0));
        assert!((t.value(PI / 2.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bounds_sit_below_upper_bounds() {
        let sq = square();
        let t = BallTransfer::new(&sq, 4000, 1).unwrap();
        for v in [0.0625, 0.125, 0.375, 0.5, 0.875] {
            let lo = t.value(v).unwrap();
            assert!(lo > 0.0 && lo <= upper_bound(&sq, v).unwrap().0);
            assert_eq!(lo, t.value(1.0 - v).unwrap());
        }
        let half = lower_bound_half_profile(&sq, 1.0 / PI, 1.0).unwrap();
        assert!((half - (2.0 / PI).sqrt()).abs() < 1e-12);
        assert_eq!(lower_bound_half_profile(&sq, 0.5, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn cube_slab_beats_balls_at_half_volume() {
        let cube = ConvexBody::cuboid(&[0.0; 3], &[1.0; 3]).unwrap();
        let opts = UpperBoundOptions {
            boundary_points: 8,
            directions: 0,
            sphere_directions: 16384,
        };
        let ub = upper_bound_with(&cube, 0.5, &opts).unwrap();
        assert_eq!(ub.value, 1.0);
        assert!(matches!(ub.witness, Witness::Slab { .. }));
        // Corner octant of a ball: (4π/3 ρ³)/8 = v gives perimeter (4πρ²)/8.
        let small = upper_bound_with(&cube, 0.01, &opts).unwrap();
        let rho = (6.0 * 0.01 / PI).cbrt();
        assert!(
            (small.value / (PI * rho * rho / 2.0) - 1.0).abs() < 0.01,
            "{}",
            small.value
        );
        assert!(small.uncertainty < 0.01);
    }
}
