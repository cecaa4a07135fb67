//! Density of a region inside metric balls: the function
//! `h(x, R) = min{|E ∩ B_C(x,R)|, |B_C(x,R) \ E|} / |B_C(x,R)|`, the
//! threshold below which it must vanish at half radius for isoperimetric
//! regions, the resulting lower perimeter density, and connectedness.

use crate::convex::{metric_ball_volume, ConvexBody, MetricBall, VolumeMethod};
use crate::error::{Error, Result};
use crate::linalg::{ball_volume, dist, Point};
use crate::par;
use crate::profile::bounds::{ball_profile_constant, upper_bound};
use crate::profile::grid::{CutGraph, Grid, GridRegion, Stencil};
use crate::transport::analytic_lip_bound;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// `|B_C(x, r)|`: exact in the plane, the in-body cell volume otherwise.
fn ball_measure(body: &ConvexBody, grid: &Grid, x: &[f64], r: f64) -> Result<f64> {
    if body.dim() == 2 {
        let ball = MetricBall::new(body, x, r)?;
        return Ok(metric_ball_volume(&ball, VolumeMethod::Exact2D)?.value);
    }
    let (inside, _) = cells_within(grid, x, r);
    Ok(inside.len() as f64 * grid.cell_volume())
}

/// In-body cells with centers within `r` of `x`, and the squared center
/// distances alongside.
fn cells_within(grid: &Grid, x: &[f64], r: f64) -> (Vec<usize>, Vec<f64>) {
    let d = grid.dim;
    let lo: Vec<i64> = (0..d)
        .map(|k| (((x[k] - r - grid.origin[k]) / grid.h).floor() as i64).max(0))
        .collect();
    let hi: Vec<i64> = (0..d)
        .map(|k| (((x[k] + r - grid.origin[k]) / grid.h).ceil() as i64).min(grid.shape[k] as i64 - 1))
        .collect();
    let mut cells = Vec::new();
    let mut d2 = Vec::new();
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return (cells, d2);
    }
    let mut c = lo.clone();
    loop {
        if let Some(i) = grid.index(&c) {
            if grid.is_inside(i) {
                let p = grid.center_of_coords(&c);
                let s: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if s <= r * r {
                    cells.push(i);
                    d2.push(s);
                }
            }
        }
        let mut k = 0;
        loop {
            if k == d {
                return (cells, d2);
            }
            c[k] += 1;
            if c[k] <= hi[k] {
                break;
            }
            c[k] = lo[k];
            k += 1;
        }
    }
}

fn check_center(body: &ConvexBody, x: &[f64]) -> Result<()> {
    if x.len() != body.dim() {
        return Err(Error::DimensionMismatch(x.len(), body.dim()));
    }
    if !body.contains(x, 1e-9 * body.circumradius()) {
        return Err(Error::CenterOutsideBody);
    }
    Ok(())
}

/// Occupied and free cell counts in `B(x, r)`.
fn split_counts(grid: &Grid, occ: &[bool], x: &[f64], r: f64) -> (usize, usize) {
    let (cells, _) = cells_within(grid, x, r);
    let inside = cells.iter().filter(|&&i| occ[i]).count();
    (inside, cells.len() - inside)
}

/// `h(x, r)` for a grid region: the smaller of the occupied and free cell
/// volumes in the ball, over the ball's volume, clamped to `[0, 1/2]`.
pub fn h_value(region: &GridRegion, body: &ConvexBody, x: &[f64], r: f64) -> Result<f64> {
    check_center(body, x)?;
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    let occ = region.occupancy();
    h_from(region.grid.as_ref(), body, &occ, x, r)
}

fn h_from(grid: &Grid, body: &ConvexBody, occ: &[bool], x: &[f64], r: f64) -> Result<f64> {
    let (a, b) = split_counts(grid, occ, x, r);
    let vol = ball_measure(body, grid, x, r)?;
    if vol <= 0.0 {
        return Ok(0.0);
    }
    Ok((a.min(b) as f64 * grid.cell_volume() / vol).clamp(0.0, 0.5))
}

/// `f_1(s) = s^{-n/(n+1)} ((1 - s)^{n/(n+1)} - 1)`, strictly decreasing on
/// `(0, 1)` from 0 to -1.
pub fn f1(n: usize, s: f64) -> f64 {
    let e = n as f64 / (n as f64 + 1.0);
    s.powf(-e) * ((1.0 - s).powf(e) - 1.0)
}

/// The point of `(0, 1)` where `f_1` crosses `-1/2`, bisected until the
/// bracket stops shrinking.
pub fn c2_constant(n: usize) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f1(n, mid) >= -0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// The six terms bounding `ε` for a region of volume `v`.
pub fn epsilon_terms(n: usize, v: f64, total_volume: f64, i_v: f64, ell2: f64) -> Result<[f64; 6]> {
    if !(v > 0.0 && v < total_volume) {
        return Err(Error::InvalidVolume(format!("v = {v} outside (0, {total_volume})")));
    }
    if !(i_v > 0.0 && ell2 > 0.0) {
        return Err(Error::InvalidInput(
            "profile value and Ahlfors constant must be positive".into(),
        ));
    }
    let c2 = c2_constant(n);
    let w = total_volume - v;
    let top = i_v.powi(n as i32 + 1) / (ell2 * 8f64.powi(n as i32 + 1));
    Ok([
        v / ell2,
        w / ell2,
        c2 * v,
        c2 * w,
        top / v.powi(n as i32),
        top / w.powi(n as i32),
    ])
}

/// `0.99` times the smallest of [`epsilon_terms`].
pub fn epsilon_threshold(n: usize, v: f64, total_volume: f64, i_v: f64, ell2: f64) -> Result<f64> {
    let t = epsilon_terms(n, v, total_volume, i_v, ell2)?;
    Ok(0.99 * t.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Upper Ahlfors constant: the volume of the unit ball in dimension `n + 1`.
pub fn ell2(n: usize) -> f64 {
    ball_volume(n + 1)
}

/// Lower Ahlfors constant estimated as the least `|B_C(x, r0)| / r0^{n+1}`
/// over the vertices and 256 boundary points, with `r0 = min(1, inradius)`.
pub fn ell1(body: &ConvexBody, seed: u64) -> Result<f64> {
    let r0 = body.inradius().min(1.0);
    let mut centers = body.vertices().to_vec();
    centers.extend(body.boundary_points(256));
    let d = body.dim();
    let method = if d == 2 {
        VolumeMethod::Exact2D
    } else {
        VolumeMethod::MonteCarlo { samples: 1 << 16, seed }
    };
    let vols = par::map_slice(&centers, |x| -> Result<f64> {
        let ball = MetricBall::new(body, x, r0)?;
        Ok(metric_ball_volume(&ball, method)?.value)
    });
    let mut best = f64::INFINITY;
    for v in vols {
        best = best.min(v?);
    }
    Ok(best / r0.powi(d as i32))
}

/// How "`h(x, R/2) = 0`" is decided on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum GridTol {
    /// The side that was in the minority at radius `R` has no cell
    /// centered in `B(x, R/2 - h√d/2)`: cells the half-radius sphere cuts
    /// through are left out.
    ExcludeBoundaryLayer,
    /// `h(x, R/2)` at most the volume of the cells cut by the half-radius
    /// sphere over the ball volume.
    BoundaryLayer,
    Absolute(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Vacuous,
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Probe {
    pub x: Point,
    pub r: f64,
    pub h_r: f64,
    pub h_half_r: f64,
    /// Minority-side cells left at half radius under the chosen rule.
    pub residual: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityProbe {
    pub x: Point,
    pub r: f64,
    pub perimeter_in_ball: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub body_id: String,
    pub region_id: String,
    pub region_volume: f64,
    pub profile_value: f64,
    pub epsilon: f64,
    pub ell1: f64,
    pub ell2: f64,
    pub grid_tol: GridTol,
    pub probes: Vec<Probe>,
    pub lower_density: Vec<DensityProbe>,
    pub vacuous: usize,
    pub pass: usize,
    pub fail: usize,
    pub connected: (bool, bool),
}

impl DensityReport {
    pub fn ok(&self) -> bool {
        self.fail == 0 && self.lower_density.iter().all(|p| p.verdict != Verdict::Fail)
    }
}

/// Largest probe radius: `min(1, circumradius)`.
fn max_radius(body: &ConvexBody) -> f64 {
    body.circumradius().min(1.0)
}

fn random_point<R: Rng>(body: &ConvexBody, rng: &mut R) -> Point {
    let (lo, hi) = body.bounding_box();
    loop {
        let x: Point = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| a + (b - a) * rng.random::<f64>())
            .collect();
        if body.contains(&x, 0.0) {
            return x;
        }
    }
}

/// Probe centers: even indices uniform in the body, odd ones jittered
/// within a cell of the region's discrete boundary.
fn probe_center<R: Rng>(body: &ConvexBody, grid: &Grid, boundary: &[usize], k: usize, rng: &mut R) -> Point {
    if k % 2 == 0 || boundary.is_empty() {
        return random_point(body, rng);
    }
    for _ in 0..64 {
        let c = grid.cell_center(boundary[rng.random_range(0..boundary.len())]);
        let x: Point = c.iter().map(|v| v + grid.h * (rng.random::<f64>() - 0.5)).collect();
        if body.contains(&x, 0.0) {
            return x;
        }
    }
    random_point(body, rng)
}

/// For each probe with `h(x, R) <= ε`, checks that the minority side is
/// gone from `B(x, R/2)`; probes with `h(x, R) > ε` are vacuous. Radii are
/// drawn in `(4h, min(1, circumradius)]`.
pub fn dichotomy_check(
    region: &GridRegion,
    body: &ConvexBody,
    epsilon: f64,
    probe_count: usize,
    seed: u64,
    tol: GridTol,
) -> Result<Vec<Probe>> {
    let grid = region.grid.as_ref();
    let occ = region.occupancy();
    let mut boundary = region.inner_boundary_cells();
    boundary.extend(region.complement().inner_boundary_cells());
    boundary.sort_unstable();
    let r_lo = 4.0 * grid.h;
    let r_hi = max_radius(body);
    if r_hi <= r_lo {
        return Err(Error::InvalidInput(format!(
            "probe radii need min(1, circumradius) = {r_hi} above 4h = {r_lo}"
        )));
    }
    let layer = grid.h * (grid.dim as f64).sqrt() / 2.0;
    let probes = par::map_range(probe_count, |k| -> Result<Probe> {
        let mut rng = par::rng_for(seed, k as u64);
        let x = probe_center(body, grid, &boundary, k, &mut rng);
        let r = r_lo + (r_hi - r_lo) * (1.0 - rng.random::<f64>());
        let (a, b) = split_counts(grid, &occ, &x, r);
        let vol_r = ball_measure(body, grid, &x, r)?;
        let h_r = (a.min(b) as f64 * grid.cell_volume() / vol_r).clamp(0.0, 0.5);
        let half = r / 2.0;
        let vol_half = ball_measure(body, grid, &x, half)?;
        let (ha, hb) = split_counts(grid, &occ, &x, half);
        let h_half_r = (ha.min(hb) as f64 * grid.cell_volume() / vol_half).clamp(0.0, 0.5);
        let (residual, verdict) = if h_r > epsilon {
            (0.0, Verdict::Vacuous)
        } else {
            match tol {
                GridTol::ExcludeBoundaryLayer => {
                    let (ca, cb) = split_counts(grid, &occ, &x, (half - layer).max(0.0));
                    let left = if a <= b { ca } else { cb };
                    let residual = left as f64 * grid.cell_volume() / vol_half;
                    (residual, if left == 0 { Verdict::Pass } else { Verdict::Fail })
                }
                GridTol::BoundaryLayer => {
                    let (cells, d2) = cells_within(grid, &x, half + layer);
                    let cut = cells.iter().zip(&d2).filter(|(_, &s)| s.sqrt() > half - layer).count();
                    let allow = cut as f64 * grid.cell_volume() / vol_half;
                    (
                        h_half_r,
                        if h_half_r <= allow {
                            Verdict::Pass
                        } else {
                            Verdict::Fail
                        },
                    )
                }
                GridTol::Absolute(t) => (h_half_r, if h_half_r <= t { Verdict::Pass } else { Verdict::Fail }),
            }
        };
        Ok(Probe {
            x,
            r,
            h_r,
            h_half_r,
            residual,
            verdict,
        })
    });
    probes.into_iter().collect()
}

/// Lower bound on the inradius of `B_C(x, r)` from the cone over the
/// Chebyshev ball with apex `x`, and the distance from `x` to that inball's
/// center.
fn metric_ball_inradius(body: &ConvexBody, x: &[f64], r: f64) -> (f64, f64) {
    let c = body.chebyshev_center();
    let rho = body.inradius();
    let d = dist(x, c);
    if d <= 1e-15 {
        let s = rho.min(r);
        return (s / 2.0, 0.0);
    }
    let t = (r / (1.0 + rho / d)).min(d);
    (rho * t / d, t)
}

/// Discrete perimeter inside `B(x, r)` against `M r^n` at free-boundary
/// probes. `M = M_rel (ℓ₁ ε)^{n/(n+1)}`, where `M_rel` is the ball's profile
/// constant divided by the squared dilatation ceiling of a radial map from
/// `B_C(x, r)` onto a ball, a valid but far from sharp relative
/// isoperimetric constant.
pub fn lower_density_check(
    region: &GridRegion,
    body: &ConvexBody,
    epsilon: f64,
    ell1: f64,
    probe_count: usize,
    seed: u64,
) -> Result<Vec<DensityProbe>> {
    let grid = region.grid.as_ref();
    let graph = CutGraph::build(grid, body, Stencil::default_for(body.dim()))?;
    let occ = graph.local_occupancy(region);
    let boundary = region.free_boundary_cells();
    let n = body.dim() - 1;
    let e = n as f64 / (n as f64 + 1.0);
    let r_lo = 4.0 * grid.h;
    let r_hi = max_radius(body);
    let centers: Vec<Point> = graph.cells.iter().map(|&i| grid.cell_center(i)).collect();
    let probes = par::map_range(probe_count, |k| -> Result<DensityProbe> {
        let mut rng = par::rng_for(seed, k as u64);
        if boundary.is_empty() || r_hi <= r_lo {
            return Ok(DensityProbe {
                x: Vec::new(),
                r: 0.0,
                perimeter_in_ball: 0.0,
                bound: 0.0,
                verdict: Verdict::Skipped,
            });
        }
        let x = grid.cell_center(boundary[rng.random_range(0..boundary.len())]);
        let r = r_lo + (r_hi - r_lo) * (1.0 - rng.random::<f64>());
        let mut p = 0.0;
        for &(a, b, w) in &graph.edges {
            if occ[a as usize] != occ[b as usize] {
                let mid: Point = centers[a as usize]
                    .iter()
                    .zip(&centers[b as usize])
                    .map(|(u, v)| 0.5 * (u + v))
                    .collect();
                if dist(&mid, &x) <= r {
                    p += w;
                }
            }
        }
        for (a, &u) in graph.unary.iter().enumerate() {
            if occ[a] && u > 0.0 && dist(&centers[a], &x) <= r {
                p += u;
            }
        }
        let (r_in, t) = metric_ball_inradius(body, &x, r);
        let lip = analytic_lip_bound(r_in / 2.0, t + r)?;
        let m_rel = ball_profile_constant(n) / lip.powi(2 * n as i32);
        let bound = m_rel * (ell1 * epsilon).powf(e) * r.powi(n as i32);
        Ok(DensityProbe {
            x,
            r,
            perimeter_in_ball: p,
            bound,
            verdict: if p >= bound { Verdict::Pass } else { Verdict::Fail },
        })
    });
    probes.into_iter().collect()
}

fn components(grid: &Grid, member: &[bool]) -> usize {
    let mut seen = vec![false; member.len()];
    let mut count = 0;
    for start in 0..member.len() {
        if !member[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in grid.face_neighbors(i) {
                if member[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    count
}

/// Whether the region and its in-body complement are each connected under
/// face adjacency. An empty side counts as connected.
pub fn connectedness_check(region: &GridRegion) -> (bool, bool) {
    let grid = region.grid.as_ref();
    let occ = region.occupancy();
    let free: Vec<bool> = (0..grid.cell_count()).map(|i| grid.is_inside(i) && !occ[i]).collect();
    (components(grid, &occ) <= 1, components(grid, &free) <= 1)
}

/// One in-body cell per `period^d` block: a sparse, scattered set that is
/// far from any perimeter minimizer, used as a negative control.
pub fn dilute_lattice_region(grid: std::sync::Arc<Grid>, period: usize) -> Result<GridRegion> {
    let p = period.max(1) as i64;
    let cells = grid
        .allowed_cells()
        .iter()
        .copied()
        .filter(|&i| grid.coords(i).iter().all(|c| c % p == p / 2))
        .collect();
    GridRegion::new(grid, cells)
}

#[derive(Clone, Debug)]
pub struct DensityOptions {
    pub probes: usize,
    pub seed: u64,
    pub grid_tol: GridTol,
    /// `I_C(v)` used for `ε`; by default the smaller of the candidate
    /// upper bound and the region's own discrete perimeter.
    pub profile_value: Option<f64>,
    /// Overrides the computed `ε` (for regions that are not minimizers).
    pub epsilon: Option<f64>,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            probes: 512,
            seed: 0,
            grid_tol: GridTol::ExcludeBoundaryLayer,
            profile_value: None,
            epsilon: None,
        }
    }
}

/// The full audit of one region: `ε`, the dichotomy probes, the lower
/// density probes, and connectedness.
pub fn density_audit(
    region: &GridRegion,
    body: &ConvexBody,
    body_id: &str,
    region_id: &str,
    opts: &DensityOptions,
) -> Result<DensityReport> {
    let grid = region.grid.as_ref();
    let total = body.exact_volume()?;
    let v = region.volume();
    let n = body.dim() - 1;
    let profile_value = match opts.profile_value {
        Some(p) => p,
        None => {
            let graph = CutGraph::build(grid, body, Stencil::default_for(body.dim()))?;
            let own = graph.region_perimeter(region);
            let ub = upper_bound(body, v.min(total * (1.0 - 1e-12)))?.0;
            own.min(ub)
        }
    };
    let l2 = ell2(n);
    let epsilon = match opts.epsilon {
        Some(e) => e,
        None => epsilon_threshold(n, v, total, profile_value, l2)?,
    };
    let l1 = ell1(body, par::derive_seed(opts.seed, 0xA1))?;
    let probes = dichotomy_check(region, body, epsilon, opts.probes, opts.seed, opts.grid_tol)?;
    let lower_density = lower_density_check(
        region,
        body,
        epsilon,
        l1,
        opts.probes.div_ceil(4),
        par::derive_seed(opts.seed, 0xD5),
    )?;
    let count = |v: Verdict| probes.iter().filter(|p| p.verdict == v).count();
    Ok(DensityReport {
        body_id: body_id.to_string(),
        region_id: region_id.to_string(),
        region_volume: v,
        profile_value,
        epsilon,
        ell1: l1,
        ell2: l2,
        grid_tol: opts.grid_tol,
        vacuous: count(Verdict::Vacuous),
        pass: count(Verdict::Pass),
        fail: count(Verdict::Fail),
        connected: connectedness_check(region),
        probes,
        lower_density,
    })
}
