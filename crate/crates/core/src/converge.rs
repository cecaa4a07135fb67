//! Experiments on sequences of bodies: convergence of profiles, of map
//! dilatations, and of minimizing regions, plus the small-volume behaviour
//! near the sharpest vertex and semicontinuity of solid angles.

use crate::cones::{
    geodesic_ball_in_cone, min_solid_angle_vertex, semicontinuity_probe, tangent_cone, SemicontinuityReport,
};
use crate::convex::{hausdorff_distance, hausdorff_point_sets, ConvexBody};
use crate::error::{Error, Result};
use crate::io::BodyFile;
use crate::linalg::{dist, Point};
use crate::par;
use crate::profile::bounds::{upper_bound, upper_bound_with, UpperBoundOptions};
use crate::profile::grid::{Domain, GridRegion, Stencil};
use crate::profile::oracle::{OracleProblem, OracleStrategy};
use crate::transport::build_map;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// Regular `k`-gons inscribed in the disk of radius `radius` about the
/// origin, one per entry of `ks`.
pub fn inscribed_polygon_sequence(radius: f64, ks: &[usize]) -> Result<Vec<ConvexBody>> {
    ks.iter()
        .map(|&k| ConvexBody::regular_polygon(k, radius, [0.0, 0.0]))
        .collect()
}

/// Whether the last three values never increase by more than `slack`.
pub fn tail_nonincreasing(values: &[f64], slack: f64) -> bool {
    let tail = &values[values.len().saturating_sub(3)..];
    tail.windows(2).all(|w| w[1] <= w[0] + slack)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub k: usize,
    pub hausdorff: f64,
    pub j: Vec<f64>,
    pub sup_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileConvergence {
    pub lambda_grid: Vec<f64>,
    pub limit_j: Vec<f64>,
    pub rows: Vec<ProfileRow>,
    /// Oracle value of `J(1/2)` on the last body, with its uncertainty.
    pub oracle_half: Option<(f64, f64)>,
    pub tolerance: f64,
    pub monotone: bool,
    pub pass: bool,
}

fn j_curve(body: &ConvexBody, lambdas: &[f64], opts: &UpperBoundOptions) -> Result<Vec<f64>> {
    let total = body.exact_volume()?;
    par::map_slice(lambdas, |&l| upper_bound_with(body, l * total, opts).map(|u| u.value))
        .into_iter()
        .collect()
}

/// `sup_λ |J_{C_k}(λ) - J_C(λ)|` along the sequence from upper-bound
/// curves; passes when the last three sups do not increase and the final
/// one is within `tolerance`.
pub fn profile_convergence_experiment(
    sequence: &[(usize, ConvexBody)],
    limit: &ConvexBody,
    lambda_grid: &[f64],
    tolerance: f64,
    oracle: Option<(usize, u64)>,
) -> Result<ProfileConvergence> {
    if lambda_grid.iter().any(|&l| !(0.1 - 1e-12..=0.9 + 1e-12).contains(&l)) {
        return Err(Error::InvalidInput("lambda grid must lie in [0.1, 0.9]".into()));
    }
    let opts = UpperBoundOptions::default();
    let limit_j = j_curve(limit, lambda_grid, &opts)?;
    let mut rows = Vec::with_capacity(sequence.len());
    for (k, body) in sequence {
        let j = j_curve(body, lambda_grid, &opts)?;
        let sup = j.iter().zip(&limit_j).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.push(ProfileRow {
            k: *k,
            hausdorff: hausdorff_distance(body, limit)?,
            j,
            sup_deviation: sup,
        });
    }
    let oracle_half = match (oracle, sequence.last()) {
        (Some((resolution, seed)), Some((_, body))) => {
            let problem = OracleProblem::for_body(body, resolution, Stencil::default_for(body.dim()))?;
            let res = problem.solve_volume(body.exact_volume()? / 2.0, OracleStrategy::anneal(seed))?;
            Some((res.perimeter, problem.grid.h * res.perimeter))
        }
        _ => None,
    };
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_deviation).collect();
    let monotone = tail_nonincreasing(&sups, 0.0);
    let last_ok = sups.last().is_some_and(|&s| s <= tolerance);
    Ok(ProfileConvergence {
        lambda_grid: lambda_grid.to_vec(),
        limit_j,
        rows,
        oracle_half,
        tolerance,
        monotone,
        pass: monotone && last_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DilatationRow {
    pub k: usize,
    pub lip_forward: f64,
    pub lip_inverse: f64,
    pub analytic_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DilatationConvergence {
    pub rows: Vec<DilatationRow>,
    pub tolerance: f64,
    pub monotone: bool,
    pub pass: bool,
}

/// Empirical dilatations of the radial maps from the limit body onto each
/// body of the sequence; passes when both are within `tolerance` of 1 at
/// the end and neither increases over the last three.
pub fn dilatation_convergence_experiment(
    sequence: &[(usize, ConvexBody)],
    limit: &ConvexBody,
    n_pairs: usize,
    seed: u64,
    tolerance: f64,
) -> Result<DilatationConvergence> {
    let mut rows = Vec::with_capacity(sequence.len());
    for (k, body) in sequence {
        let map = build_map(limit, body)?;
        let (lf, li) = map.empirical_lip(n_pairs, par::derive_seed(seed, *k as u64));
        rows.push(DilatationRow {
            k: *k,
            lip_forward: lf,
            lip_inverse: li,
            analytic_bound: map.analytic_bound()?,
        });
    }
    let fwd: Vec<f64> = rows.iter().map(|r| r.lip_forward).collect();
    let inv: Vec<f64> = rows.iter().map(|r| r.lip_inverse).collect();
    let monotone = tail_nonincreasing(&fwd, 0.0) && tail_nonincreasing(&inv, 0.0);
    let last_ok = rows
        .last()
        .is_some_and(|r| r.lip_forward <= 1.0 + tolerance && r.lip_inverse <= 1.0 + tolerance);
    Ok(DilatationConvergence {
        rows,
        tolerance,
        monotone,
        pass: monotone && last_ok,
    })
}

/// Planar isometries fixing the body: rotations and reflections about the
/// Chebyshev center. Disks get 360 rotations, regular polygons their
/// dihedral group, anything else only the identity. Spatial bodies always
/// get the identity.
pub fn symmetry_group(body: &ConvexBody) -> Vec<[f64; 4]> {
    let identity = vec![[1.0, 0.0, 0.0, 1.0]];
    if body.dim() != 2 {
        return identity;
    }
    let c = body.chebyshev_center();
    let (steps, phase) = if body.as_ball().is_some() {
        (360, 0.0)
    } else {
        let v = body.vertices();
        let k = v.len();
        let r0 = dist(&v[0], c);
        let e0 = dist(&v[0], &v[1]);
        let regular = v.iter().all(|p| (dist(p, c) - r0).abs() <= 1e-9 * r0)
            && (0..k).all(|i| (dist(&v[i], &v[(i + 1) % k]) - e0).abs() <= 1e-9 * e0);
        if !regular {
            return identity;
        }
        (k, (v[0][1] - c[1]).atan2(v[0][0] - c[0]))
    };
    let mut out = Vec::with_capacity(2 * steps);
    for j in 0..steps {
        let t = TAU * j as f64 / steps as f64;
        out.push([t.cos(), -t.sin(), t.sin(), t.cos()]);
    }
    // Reflections across the line through the center at angle `phase + t/2`.
    for j in 0..steps {
        let t = 2.0 * phase + TAU * j as f64 / steps as f64;
        out.push([t.cos(), t.sin(), t.sin(), -t.cos()]);
    }
    out
}

fn apply(m: &[f64; 4], c: &[f64], p: &[f64]) -> Point {
    let (x, y) = (p[0] - c[0], p[1] - c[1]);
    vec![c[0] + m[0] * x + m[1] * y, c[1] + m[2] * x + m[3] * y]
}

fn inverse(m: &[f64; 4]) -> [f64; 4] {
    // Orthogonal: the inverse is the transpose.
    [m[0], m[2], m[1], m[3]]
}

fn occupied_at(region: &GridRegion, occ: &[bool], p: &[f64]) -> bool {
    let g = region.grid.as_ref();
    let c: Vec<i64> = p
        .iter()
        .zip(&g.origin)
        .map(|(x, o)| ((x - o) / g.h).floor() as i64)
        .collect();
    g.index(&c).is_some_and(|i| occ[i])
}

fn transformed(points: &[Point], m: &[f64; 4], c: &[f64]) -> Vec<Point> {
    if points.first().is_some_and(|p| p.len() == 2) {
        points.iter().map(|p| apply(m, c, p)).collect()
    } else {
        points.to_vec()
    }
}

/// Volume of `E_k Δ g(E)` with `g` a symmetry of the limit body, counted on
/// the limit grid plus the cells of `E_k` outside the limit body.
fn symmetric_difference(ek: &GridRegion, e: &GridRegion, limit: &ConvexBody, g: &[f64; 4]) -> f64 {
    let occ_k = ek.occupancy();
    let occ = e.occupancy();
    let grid = e.grid.as_ref();
    let c = limit.chebyshev_center();
    let inv = inverse(g);
    let planar = grid.dim == 2;
    let mut count = 0usize;
    for &i in grid.allowed_cells() {
        let p = grid.cell_center(i);
        let q = if planar { apply(&inv, c, &p) } else { p.clone() };
        if occupied_at(e, &occ, &q) != occupied_at(ek, &occ_k, &p) {
            count += 1;
        }
    }
    let outside = ek.centers().iter().filter(|p| !limit.contains(p, 0.0)).count();
    count as f64 * grid.cell_volume() + outside as f64 * ek.grid.cell_volume()
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionRow {
    pub k: usize,
    pub h: f64,
    pub perimeter: f64,
    pub symmetric_difference: f64,
    pub hausdorff_regions: f64,
    pub hausdorff_free_boundaries: f64,
    /// `2 h^{n+1}` per free-boundary cell of the limit minimizer.
    pub symmetric_difference_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionConvergence {
    pub lambda: f64,
    pub resolution: usize,
    pub limit_perimeter: f64,
    pub rows: Vec<RegionRow>,
    pub monotone: bool,
    pub pass: bool,
}

fn oracle_region(body: &ConvexBody, lambda: f64, resolution: usize, seed: u64) -> Result<(GridRegion, f64)> {
    let problem = OracleProblem::for_body(body, resolution, Stencil::default_for(body.dim()))?;
    let res = problem.solve_volume(lambda * body.exact_volume()?, OracleStrategy::anneal(seed))?;
    Ok((res.region, res.perimeter))
}

/// Oracle minimizers at fixed `λ = v/|C|` on each body and on the limit,
/// compared after aligning the limit's minimizer by the limit body's
/// symmetries. Distances use cell centers; monotonicity allows one cell
/// side of grid noise.
pub fn region_convergence_experiment(
    sequence: &[(usize, ConvexBody)],
    limit: &ConvexBody,
    lambda: f64,
    resolution: usize,
    seed: u64,
) -> Result<RegionConvergence> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidInput(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let (e, limit_perimeter) = oracle_region(limit, lambda, resolution, seed)?;
    let group = symmetry_group(limit);
    let c = limit.chebyshev_center().to_vec();
    let e_centers = e.centers();
    let e_boundary: Vec<Point> = e.free_boundary_cells().iter().map(|&i| e.grid.cell_center(i)).collect();
    let layer = e.free_boundary_cells().len() as f64 * e.grid.cell_volume();
    let mut rows = Vec::with_capacity(sequence.len());
    for (k, body) in sequence {
        let (ek, perimeter) = oracle_region(body, lambda, resolution, seed)?;
        let diffs = par::map_slice(&group, |g| symmetric_difference(&ek, &e, limit, g));
        let mut best = 0;
        for (i, d) in diffs.iter().enumerate() {
            if *d < diffs[best] {
                best = i;
            }
        }
        let g = &group[best];
        let ek_boundary: Vec<Point> = ek
            .free_boundary_cells()
            .iter()
            .map(|&i| ek.grid.cell_center(i))
            .collect();
        rows.push(RegionRow {
            k: *k,
            h: ek.grid.h.max(e.grid.h),
            perimeter,
            symmetric_difference: diffs[best],
            hausdorff_regions: hausdorff_point_sets(&ek.centers(), &transformed(&e_centers, g, &c)),
            hausdorff_free_boundaries: hausdorff_point_sets(&ek_boundary, &transformed(&e_boundary, g, &c)),
            symmetric_difference_bound: 2.0 * layer,
        });
    }
    let h = rows.iter().map(|r| r.h).fold(0.0, f64::max);
    let col = |f: fn(&RegionRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let monotone = tail_nonincreasing(&col(|r| r.symmetric_difference), 4.0 * e.grid.cell_volume())
        && tail_nonincreasing(&col(|r| r.hausdorff_regions), h)
        && tail_nonincreasing(&col(|r| r.hausdorff_free_boundaries), h);
    let last_ok = rows.last().is_some_and(|r| {
        r.hausdorff_regions <= 4.0 * r.h
            && r.hausdorff_free_boundaries <= 4.0 * r.h
            && r.symmetric_difference <= r.symmetric_difference_bound
    });
    Ok(RegionConvergence {
        lambda,
        resolution,
        limit_perimeter,
        rows,
        monotone,
        pass: monotone && last_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallVolumeRow {
    pub v: f64,
    pub cone_profile: f64,
    pub upper_ratio: f64,
    pub oracle_ratio: f64,
    pub oracle_ratio_uncertainty: f64,
    pub nearest_vertex: usize,
    pub vertex_alpha: f64,
    pub at_min_vertex: bool,
    /// Hausdorff distance between the witness scaled by `v^{-1/(n+1)}`
    /// about its vertex and the unit-volume apex ball of that vertex's cone.
    pub rescaled_hausdorff: f64,
    /// `4 h v^{-1/(n+1)}`.
    pub rescaled_tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallVolume {
    pub alpha_min: f64,
    pub min_vertex: usize,
    pub resolution: usize,
    pub rows: Vec<SmallVolumeRow>,
    pub pass: bool,
}

/// Points of the apex ball `{y ∈ K : |y| <= ρ}` of the cone `K` (apex
/// moved to the origin) on a lattice of spacing `step`.
fn apex_ball_points(cone: &crate::cones::Cone, rho: f64, step: f64) -> Vec<Point> {
    let d = cone.dim;
    let m = (rho / step).ceil() as i64;
    let side = (2 * m + 1) as usize;
    let mut out = Vec::new();
    for idx in 0..side.pow(d as u32) {
        let mut r = idx;
        let y: Point = (0..d)
            .map(|_| {
                let c = (r % side) as i64 - m;
                r /= side;
                c as f64 * step
            })
            .collect();
        let norm2: f64 = y.iter().map(|v| v * v).sum();
        let p: Point = cone.apex.iter().zip(&y).map(|(a, b)| a + b).collect();
        if norm2 <= rho * rho && cone.contains(&p) {
            out.push(y);
        }
    }
    out
}

/// Ratios of the upper bound and the oracle to the profile of the
/// sharpest tangent cone, and where the oracle witness sits. Passes when
/// every oracle ratio is at least `1 - 3u` (with `u` its relative error
/// bar), and at the smallest volume the witness sits at a vertex of least
/// solid angle within `4h` after rescaling and its ratio lies in
/// `ratio_band`.
pub fn small_volume_experiment(
    body: &ConvexBody,
    v_list: &[f64],
    resolution: usize,
    seed: u64,
    ratio_band: (f64, f64),
) -> Result<SmallVolume> {
    let total = body.exact_volume()?;
    if v_list.iter().any(|&v| !(v > 0.0 && v < 0.1 * total)) {
        return Err(Error::InvalidInput("volumes must lie in (0, |C|/10)".into()));
    }
    let cmin = min_solid_angle_vertex(body)?;
    let n = body.dim() - 1;
    let problem = OracleProblem::for_body(body, resolution, Stencil::default_for(body.dim()))?;
    let h = problem.grid.h;
    let verts = body.vertices();
    let mut rows = Vec::with_capacity(v_list.len());
    for &v in v_list {
        let ic = cmin.profile(v)?;
        let upper = upper_bound(body, v)?.0;
        let res = problem.solve_volume(v, OracleStrategy::anneal(seed))?;
        let centers = res.region.centers();
        let centroid: Point = (0..body.dim())
            .map(|k| centers.iter().map(|p| p[k]).sum::<f64>() / centers.len() as f64)
            .collect();
        let mut nearest = 0;
        for (i, p) in verts.iter().enumerate() {
            if dist(p, &centroid) < dist(&verts[nearest], &centroid) {
                nearest = i;
            }
        }
        let scale = v.powf(-1.0 / (n as f64 + 1.0));
        let cone = tangent_cone(body, &verts[nearest])?.with_angle(
            crate::cones::AngleMethod::exact_for(body.dim()).ok_or(Error::MethodDimensionMismatch {
                method: "small_volume_experiment",
                dim: body.dim(),
            })?,
        )?;
        let alpha = cone.angle()?;
        let (rho1, _) = geodesic_ball_in_cone(alpha, n, 1.0)?;
        let witness: Vec<Point> = centers
            .iter()
            .map(|p| p.iter().zip(&verts[nearest]).map(|(a, b)| (a - b) * scale).collect())
            .collect();
        let ball = apex_ball_points(&cone, rho1, h * scale / 4.0);
        rows.push(SmallVolumeRow {
            v,
            cone_profile: ic,
            upper_ratio: upper / ic,
            oracle_ratio: res.perimeter / ic,
            oracle_ratio_uncertainty: h * res.perimeter / ic,
            nearest_vertex: nearest,
            vertex_alpha: alpha,
            at_min_vertex: cmin.is_min(nearest),
            rescaled_hausdorff: hausdorff_point_sets(&witness, &ball),
            rescaled_tolerance: 4.0 * h * scale,
        });
    }
    let lower_ok = rows
        .iter()
        .all(|r| r.oracle_ratio >= 1.0 - 3.0 * r.oracle_ratio_uncertainty);
    let smallest = rows
        .iter()
        .min_by(|a, b| a.v.total_cmp(&b.v))
        .ok_or_else(|| Error::InvalidInput("empty volume list".into()))?;
    let last_ok = smallest.at_min_vertex
        && smallest.rescaled_hausdorff <= smallest.rescaled_tolerance
        && smallest.oracle_ratio >= ratio_band.0
        && smallest.oracle_ratio <= ratio_band.1;
    Ok(SmallVolume {
        alpha_min: cmin.alpha,
        min_vertex: cmin.index,
        resolution,
        pass: lower_ok && last_ok,
        rows,
    })
}

/// Approaches vertex `vertex` along each incident facet, toward the facet
/// centroid, at fractions `2^{-j}` (`j = 1..=k`) of the distance, and
/// checks `α(p) <= liminf α(p_j)` on each approach.
pub fn semicontinuity_experiment(body: &ConvexBody, vertex: usize, k: usize) -> Result<Vec<SemicontinuityReport>> {
    let verts = body.vertices();
    let p = verts
        .get(vertex)
        .ok_or_else(|| Error::InvalidInput(format!("no vertex {vertex}")))?
        .clone();
    let mut reports = Vec::new();
    for f in body.facets().iter().filter(|f| f.contains(&vertex)) {
        let centroid: Point = (0..body.dim())
            .map(|c| f.iter().map(|&i| verts[i][c]).sum::<f64>() / f.len() as f64)
            .collect();
        let approach: Vec<Point> = (1..=k)
            .map(|j| {
                let t = 0.5f64.powi(j as i32);
                p.iter().zip(&centroid).map(|(a, b)| a + t * (b - a)).collect()
            })
            .collect();
        reports.push(semicontinuity_probe(body, &p, &approach)?);
    }
    Ok(reports)
}

/// Body sequence generators for experiment files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Generator {
    /// Regular `k`-gons inscribed in a disk of `radius`; the disk is the limit.
    InscribedPolygons { radius: f64, k: Vec<usize> },
    /// The same body `count` times; it is also the limit.
    Constant { body: BodyFile, count: usize },
    /// A single body, for the small-volume and semicontinuity experiments.
    Body {
        body: BodyFile,
        #[serde(default)]
        vertex: Option<usize>,
        #[serde(default)]
        k: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Profile,
    Dilatation,
    Region,
    SmallVolume,
    Semicontinuity,
}

impl ExperimentKind {
    fn from_name(name: &str) -> Option<Self> {
        let n = name.to_ascii_lowercase().replace('_', "-");
        [
            ("profile", ExperimentKind::Profile),
            ("dilatation", ExperimentKind::Dilatation),
            ("region", ExperimentKind::Region),
            ("small-volume", ExperimentKind::SmallVolume),
            ("semicontinuity", ExperimentKind::Semicontinuity),
        ]
        .into_iter()
        .find(|(p, _)| n.starts_with(p))
        .map(|(_, k)| k)
    }
}

/// `{name, generator: {kind, params}, lambda_grid | v_list, resolution,
/// seed, tolerances}`. The experiment type is `experiment` when present,
/// otherwise read from the start of `name`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    pub generator: Generator,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub v_list: Option<Vec<f64>>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_resolution() -> usize {
    64
}

pub const TOLERANCE_NAMES: [&str; 5] = ["sup", "lip", "ratio_low", "ratio_high", "lip_pairs"];

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub experiment: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub pass: bool,
    pub details: serde_json::Value,
}

impl ExperimentSpec {
    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment
            .or_else(|| ExperimentKind::from_name(&self.name))
            .ok_or_else(|| Error::InvalidInput(format!("cannot tell the experiment type from name `{}`", self.name)))
    }

    fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    fn sequence(&self) -> Result<(Vec<(usize, ConvexBody)>, ConvexBody)> {
        match &self.generator {
            Generator::InscribedPolygons { radius, k } => {
                let bodies = inscribed_polygon_sequence(*radius, k)?;
                Ok((
                    k.iter().copied().zip(bodies).collect(),
                    ConvexBody::ball(vec![0.0, 0.0], *radius)?,
                ))
            }
            Generator::Constant { body, count } => {
                let b = body.to_body()?;
                Ok(((1..=*count).map(|i| (i, b.clone())).collect(), b))
            }
            Generator::Body { .. } => Err(Error::InvalidInput(
                "this experiment needs a sequence generator (inscribed-polygons or constant)".into(),
            )),
        }
    }

    fn single_body(&self) -> Result<(ConvexBody, Option<usize>, Option<usize>)> {
        match &self.generator {
            Generator::Body { body, vertex, k } => Ok((body.to_body()?, *vertex, *k)),
            Generator::Constant { body, .. } => Ok((body.to_body()?, None, None)),
            Generator::InscribedPolygons { .. } => Err(Error::InvalidInput(
                "this experiment needs a single body generator".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self.tolerances.keys().find(|k| !TOLERANCE_NAMES.contains(&k.as_str())) {
            return Err(Error::InvalidInput(format!(
                "unknown tolerance `{bad}` (known: {})",
                TOLERANCE_NAMES.join(", ")
            )));
        }
        self.kind().map(|_| ())
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        self.validate()?;
        let kind = self.kind()?;
        let lambda_grid = self
            .lambda_grid
            .clone()
            .unwrap_or_else(|| (1..=9).map(|i| i as f64 / 10.0).collect());
        let to_value = |v: &dyn erased::Ser| v.json();
        let (columns, rows, pass, details): (Vec<&str>, Vec<Vec<f64>>, bool, serde_json::Value) = match kind {
            ExperimentKind::Profile => {
                let (seq, limit) = self.sequence()?;
                let r = profile_convergence_experiment(
                    &seq,
                    &limit,
                    &lambda_grid,
                    self.tol("sup", 0.05),
                    Some((self.resolution, self.seed)),
                )?;
                let rows = r
                    .rows
                    .iter()
                    .map(|row| vec![row.k as f64, row.hausdorff, row.sup_deviation])
                    .collect();
                (vec!["k", "hausdorff", "sup_deviation"], rows, r.pass, to_value(&r))
            }
            ExperimentKind::Dilatation => {
                let (seq, limit) = self.sequence()?;
                let pairs = self.tol("lip_pairs", 100_000.0) as usize;
                let r = dilatation_convergence_experiment(&seq, &limit, pairs, self.seed, self.tol("lip", 0.01))?;
                let rows = r
                    .rows
                    .iter()
                    .map(|row| vec![row.k as f64, row.lip_forward, row.lip_inverse, row.analytic_bound])
                    .collect();
                (
                    vec!["k", "lip_forward", "lip_inverse", "analytic_bound"],
                    rows,
                    r.pass,
                    to_value(&r),
                )
            }
            ExperimentKind::Region => {
                let (seq, limit) = self.sequence()?;
                let lambda = lambda_grid.first().copied().unwrap_or(0.5);
                let r = region_convergence_experiment(&seq, &limit, lambda, self.resolution, self.seed)?;
                let rows = r
                    .rows
                    .iter()
                    .map(|row| {
                        vec![
                            row.k as f64,
                            row.h,
                            row.perimeter,
                            row.symmetric_difference,
                            row.hausdorff_regions,
                            row.hausdorff_free_boundaries,
                        ]
                    })
                    .collect();
                (
                    vec![
                        "k",
                        "h",
                        "perimeter",
                        "symmetric_difference",
                        "hausdorff_regions",
                        "hausdorff_free_boundaries",
                    ],
                    rows,
                    r.pass,
                    to_value(&r),
                )
            }
            ExperimentKind::SmallVolume => {
                let (body, _, _) = self.single_body()?;
                let total = body.exact_volume()?;
                let v_list = self
                    .v_list
                    .clone()
                    .unwrap_or_else(|| vec![0.05 * total, 0.02 * total, 0.01 * total]);
                let r = small_volume_experiment(
                    &body,
                    &v_list,
                    self.resolution,
                    self.seed,
                    (self.tol("ratio_low", 0.95), self.tol("ratio_high", 1.10)),
                )?;
                let rows = r
                    .rows
                    .iter()
                    .map(|row| {
                        vec![
                            row.v,
                            row.upper_ratio,
                            row.oracle_ratio,
                            row.nearest_vertex as f64,
                            row.vertex_alpha,
                            if row.at_min_vertex { 1.0 } else { 0.0 },
                            row.rescaled_hausdorff,
                            row.rescaled_tolerance,
                        ]
                    })
                    .collect();
                (
                    vec![
                        "v",
                        "upper_ratio",
                        "oracle_ratio",
                        "nearest_vertex",
                        "vertex_alpha",
                        "at_min_vertex",
                        "rescaled_hausdorff",
                        "rescaled_tolerance",
                    ],
                    rows,
                    r.pass,
                    to_value(&r),
                )
            }
            ExperimentKind::Semicontinuity => {
                let (body, vertex, k) = self.single_body()?;
                let vertex = match vertex {
                    Some(v) => v,
                    None => min_solid_angle_vertex(&body)?.index,
                };
                let reports = semicontinuity_experiment(&body, vertex, k.unwrap_or(12))?;
                let rows = reports
                    .iter()
                    .enumerate()
                    .map(|(i, r)| vec![i as f64, r.alpha_limit, r.tail_min, if r.pass { 1.0 } else { 0.0 }])
                    .collect();
                let pass = reports.iter().all(|r| r.pass);
                (
                    vec!["facet", "alpha_limit", "tail_min", "pass"],
                    rows,
                    pass,
                    to_value(&reports),
                )
            }
        };
        Ok(ExperimentReport {
            name: self.name.clone(),
            experiment: kind,
            columns: columns.into_iter().map(String::from).collect(),
            rows,
            pass,
            details,
        })
    }
}

mod erased {
    pub trait Ser {
        fn json(&self) -> serde_json::Value;
    }
    impl<T: serde::Serialize> Ser for T {
        fn json(&self) -> serde_json::Value {
            crate::io::to_json_12(self).unwrap_or(serde_json::Value::Null)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inscribed_polygons_approach_the_disk() {
        let disk = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let ks = [3, 4, 8, 16, 64];
        let seq = inscribed_polygon_sequence(1.0, &ks).unwrap();
        let mut prev = f64::INFINITY;
        for (k, p) in ks.iter().zip(&seq) {
            let d = hausdorff_distance(p, &disk).unwrap();
            let exact = 1.0 - (std::f64::consts::PI / *k as f64).cos();
            assert!((d - exact).abs() < 1e-9, "k={k}: {d} vs {exact}");
            assert!(d < prev);
            prev = d;
        }
        assert_eq!(seq[0].vertices().len(), 3);
    }

    #[test]
    fn constant_sequence_has_zero_deviation() {
        let sq = ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let seq = vec![(1, sq.clone()), (2, sq.clone())];
        let r = profile_convergence_experiment(&seq, &sq, &[0.1, 0.5, 0.9], 1e-12, None).unwrap();
        assert!(r.rows.iter().all(|row| row.sup_deviation == 0.0));
        assert!(r.pass);
        let d = dilatation_convergence_experiment(&seq, &sq, 1000, 0, 1e-12).unwrap();
        assert!(d
            .rows
            .iter()
            .all(|row| row.lip_forward == 1.0 && row.lip_inverse == 1.0));
    }

    #[test]
    fn dihedral_group_of_a_square() {
        let sq = ConvexBody::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let g = symmetry_group(&sq);
        assert_eq!(g.len(), 8);
        for m in &g {
            for v in sq.vertices() {
                let w = apply(m, &[0.0, 0.0], v);
                assert!(sq.vertices().iter().any(|u| dist(u, &w) < 1e-12));
            }
        }
        let tri = ConvexBody::polytope(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(symmetry_group(&tri).len(), 1);
    }

    #[test]
    fn semicontinuity_on_square_and_triangle() {
        let sq = ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        for r in semicontinuity_experiment(&sq, 0, 10).unwrap() {
            assert!(r.pass);
            assert!((r.alpha_limit - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
            assert!((r.tail_min - std::f64::consts::PI).abs() < 1e-12);
        }
        let tri = ConvexBody::polytope(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let m = min_solid_angle_vertex(&tri).unwrap();
        let reps = semicontinuity_experiment(&tri, m.index, 10).unwrap();
        assert_eq!(reps.len(), 2);
        assert!(reps.iter().all(|r| r.pass && r.tail_min > r.alpha_limit));
    }

    #[test]
    fn experiment_spec_parsing() {
        let spec: ExperimentSpec = serde_json::from_str(
            r#"{"name": "profile_convergence", "generator": {"kind": "inscribed-polygons",
                "params": {"radius": 1.0, "k": [8, 16]}}, "lambda_grid": [0.5], "seed": 3,
                "tolerances": {"sup": 0.2}}"#,
        )
        .unwrap();
        assert_eq!(spec.kind().unwrap(), ExperimentKind::Profile);
        let bad: ExperimentSpec = serde_json::from_str(
            r#"{"name": "profile", "generator": {"kind": "inscribed-polygons",
                "params": {"radius": 1.0, "k": [8]}}, "tolerances": {"bogus": 1.0}}"#,
        )
        .unwrap();
        assert!(bad.validate().is_err());
    }
}
