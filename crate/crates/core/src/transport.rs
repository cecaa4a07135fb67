//! Radial bilipschitz maps between two bodies that share an interior ball.
//!
//! With both Chebyshev centers moved to the origin and `r` the core radius,
//! the map is the identity on `B(0, r)` and beyond it sends `t u` to
//! `(r + (t - r)(ρ_t(u) - r)/(ρ_s(u) - r)) u`, so each source ray segment
//! `[r, ρ_s(u)]` is stretched affinely onto `[r, ρ_t(u)]`.

use crate::convex::{planar, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg::{add, dist, norm, sub, Point};
use crate::par;
use crate::profile::grid::GridRegion;
use rand::Rng;
use serde::Serialize;

/// Points this far outside (relative to the circumradius) are projected
/// back instead of rejected.
const MEMBERSHIP_TOL: f64 = 1e-9;
const PAIR_BATCH: usize = 1024;

#[derive(Clone, Debug)]
pub struct TransportMap {
    /// Source and target with their Chebyshev centers at the origin.
    source: ConvexBody,
    target: ConvexBody,
    source_center: Point,
    target_center: Point,
    r_core: f64,
    direction_cache: Vec<(Point, f64, f64)>,
}

/// Builds the map from `source` to `target` with core radius half the
/// smaller inradius.
pub fn build_map(source: &ConvexBody, target: &ConvexBody) -> Result<TransportMap> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch(source.dim(), target.dim()));
    }
    let (s, sc) = source.centered();
    let (t, tc) = target.centered();
    let inr = s.inradius().min(t.inradius());
    if inr <= 1e-9 {
        return Err(Error::NoCommonCore);
    }
    let r_core = inr / 2.0;
    for body in [&s, &t] {
        let (r_in, _) = body.radii_about_origin()?;
        if r_in < 2.0 * r_core * (1.0 - 1e-12) {
            return Err(Error::NoCommonCore);
        }
    }
    let dirs = crate::convex::UnitSphereSamples::fibonacci(s.dim(), 64);
    let direction_cache = dirs
        .points
        .into_iter()
        .map(|u| {
            let a = s.radial_unchecked(&u);
            let b = t.radial_unchecked(&u);
            (u, a, b)
        })
        .collect();
    Ok(TransportMap {
        source: s,
        target: t,
        source_center: sc,
        target_center: tc,
        r_core,
        direction_cache,
    })
}

fn radial_stretch(from: &ConvexBody, to: &ConvexBody, r: f64, y: &[f64]) -> Point {
    let n = norm(y);
    if n <= r {
        return y.to_vec();
    }
    let u: Point = y.iter().map(|v| v / n).collect();
    let rs = from.radial_unchecked(&u);
    let rt = to.radial_unchecked(&u);
    if rs == rt {
        return y.to_vec();
    }
    let t = r + (n - r) * (rt - r) / (rs - r);
    u.iter().map(|v| v * t).collect()
}

impl TransportMap {
    pub fn r_core(&self) -> f64 {
        self.r_core
    }

    /// Smallest `R` with both centered bodies inside `B(0, R)`.
    pub fn outer_radius(&self) -> f64 {
        self.source.circumradius().max(self.target.circumradius())
    }

    pub fn source(&self) -> &ConvexBody {
        &self.source
    }

    pub fn target(&self) -> &ConvexBody {
        &self.target
    }

    /// Sampled `(u, ρ_source(u), ρ_target(u))`, for diagnostics only.
    pub fn direction_cache(&self) -> &[(Point, f64, f64)] {
        &self.direction_cache
    }

    fn admit(body: &ConvexBody, y: &[f64]) -> Result<Point> {
        let viol = body.violation(y);
        if viol <= 0.0 {
            Ok(y.to_vec())
        } else if viol <= MEMBERSHIP_TOL * body.circumradius().max(1.0) {
            Ok(body.pull_inside(y))
        } else {
            Err(Error::PointOutsideSource)
        }
    }

    /// Image of a source point (in the source's own coordinates).
    pub fn apply(&self, x: &[f64]) -> Result<Point> {
        if x.len() != self.source.dim() {
            return Err(Error::DimensionMismatch(x.len(), self.source.dim()));
        }
        let y = Self::admit(&self.source, &sub(x, &self.source_center))?;
        Ok(add(
            &radial_stretch(&self.source, &self.target, self.r_core, &y),
            &self.target_center,
        ))
    }

    /// Preimage of a target point; the same construction with the roles of
    /// the two radial functions exchanged.
    pub fn apply_inverse(&self, y: &[f64]) -> Result<Point> {
        if y.len() != self.target.dim() {
            return Err(Error::DimensionMismatch(y.len(), self.target.dim()));
        }
        let z = Self::admit(&self.target, &sub(y, &self.target_center))?;
        Ok(add(
            &radial_stretch(&self.target, &self.source, self.r_core, &z),
            &self.source_center,
        ))
    }

    /// Empirical dilatations `(Lip f, Lip f^-1)` from `n_pairs` pairs in
    /// each direction: half uniform, half near-coincident with separation
    /// in `[1e-6, 1e-3]` times the circumradius.
    pub fn empirical_lip(&self, n_pairs: usize, seed: u64) -> (f64, f64) {
        let fwd = sample_dilatation(
            &self.source,
            &self.target,
            self.r_core,
            n_pairs,
            par::derive_seed(seed, 1),
        );
        let inv = sample_dilatation(
            &self.target,
            &self.source,
            self.r_core,
            n_pairs,
            par::derive_seed(seed, 2),
        );
        (fwd, inv)
    }

    /// The closed-form ceiling for this map's dilatations.
    pub fn analytic_bound(&self) -> Result<f64> {
        analytic_lip_bound(self.r_core, self.outer_radius())
    }

    pub fn diagnostics(&self, n_pairs: usize, seed: u64) -> Result<MapDiagnostics> {
        let (lf, li) = self.empirical_lip(n_pairs, seed);
        Ok(MapDiagnostics {
            r_core: self.r_core,
            big_r: self.outer_radius(),
            analytic_bound: self.analytic_bound()?,
            lip_forward: lf,
            lip_inverse: li,
            dl_upper: lf.max(li).ln(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MapDiagnostics {
    pub r_core: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub analytic_bound: f64,
    pub lip_forward: f64,
    pub lip_inverse: f64,
    #[serde(rename = "dL_upper")]
    pub dl_upper: f64,
}

fn random_point_in<R: Rng>(body: &ConvexBody, rng: &mut R) -> Point {
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

fn sample_dilatation(from: &ConvexBody, to: &ConvexBody, r: f64, n_pairs: usize, seed: u64) -> f64 {
    let scale = from.circumradius();
    let d = from.dim();
    let batches = n_pairs.div_ceil(PAIR_BATCH);
    par::map_range(batches, |b| {
        let mut rng = par::rng_for(seed, b as u64);
        let count = PAIR_BATCH.min(n_pairs - b * PAIR_BATCH);
        let mut best: f64 = 1.0;
        for k in 0..count {
            let x = random_point_in(from, &mut rng);
            let y = if k % 2 == 0 {
                random_point_in(from, &mut rng)
            } else {
                let sep = scale * 10f64.powf(-6.0 + 3.0 * rng.random::<f64>());
                let dir: Point = loop {
                    let g: Point = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
                    let n = norm(&g);
                    if n > 1e-3 && n <= 1.0 {
                        break g.iter().map(|v| v / n).collect();
                    }
                };
                let y: Point = x.iter().zip(&dir).map(|(a, u)| a + sep * u).collect();
                if !from.contains(&y, 0.0) {
                    continue;
                }
                y
            };
            let dxy = dist(&x, &y);
            if dxy <= 0.0 {
                continue;
            }
            let fx = radial_stretch(from, to, r, &x);
            let fy = radial_stretch(from, to, r, &y);
            best = best.max(dist(&fx, &fy) / dxy);
        }
        best
    })
    .into_iter()
    .fold(1.0, f64::max)
}

/// `1 + (R/r)(R/r - 1)((R/r)^2 + 1)`, the dilatation ceiling for the map
/// when `B(0, 2r)` lies in both bodies and both lie in `B(0, R)`.
pub fn analytic_lip_bound(r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0 && r < big_r && big_r.is_finite()) {
        return Err(Error::InvalidRadii { r, big_r });
    }
    let q = big_r / r;
    Ok(1.0 + q * (q - 1.0) * (q * q + 1.0))
}

/// `log max(Lip f, Lip f^-1)` of the constructed map: an upper bound on
/// the Lipschitz distance, since that distance infimizes over all maps.
pub fn lipschitz_distance_upper(source: &ConvexBody, target: &ConvexBody, n_pairs: usize, seed: u64) -> Result<f64> {
    let m = build_map(source, target)?;
    let (a, b) = m.empirical_lip(n_pairs, seed);
    Ok(a.max(b).ln())
}

/// A region given either as a simple polygon or as grid cells.
#[derive(Clone, Debug)]
pub enum PlanarRegion<'a> {
    Polygon(&'a [Point]),
    Grid(&'a GridRegion),
}

#[derive(Clone, Debug, Serialize)]
pub struct Pushforward {
    /// Closed polylines bounding the image, densified before mapping.
    pub boundary: Vec<Vec<Point>>,
    pub source_volume: f64,
    pub source_perimeter: f64,
    pub volume: f64,
    pub perimeter: f64,
    /// `[|E| / Lip(f^-1)^2, Lip(f)^2 |E|]` in the plane.
    pub volume_bounds: (f64, f64),
    pub perimeter_bounds: (f64, f64),
    pub within_bounds: bool,
}

fn densify(a: &[f64], b: &[f64], pieces: usize) -> Vec<Point> {
    (0..pieces)
        .map(|k| {
            let t = k as f64 / pieces as f64;
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        })
        .collect()
}

fn closed_length(poly: &[Point]) -> f64 {
    (0..poly.len())
        .map(|i| dist(&poly[i], &poly[(i + 1) % poly.len()]))
        .sum()
}

fn signed_area(poly: &[Point]) -> f64 {
    planar::polygon_area(poly)
}

/// Image of a planar region under the map, with measured volume and
/// perimeter checked against the bilipschitz sandwich using the given
/// dilatations.
pub fn pushforward_region(
    map: &TransportMap,
    region: PlanarRegion,
    lips: (f64, f64),
    pieces: usize,
) -> Result<Pushforward> {
    if map.source.dim() != 2 {
        return Err(Error::MethodDimensionMismatch {
            method: "pushforward_region",
            dim: map.source.dim(),
        });
    }
    let pieces = pieces.max(1);
    let mut boundary = Vec::new();
    let (mut sv, mut sp, mut iv, mut ip) = (0.0, 0.0, 0.0, 0.0);
    match region {
        PlanarRegion::Polygon(poly) => {
            let dense: Vec<Point> = (0..poly.len())
                .flat_map(|i| densify(&poly[i], &poly[(i + 1) % poly.len()], pieces))
                .collect();
            let image = dense.iter().map(|p| map.apply(p)).collect::<Result<Vec<_>>>()?;
            sv = signed_area(poly).abs();
            sp = closed_length(poly);
            iv = signed_area(&image).abs();
            ip = closed_length(&image);
            boundary.push(image);
        }
        PlanarRegion::Grid(g) => {
            let grid = &g.grid;
            let occ = g.occupancy();
            let half = grid.h / 2.0;
            for &i in &g.cells {
                let c = grid.cell_center(i);
                let corners = [
                    vec![c[0] - half, c[1] - half],
                    vec![c[0] + half, c[1] - half],
                    vec![c[0] + half, c[1] + half],
                    vec![c[0] - half, c[1] + half],
                ];
                let dense: Vec<Point> = (0..4)
                    .flat_map(|k| densify(&corners[k], &corners[(k + 1) % 4], pieces))
                    .collect();
                // Cell corners may poke slightly outside the body; they are
                // pulled in radially before mapping.
                let image: Vec<Point> = dense
                    .iter()
                    .map(|p| {
                        let q = sub(p, &map.source_center);
                        let q = if map.source.contains(&q, 0.0) {
                            q
                        } else {
                            map.source.pull_inside(&q)
                        };
                        add(
                            &radial_stretch(&map.source, &map.target, map.r_core, &q),
                            &map.target_center,
                        )
                    })
                    .collect();
                sv += grid.cell_volume();
                iv += signed_area(&image).abs();
                let coords = grid.coords(i);
                for (k, (dx, dy)) in [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)].iter().enumerate() {
                    let nb = grid.index(&[coords[0] + dx, coords[1] + dy]);
                    if nb.map_or(true, |j| !occ[j]) {
                        sp += grid.h;
                        let seg: Vec<Point> = (0..=pieces)
                            .map(|m| image[(k * pieces + m) % image.len()].clone())
                            .collect();
                        ip += (0..seg.len() - 1).map(|m| dist(&seg[m], &seg[m + 1])).sum::<f64>();
                        boundary.push(seg);
                    }
                }
            }
        }
    }
    let (lf, li) = lips;
    let volume_bounds = (sv / (li * li), lf * lf * sv);
    let perimeter_bounds = (sp / li, lf * sp);
    let slack = 1e-9;
    let within_bounds = iv >= volume_bounds.0 * (1.0 - slack)
        && iv <= volume_bounds.1 * (1.0 + slack)
        && ip >= perimeter_bounds.0 * (1.0 - slack)
        && ip <= perimeter_bounds.1 * (1.0 + slack);
    Ok(Pushforward {
        boundary,
        source_volume: sv,
        source_perimeter: sp,
        volume: iv,
        perimeter: ip,
        volume_bounds,
        perimeter_bounds,
        within_bounds,
    })
}
