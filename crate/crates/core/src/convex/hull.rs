//! Convex hulls in the plane and in space, and the Chebyshev-center LP.
//!
//! Spatial hulls use facet enumeration over point triples, which is exact
//! and fast enough for the few dozen vertices this toolkit works with.

use super::Halfspace;
use crate::error::{Error, Result};
use crate::linalg::{cross2, cross3, dot, norm, rank, solve, sub, Point};

pub(crate) struct HullData {
    pub vertices: Vec<Point>,
    pub halfspaces: Vec<Halfspace>,
    /// Vertex indices of each facet, ordered counter-clockwise seen from
    /// outside. Facet `i` lies on `halfspaces[i]`.
    pub facets: Vec<Vec<usize>>,
}

fn extent(points: &[Point]) -> f64 {
    let d = points[0].len();
    (0..d)
        .map(|k| {
            let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max)
}

pub(crate) fn hull(points: &[Point]) -> Result<HullData> {
    if points.is_empty() {
        return Err(Error::DegenerateInput("no points".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DegenerateInput("points of mixed dimension".into()));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("non-finite coordinate".into()));
    }
    if points.len() < dim + 1 {
        return Err(Error::DegenerateInput(format!(
            "need at least {} points in dimension {dim}",
            dim + 1
        )));
    }
    match dim {
        2 => hull2(points),
        3 => hull3(points),
        _ => Err(Error::Unsupported(format!(
            "polytopes are supported in dimensions 2 and 3, got {dim}"
        ))),
    }
}

fn hull2(points: &[Point]) -> Result<HullData> {
    let scale = extent(points);
    if scale == 0.0 {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let mut pts: Vec<&Point> = points.iter().collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= 1e-12 * scale && (a[1] - b[1]).abs() <= 1e-12 * scale);
    let tol = 1e-12 * scale * scale;
    let turn = |o: &Point, a: &Point, b: &Point| cross2(&sub(a, o), &sub(b, o));

    let mut lower: Vec<&Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= tol {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<&Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= tol {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    let vertices: Vec<Point> = lower.into_iter().chain(upper).cloned().collect();
    if vertices.len() < 3 {
        return Err(Error::DegenerateInput("points are collinear".into()));
    }
    let k = vertices.len();
    let mut halfspaces = Vec::with_capacity(k);
    let mut facets = Vec::with_capacity(k);
    for i in 0..k {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % k];
        let e = sub(b, a);
        let len = norm(&e);
        let normal = vec![e[1] / len, -e[0] / len];
        let offset = dot(&normal, a);
        halfspaces.push(Halfspace { normal, offset });
        facets.push(vec![i, (i + 1) % k]);
    }
    Ok(HullData {
        vertices,
        halfspaces,
        facets,
    })
}

fn hull3(points: &[Point]) -> Result<HullData> {
    let scale = extent(points);
    if scale == 0.0 {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let tol = 1e-9 * scale;
    let n = points.len();
    let mut planes: Vec<Halfspace> = Vec::new();
    let mut saw_triangle = false;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let c = cross3(&sub(&points[j], &points[i]), &sub(&points[k], &points[i]));
                let len = norm(&c);
                if len <= 1e-12 * scale * scale {
                    continue;
                }
                saw_triangle = true;
                let normal: Point = c.iter().map(|x| x / len).collect();
                let offset = dot(&normal, &points[i]);
                let (mut above, mut below) = (false, false);
                for p in points {
                    let s = dot(&normal, p) - offset;
                    above |= s > tol;
                    below |= s < -tol;
                    if above && below {
                        break;
                    }
                }
                let plane = match (above, below) {
                    (false, false) => return Err(Error::DegenerateInput("points are coplanar".into())),
                    (false, true) => Halfspace { normal, offset },
                    (true, false) => Halfspace {
                        normal: normal.iter().map(|x| -x).collect(),
                        offset: -offset,
                    },
                    (true, true) => continue,
                };
                let dup = planes.iter().any(|q| {
                    (q.offset - plane.offset).abs() <= tol
                        && q.normal.iter().zip(&plane.normal).all(|(a, b)| (a - b).abs() <= 1e-9)
                });
                if !dup {
                    planes.push(plane);
                }
            }
        }
    }
    if !saw_triangle || planes.len() < 4 {
        return Err(Error::DegenerateInput("points are collinear or coplanar".into()));
    }

    // Extreme points are those where the active facet normals span space.
    let mut vertices: Vec<Point> = Vec::new();
    for p in points {
        let active: Vec<&[f64]> = planes
            .iter()
            .filter(|h| (dot(&h.normal, p) - h.offset).abs() <= tol)
            .map(|h| h.normal.as_slice())
            .collect();
        if active.len() >= 3 && rank(&active, 1e-9) == 3 && !vertices.iter().any(|v| crate::linalg::dist(v, p) <= tol) {
            vertices.push(p.clone());
        }
    }

    let mut facets = Vec::with_capacity(planes.len());
    for h in &planes {
        let mut on: Vec<usize> = (0..vertices.len())
            .filter(|&i| (dot(&h.normal, &vertices[i]) - h.offset).abs() <= tol)
            .collect();
        let centroid: Point = (0..3)
            .map(|k| on.iter().map(|&i| vertices[i][k]).sum::<f64>() / on.len() as f64)
            .collect();
        let e1 = {
            let w = sub(&vertices[on[0]], &centroid);
            let l = norm(&w);
            w.iter().map(|x| x / l).collect::<Point>()
        };
        let e2 = cross3(&h.normal, &e1);
        on.sort_by(|&a, &b| {
            let wa = sub(&vertices[a], &centroid);
            let wb = sub(&vertices[b], &centroid);
            let ta = dot(&wa, &e2).atan2(dot(&wa, &e1));
            let tb = dot(&wb, &e2).atan2(dot(&wb, &e1));
            ta.total_cmp(&tb)
        });
        facets.push(on);
    }
    Ok(HullData {
        vertices,
        halfspaces: planes,
        facets,
    })
}

/// Center and radius of a largest inscribed ball: maximize `t` subject to
/// `<n_i, x> + t <= b_i`. Solved exactly by enumerating the basic solutions
/// of the `(d+1)`-variable LP; when the optimum is not unique, the average
/// of the optimal basic solutions is returned.
pub(crate) fn chebyshev(halfspaces: &[Halfspace], dim: usize, scale: f64) -> Result<(Point, f64)> {
    let m = halfspaces.len();
    let k = dim + 1;
    if m < k {
        return Err(Error::DegenerateInput("too few half-spaces".into()));
    }
    let feas_tol = 1e-9 * scale.max(1e-300);
    let mut best_t = f64::NEG_INFINITY;
    let mut optimal: Vec<Point> = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                let mut r = halfspaces[i].normal.clone();
                r.push(1.0);
                r
            })
            .collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| halfspaces[i].offset).collect();
        if let Some(sol) = solve(rows, rhs) {
            let t = sol[dim];
            let x = &sol[..dim];
            if t > 0.0
                && t >= best_t - feas_tol
                && halfspaces.iter().all(|h| dot(&h.normal, x) + t <= h.offset + feas_tol)
            {
                if t > best_t + 1e-12 * scale {
                    best_t = t;
                    optimal.clear();
                }
                if !optimal.iter().any(|o| crate::linalg::dist(o, x) <= feas_tol) {
                    optimal.push(x.to_vec());
                }
            }
        }
        if !next_combination(&mut idx, m) {
            break;
        }
    }
    if optimal.is_empty() {
        return Err(Error::DegenerateInput("empty interior".into()));
    }
    let center: Point = (0..dim)
        .map(|c| optimal.iter().map(|x| x[c]).sum::<f64>() / optimal.len() as f64)
        .collect();
    // Recompute the margin at the averaged center so the radius is exact.
    let r = halfspaces
        .iter()
        .map(|h| h.offset - dot(&h.normal, &center))
        .fold(f64::INFINITY, f64::min);
    Ok((center, r))
}

fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    for p in (0..k).rev() {
        if idx[p] < m - k + p {
            idx[p] += 1;
            for q in p + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}
