//! Exact planar primitives: polygon and disk intersections with disks and
//! half-planes, arc lengths, chord lengths.

use super::Halfspace;
use crate::linalg::{cross2, dot, Point};
use std::f64::consts::{PI, TAU};

/// Shoelace area of a counter-clockwise polygon.
pub fn polygon_area(vertices: &[Point]) -> f64 {
    let k = vertices.len();
    (0..k)
        .map(|i| cross2(&vertices[i], &vertices[(i + 1) % k]))
        .sum::<f64>()
        / 2.0
}

/// Signed area of `triangle(0, a, b) ∩ disk(0, r)`.
fn triangle_disk_area(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let mut pts = vec![a];
    if dd > 0.0 {
        // |a + t d|^2 = r^2
        let bq = a[0] * d[0] + a[1] * d[1];
        let c = a[0] * a[0] + a[1] * a[1] - r * r;
        let disc = bq * bq - dd * c;
        if disc > 0.0 {
            let s = disc.sqrt();
            for t in [(-bq - s) / dd, (-bq + s) / dd] {
                if t > 0.0 && t < 1.0 {
                    pts.push([a[0] + t * d[0], a[1] + t * d[1]]);
                }
            }
        }
    }
    pts.push(b);
    let mut area = 0.0;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let m = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
        let cr = p[0] * q[1] - p[1] * q[0];
        if m[0] * m[0] + m[1] * m[1] <= r * r {
            area += cr / 2.0;
        } else {
            let ang = cr.atan2(p[0] * q[0] + p[1] * q[1]);
            area += r * r * ang / 2.0;
        }
    }
    area
}

/// Area of `polygon ∩ disk(center, r)` for a counter-clockwise convex polygon.
pub fn polygon_disk_area(vertices: &[Point], center: &[f64], r: f64) -> f64 {
    let k = vertices.len();
    let rel = |p: &Point| [p[0] - center[0], p[1] - center[1]];
    (0..k)
        .map(|i| triangle_disk_area(rel(&vertices[i]), rel(&vertices[(i + 1) % k]), r))
        .sum::<f64>()
        .max(0.0)
}

/// Area of the intersection of two disks.
pub fn disk_disk_area(c1: &[f64], r1: f64, c2: &[f64], r2: f64) -> f64 {
    let d = crate::linalg::dist(c1, c2);
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let m = r1.min(r2);
        return PI * m * m;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    r1 * r1 * (a1 - a1.sin() * a1.cos()) + r2 * r2 * (a2 - a2.sin() * a2.cos())
}

/// Union of disjoint angular intervals inside `[0, 2π]`.
#[derive(Clone, Debug)]
struct ArcSet(Vec<(f64, f64)>);

impl ArcSet {
    fn full() -> Self {
        ArcSet(vec![(0.0, TAU)])
    }

    /// Intersect with the arc starting at `start` of length `len`.
    fn intersect_arc(&mut self, start: f64, len: f64) {
        if len >= TAU {
            return;
        }
        if len <= 0.0 {
            self.0.clear();
            return;
        }
        let s = start.rem_euclid(TAU);
        let e = s + len;
        let pieces: Vec<(f64, f64)> = if e <= TAU {
            vec![(s, e)]
        } else {
            vec![(0.0, e - TAU), (s, TAU)]
        };
        let mut out = Vec::new();
        for &(a, b) in &self.0 {
            for &(c, d) in &pieces {
                let lo = a.max(c);
                let hi = b.min(d);
                if hi > lo {
                    out.push((lo, hi));
                }
            }
        }
        self.0 = out;
    }

    fn length(&self) -> f64 {
        self.0.iter().map(|(a, b)| b - a).sum()
    }
}

/// Length of the circle `∂B(center, r)` lying inside the intersection of
/// the half-planes.
pub fn circle_length_in_halfplanes(halfspaces: &[Halfspace], center: &[f64], r: f64) -> f64 {
    let mut arcs = ArcSet::full();
    for h in halfspaces {
        // <n, c> + r cos(theta - phi) <= b
        let t = h.slack(center) / r;
        if t >= 1.0 {
            continue;
        }
        if t <= -1.0 {
            return 0.0;
        }
        let phi = h.normal[1].atan2(h.normal[0]);
        let a = t.acos();
        arcs.intersect_arc(phi + a, TAU - 2.0 * a);
        if arcs.0.is_empty() {
            return 0.0;
        }
    }
    r * arcs.length()
}

/// Length of the circle `∂B(x, r)` lying inside the disk `B(c, big_r)`.
pub fn circle_length_in_disk(c: &[f64], big_r: f64, x: &[f64], r: f64) -> f64 {
    let d = crate::linalg::dist(c, x);
    if d + r <= big_r {
        return TAU * r;
    }
    if r >= d + big_r || d >= r + big_r {
        return 0.0;
    }
    // |x - c + r u|^2 <= R^2  <=>  cos(angle(u, x - c)) <= (R^2 - d^2 - r^2) / (2 r d)
    let t = ((big_r * big_r - d * d - r * r) / (2.0 * r * d)).clamp(-1.0, 1.0);
    r * (TAU - 2.0 * t.acos())
}

/// Sutherland-Hodgman clip of a convex polygon by `<u, x> <= s`.
pub fn clip_polygon(vertices: &[Point], u: &[f64], s: f64) -> Vec<Point> {
    let k = vertices.len();
    let mut out = Vec::with_capacity(k + 1);
    for i in 0..k {
        let p = &vertices[i];
        let q = &vertices[(i + 1) % k];
        let fp = dot(u, p) - s;
        let fq = dot(u, q) - s;
        if fp <= 0.0 {
            out.push(p.clone());
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push(vec![p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Area of `polygon ∩ {<u, x> <= s}` for a unit vector `u`.
pub fn polygon_halfplane_area(vertices: &[Point], u: &[f64], s: f64) -> f64 {
    let c = clip_polygon(vertices, u, s);
    if c.len() < 3 {
        0.0
    } else {
        polygon_area(&c).max(0.0)
    }
}

/// Length of the chord `{<u, x> = s}` inside the polygon given by its
/// half-planes.
pub fn polygon_chord_length(halfspaces: &[Halfspace], u: &[f64], s: f64) -> f64 {
    let p0 = [s * u[0], s * u[1]];
    let w = [-u[1], u[0]];
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for h in halfspaces {
        let a = dot(&h.normal, &w);
        let b = h.slack(&p0);
        if a.abs() < 1e-300 {
            if b < 0.0 {
                return 0.0;
            }
        } else if a > 0.0 {
            hi = hi.min(b / a);
        } else {
            lo = lo.max(b / a);
        }
    }
    (hi - lo).max(0.0)
}

/// Area of the disk `B(c, r)` on the side `<u, x> <= s`.
pub fn disk_halfplane_area(c: &[f64], r: f64, u: &[f64], s: f64) -> f64 {
    let d = (s - dot(u, c)) / r;
    if d >= 1.0 {
        return PI * r * r;
    }
    if d <= -1.0 {
        return 0.0;
    }
    // Area below height d*r of the disk: r^2 (acos(-d) + d sqrt(1 - d^2))
    r * r * ((-d).acos() + d * (1.0 - d * d).sqrt())
}

pub fn disk_chord_length(c: &[f64], r: f64, u: &[f64], s: f64) -> f64 {
    let d = s - dot(u, c);
    if d.abs() >= r {
        0.0
    } else {
        2.0 * (r * r - d * d).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]
    }

    fn square_halfspaces() -> Vec<Halfspace> {
        vec![
            Halfspace {
                normal: vec![0.0, -1.0],
                offset: 0.0,
            },
            Halfspace {
                normal: vec![1.0, 0.0],
                offset: 1.0,
            },
            Halfspace {
                normal: vec![0.0, 1.0],
                offset: 1.0,
            },
            Halfspace {
                normal: vec![-1.0, 0.0],
                offset: 0.0,
            },
        ]
    }

    #[test]
    fn disk_clipped_by_square() {
        let s = square();
        assert!((polygon_disk_area(&s, &[0.5, 0.5], 0.25) - PI / 16.0).abs() < 1e-14);
        assert!((polygon_disk_area(&s, &[0.0, 0.0], 0.25) - PI / 64.0).abs() < 1e-14);
        assert!((polygon_disk_area(&s, &[0.5, 0.0], 0.25) - PI / 32.0).abs() < 1e-14);
        assert!((polygon_disk_area(&s, &[0.5, 0.5], 10.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn arcs_inside_square() {
        let h = square_halfspaces();
        assert!((circle_length_in_halfplanes(&h, &[0.0, 0.0], 0.25) - PI / 8.0).abs() < 1e-14);
        assert!((circle_length_in_halfplanes(&h, &[0.5, 0.0], 0.25) - PI / 4.0).abs() < 1e-14);
        assert!((circle_length_in_halfplanes(&h, &[0.5, 0.5], 0.25) - PI / 2.0).abs() < 1e-14);
        assert_eq!(circle_length_in_halfplanes(&h, &[0.5, 0.5], 1.0), 0.0);
    }

    #[test]
    fn lens_and_disk_arcs() {
        assert!((disk_disk_area(&[0.0, 0.0], 1.0, &[0.0, 0.0], 0.5) - PI / 4.0).abs() < 1e-15);
        // Two unit disks at distance 1: 2π/3 - √3/2.
        let lens = disk_disk_area(&[0.0, 0.0], 1.0, &[1.0, 0.0], 1.0);
        assert!((lens - (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0)).abs() < 1e-14);
        // Circle of radius 1 about a point on the unit circle: arc of angle 2π/3 inside.
        let arc = circle_length_in_disk(&[0.0, 0.0], 1.0, &[1.0, 0.0], 1.0);
        assert!((arc - 2.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn halfplane_cuts() {
        let s = square();
        assert!((polygon_halfplane_area(&s, &[1.0, 0.0], 0.3) - 0.3).abs() < 1e-15);
        assert!((polygon_chord_length(&square_halfspaces(), &[1.0, 0.0], 0.3) - 1.0).abs() < 1e-15);
        let u = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        assert!((polygon_chord_length(&square_halfspaces(), &u, u[0]) - 2f64.sqrt()).abs() < 1e-14);
        assert!((disk_halfplane_area(&[0.0, 0.0], 1.0, &[1.0, 0.0], 0.0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(disk_chord_length(&[0.0, 0.0], 1.0, &[0.0, 1.0], 0.0), 2.0);
    }
}
