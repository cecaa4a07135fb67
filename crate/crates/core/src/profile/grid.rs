//! Cell grids over a body, occupied-cell regions, and the weighted cut
//! graph whose cut value is the discrete relative perimeter.

use crate::convex::{ConvexBody, Halfspace, Shape};
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, sub, Point};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// A closed convex set the grid is laid over. Bodies are bounded; cones
/// are not, which is why a grid window is given separately.
pub trait Domain: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
    /// Fraction of the segment `a -> b` lying inside, given `a` inside.
    fn exit_fraction(&self, a: &[f64], b: &[f64]) -> f64;
    /// Nearest point of the domain.
    fn project(&self, x: &[f64]) -> Point;
}

fn halfspace_exit(halfspaces: &[Halfspace], a: &[f64], b: &[f64]) -> f64 {
    let d = sub(b, a);
    let mut t: f64 = 1.0;
    for h in halfspaces {
        let den = dot(&h.normal, &d);
        if den > 0.0 {
            t = t.min(h.slack(a).max(0.0) / den);
        }
    }
    t
}

/// Closest point of a planar intersection of half-planes: either `x`, a
/// projection onto one boundary line, or a corner.
fn halfspace_project_2d(halfspaces: &[Halfspace], x: &[f64]) -> Point {
    let feasible = |p: &[f64]| halfspaces.iter().all(|h| h.slack(p) >= -1e-12 * (1.0 + h.offset.abs()));
    if feasible(x) {
        return x.to_vec();
    }
    let mut best: Option<(f64, Point)> = None;
    let mut consider = |p: Point| {
        if feasible(&p) {
            let d = dist(&p, x);
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, p));
            }
        }
    };
    for h in halfspaces {
        let s = h.slack(x);
        consider(x.iter().zip(&h.normal).map(|(xi, ni)| xi + s * ni).collect());
    }
    for i in 0..halfspaces.len() {
        for j in i + 1..halfspaces.len() {
            let (a, b) = (&halfspaces[i], &halfspaces[j]);
            let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
            if det.abs() > 1e-12 {
                consider(vec![
                    (a.offset * b.normal[1] - b.offset * a.normal[1]) / det,
                    (a.normal[0] * b.offset - b.normal[0] * a.offset) / det,
                ]);
            }
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| x.to_vec())
}

impl Domain for ConvexBody {
    fn dim(&self) -> usize {
        ConvexBody::dim(self)
    }

    fn contains(&self, x: &[f64]) -> bool {
        ConvexBody::contains(self, x, 0.0)
    }

    fn exit_fraction(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.shape() {
            Shape::Polytope { halfspaces, .. } => halfspace_exit(halfspaces, a, b),
            Shape::Ball { center, radius } => {
                let d = sub(b, a);
                let w = sub(a, center);
                let dd = dot(&d, &d);
                let bq = dot(&w, &d);
                let c = dot(&w, &w) - radius * radius;
                let disc = (bq * bq - dd * c).max(0.0);
                ((-bq + disc.sqrt()) / dd).clamp(0.0, 1.0)
            }
        }
    }

    fn project(&self, x: &[f64]) -> Point {
        match self.shape() {
            Shape::Ball { .. } => self.pull_inside(x),
            Shape::Polytope { halfspaces, .. } if self.dim() == 2 => halfspace_project_2d(halfspaces, x),
            Shape::Polytope { .. } => self.pull_inside(x),
        }
    }
}

/// An intersection of half-spaces, possibly unbounded (a cone, a slab).
#[derive(Clone, Debug)]
pub struct HalfspaceDomain {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
}

impl Domain for HalfspaceDomain {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) >= 0.0)
    }

    fn exit_fraction(&self, a: &[f64], b: &[f64]) -> f64 {
        halfspace_exit(&self.halfspaces, a, b)
    }

    fn project(&self, x: &[f64]) -> Point {
        if self.dim == 2 {
            halfspace_project_2d(&self.halfspaces, x)
        } else {
            x.to_vec()
        }
    }
}

/// Neighbourhood used to measure perimeter on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// Unit-normal faces, weight `h^n` each. Metrically anisotropic: a
    /// diagonal interface is overcounted by up to `√2` in the plane.
    Faces,
    /// Planar 16-neighbourhood with Cauchy-Crofton weights, isotropic to
    /// within about 1.5%.
    Crofton,
}

const CROFTON_FAMILIES: [(i64, i64); 8] = [(1, 0), (2, 1), (1, 1), (1, 2), (0, 1), (-1, 2), (-1, 1), (-2, 1)];

impl Stencil {
    pub fn default_for(dim: usize) -> Self {
        if dim == 2 {
            Stencil::Crofton
        } else {
            Stencil::Faces
        }
    }

    /// `(offset, weight)` pairs, one per undirected neighbour family.
    pub fn offsets(self, dim: usize, h: f64) -> Result<Vec<(Vec<i64>, f64)>> {
        match self {
            Stencil::Faces => Ok((0..dim)
                .map(|k| {
                    let mut o = vec![0i64; dim];
                    o[k] = 1;
                    (o, h.powi(dim as i32 - 1))
                })
                .collect()),
            Stencil::Crofton => {
                if dim != 2 {
                    return Err(Error::MethodDimensionMismatch {
                        method: "Crofton stencil",
                        dim,
                    });
                }
                let ang: Vec<f64> = CROFTON_FAMILIES
                    .iter()
                    .map(|&(x, y)| (y as f64).atan2(x as f64))
                    .collect();
                let m = ang.len();
                Ok((0..m)
                    .map(|k| {
                        let next = if k + 1 < m {
                            ang[k + 1]
                        } else {
                            ang[0] + std::f64::consts::PI
                        };
                        let prev = if k > 0 {
                            ang[k - 1]
                        } else {
                            ang[m - 1] - std::f64::consts::PI
                        };
                        let dphi = (next - prev) / 2.0;
                        let (x, y) = CROFTON_FAMILIES[k];
                        let len = ((x * x + y * y) as f64).sqrt();
                        (vec![x, y], h * dphi / (2.0 * len))
                    })
                    .collect())
            }
        }
    }
}

/// Axis-aligned cells of side `h` over a window, with the cells whose
/// centers lie in the domain marked as allowed.
#[derive(Clone, Debug)]
pub struct Grid {
    pub dim: usize,
    pub resolution: usize,
    pub origin: Point,
    pub h: f64,
    pub shape: Vec<usize>,
    inside: Vec<bool>,
    allowed: Vec<usize>,
}

impl Grid {
    /// Grid over the bounding box of the body, `resolution` cells along
    /// its longest side.
    pub fn for_body(body: &ConvexBody, resolution: usize) -> Result<Self> {
        let (lo, hi) = body.bounding_box();
        Self::over_window(body, &lo, &hi, resolution)
    }

    /// Grid over the window `[lo, hi]`; cell side is the longest window
    /// side divided by `resolution`.
    pub fn over_window<D: Domain + ?Sized>(domain: &D, lo: &[f64], hi: &[f64], resolution: usize) -> Result<Self> {
        let dim = domain.dim();
        if resolution == 0 {
            return Err(Error::InvalidInput("resolution must be positive".into()));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::DimensionMismatch(lo.len(), dim));
        }
        let ext: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
        let h = ext.iter().cloned().fold(0.0, f64::max) / resolution as f64;
        if !(h > 0.0) {
            return Err(Error::InvalidInput("empty grid window".into()));
        }
        let shape: Vec<usize> = ext.iter().map(|e| ((e / h - 1e-9).ceil() as usize).max(1)).collect();
        let total: usize = shape.iter().product();
        let mut g = Self {
            dim,
            resolution,
            origin: lo.to_vec(),
            h,
            shape,
            inside: Vec::new(),
            allowed: Vec::new(),
        };
        g.inside = (0..total).map(|i| domain.contains(&g.cell_center(i))).collect();
        g.allowed = (0..total).filter(|&i| g.inside[i]).collect();
        Ok(g)
    }

    pub fn cell_count(&self) -> usize {
        self.inside.len()
    }

    /// Indices of cells whose centers lie in the domain, ascending.
    pub fn allowed_cells(&self) -> &[usize] {
        &self.allowed
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Volume of the domain as the grid sees it.
    pub fn measured_volume(&self) -> f64 {
        self.allowed.len() as f64 * self.cell_volume()
    }

    /// Row-major coordinates, first axis fastest.
    pub fn coords(&self, mut idx: usize) -> Vec<i64> {
        let mut c = Vec::with_capacity(self.dim);
        for &n in &self.shape {
            c.push((idx % n) as i64);
            idx /= n;
        }
        c
    }

    pub fn index(&self, coords: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for k in (0..self.dim).rev() {
            let c = coords[k];
            if c < 0 || c as usize >= self.shape[k] {
                return None;
            }
            idx = idx * self.shape[k] + c as usize;
        }
        Some(idx)
    }

    pub fn center_of_coords(&self, coords: &[i64]) -> Point {
        coords
            .iter()
            .zip(&self.origin)
            .map(|(&c, o)| o + (c as f64 + 0.5) * self.h)
            .collect()
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        self.center_of_coords(&self.coords(idx))
    }

    /// Allowed cell whose center is nearest to `p`, searched in a small
    /// neighbourhood of the cell containing `p`.
    pub fn nearest_allowed(&self, p: &[f64]) -> Option<usize> {
        let base: Vec<i64> = p
            .iter()
            .zip(&self.origin)
            .zip(&self.shape)
            .map(|((x, o), &n)| (((x - o) / self.h).floor() as i64).clamp(0, n as i64 - 1))
            .collect();
        for radius in 1..=4i64 {
            let mut best: Option<(f64, usize)> = None;
            let span = (2 * radius + 1) as usize;
            let count = span.pow(self.dim as u32);
            for m in 0..count {
                let mut r = m;
                let c: Vec<i64> = base
                    .iter()
                    .map(|b| {
                        let o = (r % span) as i64 - radius;
                        r /= span;
                        b + o
                    })
                    .collect();
                if let Some(i) = self.index(&c) {
                    if self.inside[i] {
                        let d = dist(&self.center_of_coords(&c), p);
                        if best.map_or(true, |(bd, bi)| d < bd || (d == bd && i < bi)) {
                            best = Some((d, i));
                        }
                    }
                }
            }
            if let Some((_, i)) = best {
                return Some(i);
            }
        }
        None
    }

    /// Face neighbours (±1 along one axis) inside the window.
    pub fn face_neighbors(&self, idx: usize) -> Vec<usize> {
        let c = self.coords(idx);
        let mut out = Vec::with_capacity(2 * self.dim);
        for k in 0..self.dim {
            for s in [-1i64, 1] {
                let mut d = c.clone();
                d[k] += s;
                if let Some(j) = self.index(&d) {
                    out.push(j);
                }
            }
        }
        out
    }
}

/// A set of allowed cells of a grid: the discrete stand-in for a finite
/// perimeter set `E ⊂ C`.
#[derive(Clone, Debug)]
pub struct GridRegion {
    pub grid: Arc<Grid>,
    /// Occupied cell indices, ascending.
    pub cells: Vec<usize>,
}

impl GridRegion {
    pub fn new(grid: Arc<Grid>, mut cells: Vec<usize>) -> Result<Self> {
        cells.sort_unstable();
        cells.dedup();
        if let Some(&bad) = cells.iter().find(|&&i| i >= grid.cell_count() || !grid.is_inside(i)) {
            return Err(Error::InvalidInput(format!(
                "cell {bad} is not an in-body cell of the grid"
            )));
        }
        Ok(Self { grid, cells })
    }

    pub fn volume(&self) -> f64 {
        self.cells.len() as f64 * self.grid.cell_volume()
    }

    /// Occupancy indexed by grid cell.
    pub fn occupancy(&self) -> Vec<bool> {
        let mut occ = vec![false; self.grid.cell_count()];
        for &i in &self.cells {
            occ[i] = true;
        }
        occ
    }

    pub fn centers(&self) -> Vec<Point> {
        self.cells.iter().map(|&i| self.grid.cell_center(i)).collect()
    }

    /// In-body cells not in the region.
    pub fn complement(&self) -> GridRegion {
        let occ = self.occupancy();
        GridRegion {
            grid: self.grid.clone(),
            cells: self.grid.allowed_cells().iter().copied().filter(|&i| !occ[i]).collect(),
        }
    }

    /// Cells (of either state) with a face neighbour of the other state
    /// among in-body cells, skipping cells that touch the outside of the
    /// domain: the discrete free boundary.
    pub fn free_boundary_cells(&self) -> Vec<usize> {
        let g = &self.grid;
        let occ = self.occupancy();
        g.allowed_cells()
            .iter()
            .copied()
            .filter(|&i| {
                let nb = g.face_neighbors(i);
                let touches_outside = nb.len() < 2 * g.dim || nb.iter().any(|&j| !g.is_inside(j));
                !touches_outside && nb.iter().any(|&j| occ[j] != occ[i])
            })
            .collect()
    }

    /// Occupied cells with at least one unoccupied in-body face neighbour.
    pub fn inner_boundary_cells(&self) -> Vec<usize> {
        let g = &self.grid;
        let occ = self.occupancy();
        self.cells
            .iter()
            .copied()
            .filter(|&i| g.face_neighbors(i).iter().any(|&j| g.is_inside(j) && !occ[j]))
            .collect()
    }
}

/// Undirected weighted graph on the allowed cells. The relative perimeter
/// of an occupancy is the total weight of edges joining occupied and free
/// cells plus the unary weight of occupied cells (edges to in-domain cells
/// beyond the window, which are always free).
#[derive(Clone, Debug)]
pub struct CutGraph {
    pub stencil: Stencil,
    /// Grid index of each local vertex.
    pub cells: Vec<usize>,
    /// Local index of each grid cell, `u32::MAX` when not allowed.
    pub local: Vec<u32>,
    pub edges: Vec<(u32, u32, f64)>,
    pub unary: Vec<f64>,
    pub adj: Vec<Vec<(u32, f64)>>,
}

impl CutGraph {
    pub fn build<D: Domain + ?Sized>(grid: &Grid, domain: &D, stencil: Stencil) -> Result<Self> {
        let offsets = stencil.offsets(grid.dim, grid.h)?;
        let cells = grid.allowed_cells().to_vec();
        let mut local = vec![u32::MAX; grid.cell_count()];
        for (k, &i) in cells.iter().enumerate() {
            local[i] = k as u32;
        }
        let mut weights: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let mut unary = vec![0.0; cells.len()];
        for (a, &i) in cells.iter().enumerate() {
            let c = grid.coords(i);
            let ci = grid.center_of_coords(&c);
            for (o, w) in &offsets {
                for sign in [1i64, -1] {
                    let cj: Vec<i64> = c.iter().zip(o).map(|(x, y)| x + sign * y).collect();
                    match grid.index(&cj) {
                        Some(j) if grid.is_inside(j) => {
                            if sign == 1 {
                                let b = local[j];
                                let key = if (a as u32) < b { (a as u32, b) } else { (b, a as u32) };
                                *weights.entry(key).or_insert(0.0) += w;
                            }
                        }
                        idx => {
                            let pj = grid.center_of_coords(&cj);
                            if idx.is_none() && domain.contains(&pj) {
                                unary[a] += w;
                            } else if stencil == Stencil::Crofton {
                                // The pair straddles the boundary: the outside end is
                                // represented by the allowed cell nearest its projection,
                                // weighted by the share of the segment inside the domain.
                                let frac = domain.exit_fraction(&ci, &pj);
                                if frac <= 0.0 {
                                    continue;
                                }
                                if let Some(k) = grid.nearest_allowed(&domain.project(&pj)) {
                                    let b = local[k];
                                    if b != a as u32 {
                                        let key = if (a as u32) < b { (a as u32, b) } else { (b, a as u32) };
                                        // Each straddling pair is seen once, from its inside end.
                                        *weights.entry(key).or_insert(0.0) += w * frac;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let edges: Vec<(u32, u32, f64)> = weights.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        let mut adj = vec![Vec::new(); cells.len()];
        for &(a, b, w) in &edges {
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
        }
        Ok(Self {
            stencil,
            cells,
            local,
            edges,
            unary,
            adj,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cut value of a local occupancy, summed in a fixed order.
    pub fn perimeter(&self, occ: &[bool]) -> f64 {
        let mut p = 0.0;
        for &(a, b, w) in &self.edges {
            if occ[a as usize] != occ[b as usize] {
                p += w;
            }
        }
        for (k, &u) in self.unary.iter().enumerate() {
            if occ[k] {
                p += u;
            }
        }
        p
    }

    /// Change in cut value if local vertex `i` flips.
    #[inline]
    pub fn flip_delta(&self, occ: &[bool], i: usize) -> f64 {
        let s = occ[i];
        let mut d = if s { -self.unary[i] } else { self.unary[i] };
        for &(j, w) in &self.adj[i] {
            if occ[j as usize] == s {
                d += w;
            } else {
                d -= w;
            }
        }
        d
    }

    pub fn local_occupancy(&self, region: &GridRegion) -> Vec<bool> {
        let mut occ = vec![false; self.cells.len()];
        for &i in &region.cells {
            let l = self.local[i];
            if l != u32::MAX {
                occ[l as usize] = true;
            }
        }
        occ
    }

    pub fn region_perimeter(&self, region: &GridRegion) -> f64 {
        self.perimeter(&self.local_occupancy(region))
    }
}
