//! Discrete perimeter minimisation at fixed cell count: exhaustive
//! enumeration for tiny grids, seeded simulated annealing otherwise.

use super::grid::{CutGraph, Domain, Grid, GridRegion, Stencil};
use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, round12, Point};
use crate::par;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const EXHAUSTIVE_MAX_CELLS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    /// Initial temperature in units of `h^n`.
    pub t0: f64,
    pub cooling: f64,
    pub sweeps: usize,
    pub restarts: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            t0: 2.0,
            cooling: 0.995,
            sweeps: 400,
            restarts: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleStrategy {
    Exhaustive,
    Anneal { seed: u64, schedule: AnnealSchedule },
}

impl OracleStrategy {
    pub fn anneal(seed: u64) -> Self {
        OracleStrategy::Anneal {
            seed,
            schedule: AnnealSchedule::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub region: GridRegion,
    pub perimeter: f64,
    pub target_cells: usize,
    /// Final perimeter of every restart, in restart order (annealing only).
    pub restart_perimeters: Vec<f64>,
}

/// A prepared grid problem: grid, cut graph, and anchor points used to
/// seed initial regions.
#[derive(Clone, Debug)]
pub struct OracleProblem {
    pub grid: Arc<Grid>,
    pub graph: CutGraph,
    pub anchors: Vec<Point>,
}

impl OracleProblem {
    pub fn for_body(body: &ConvexBody, resolution: usize, stencil: Stencil) -> Result<Self> {
        let grid = Grid::for_body(body, resolution)?;
        let graph = CutGraph::build(&grid, body, stencil)?;
        let mut anchors = body.vertices().to_vec();
        anchors.extend(body.boundary_points(16));
        Ok(Self {
            grid: Arc::new(grid),
            graph,
            anchors,
        })
    }

    pub fn over_window<D: Domain + ?Sized>(
        domain: &D,
        lo: &[f64],
        hi: &[f64],
        resolution: usize,
        stencil: Stencil,
        anchors: Vec<Point>,
    ) -> Result<Self> {
        let grid = Grid::over_window(domain, lo, hi, resolution)?;
        let graph = CutGraph::build(&grid, domain, stencil)?;
        Ok(Self {
            grid: Arc::new(grid),
            graph,
            anchors,
        })
    }

    /// Cell count for a target volume.
    pub fn target_cells(&self, v_target: f64) -> Result<usize> {
        let t = (v_target / self.grid.cell_volume()).round();
        let m = self.graph.len();
        if !(t >= 1.0) || t as usize >= m {
            return Err(Error::ResolutionTooCoarse {
                target: if t.is_finite() && t > 0.0 { t as usize } else { 0 },
                available: m,
            });
        }
        Ok(t as usize)
    }

    pub fn solve_volume(&self, v_target: f64, strategy: OracleStrategy) -> Result<OracleResult> {
        let t = self.target_cells(v_target)?;
        self.solve(t, strategy)
    }

    pub fn solve(&self, target: usize, strategy: OracleStrategy) -> Result<OracleResult> {
        let m = self.graph.len();
        if target == 0 || target >= m {
            return Err(Error::ResolutionTooCoarse { target, available: m });
        }
        let (occ, restart_perimeters) = match strategy {
            OracleStrategy::Exhaustive => (exhaustive(&self.graph, target)?, Vec::new()),
            OracleStrategy::Anneal { seed, schedule } => anneal(self, target, seed, &schedule),
        };
        let cells = (0..m).filter(|&k| occ[k]).map(|k| self.graph.cells[k]).collect();
        Ok(OracleResult {
            perimeter: self.graph.perimeter(&occ),
            region: GridRegion::new(self.grid.clone(), cells)?,
            target_cells: target,
            restart_perimeters,
        })
    }
}

/// Minimum-perimeter grid region of volume `v_target` in the body.
/// Planar bodies use the Crofton stencil, others unit faces.
pub fn grid_oracle(
    body: &ConvexBody,
    v_target: f64,
    resolution: usize,
    strategy: OracleStrategy,
) -> Result<OracleResult> {
    OracleProblem::for_body(body, resolution, Stencil::default_for(body.dim()))?.solve_volume(v_target, strategy)
}

fn exhaustive(graph: &CutGraph, target: usize) -> Result<Vec<bool>> {
    let m = graph.len();
    if m > EXHAUSTIVE_MAX_CELLS {
        return Err(Error::TooManyCells {
            cells: m,
            max: EXHAUSTIVE_MAX_CELLS,
        });
    }
    let value = |mask: u32| {
        let mut p = 0.0;
        for &(a, b, w) in &graph.edges {
            if (mask >> a ^ mask >> b) & 1 == 1 {
                p += w;
            }
        }
        for (k, &u) in graph.unary.iter().enumerate() {
            if mask >> k & 1 == 1 {
                p += u;
            }
        }
        p
    };
    let limit: u64 = 1u64 << m;
    let mut mask: u64 = (1u64 << target) - 1;
    let mut best = (f64::INFINITY, mask);
    while mask < limit {
        let p = value(mask as u32);
        if p < best.0 {
            best = (p, mask);
        }
        // Next subset of the same size (Gosper).
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    Ok((0..m).map(|k| best.1 >> k & 1 == 1).collect())
}

/// Sets of fixed size with O(1) random pick, insertion, and removal.
struct IndexSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl IndexSet {
    fn new(n: usize) -> Self {
        Self {
            items: Vec::new(),
            pos: vec![u32::MAX; n],
        }
    }
    fn insert(&mut self, i: usize) {
        self.pos[i] = self.items.len() as u32;
        self.items.push(i as u32);
    }
    fn remove(&mut self, i: usize) {
        let p = self.pos[i] as usize;
        let last = *self.items.last().unwrap();
        self.items[p] = last;
        self.pos[last as usize] = p as u32;
        self.items.pop();
        self.pos[i] = u32::MAX;
    }
    fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        self.items[rng.random_range(0..self.items.len())] as usize
    }
}

fn initial_candidates(problem: &OracleProblem, target: usize, seed: u64) -> Vec<Vec<bool>> {
    let g = &problem.grid;
    let graph = &problem.graph;
    let centers: Vec<Point> = graph.cells.iter().map(|&i| g.cell_center(i)).collect();
    let take_smallest = |key: &dyn Fn(usize) -> f64| {
        let mut order: Vec<usize> = (0..centers.len()).collect();
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        let mut occ = vec![false; centers.len()];
        for &k in &order[..target] {
            occ[k] = true;
        }
        occ
    };
    let mut out = Vec::new();
    let mut rng = par::rng_for(par::derive_seed(seed, 0x1A17), 0);
    let mut balls: Vec<Point> = problem.anchors.clone();
    for _ in 0..32 {
        balls.push(centers[rng.random_range(0..centers.len())].clone());
    }
    for a in &balls {
        out.push(take_smallest(&|k| dist(&centers[k], a)));
    }
    let dim = g.dim;
    for j in 0..32 {
        let u: Point = if dim == 2 {
            let t = std::f64::consts::TAU * j as f64 / 32.0;
            vec![t.cos(), t.sin()]
        } else {
            crate::convex::UnitSphereSamples::fibonacci(dim, 32).points[j].clone()
        };
        out.push(take_smallest(&|k| dot(&centers[k], &u)));
    }
    out
}

fn anneal(problem: &OracleProblem, target: usize, seed: u64, schedule: &AnnealSchedule) -> (Vec<bool>, Vec<f64>) {
    let graph = &problem.graph;
    let mut inits: Vec<(f64, usize, Vec<bool>)> = initial_candidates(problem, target, seed)
        .into_iter()
        .enumerate()
        .map(|(k, occ)| (graph.perimeter(&occ), k, occ))
        .collect();
    inits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    inits.dedup_by(|a, b| a.2 == b.2);
    let restarts = schedule.restarts.max(1);
    let starts: Vec<Vec<bool>> = (0..restarts).map(|r| inits[r % inits.len()].2.clone()).collect();
    let t0 = schedule.t0 * problem.grid.h.powi(problem.grid.dim as i32 - 1);

    let results: Vec<(f64, Vec<bool>)> = par::map_range(restarts, |r| {
        let mut rng = par::rng_for(seed, r as u64);
        let occ = anneal_one(graph, starts[r].clone(), t0, schedule, &mut rng);
        let occ = greedy_smooth(graph, occ);
        (round12(graph.perimeter(&occ)), occ)
    });
    let best = results
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.0.total_cmp(&b.0).then(i.cmp(j)))
        .map(|(i, _)| i)
        .unwrap();
    let per = results.iter().map(|r| r.0).collect();
    (results[best].1.clone(), per)
}

/// Occupied and free cells on the interface, maintained under flips via
/// per-cell counts of opposite-state neighbours.
struct Frontier {
    opp: Vec<u32>,
    inn: IndexSet,
    out: IndexSet,
}

impl Frontier {
    fn new(graph: &CutGraph, occ: &[bool]) -> Self {
        let m = graph.len();
        let opp: Vec<u32> = (0..m)
            .map(|i| graph.adj[i].iter().filter(|&&(j, _)| occ[j as usize] != occ[i]).count() as u32)
            .collect();
        let mut f = Self {
            opp,
            inn: IndexSet::new(m),
            out: IndexSet::new(m),
        };
        for i in 0..m {
            f.refresh(graph, occ, i);
        }
        f
    }

    fn on_frontier(&self, graph: &CutGraph, occ: &[bool], i: usize) -> bool {
        self.opp[i] > 0 || (occ[i] && graph.unary[i] > 0.0)
    }

    fn refresh(&mut self, graph: &CutGraph, occ: &[bool], i: usize) {
        let want_in = occ[i] && self.on_frontier(graph, occ, i);
        let want_out = !occ[i] && self.on_frontier(graph, occ, i);
        let is_in = self.inn.pos[i] != u32::MAX;
        let is_out = self.out.pos[i] != u32::MAX;
        if is_in && !want_in {
            self.inn.remove(i);
        }
        if is_out && !want_out {
            self.out.remove(i);
        }
        if want_in && !is_in {
            self.inn.insert(i);
        }
        if want_out && !is_out {
            self.out.insert(i);
        }
    }

    /// Flip `i` in `occ` and update the bookkeeping.
    fn flip(&mut self, graph: &CutGraph, occ: &mut [bool], i: usize) {
        occ[i] = !occ[i];
        self.opp[i] = graph.adj[i].len() as u32 - self.opp[i];
        for &(j, _) in &graph.adj[i] {
            let j = j as usize;
            if occ[j] == occ[i] {
                self.opp[j] -= 1;
            } else {
                self.opp[j] += 1;
            }
        }
        self.refresh(graph, occ, i);
        for &(j, _) in &graph.adj[i] {
            self.refresh(graph, occ, j as usize);
        }
    }
}

fn anneal_one<R: Rng>(graph: &CutGraph, mut occ: Vec<bool>, t0: f64, s: &AnnealSchedule, rng: &mut R) -> Vec<bool> {
    let m = graph.len();
    let mut fr = Frontier::new(graph, &occ);
    let mut cur = graph.perimeter(&occ);
    let mut best = (cur, occ.clone());
    let mut temp = t0;
    // One sweep attempts one swap per cell of the smaller phase.
    let target = occ.iter().filter(|&&o| o).count();
    let per_sweep = target.min(m - target).max(1);
    for _ in 0..s.sweeps {
        for _ in 0..per_sweep {
            if fr.inn.items.is_empty() || fr.out.items.is_empty() {
                break;
            }
            let i = fr.inn.pick(rng);
            let j = fr.out.pick(rng);
            let d1 = graph.flip_delta(&occ, i);
            occ[i] = false;
            let d2 = graph.flip_delta(&occ, j);
            occ[i] = true;
            let delta = d1 + d2;
            if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
                fr.flip(graph, &mut occ, i);
                fr.flip(graph, &mut occ, j);
                cur += delta;
                if cur < best.0 - 1e-12 * best.0.abs() {
                    best = (cur, occ.clone());
                }
            }
        }
        temp *= s.cooling;
    }
    best.1
}

/// Steepest-descent swaps until no swap lowers the cut. Small graphs try
/// every pair; larger ones the 16 best removals against the 16 best
/// additions.
fn greedy_smooth(graph: &CutGraph, mut occ: Vec<bool>) -> Vec<bool> {
    let m = graph.len();
    let full = m <= 64;
    let mut fr = Frontier::new(graph, &occ);
    for _ in 0..10 * m.max(1) {
        let (ins, outs): (Vec<usize>, Vec<usize>) = if full {
            (
                (0..m).filter(|&k| occ[k]).collect(),
                (0..m).filter(|&k| !occ[k]).collect(),
            )
        } else {
            let mut a = fr.inn.items.iter().map(|&k| k as usize).collect::<Vec<_>>();
            let mut b = fr.out.items.iter().map(|&k| k as usize).collect::<Vec<_>>();
            a.sort_unstable();
            b.sort_unstable();
            (a, b)
        };
        let mut ins: Vec<(f64, usize)> = ins.into_iter().map(|k| (graph.flip_delta(&occ, k), k)).collect();
        let mut outs: Vec<(f64, usize)> = outs.into_iter().map(|k| (graph.flip_delta(&occ, k), k)).collect();
        if !full {
            ins.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            outs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ins.truncate(16);
            outs.truncate(16);
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for &(_, i) in &ins {
            let d1 = graph.flip_delta(&occ, i);
            occ[i] = false;
            for &(_, j) in &outs {
                let d = d1 + graph.flip_delta(&occ, j);
                if d < -1e-12 && best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
            occ[i] = true;
        }
        match best {
            Some((_, i, j)) => {
                fr.flip(graph, &mut occ, i);
                fr.flip(graph, &mut occ, j);
            }
            None => break,
        }
    }
    occ
}
