//! A* over the belief with obstacle inflation and a surcharge for unseen cells.
//!
//! Costs are fixed-point integers (one cell = 10 000) so that A* and Dijkstra
//! agree exactly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{BeliefMap, RegisterDelta};
use crate::som::GridGeometry;

/// Fixed-point cost of one orthogonal move.
pub const UNIT: u64 = 10_000;
/// Fixed-point cost of one diagonal move, ceil(√2 · UNIT).
pub const DIAG: u64 = 14_143;

pub const UNREACHABLE: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Cells within this many cells of an occupied cell are impassable.
    pub inflation_cells: usize,
    /// Cost multiplier for entering cells the agent has not sensed.
    pub unseen_cost: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            inflation_cells: 2,
            unseen_cost: 1.5,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self, agent_radius_m: f64, cell_size_m: f64) -> Result<()> {
        if !(self.unseen_cost >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "unseen cost multiplier {} must be at least 1",
                self.unseen_cost
            )));
        }
        if (self.inflation_cells as f64) < (agent_radius_m / cell_size_m).floor() {
            return Err(Error::InvalidConfig(format!(
                "inflation of {} cells is smaller than the agent radius",
                self.inflation_cells
            )));
        }
        Ok(())
    }
}

/// Passability and per-move costs derived from one belief snapshot.
#[derive(Debug, Clone)]
pub struct CostMap {
    geom: GridGeometry,
    occupied: Vec<bool>,
    blocked: Vec<bool>,
    unseen: Vec<bool>,
    disk: Vec<(i64, i64)>,
    orth_unseen: u64,
    diag_unseen: u64,
}

const NEIGHBORS: [(i64, i64, bool); 8] = [
    (1, 0, false),
    (-1, 0, false),
    (0, 1, false),
    (0, -1, false),
    (1, 1, true),
    (1, -1, true),
    (-1, 1, true),
    (-1, -1, true),
];

impl CostMap {
    pub fn from_belief(belief: &BeliefMap, cfg: &PlannerConfig) -> Self {
        let geom = *belief.geometry();
        let occupied: Vec<bool> = (0..geom.len()).map(|i| belief.is_occupied(i)).collect();
        let unseen = belief.seen().bits().iter().map(|&s| !s).collect();
        Self::from_parts(geom, &occupied, unseen, cfg)
    }

    /// `occupied` and `unseen` are per-cell flags in raster order.
    pub fn from_parts(geom: GridGeometry, occupied: &[bool], unseen: Vec<bool>, cfg: &PlannerConfig) -> Self {
        let r = cfg.inflation_cells as i64;
        let disk: Vec<(i64, i64)> = (-r..=r)
            .flat_map(|dv| (-r..=r).map(move |du| (du, dv)))
            .filter(|&(du, dv)| du * du + dv * dv <= r * r)
            .collect();
        let mut blocked = occupied.to_vec();
        let (w, h) = (geom.width as i64, geom.height as i64);
        for (i, _) in occupied.iter().enumerate().filter(|(_, &o)| o) {
            let (u, v) = ((i % geom.width) as i64, (i / geom.width) as i64);
            for &(du, dv) in &disk {
                let (nu, nv) = (u + du, v + dv);
                if nu >= 0 && nv >= 0 && nu < w && nv < h {
                    blocked[(nv * w + nu) as usize] = true;
                }
            }
        }
        Self {
            geom,
            occupied: occupied.to_vec(),
            blocked,
            unseen,
            disk,
            orth_unseen: (UNIT as f64 * cfg.unseen_cost).ceil() as u64,
            diag_unseen: (std::f64::consts::SQRT_2 * UNIT as f64 * cfg.unseen_cost).ceil() as u64,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geom
    }

    /// Brings the map in line with `belief` after the listed cells changed.
    pub fn apply_delta(&mut self, belief: &BeliefMap, delta: &RegisterDelta) {
        self.update_cells(&delta.newly_seen, &delta.flipped, |i| belief.is_occupied(i));
    }

    /// Marks `seen` cells as sensed and re-reads occupancy for `changed` cells.
    pub fn update_cells(&mut self, seen: &[usize], changed: &[usize], occupied: impl Fn(usize) -> bool) {
        for &i in seen {
            self.unseen[i] = false;
        }
        for &i in changed {
            self.occupied[i] = occupied(i);
        }
        let mut touched = Vec::new();
        for &i in changed {
            self.for_disk(i, |j| touched.push(j));
        }
        touched.sort_unstable();
        touched.dedup();
        for j in touched {
            let mut b = false;
            self.for_disk(j, |k| b |= self.occupied[k]);
            self.blocked[j] = b;
        }
    }

    fn for_disk(&self, idx: usize, mut f: impl FnMut(usize)) {
        let (w, h) = (self.geom.width as i64, self.geom.height as i64);
        let (u, v) = ((idx as i64) % w, (idx as i64) / w);
        for &(du, dv) in &self.disk {
            let (nu, nv) = (u + du, v + dv);
            if nu >= 0 && nv >= 0 && nu < w && nv < h {
                f((nv * w + nu) as usize);
            }
        }
    }

    /// Treats `idx` as occupied until the belief next reports on it.
    pub fn mark_obstacle(&mut self, idx: usize) {
        if !self.occupied[idx] {
            self.update_cells(&[], &[idx], |_| true);
        }
    }

    /// Opens cells near `idx` that are blocked only by inflation, so an agent brushing
    /// past an obstacle can still leave. Returns the cells to hand back to [`Self::restore`].
    pub fn clear_around(&mut self, idx: usize) -> Vec<usize> {
        let mut opened = Vec::new();
        let mut cells = Vec::new();
        self.for_disk(idx, |j| cells.push(j));
        for j in cells {
            if self.blocked[j] && !self.occupied[j] {
                self.blocked[j] = false;
                opened.push(j);
            }
        }
        opened
    }

    pub fn restore(&mut self, opened: &[usize]) {
        for &j in opened {
            self.blocked[j] = true;
        }
    }

    #[inline]
    pub fn is_occupied(&self, idx: usize) -> bool {
        self.occupied[idx]
    }

    #[inline]
    pub fn is_blocked(&self, idx: usize) -> bool {
        self.blocked[idx]
    }

    #[inline]
    pub fn is_unseen(&self, idx: usize) -> bool {
        self.unseen[idx]
    }

    /// Cost of moving into `to`, orthogonally or diagonally.
    #[inline]
    pub fn step_cost(&self, to: usize, diagonal: bool) -> u64 {
        match (diagonal, self.unseen[to]) {
            (false, false) => UNIT,
            (true, false) => DIAG,
            (false, true) => self.orth_unseen,
            (true, true) => self.diag_unseen,
        }
    }

    /// Admissible lower bound on the cost between two cells.
    #[inline]
    pub fn heuristic(&self, a: usize, b: usize) -> u64 {
        let (au, av) = self.geom.uv(a);
        let (bu, bv) = self.geom.uv(b);
        let du = au.abs_diff(bu) as u64;
        let dv = av.abs_diff(bv) as u64;
        let (lo, hi) = if du < dv { (du, dv) } else { (dv, du) };
        // Octile with the exact √2 rounded down stays below every real path cost.
        lo * 14_142 + (hi - lo) * UNIT
    }

    /// Traversable neighbors of `idx` with move costs; diagonals need both side cells open.
    #[inline]
    pub fn for_each_neighbor(&self, idx: usize, mut f: impl FnMut(usize, u64)) {
        let w = self.geom.width as i64;
        let h = self.geom.height as i64;
        let (u, v) = ((idx as i64) % w, (idx as i64) / w);
        for &(du, dv, diag) in &NEIGHBORS {
            let (nu, nv) = (u + du, v + dv);
            if nu < 0 || nv < 0 || nu >= w || nv >= h {
                continue;
            }
            let j = (nv * w + nu) as usize;
            if self.blocked[j] {
                continue;
            }
            if diag && (self.blocked[(v * w + nu) as usize] || self.blocked[(nv * w + u) as usize]) {
                continue;
            }
            f(j, self.step_cost(j, diag));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub cells: Vec<usize>,
    pub cost: u64,
}

impl Path {
    /// Cost in cell units.
    pub fn length_cells(&self) -> f64 {
        self.cost as f64 / UNIT as f64
    }
}

/// Minimal-cost 8-connected path; the start cell is exempt from inflation.
pub fn plan(cost: &CostMap, from: usize, to: usize) -> Result<Path> {
    let n = cost.geom.len();
    if from >= n || to >= n {
        return Err(Error::NoPath);
    }
    if from == to {
        return Ok(Path {
            cells: vec![from],
            cost: 0,
        });
    }
    if cost.is_blocked(to) {
        return Err(Error::NoPath);
    }
    let mut g = vec![UNREACHABLE; n];
    let mut parent = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    g[from] = 0;
    heap.push(Reverse((cost.heuristic(from, to), 0u64, from)));
    while let Some(Reverse((_, gc, i))) = heap.pop() {
        if closed[i] {
            continue;
        }
        closed[i] = true;
        if i == to {
            return Ok(Path {
                cells: trace(&parent, from, to),
                cost: gc,
            });
        }
        cost.for_each_neighbor(i, |j, c| {
            let ng = gc + c;
            if ng < g[j] {
                g[j] = ng;
                parent[j] = i as u32;
                heap.push(Reverse((ng + cost.heuristic(j, to), ng, j)));
            }
        });
    }
    Err(Error::NoPath)
}

fn trace(parent: &[u32], from: usize, to: usize) -> Vec<usize> {
    let mut cells = vec![to];
    let mut c = to;
    while c != from {
        c = parent[c] as usize;
        cells.push(c);
    }
    cells.reverse();
    cells
}

/// Single-source shortest costs with the tree to recover paths.
///
/// The search can be run to completion or expanded in stages: after
/// [`DistanceField::expand`] with `limit`, every cell whose cost is at most `limit`
/// is final.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub source: usize,
    pub dist: Vec<u64>,
    parent: Vec<u32>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
    bound: u64,
}

impl DistanceField {
    pub fn compute(cost: &CostMap, from: usize) -> Self {
        let mut f = Self::start(cost, from);
        f.expand(cost, UNREACHABLE);
        f
    }

    /// A search that has settled only the source.
    pub fn start(cost: &CostMap, from: usize) -> Self {
        let n = cost.geom.len();
        let mut dist = vec![UNREACHABLE; n];
        dist[from] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, from as u32)));
        Self {
            source: from,
            dist,
            parent: vec![u32::MAX; n],
            heap,
            bound: 0,
        }
    }

    /// Settles every cell with cost up to `limit`. `cost` must be the map the search started on.
    pub fn expand(&mut self, cost: &CostMap, limit: u64) {
        while let Some(&Reverse((d, i))) = self.heap.peek() {
            if d > limit {
                self.bound = self.bound.max(limit);
                return;
            }
            self.heap.pop();
            let i = i as usize;
            if d > self.dist[i] {
                continue;
            }
            let (dist, parent, heap) = (&mut self.dist, &mut self.parent, &mut self.heap);
            cost.for_each_neighbor(i, |j, c| {
                let nd = d + c;
                if nd < dist[j] {
                    dist[j] = nd;
                    parent[j] = i as u32;
                    heap.push(Reverse((nd, j as u32)));
                }
            });
        }
        self.bound = UNREACHABLE;
    }

    /// Every cell with cost at most this value is final.
    pub fn settled_bound(&self) -> u64 {
        self.bound
    }

    pub fn is_complete(&self) -> bool {
        self.bound == UNREACHABLE
    }

    /// Reachable with a final cost.
    pub fn settled(&self, idx: usize) -> bool {
        self.dist[idx] != UNREACHABLE && self.dist[idx] <= self.bound
    }

    pub fn reachable(&self, idx: usize) -> bool {
        debug_assert!(self.is_complete() || self.settled(idx) || self.dist[idx] == UNREACHABLE);
        self.settled(idx)
    }

    pub fn path_to(&self, to: usize) -> Result<Path> {
        if !self.settled(to) {
            return Err(Error::NoPath);
        }
        Ok(Path {
            cells: trace(&self.parent, self.source, to),
            cost: self.dist[to],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::som::{CellState, OccupancyGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn open(w: usize, h: usize) -> (GridGeometry, Vec<bool>) {
        (GridGeometry::new(w, h, 0.05), vec![false; w * h])
    }

    fn no_inflation() -> PlannerConfig {
        PlannerConfig {
            inflation_cells: 0,
            unseen_cost: 1.5,
        }
    }

    #[test]
    fn straight_corridor() {
        let (g, occ) = open(12, 1);
        let cm = CostMap::from_parts(g, &occ, vec![false; 12], &no_inflation());
        let p = plan(&cm, 0, 10).unwrap();
        assert_eq!(p.cells.len(), 11);
        assert_eq!(p.cost, 10 * UNIT);
        assert_eq!(p.length_cells(), 10.0);
    }

    #[test]
    fn enclosed_goal_has_no_path() {
        let (g, mut occ) = open(9, 9);
        for (u, v) in [(3, 3), (4, 3), (5, 3), (3, 4), (5, 4), (3, 5), (4, 5), (5, 5)] {
            occ[g.idx(u, v)] = true;
        }
        let cm = CostMap::from_parts(g, &occ, vec![false; 81], &no_inflation());
        assert!(matches!(plan(&cm, 0, g.idx(4, 4)), Err(Error::NoPath)));
    }

    #[test]
    fn unseen_cells_cost_more() {
        let (g, occ) = open(5, 1);
        let cm = CostMap::from_parts(g, &occ, vec![true; 5], &no_inflation());
        assert_eq!(plan(&cm, 0, 4).unwrap().cost, 4 * 15_000);
    }

    #[test]
    fn inflation_keeps_path_off_walls() {
        let (g, mut occ) = open(20, 20);
        for v in 0..15 {
            occ[g.idx(10, v)] = true;
        }
        let cm = CostMap::from_parts(g, &occ, vec![false; 400], &PlannerConfig::default());
        let p = plan(&cm, g.idx(2, 2), g.idx(17, 2)).unwrap();
        for &c in &p.cells {
            assert!(!cm.is_blocked(c) || c == p.cells[0]);
            let (u, v) = g.uv(c);
            for wv in 0..15usize {
                let d2 = (u as i64 - 10).pow(2) + (v as i64 - wv as i64).pow(2);
                assert!(d2 > 4, "path cell ({u},{v}) within inflation of the wall");
            }
        }
    }

    #[test]
    fn cost_map_from_belief_marks_occupied_and_unseen() {
        let g = GridGeometry::new(7, 7, 0.05);
        let mut prior = OccupancyGrid::filled(g, CellState::Free);
        prior.set(3, 3, CellState::Occupied);
        let b = BeliefMap::from_prior(&prior);
        let cm = CostMap::from_belief(&b, &PlannerConfig::default());
        assert!(cm.is_blocked(g.idx(3, 1)) && cm.is_blocked(g.idx(4, 4)));
        assert!(!cm.is_blocked(g.idx(5, 5)));
        assert!(cm.is_unseen(0));
    }

    fn dijkstra_oracle(cm: &CostMap, from: usize, to: usize) -> Option<u64> {
        // Plain label-correcting relaxation until no edge improves.
        let n = cm.geometry().len();
        let mut d = vec![UNREACHABLE; n];
        d[from] = 0;
        loop {
            let mut changed = false;
            for i in 0..n {
                if d[i] == UNREACHABLE {
                    continue;
                }
                let di = d[i];
                cm.for_each_neighbor(i, |j, c| {
                    if di + c < d[j] {
                        d[j] = di + c;
                        changed = true;
                    }
                });
            }
            if !changed {
                break;
            }
        }
        (d[to] != UNREACHABLE).then_some(d[to])
    }

    #[test]
    fn astar_matches_dijkstra_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..150 {
            let (g, _) = open(20, 20);
            let occ: Vec<bool> = (0..400).map(|_| rng.random_bool(0.25)).collect();
            let unseen: Vec<bool> = (0..400).map(|_| rng.random_bool(0.4)).collect();
            let cfg = PlannerConfig {
                inflation_cells: rng.random_range(0..2),
                unseen_cost: 1.5,
            };
            let cm = CostMap::from_parts(g, &occ, unseen, &cfg);
            let from = rng.random_range(0..400);
            let to = rng.random_range(0..400);
            let expected = if from == to { Some(0) } else { dijkstra_oracle(&cm, from, to).filter(|_| !cm.is_blocked(to)) };
            let got = plan(&cm, from, to).ok();
            assert_eq!(got.as_ref().map(|p| p.cost), expected);
            let field = DistanceField::compute(&cm, from);
            if let Some(p) = got {
                assert_eq!(field.dist[to], p.cost);
                assert_eq!(*p.cells.first().unwrap(), from);
                assert_eq!(*p.cells.last().unwrap(), to);
                let (fu, fv) = g.uv(from);
                let (tu, tv) = g.uv(to);
                let euclid = ((fu as f64 - tu as f64).hypot(fv as f64 - tv as f64)) * UNIT as f64;
                assert!(p.cost as f64 >= euclid - 1e-6);
                for w in p.cells.windows(2) {
                    let (a, b) = (g.uv(w[0]), g.uv(w[1]));
                    assert!(a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1);
                    assert!(!cm.is_blocked(w[1]));
                }
            }
        }
    }

    #[test]
    fn incremental_update_matches_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (g, _) = open(24, 18);
            let n = g.len();
            let cfg = PlannerConfig::default();
            let mut occ: Vec<bool> = (0..n).map(|_| rng.random_bool(0.1)).collect();
            let mut unseen: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            let mut cm = CostMap::from_parts(g, &occ, unseen.clone(), &cfg);
            let changed: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.05)).collect();
            let seen: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.1)).collect();
            for &i in &changed {
                occ[i] = !occ[i];
            }
            for &i in &seen {
                unseen[i] = false;
            }
            cm.update_cells(&seen, &changed, |i| occ[i]);
            let fresh = CostMap::from_parts(g, &occ, unseen, &cfg);
            assert_eq!(cm.blocked, fresh.blocked);
            assert_eq!(cm.unseen, fresh.unseen);
        }
    }

    #[test]
    fn clearance_opens_only_inflated_cells() {
        let (g, mut occ) = open(11, 11);
        occ[g.idx(5, 3)] = true;
        let mut cm = CostMap::from_parts(g, &occ, vec![false; g.len()], &PlannerConfig::default());
        let start = g.idx(5, 5);
        assert!(cm.is_blocked(start));
        let before = cm.blocked.clone();
        let opened = cm.clear_around(start);
        assert!(!opened.is_empty());
        assert!(cm.is_blocked(g.idx(5, 3)));
        assert!(!cm.is_blocked(g.idx(5, 4)));
        cm.restore(&opened);
        assert_eq!(cm.blocked, before);
    }

    #[test]
    fn staged_expansion_matches_full_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let (g, _) = open(30, 30);
            let occ: Vec<bool> = (0..900).map(|_| rng.random_bool(0.2)).collect();
            let unseen: Vec<bool> = (0..900).map(|_| rng.random_bool(0.5)).collect();
            let cm = CostMap::from_parts(g, &occ, unseen, &PlannerConfig { inflation_cells: 0, unseen_cost: 1.5 });
            let from = rng.random_range(0..900);
            let full = DistanceField::compute(&cm, from);
            let mut staged = DistanceField::start(&cm, from);
            let mut limit = UNIT;
            while !staged.is_complete() {
                staged.expand(&cm, limit);
                for i in 0..900 {
                    if full.dist[i] != UNREACHABLE && full.dist[i] <= staged.settled_bound() {
                        assert!(staged.settled(i));
                        assert_eq!(staged.dist[i], full.dist[i]);
                    } else {
                        assert!(!staged.settled(i));
                    }
                }
                limit *= 2;
            }
            assert_eq!(staged.dist, full.dist);
        }
    }
}
