//! Global goal selection: candidates on a coarse lattice scored by how much unseen
//! space, and how much likely-changed space, they would reveal.

use std::cell::Cell;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raycast::GridRay;
use crate::som::{
    collapse_to_occupancy, threshold_byte, ClassAction, ClassTaxonomy, GridGeometry, Mask,
    SemanticOccupancyMap,
};

use super::planner::{CostMap, DistanceField, UNIT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GlobalStrategy {
    Random,
    FrontierNearest,
    CoverageGreedy,
    DiffGreedy,
    CombinedGreedy { beta1: f64, beta2: f64 },
}

impl GlobalStrategy {
    pub const DEFAULT_BETA1: f64 = 1.0;
    pub const DEFAULT_BETA2: f64 = 0.01;

    pub fn combined_default() -> Self {
        GlobalStrategy::CombinedGreedy {
            beta1: Self::DEFAULT_BETA1,
            beta2: Self::DEFAULT_BETA2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GlobalStrategy::Random => "random",
            GlobalStrategy::FrontierNearest => "frontier",
            GlobalStrategy::CoverageGreedy => "coverage",
            GlobalStrategy::DiffGreedy => "diff",
            GlobalStrategy::CombinedGreedy { .. } => "combined",
        }
    }

    /// Score weights, scaled so the larger one is exactly 1; `None` for non-greedy strategies.
    pub fn score_weights(&self) -> Option<(f64, f64)> {
        let (b1, b2) = match *self {
            GlobalStrategy::CoverageGreedy => (1.0, 0.0),
            GlobalStrategy::DiffGreedy => (0.0, 1.0),
            GlobalStrategy::CombinedGreedy { beta1, beta2 } => (beta1, beta2),
            _ => return None,
        };
        let m = b1.max(b2);
        if m <= 0.0 {
            return Some((0.0, 0.0));
        }
        Some(if b1 >= b2 { (1.0, b2 / b1) } else { (b1 / b2, 1.0) })
    }

    pub fn validate(&self) -> Result<()> {
        if let GlobalStrategy::CombinedGreedy { beta1, beta2 } = *self {
            if !(beta1 >= 0.0 && beta2 >= 0.0) || !beta1.is_finite() || !beta2.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "coefficients must be finite and non-negative, got ({beta1}, {beta2})"
                )));
            }
        }
        Ok(())
    }
}

impl FromStr for GlobalStrategy {
    type Err = Error;

    /// Accepts strategy names and the baseline abbreviations (cr, dr, cr+dr).
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(GlobalStrategy::Random),
            "frontier" | "frontier_nearest" => Ok(GlobalStrategy::FrontierNearest),
            "coverage" | "cr" => Ok(GlobalStrategy::CoverageGreedy),
            "diff" | "dr" => Ok(GlobalStrategy::DiffGreedy),
            "combined" | "cr+dr" => Ok(GlobalStrategy::combined_default()),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalConfig {
    /// Candidate lattice resolution: the stride is ceil(W / grid_actions).
    pub grid_actions: usize,
    pub sensing_radius_m: f64,
    /// Score discount per cell of path length.
    pub path_discount: f64,
    pub wall_distance_m: f64,
    pub high_weight: f64,
    pub low_weight: f64,
    /// Measure coverage gain in square meters rather than cells.
    pub coverage_in_m2: bool,
}

impl Default for GoalConfig {
    fn default() -> Self {
        Self {
            grid_actions: 240,
            sensing_radius_m: 2.5,
            path_discount: 0.02,
            wall_distance_m: 0.5,
            high_weight: 1.0,
            low_weight: 0.1,
            coverage_in_m2: true,
        }
    }
}

impl GoalConfig {
    pub fn stride(&self, width: usize) -> usize {
        width.div_ceil(self.grid_actions.max(1)).max(1)
    }

    fn weight_tenths(w: f64) -> u32 {
        (w * 10.0).round().max(0.0) as u32
    }
}

/// Horizontal run of cells `u0..u1` on row `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub v: u32,
    pub u0: u32,
    pub u1: u32,
}

/// Candidate lattice and per-candidate line-of-sight footprints.
///
/// Opacity depends only on walls and the explorable boundary, which every variant of a
/// floor shares, so one index serves all episodes on that floor. Footprints are
/// computed on first use.
#[derive(Debug)]
pub struct VisibilityIndex {
    geom: GridGeometry,
    stride: usize,
    radius_cells: f64,
    opaque: Vec<bool>,
    candidates: Vec<usize>,
    spans: Vec<OnceLock<Box<[Span]>>>,
}

impl VisibilityIndex {
    pub fn new(som: &SemanticOccupancyMap, taxonomy: &ClassTaxonomy, threshold: f64, cfg: &GoalConfig) -> Result<Self> {
        Ok(Self::from_opacity(som.geometry(), opacity(som, taxonomy, threshold)?, cfg))
    }

    pub fn from_opacity(geom: GridGeometry, opaque: Vec<bool>, cfg: &GoalConfig) -> Self {
        let stride = cfg.stride(geom.width);
        let off = stride / 2;
        let mut candidates = Vec::new();
        for v in (off..geom.height).step_by(stride) {
            for u in (off..geom.width).step_by(stride) {
                candidates.push(geom.idx(u, v));
            }
        }
        let spans = candidates.iter().map(|_| OnceLock::new()).collect();
        Self {
            geom,
            stride,
            radius_cells: cfg.sensing_radius_m / geom.cell_size_m,
            opaque,
            candidates,
            spans,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geom
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    /// Index of `cell` among the candidates, if it is one.
    pub fn candidate_index(&self, cell: usize) -> Option<usize> {
        self.candidates.binary_search(&cell).ok()
    }

    pub fn opaque(&self) -> &[bool] {
        &self.opaque
    }

    /// Cells visible from candidate `k` within the sensing radius, as row spans.
    pub fn spans(&self, k: usize) -> &[Span] {
        self.spans[k].get_or_init(|| self.compute_spans(self.candidates[k]))
    }

    /// Cells visible from an arbitrary cell, in raster order.
    pub fn visible_cells(&self, idx: usize) -> Vec<usize> {
        self.compute_spans(idx)
            .iter()
            .flat_map(|s| (s.u0..s.u1).map(move |u| self.geom.idx(u as usize, s.v as usize)))
            .collect()
    }

    fn compute_spans(&self, idx: usize) -> Box<[Span]> {
        let (cu, cv) = self.geom.uv(idx);
        let r = self.radius_cells;
        let ri = r.ceil() as i64;
        let side = (2 * ri + 1) as usize;
        let mut local = vec![false; side * side];
        let (w, h) = (self.geom.width as i64, self.geom.height as i64);
        let n_rays = (std::f64::consts::TAU * r).ceil().max(8.0) as usize;
        for k in 0..n_rays {
            let a = k as f64 * std::f64::consts::TAU / n_rays as f64;
            let ray = GridRay::from_grid(cu as f64 + 0.5, cv as f64 + 0.5, a.cos(), -a.sin());
            for c in ray {
                if c.t_enter >= r || c.u < 0 || c.v < 0 || c.u >= w || c.v >= h {
                    break;
                }
                let (lu, lv) = (c.u - cu as i64 + ri, c.v - cv as i64 + ri);
                if lu < 0 || lv < 0 || lu >= side as i64 || lv >= side as i64 {
                    break;
                }
                local[lv as usize * side + lu as usize] = true;
                if self.opaque[(c.v * w + c.u) as usize] {
                    break;
                }
            }
        }
        let mut spans = Vec::new();
        for lv in 0..side {
            let v = cv as i64 + lv as i64 - ri;
            let row = &local[lv * side..(lv + 1) * side];
            let mut lu = 0;
            while lu < side {
                if !row[lu] {
                    lu += 1;
                    continue;
                }
                let start = lu;
                while lu < side && row[lu] {
                    lu += 1;
                }
                let u0 = cu as i64 + start as i64 - ri;
                let u1 = cu as i64 + lu as i64 - ri;
                spans.push(Span {
                    v: v as u32,
                    u0: u0 as u32,
                    u1: u1 as u32,
                });
            }
        }
        spans.into_boxed_slice()
    }
}

/// Tall-obstacle opacity shared by the sensor and the gain model.
pub fn opacity(som: &SemanticOccupancyMap, taxonomy: &ClassTaxonomy, threshold: f64) -> Result<Vec<bool>> {
    taxonomy.check(som.channels())?;
    let tb = threshold_byte(threshold);
    let mut opaque: Vec<bool> = som.explorable_mask().bits().iter().map(|&e| !e).collect();
    for ch in taxonomy.channels_with(ClassAction::NoOperation) {
        if !taxonomy.is_obstacle(ch) {
            continue;
        }
        for (o, &b) in opaque.iter_mut().zip(som.channel(ch)) {
            *o |= b as u16 >= tb;
        }
    }
    Ok(opaque)
}

/// Per-cell explorability and changeability weights of one prior map.
#[derive(Debug, Clone)]
pub struct PriorIndex {
    explorable: Vec<bool>,
    weight_tenths: Vec<u8>,
}

impl PriorIndex {
    /// Weight is high on cells under movable-class objects and on free cells far
    /// from walls, where furniture can appear; low elsewhere.
    pub fn new(prior: &SemanticOccupancyMap, taxonomy: &ClassTaxonomy, threshold: f64, cfg: &GoalConfig) -> Result<Self> {
        let occ = collapse_to_occupancy(prior, taxonomy, threshold)?;
        let geom = prior.geometry();
        let tb = threshold_byte(threshold);
        let n = geom.len();
        let explorable: Vec<bool> = prior.explorable_mask().bits().to_vec();
        let mut movable = vec![false; n];
        let mut wall = vec![false; n];
        for ch in 0..taxonomy.semantic_channels() {
            if !taxonomy.is_obstacle(ch) {
                continue;
            }
            let target = if taxonomy.action(ch).is_movable() { &mut movable } else { &mut wall };
            for (t, &b) in target.iter_mut().zip(prior.channel(ch)) {
                *t |= b as u16 >= tb;
            }
        }
        let near_wall = dilate(&geom, &wall, cfg.wall_distance_m / geom.cell_size_m + 1e-6);
        let hi = GoalConfig::weight_tenths(cfg.high_weight).min(255) as u8;
        let lo = GoalConfig::weight_tenths(cfg.low_weight).min(255) as u8;
        let weight_tenths = (0..n)
            .map(|i| {
                let open_floor = !occ.is_occupied(i) && !near_wall[i];
                if movable[i] || open_floor { hi } else { lo }
            })
            .collect();
        Ok(Self {
            explorable,
            weight_tenths,
        })
    }

    pub fn from_parts(explorable: Vec<bool>, weight_tenths: Vec<u8>) -> Self {
        Self {
            explorable,
            weight_tenths,
        }
    }

    pub fn explorable(&self) -> &[bool] {
        &self.explorable
    }

    pub fn weight_tenths(&self) -> &[u8] {
        &self.weight_tenths
    }
}

/// Cells whose center lies within `radius` cells of a set cell's center.
fn dilate(geom: &GridGeometry, set: &[bool], radius: f64) -> Vec<bool> {
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    let offsets: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dv| (-r..=r).map(move |du| (du, dv)))
        .filter(|&(du, dv)| ((du * du + dv * dv) as f64) <= r2)
        .collect();
    let (w, h) = (geom.width as i64, geom.height as i64);
    let mut out = set.to_vec();
    for v in 0..h {
        for u in 0..w {
            let i = (v * w + u) as usize;
            if !set[i] {
                continue;
            }
            // Interior cells add nothing their boundary neighbors do not.
            let interior = u > 0
                && v > 0
                && u + 1 < w
                && v + 1 < h
                && set[i - 1]
                && set[i + 1]
                && set[i - w as usize]
                && set[i + w as usize];
            if interior {
                continue;
            }
            for &(du, dv) in &offsets {
                let (nu, nv) = (u + du, v + dv);
                if nu >= 0 && nv >= 0 && nu < w && nv < h {
                    out[(nv * w + nu) as usize] = true;
                }
            }
        }
    }
    out
}

/// Prefix sums of unseen explorable cells and their weights for one belief state:
/// per row for footprints and over rectangles for box bounds.
#[derive(Debug, Clone)]
pub struct GainTables {
    stride: usize,
    height: usize,
    cov: Vec<u32>,
    diff: Vec<u32>,
    cov_area: Vec<u32>,
    diff_area: Vec<u32>,
}

impl GainTables {
    pub fn new(prior: &PriorIndex, seen: &Mask) -> Self {
        let (w, h) = (seen.width(), seen.height());
        let stride = w + 1;
        let mut cov = vec![0u32; stride * h];
        let mut diff = vec![0u32; stride * h];
        let mut cov_area = vec![0u32; stride * (h + 1)];
        let mut diff_area = vec![0u32; stride * (h + 1)];
        for v in 0..h {
            let (mut c, mut d) = (0u32, 0u32);
            for u in 0..w {
                let i = v * w + u;
                if prior.explorable[i] && !seen.at(i) {
                    c += 1;
                    d += prior.weight_tenths[i] as u32;
                }
                cov[v * stride + u + 1] = c;
                diff[v * stride + u + 1] = d;
                cov_area[(v + 1) * stride + u + 1] = cov_area[v * stride + u + 1] + c;
                diff_area[(v + 1) * stride + u + 1] = diff_area[v * stride + u + 1] + d;
            }
        }
        Self {
            stride,
            height: h,
            cov,
            diff,
            cov_area,
            diff_area,
        }
    }

    /// Gains over the square of half-side `r` cells around `center`.
    pub fn box_gains(&self, center: usize, r: usize) -> (u32, u32) {
        let w = self.stride - 1;
        let (u, v) = (center % w, center / w);
        let (u0, u1) = (u.saturating_sub(r), (u + r + 1).min(w));
        let (v0, v1) = (v.saturating_sub(r), (v + r + 1).min(self.height));
        let rect = |t: &[u32]| {
            t[v1 * self.stride + u1] + t[v0 * self.stride + u0] - t[v0 * self.stride + u1] - t[v1 * self.stride + u0]
        };
        (rect(&self.cov_area), rect(&self.diff_area))
    }

    /// (coverage gain in cells, difference gain in tenths) over a footprint.
    pub fn gains(&self, spans: &[Span]) -> (u32, u32) {
        let (mut c, mut d) = (0, 0);
        for s in spans {
            let row = s.v as usize * self.stride;
            c += self.cov[row + s.u1 as usize] - self.cov[row + s.u0 as usize];
            d += self.diff[row + s.u1 as usize] - self.diff[row + s.u0 as usize];
        }
        (c, d)
    }
}

/// Last exact gains per candidate. The seen set only grows, so gains only shrink and a
/// stale entry remains an upper bound for the rest of the episode.
#[derive(Debug, Clone)]
pub struct GainBounds {
    last: Vec<Cell<(u32, u32)>>,
}

impl GainBounds {
    pub fn new(visibility: &VisibilityIndex) -> Self {
        Self {
            last: vec![Cell::new((u32::MAX, u32::MAX)); visibility.candidates.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalChoice {
    pub cell: usize,
    pub coverage_gain: u32,
    pub diff_gain_tenths: u32,
    pub path_cells: f64,
    pub score: f64,
}

/// Everything goal selection reads about the current episode state.
pub struct GoalContext<'a> {
    pub visibility: &'a VisibilityIndex,
    pub prior: &'a PriorIndex,
    pub seen: &'a Mask,
    pub cost: &'a CostMap,
    /// Path costs from the agent; may be partially expanded for [`try_select_global_goal`].
    pub field: &'a DistanceField,
    /// Sorted cells that must not be chosen (e.g. goals already visited or unreachable).
    pub exclude: &'a [usize],
    /// Gain tables for `prior` and `seen`, built on demand when absent.
    pub gains: Option<&'a GainTables>,
    /// Bounds carried over from earlier selections with a subset of `seen`.
    pub bounds: Option<&'a GainBounds>,
}

impl GoalContext<'_> {
    /// Could be chosen if reachable.
    fn admissible(&self, k: usize) -> bool {
        let c = self.visibility.candidates[k];
        self.prior.explorable[c] && !self.cost.is_blocked(c) && self.exclude.binary_search(&c).is_err()
    }

    fn eligible(&self, k: usize) -> bool {
        self.admissible(k) && self.field.settled(self.visibility.candidates[k])
    }

    fn path_cells(&self, c: usize) -> f64 {
        self.field.dist[c] as f64 / UNIT as f64
    }
}

/// Chooses the next global goal. `ctx.field` must be fully expanded.
pub fn select_global_goal(
    ctx: &GoalContext<'_>,
    strategy: &GlobalStrategy,
    cfg: &GoalConfig,
    rng: &mut impl Rng,
) -> Result<GoalChoice> {
    assert!(ctx.field.is_complete(), "select_global_goal needs a complete distance field");
    try_select_global_goal(ctx, strategy, cfg, rng).map(|c| c.expect("complete field always decides"))
}

/// Like [`select_global_goal`] on a partially expanded field. Returns `Ok(None)` when
/// the answer may lie beyond the settled region; expand the field and retry. Whenever
/// it returns a goal, that goal is the one a complete field would give.
pub fn try_select_global_goal(
    ctx: &GoalContext<'_>,
    strategy: &GlobalStrategy,
    cfg: &GoalConfig,
    rng: &mut impl Rng,
) -> Result<Option<GoalChoice>> {
    strategy.validate()?;
    let complete = ctx.field.is_complete();
    let eligible: Vec<usize> = (0..ctx.visibility.candidates.len()).filter(|&k| ctx.eligible(k)).collect();
    if eligible.is_empty() {
        return if complete { Err(Error::NoReachableGoal) } else { Ok(None) };
    }
    let choose = |k: usize, score: f64, tables: Option<&GainTables>| {
        let c = ctx.visibility.candidates[k];
        let (coverage_gain, diff_gain_tenths) = tables.map_or((0, 0), |t| t.gains(ctx.visibility.spans(k)));
        GoalChoice {
            cell: c,
            coverage_gain,
            diff_gain_tenths,
            path_cells: ctx.path_cells(c),
            score,
        }
    };
    match strategy {
        GlobalStrategy::Random => {
            if !complete {
                return Ok(None);
            }
            let k = eligible[rng.random_range(0..eligible.len())];
            Ok(Some(choose(k, 0.0, None)))
        }
        GlobalStrategy::FrontierNearest => {
            let frontier = frontier_mask(ctx);
            let s = ctx.visibility.stride as i64;
            let g = ctx.visibility.geom;
            let near_frontier = |c: usize| {
                let (u, v) = g.uv(c);
                let (u0, v0) = (u as i64 - s / 2, v as i64 - s / 2);
                (v0..v0 + s).any(|vv| (u0..u0 + s).any(|uu| g.contains(uu, vv) && frontier[g.idx(uu as usize, vv as usize)]))
            };
            // Unsettled candidates are farther than every settled one.
            let best = eligible
                .iter()
                .copied()
                .filter(|&k| near_frontier(ctx.visibility.candidates[k]))
                .min_by_key(|&k| (ctx.field.dist[ctx.visibility.candidates[k]], k));
            match best {
                Some(k) => Ok(Some(choose(k, 0.0, None))),
                None if complete => try_select_global_goal(ctx, &GlobalStrategy::CoverageGreedy, cfg, rng),
                None => Ok(None),
            }
        }
        _ => {
            let (b1, b2) = strategy.score_weights().expect("greedy strategy");
            let area = if cfg.coverage_in_m2 {
                ctx.visibility.geom.cell_size_m * ctx.visibility.geom.cell_size_m
            } else {
                1.0
            };
            let built;
            let tables = match ctx.gains {
                Some(t) => t,
                None => {
                    built = GainTables::new(ctx.prior, ctx.seen);
                    &built
                }
            };
            let r = ctx.visibility.radius_cells.ceil() as usize;
            // Footprints lie inside the sensing box, so box sums bound the gains.
            let bound = |k: usize, path_cells: f64| {
                let (mut cov, mut diff) = tables.box_gains(ctx.visibility.candidates[k], r);
                if let Some(b) = ctx.bounds {
                    let (c, d) = b.last[k].get();
                    cov = cov.min(c);
                    diff = diff.min(d);
                }
                greedy_score(b1, b2, cov, diff, area, path_cells, cfg.path_discount)
            };
            let mut order: Vec<(f64, usize)> = eligible
                .iter()
                .map(|&k| (bound(k, ctx.path_cells(ctx.visibility.candidates[k])), k))
                .collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut best: Option<(f64, usize)> = None;
            for &(ub, k) in &order {
                if best.is_some_and(|(s, _)| ub < s) {
                    break;
                }
                let (cov, diff) = tables.gains(ctx.visibility.spans(k));
                if let Some(b) = ctx.bounds {
                    b.last[k].set((cov, diff));
                }
                let c = ctx.visibility.candidates[k];
                let score = greedy_score(b1, b2, cov, diff, area, ctx.path_cells(c), cfg.path_discount);
                // Highest score wins; ties go to the lowest (v, u), i.e. the lowest index.
                if best.is_none_or(|(s, bk)| score > s || (score == s && k < bk)) {
                    best = Some((score, k));
                }
            }
            let (score, k) = best.expect("non-empty eligible set");
            if !complete {
                let beyond = ctx.field.settled_bound() as f64 / UNIT as f64;
                let rest = (0..ctx.visibility.candidates.len())
                    .filter(|&k| ctx.admissible(k) && !ctx.field.settled(ctx.visibility.candidates[k]))
                    .map(|k| bound(k, beyond))
                    .fold(f64::NEG_INFINITY, f64::max);
                if rest >= score {
                    return Ok(None);
                }
            }
            Ok(Some(choose(k, score, Some(tables))))
        }
    }
}

#[inline]
pub fn greedy_score(b1: f64, b2: f64, cov: u32, diff_tenths: u32, area: f64, path_cells: f64, discount: f64) -> f64 {
    (b1 * cov as f64 * area + b2 * diff_tenths as f64 * 0.1) / (1.0 + discount * path_cells)
}

/// Seen, passable cells with an unseen explorable 4-neighbor.
fn frontier_mask(ctx: &GoalContext<'_>) -> Vec<bool> {
    let g = ctx.visibility.geom;
    let (w, h) = (g.width, g.height);
    let unseen = |i: usize| ctx.prior.explorable[i] && !ctx.seen.at(i);
    (0..g.len())
        .map(|i| {
            if !ctx.seen.at(i) || ctx.cost.is_blocked(i) {
                return false;
            }
            let (u, v) = (i % w, i / w);
            (u > 0 && unseen(i - 1)) || (u + 1 < w && unseen(i + 1)) || (v > 0 && unseen(i - w)) || (v + 1 < h && unseen(i + w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav::planner::PlannerConfig;
    use proptest::prelude::{prop_assert_eq, proptest, ProptestConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        geom: GridGeometry,
        vis: VisibilityIndex,
        prior: PriorIndex,
        seen: Mask,
        cost: CostMap,
        field: DistanceField,
    }

    fn small_cfg() -> GoalConfig {
        GoalConfig {
            grid_actions: 20,
            sensing_radius_m: 0.5,
            ..Default::default()
        }
    }

    /// `walls` opaque and occupied; `seen` cells already sensed.
    fn fixture(w: usize, h: usize, walls: &[bool], seen: &[bool], weights: Vec<u8>, start: usize, cfg: &GoalConfig) -> Fixture {
        let geom = GridGeometry::new(w, h, 0.05);
        let vis = VisibilityIndex::from_opacity(geom, walls.to_vec(), cfg);
        let prior = PriorIndex::from_parts(vec![true; w * h], weights);
        let seen = Mask::from_bits(w, h, seen.to_vec()).unwrap();
        let cost = CostMap::from_parts(
            geom,
            walls,
            seen.bits().iter().map(|&s| !s).collect(),
            &PlannerConfig {
                inflation_cells: 0,
                unseen_cost: 1.5,
            },
        );
        let field = DistanceField::compute(&cost, start);
        Fixture {
            geom,
            vis,
            prior,
            seen,
            cost,
            field,
        }
    }

    fn ctx(f: &Fixture) -> GoalContext<'_> {
        GoalContext {
            visibility: &f.vis,
            prior: &f.prior,
            seen: &f.seen,
            cost: &f.cost,
            field: &f.field,
            exclude: &[],
            gains: None,
            bounds: None,
        }
    }

    fn random_fixture(seed: u64) -> Fixture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (40, 30);
        let walls: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.12)).collect();
        let seen: Vec<bool> = (0..w * h).map(|i| (i % w) < rng.random_range(0..w)).collect();
        let weights = (0..w * h).map(|_| if rng.random_bool(0.3) { 10 } else { 1 }).collect();
        let start = (0..w * h).find(|&i| !walls[i]).unwrap();
        fixture(w, h, &walls, &seen, weights, start, &small_cfg())
    }

    #[test]
    fn fully_seen_map_picks_first_candidate() {
        let cfg = small_cfg();
        let f = fixture(40, 40, &[false; 1600], &[true; 1600], vec![10; 1600], 0, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = select_global_goal(&ctx(&f), &GlobalStrategy::CoverageGreedy, &cfg, &mut rng).unwrap();
        assert_eq!(g.coverage_gain, 0);
        assert_eq!(g.cell, f.vis.candidates()[0]);
    }

    #[test]
    fn unexplored_room_attracts_the_goal() {
        // Corridor along the top (seen), a room below-right behind a wall with a door (unseen).
        let (w, h) = (60, 40);
        let cfg = GoalConfig {
            grid_actions: 30,
            sensing_radius_m: 0.5,
            ..Default::default()
        };
        let geom = GridGeometry::new(w, h, 0.05);
        let mut walls = vec![false; w * h];
        let mut seen = vec![true; w * h];
        for u in 0..w {
            walls[geom.idx(u, 10)] = !(40..44).contains(&u);
        }
        let room: Vec<usize> = (11..h).flat_map(|v| (30..w).map(move |u| geom.idx(u, v))).collect();
        for u in 0..w {
            for v in 11..h {
                if u == 29 {
                    walls[geom.idx(u, v)] = true;
                }
            }
        }
        for &c in &room {
            seen[c] = false;
        }
        let f = fixture(w, h, &walls, &seen, vec![10; w * h], geom.idx(2, 2), &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = select_global_goal(&ctx(&f), &GlobalStrategy::CoverageGreedy, &cfg, &mut rng).unwrap();
        let r = cfg.sensing_radius_m / 0.05;
        let (gu, gv) = geom.uv(g.cell);
        assert!(room.iter().any(|&c| {
            let (u, v) = geom.uv(c);
            (u as f64 - gu as f64).hypot(v as f64 - gv as f64) <= r
        }));
        assert!(g.coverage_gain > 0);

        // Exhaustive oracle: recount every candidate's gain from its visible cells.
        let area = 0.05 * 0.05;
        let mut best: Option<(f64, usize)> = None;
        for (k, &c) in f.vis.candidates().iter().enumerate() {
            if f.cost.is_blocked(c) || !f.field.reachable(c) {
                continue;
            }
            let cov = f.vis.visible_cells(c).iter().filter(|&&i| !f.seen.at(i)).count() as f64;
            let s = cov * area / (1.0 + 0.02 * f.field.dist[c] as f64 / UNIT as f64);
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, k));
            }
        }
        assert_eq!(f.vis.candidates()[best.unwrap().1], g.cell);
    }

    #[test]
    fn walls_block_line_of_sight() {
        let cfg = small_cfg();
        let geom = GridGeometry::new(30, 30, 0.05);
        let mut walls = vec![false; 900];
        for v in 0..30 {
            walls[geom.idx(15, v)] = true;
        }
        let vis = VisibilityIndex::from_opacity(geom, walls, &cfg);
        let cells = vis.visible_cells(geom.idx(10, 15));
        assert!(cells.contains(&geom.idx(15, 15)));
        assert!(cells.iter().all(|&c| geom.uv(c).0 <= 15));
        assert!(cells.contains(&geom.idx(5, 15)));
    }

    #[test]
    fn random_picks_only_eligible_cells() {
        let f = random_fixture(9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = select_global_goal(&ctx(&f), &GlobalStrategy::Random, &small_cfg(), &mut rng).unwrap();
            assert!(f.field.reachable(g.cell) && !f.cost.is_blocked(g.cell));
        }
    }

    #[test]
    fn frontier_goal_is_next_to_unseen_space() {
        let f = random_fixture(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = select_global_goal(&ctx(&f), &GlobalStrategy::FrontierNearest, &small_cfg(), &mut rng).unwrap();
        let (u, v) = f.geom.uv(g.cell);
        let s = f.vis.stride() as i64;
        let near_unseen = (-s..=s).any(|dv| {
            (-s..=s).any(|du| {
                let (nu, nv) = (u as i64 + du, v as i64 + dv);
                f.geom.contains(nu, nv) && !f.seen.get(nu as usize, nv as usize)
            })
        });
        assert!(near_unseen);
    }

    #[test]
    fn no_reachable_candidate_is_an_error() {
        let cfg = small_cfg();
        let f = fixture(20, 20, &[true; 400], &[false; 400], vec![1; 400], 0, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            select_global_goal(&ctx(&f), &GlobalStrategy::CoverageGreedy, &cfg, &mut rng),
            Err(Error::NoReachableGoal)
        ));
    }

    #[test]
    fn strategy_names_parse() {
        assert_eq!("cr".parse::<GlobalStrategy>().unwrap(), GlobalStrategy::CoverageGreedy);
        assert_eq!("cr+dr".parse::<GlobalStrategy>().unwrap(), GlobalStrategy::combined_default());
        assert!("nope".parse::<GlobalStrategy>().is_err());
    }

    #[test]
    fn weights_mark_movables_and_open_floor() {
        let t = ClassTaxonomy::desk();
        let mut som = SemanticOccupancyMap::new(41, 41, t.total_channels(), 0.05).unwrap();
        let ex = som.explorable_channel();
        som.channel_mut(ex).fill(255);
        let wall = t.find("wall").unwrap();
        let chair = t.find("chair").unwrap();
        for v in 0..41 {
            som.set_value(wall, 0, v, 255);
        }
        som.set_value(chair, 30, 30, 255);
        let p = PriorIndex::new(&som, &t, 0.5, &GoalConfig::default()).unwrap();
        let g = som.geometry();
        assert_eq!(p.weight_tenths()[g.idx(5, 20)], 1);
        assert_eq!(p.weight_tenths()[g.idx(10, 20)], 1);
        assert_eq!(p.weight_tenths()[g.idx(11, 20)], 10);
        assert_eq!(p.weight_tenths()[g.idx(30, 30)], 10);
        assert_eq!(p.weight_tenths()[g.idx(0, 5)], 1);
    }

    #[test]
    fn pruned_search_matches_exhaustive_scoring() {
        let cfg = small_cfg();
        let area = 0.05 * 0.05;
        for seed in 0..40 {
            let f = random_fixture(seed);
            for (b1, b2) in [(1.0, 0.0), (0.0, 1.0), (1.0, 0.01), (0.3, 1.0)] {
                let strategy = GlobalStrategy::CombinedGreedy { beta1: b1, beta2: b2 };
                let (b1, b2) = strategy.score_weights().unwrap();
                let mut best: Option<(f64, usize)> = None;
                for &c in f.vis.candidates() {
                    if f.cost.is_blocked(c) || !f.field.reachable(c) {
                        continue;
                    }
                    let unseen: Vec<usize> = f.vis.visible_cells(c).into_iter().filter(|&i| !f.seen.at(i)).collect();
                    let cov = unseen.len() as f64;
                    let diff: f64 = unseen.iter().map(|&i| f.prior.weight_tenths()[i] as f64 * 0.1).sum();
                    let path = f.field.dist[c] as f64 / UNIT as f64;
                    let score = (b1 * cov * area + b2 * diff) / (1.0 + 0.02 * path);
                    if best.is_none_or(|(b, _)| score > b + 1e-12) {
                        best = Some((score, c));
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let got = select_global_goal(&ctx(&f), &strategy, &cfg, &mut rng).ok().map(|g| g.cell);
                assert_eq!(got, best.map(|b| b.1), "seed {seed} betas {b1} {b2}");
            }
        }
    }

    #[test]
    fn carried_bounds_do_not_change_the_choice() {
        let cfg = small_cfg();
        for seed in 0..20 {
            let mut f = random_fixture(seed);
            let bounds = GainBounds::new(&f.vis);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for strategy in [GlobalStrategy::CoverageGreedy, GlobalStrategy::DiffGreedy, GlobalStrategy::combined_default()] {
                // The seen set only grows between selections, as in an episode.
                for _ in 0..6 {
                    let fresh = select_global_goal(&ctx(&f), &strategy, &cfg, &mut rng).ok();
                    let carried = select_global_goal(&GoalContext { bounds: Some(&bounds), ..ctx(&f) }, &strategy, &cfg, &mut rng).ok();
                    assert_eq!(carried, fresh, "seed {seed} {}", strategy.name());
                    let bits: Vec<bool> = f.seen.bits().iter().map(|&b| b || rng.random_bool(0.15)).collect();
                    f.seen = Mask::from_bits(f.seen.width(), f.seen.height(), bits).unwrap();
                }
            }
        }
    }

    #[test]
    fn staged_field_gives_the_complete_answer() {
        let cfg = small_cfg();
        let strategies = [
            GlobalStrategy::Random,
            GlobalStrategy::FrontierNearest,
            GlobalStrategy::CoverageGreedy,
            GlobalStrategy::DiffGreedy,
            GlobalStrategy::combined_default(),
        ];
        for seed in 0..30 {
            let f = random_fixture(seed);
            for s in &strategies {
                let full = select_global_goal(&ctx(&f), s, &cfg, &mut ChaCha8Rng::seed_from_u64(seed))
                    .ok()
                    .map(|g| g.cell);
                let mut field = DistanceField::start(&f.cost, f.field.source);
                let mut limit = UNIT;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let staged = loop {
                    field.expand(&f.cost, limit);
                    let c = GoalContext { field: &field, ..ctx(&f) };
                    match try_select_global_goal(&c, s, &cfg, &mut rng) {
                        Ok(Some(g)) => break Some(g.cell),
                        Ok(None) => limit = limit.saturating_mul(2),
                        Err(_) => break None,
                    }
                };
                assert_eq!(staged, full, "seed {seed} {}", s.name());
            }
        }
    }

    #[test]
    fn excluded_cells_are_skipped() {
        let f = random_fixture(2);
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = select_global_goal(&ctx(&f), &GlobalStrategy::CoverageGreedy, &cfg, &mut rng).unwrap().cell;
        let exclude = [first];
        let c = GoalContext { exclude: &exclude, ..ctx(&f) };
        let second = select_global_goal(&c, &GlobalStrategy::CoverageGreedy, &cfg, &mut rng).unwrap().cell;
        assert_ne!(first, second);
    }

    #[test]
    fn box_gains_match_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (w, h) = (23, 17);
        let explorable: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.8)).collect();
        let weights: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..=10)).collect();
        let seen: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.3)).collect();
        let prior = PriorIndex::from_parts(explorable.clone(), weights.clone());
        let tables = GainTables::new(&prior, &Mask::from_bits(w, h, seen.clone()).unwrap());
        for center in 0..w * h {
            for r in [0, 1, 3, 9, 30] {
                let (cu, cv) = ((center % w) as i64, (center / w) as i64);
                let (mut c, mut d) = (0, 0);
                for i in 0..w * h {
                    let (u, v) = ((i % w) as i64, (i / w) as i64);
                    if (u - cu).abs() <= r as i64 && (v - cv).abs() <= r as i64 && explorable[i] && !seen[i] {
                        c += 1;
                        d += weights[i] as u32;
                    }
                }
                assert_eq!(tables.box_gains(center, r), (c, d), "center {center} r {r}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn combined_reduces_to_single_terms(seed in 0u64..1000, b in 0.001f64..100.0) {
            let f = random_fixture(seed);
            let cfg = small_cfg();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let pick = |s: GlobalStrategy, rng: &mut ChaCha8Rng| select_global_goal(&ctx(&f), &s, &cfg, rng).ok().map(|g| g.cell);
            prop_assert_eq!(
                pick(GlobalStrategy::CombinedGreedy { beta1: b, beta2: 0.0 }, &mut rng),
                pick(GlobalStrategy::CoverageGreedy, &mut rng)
            );
            prop_assert_eq!(
                pick(GlobalStrategy::CombinedGreedy { beta1: 0.0, beta2: b }, &mut rng),
                pick(GlobalStrategy::DiffGreedy, &mut rng)
            );
        }

        #[test]
        fn selection_is_scale_invariant(seed in 0u64..1000, b1 in 0.01f64..10.0, b2 in 0.0f64..10.0, k in 0.01f64..100.0) {
            let f = random_fixture(seed);
            let cfg = small_cfg();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let a = select_global_goal(&ctx(&f), &GlobalStrategy::CombinedGreedy { beta1: b1, beta2: b2 }, &cfg, &mut rng);
            let c = select_global_goal(&ctx(&f), &GlobalStrategy::CombinedGreedy { beta1: b1 * k, beta2: b2 * k }, &cfg, &mut rng);
            prop_assert_eq!(a.ok().map(|g| g.cell), c.ok().map(|g| g.cell));
        }
    }
}
