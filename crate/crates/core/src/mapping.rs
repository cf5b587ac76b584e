//! Scan → egocentric local map → global belief, plus pose tracking.
//!
//! The belief starts as a copy of the outdated prior. Sensed cells overwrite it;
//! unsensed cells keep the prior's value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raycast::GridRay;
use crate::som::{
    CellState, Displacement, GridGeometry, Mask, OccupancyGrid, Pose2D, SemanticOccupancyMap,
};
use crate::world::DepthScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMapConfig {
    pub side_cells: usize,
    pub cell_size_m: f64,
}

impl Default for LocalMapConfig {
    fn default() -> Self {
        Self {
            side_cells: 101,
            cell_size_m: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalCell {
    Unknown,
    Free,
    Occupied,
}

/// Heading-aligned V×V grid with the agent at the center of the bottom-middle cell,
/// facing up (decreasing row).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMap {
    side: usize,
    cell_size_m: f64,
    cells: Vec<LocalCell>,
}

impl LocalMap {
    pub fn unknown(cfg: &LocalMapConfig) -> Self {
        Self {
            side: cfg.side_cells,
            cell_size_m: cfg.cell_size_m,
            cells: vec![LocalCell::Unknown; cfg.side_cells * cfg.side_cells],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn cells(&self) -> &[LocalCell] {
        &self.cells
    }

    /// Cell at (`row`, `col`).
    pub fn get(&self, row: usize, col: usize) -> LocalCell {
        self.cells[row * self.side + col]
    }

    pub fn agent_cell(&self) -> (usize, usize) {
        (self.side - 1, self.side / 2)
    }

    pub fn count(&self, c: LocalCell) -> usize {
        self.cells.iter().filter(|&&x| x == c).count()
    }

    /// Continuous (col, row) coordinates of a body-frame point.
    #[inline]
    pub fn body_to_grid_f(&self, fwd_m: f64, left_m: f64) -> (f64, f64) {
        (
            (self.side / 2) as f64 + 0.5 - left_m / self.cell_size_m,
            (self.side - 1) as f64 + 0.5 - fwd_m / self.cell_size_m,
        )
    }

    #[inline]
    pub fn body_to_cell(&self, fwd_m: f64, left_m: f64) -> Option<(usize, usize)> {
        let (gc, gr) = self.body_to_grid_f(fwd_m, left_m);
        let (c, r) = (gc.floor(), gr.floor());
        if c < 0.0 || r < 0.0 || c >= self.side as f64 || r >= self.side as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    /// Body-frame center (forward, left) of a cell.
    pub fn cell_to_body(&self, row: usize, col: usize) -> (f64, f64) {
        (
            (self.side - 1 - row) as f64 * self.cell_size_m,
            ((self.side / 2) as f64 - col as f64) * self.cell_size_m,
        )
    }

    /// Ray traversal through the local grid from the agent along bearing `angle_rad`.
    pub fn ray(&self, angle_rad: f64) -> impl Iterator<Item = (Option<(usize, usize)>, f64, f64)> + use<> {
        let (gc, gr) = self.body_to_grid_f(0.0, 0.0);
        let (s, c) = angle_rad.sin_cos();
        let side = self.side as i64;
        GridRay::from_grid(gc, gr, -s / self.cell_size_m, -c / self.cell_size_m).map(move |cell| {
            let inside = cell.u >= 0 && cell.v >= 0 && cell.u < side && cell.v < side;
            (
                inside.then_some((cell.v as usize, cell.u as usize)),
                cell.t_enter,
                cell.t_exit,
            )
        })
    }

    fn mark(&mut self, row: usize, col: usize, c: LocalCell) {
        let slot = &mut self.cells[row * self.side + col];
        // Occupied evidence wins over free within one scan.
        if *slot != LocalCell::Occupied {
            *slot = c;
        }
    }
}

/// Distances below this are treated as rounding between the world and local traversals.
const HIT_EPS_M: f64 = 1e-6;

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Exact geometric mapper: free along each ray, occupied across low-obstacle spans
/// and at the cell where a tall obstacle stops the ray.
pub fn build_local_map(scan: &DepthScan, cfg: &LocalMapConfig) -> LocalMap {
    let mut local = LocalMap::unknown(cfg);
    for ray in &scan.rays {
        let angle = ray.angle_deg.to_radians();
        let probes: Vec<f64> = ray.low_spans.iter().map(|s| 0.5 * (s.0 + s.1)).collect();
        for (cell, t_in, t_out) in local.ray(angle) {
            if t_in >= ray.range_m {
                break;
            }
            let Some((row, col)) = cell else { break };
            let seg = (t_in, t_out.min(ray.range_m));
            // Crossings shorter than the tolerance are rounding at the hit boundary or a corner.
            if seg.1 - seg.0 <= HIT_EPS_M {
                continue;
            }
            let covered: f64 = ray.low_spans.iter().map(|&s| overlap(seg, s)).sum();
            let probe_inside = probes.iter().any(|&p| p >= seg.0 && p < seg.1);
            let state = if probe_inside || covered >= 0.5 * (seg.1 - seg.0) && covered > 0.0 {
                LocalCell::Occupied
            } else {
                LocalCell::Free
            };
            local.mark(row, col, state);
        }
        if ray.blocked {
            let t = ray.range_m + HIT_EPS_M;
            let (s, c) = angle.sin_cos();
            if let Some((row, col)) = local.body_to_cell(t * c, t * s) {
                local.mark(row, col, LocalCell::Occupied);
            }
        }
    }
    local
}

/// The agent's evolving map: prior values everywhere, overwritten where sensed.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMap {
    grid: OccupancyGrid,
    seen: Mask,
}

/// Cells touched by one registration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegisterDelta {
    pub newly_seen: Vec<usize>,
    /// Cells whose Free/Occupied value changed.
    pub flipped: Vec<usize>,
}

impl BeliefMap {
    pub fn from_prior(prior: &OccupancyGrid) -> Self {
        let mut grid = prior.clone();
        for i in 0..grid.geometry().len() {
            if grid.at(i) == CellState::Unknown {
                grid.set_at(i, CellState::Free);
            }
        }
        let seen = Mask::new(prior.width(), prior.height());
        Self { grid, seen }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn seen(&self) -> &Mask {
        &self.seen
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.grid.geometry()
    }

    #[inline]
    pub fn is_occupied(&self, idx: usize) -> bool {
        self.grid.is_occupied(idx)
    }

    #[inline]
    pub fn is_seen(&self, idx: usize) -> bool {
        self.seen.at(idx)
    }

    /// Two-channel SOM1 snapshot: channel 0 occupancy, channel 1 seen.
    pub fn to_som(&self) -> SemanticOccupancyMap {
        let g = self.geometry();
        let n = g.len();
        let mut values = Vec::with_capacity(2 * n);
        values.extend((0..n).map(|i| if self.grid.is_occupied(i) { 255 } else { 0 }));
        values.extend(self.seen.bits().iter().map(|&s| if s { 255 } else { 0 }));
        SemanticOccupancyMap::from_raw(g.width, g.height, 2, g.cell_size_m as f32, values)
            .expect("dimensions come from a valid grid")
    }

    pub fn from_som(som: &SemanticOccupancyMap) -> Result<Self> {
        if som.channels() != 2 {
            return Err(Error::Malformed(format!(
                "belief snapshot needs 2 channels, found {}",
                som.channels()
            )));
        }
        let g = som.geometry();
        let cells = som
            .channel(0)
            .iter()
            .map(|&b| if b >= 128 { CellState::Occupied } else { CellState::Free })
            .collect();
        let seen = Mask::from_bits(g.width, g.height, som.channel(1).iter().map(|&b| b >= 128).collect())?;
        Ok(Self {
            grid: OccupancyGrid::from_cells(g, cells)?,
            seen,
        })
    }
}

/// Writes every explored local cell into the belief at its global position under `est_pose`.
///
/// Each global cell samples the local cell under its center, so the update is a
/// deterministic function of (belief, local, pose); projections outside the map are dropped.
pub fn register(belief: &mut BeliefMap, local: &LocalMap, est_pose: &Pose2D) -> RegisterDelta {
    let g = *belief.geometry();
    let side = local.side() as f64 * local.cell_size_m();
    let half = 0.5 * side;
    let corners = [
        (-0.5 * local.cell_size_m(), -half - local.cell_size_m()),
        (-0.5 * local.cell_size_m(), half + local.cell_size_m()),
        (side, -half - local.cell_size_m()),
        (side, half + local.cell_size_m()),
    ];
    let (mut umin, mut vmin, mut umax, mut vmax) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
    for (f, l) in corners {
        let (x, y) = est_pose.body_to_world(f, l);
        let (u, v) = g.world_to_cell_unchecked(x, y);
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let umin = umin.max(0);
    let vmin = vmin.max(0);
    let umax = umax.min(g.width as i64 - 1);
    let vmax = vmax.min(g.height as i64 - 1);

    let mut delta = RegisterDelta::default();
    for v in vmin..=vmax {
        for u in umin..=umax {
            let (x, y) = g.cell_center(u as usize, v as usize);
            let (f, l) = est_pose.world_to_body(x, y);
            let Some((row, col)) = local.body_to_cell(f, l) else {
                continue;
            };
            let state = match local.get(row, col) {
                LocalCell::Unknown => continue,
                LocalCell::Free => CellState::Free,
                LocalCell::Occupied => CellState::Occupied,
            };
            let idx = g.idx(u as usize, v as usize);
            if !belief.seen.at(idx) {
                belief.seen.set_at(idx, true);
                delta.newly_seen.push(idx);
            }
            if belief.grid.at(idx) != state {
                belief.grid.set_at(idx, state);
                delta.flipped.push(idx);
            }
        }
    }
    delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Localization {
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "noisy")]
    DeadReckoning,
}

impl Localization {
    pub fn name(self) -> &'static str {
        match self {
            Localization::Oracle => "oracle",
            Localization::DeadReckoning => "noisy",
        }
    }
}

impl std::str::FromStr for Localization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Localization::Oracle),
            "noisy" | "dead_reckoning" | "estimated" => Ok(Localization::DeadReckoning),
            other => Err(Error::InvalidConfig(format!("unknown localization mode {other:?}"))),
        }
    }
}

/// Pose estimate in the episode frame, which starts at (0, 0, 0) on the start pose.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseBelief {
    mode: Localization,
    origin: Pose2D,
    estimate: Pose2D,
    steps: usize,
}

impl PoseBelief {
    /// `origin` is the world pose the episode starts from.
    pub fn new(mode: Localization, origin: Pose2D) -> Self {
        Self {
            mode,
            origin,
            estimate: Pose2D::origin(),
            steps: 0,
        }
    }

    pub fn mode(&self) -> Localization {
        self.mode
    }

    /// Estimate relative to the start pose.
    pub fn estimate(&self) -> Pose2D {
        self.estimate
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Estimate expressed in world coordinates.
    pub fn world_estimate(&self) -> Pose2D {
        self.origin.compose(&Displacement {
            dx_m: self.estimate.x_m,
            dy_m: self.estimate.y_m,
            dtheta_deg: self.estimate.theta_deg,
        })
    }

    /// Integrates one odometry reading (oracle mode copies the true pose instead).
    pub fn update(&mut self, odometry: &Displacement, true_pose: &Pose2D) {
        self.steps += 1;
        self.estimate = match self.mode {
            Localization::Oracle => {
                let d = self.origin.between(true_pose);
                Pose2D::new(d.dx_m, d.dy_m, d.dtheta_deg)
            }
            Localization::DeadReckoning => self.estimate.compose(odometry),
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::RayReading;

    fn scan_of(rays: Vec<RayReading>) -> DepthScan {
        DepthScan {
            fov_deg: 90.0,
            max_range_m: 5.0,
            rays,
        }
    }

    fn ray(angle_deg: f64, range: f64, blocked: bool) -> RayReading {
        RayReading {
            angle_deg,
            depth_m: blocked.then_some(range),
            hit_channel: blocked.then_some(0),
            range_m: range,
            blocked,
            low_spans: vec![],
        }
    }

    #[test]
    fn shallow_hit_marks_the_entered_cell() {
        // The ray meets a wall face 0.275 m to the left and crosses the entered cell
        // for only a few millimeters before leaving it sideways.
        let a: f64 = 13.819;
        let t = 0.275 / a.to_radians().sin();
        let local = build_local_map(&scan_of(vec![ray(a, t, true)]), &LocalMapConfig::default());
        let (s, c) = a.to_radians().sin_cos();
        let hit = local.body_to_cell((t + 1e-6) * c, (t + 1e-6) * s).unwrap();
        assert_eq!(local.get(hit.0, hit.1), LocalCell::Occupied);
        // Nothing on the wall side of the face is free.
        for (row, col) in (0..local.side()).flat_map(|r| (0..local.side()).map(move |c| (r, c))) {
            let (_, left) = local.cell_to_body(row, col);
            if left > 0.275 {
                assert_ne!(local.get(row, col), LocalCell::Free, "cell ({row}, {col})");
            }
        }
    }

    #[test]
    fn single_ray_half_meter() {
        let local = build_local_map(&scan_of(vec![ray(0.0, 0.5, true)]), &LocalMapConfig::default());
        let (r0, c0) = local.agent_cell();
        for k in 0..10 {
            assert_eq!(local.get(r0 - k, c0), LocalCell::Free, "cell {k}");
        }
        assert_eq!(local.get(r0 - 10, c0), LocalCell::Occupied);
        assert_eq!(local.count(LocalCell::Free), 10);
        assert_eq!(local.count(LocalCell::Occupied), 1);
    }

    #[test]
    fn all_no_hit_gives_free_wedge() {
        let cfg = crate::world::SensorConfig::default();
        let rays = cfg.ray_angles_deg().into_iter().map(|a| ray(a, 5.0, false)).collect();
        let local = build_local_map(&scan_of(rays), &LocalMapConfig::default());
        assert_eq!(local.count(LocalCell::Occupied), 0);
        assert!(local.count(LocalCell::Free) > 3000);
        // Cells straight behind the wedge's left edge stay unknown.
        assert_eq!(local.get(100, 0), LocalCell::Unknown);
    }

    #[test]
    fn low_span_is_marked_and_ray_continues() {
        let mut r = ray(0.0, 1.0, true);
        r.depth_m = Some(0.29);
        r.low_spans = vec![(0.29, 0.44)];
        let local = build_local_map(&scan_of(vec![r]), &LocalMapConfig::default());
        let (r0, c0) = local.agent_cell();
        let col: Vec<_> = (0..22).map(|k| local.get(r0 - k, c0)).collect();
        assert_eq!(col[5], LocalCell::Free);
        assert!(col[6..9].iter().all(|&c| c == LocalCell::Occupied), "{col:?}");
        assert!(col[9..20].iter().all(|&c| c == LocalCell::Free));
        assert_eq!(col[20], LocalCell::Occupied);
    }

    /// Forward-raycast consistency: casting through the local map from the agent finds the
    /// first occupied cell within one cell of each ray's reported depth.
    #[test]
    fn local_map_reproduces_scan_depths() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cfg = LocalMapConfig::default();
        for _ in 0..200 {
            let a = rng.random_range(-45.0..45.0);
            let d = rng.random_range(0.2..2.4);
            let local = build_local_map(&scan_of(vec![ray(a, d, true)]), &cfg);
            let first = local
                .ray(f64::to_radians(a))
                .find(|(c, _, _)| matches!(c, Some((r, k)) if local.get(*r, *k) == LocalCell::Occupied))
                .map(|(_, t_in, _)| t_in)
                .expect("an occupied cell along the ray");
            assert!((first - d).abs() <= cfg.cell_size_m * std::f64::consts::SQRT_2, "{a} {d} {first}");
        }
    }

    fn open_prior(n: usize) -> OccupancyGrid {
        OccupancyGrid::filled(GridGeometry::new(n, n, 0.05), CellState::Free)
    }

    #[test]
    fn empty_local_map_leaves_belief_unchanged() {
        let mut b = BeliefMap::from_prior(&open_prior(201));
        let before = b.clone();
        let d = register(&mut b, &LocalMap::unknown(&LocalMapConfig::default()), &Pose2D::new(0.3, -0.2, 71.0));
        assert_eq!(b, before);
        assert!(d.newly_seen.is_empty() && d.flipped.is_empty());
    }

    #[test]
    fn sensed_free_overwrites_prior_obstacle() {
        let mut prior = open_prior(201);
        // Cell 5 cells ahead of the origin (x = 0.25).
        prior.set(105, 100, CellState::Occupied);
        let mut b = BeliefMap::from_prior(&prior);
        let local = build_local_map(&scan_of(vec![ray(0.0, 1.0, false)]), &LocalMapConfig::default());
        let d = register(&mut b, &local, &Pose2D::origin());
        assert_eq!(b.grid().get(105, 100), CellState::Free);
        assert!(b.seen().get(105, 100));
        assert_eq!(d.flipped, vec![b.geometry().idx(105, 100)]);
    }

    #[test]
    fn registration_is_idempotent_and_seen_monotone() {
        let cfg = crate::world::SensorConfig::default();
        let rays = cfg
            .ray_angles_deg()
            .into_iter()
            .enumerate()
            .map(|(i, a)| ray(a, 0.5 + 0.02 * i as f64, i % 3 == 0))
            .collect();
        let local = build_local_map(&scan_of(rays), &LocalMapConfig::default());
        let pose = Pose2D::new(0.4, 0.1, 123.0);
        let mut once = BeliefMap::from_prior(&open_prior(241));
        register(&mut once, &local, &pose);
        let mut twice = once.clone();
        let d = register(&mut twice, &local, &pose);
        assert_eq!(once, twice);
        assert!(d.newly_seen.is_empty() && d.flipped.is_empty());
        assert!(once.seen().count() > 0);
    }

    #[test]
    fn unseen_cells_keep_the_prior() {
        let mut prior = open_prior(121);
        for u in 0..121 {
            prior.set(u, 3, CellState::Occupied);
        }
        let mut b = BeliefMap::from_prior(&prior);
        let local = build_local_map(&scan_of(vec![ray(0.0, 2.0, true)]), &LocalMapConfig::default());
        register(&mut b, &local, &Pose2D::new(0.0, 0.0, 200.0));
        for i in 0..b.geometry().len() {
            if !b.is_seen(i) {
                assert_eq!(b.grid().at(i), prior.at(i));
            }
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let mut b = BeliefMap::from_prior(&open_prior(61));
        let local = build_local_map(&scan_of(vec![ray(10.0, 0.8, true)]), &LocalMapConfig::default());
        register(&mut b, &local, &Pose2D::new(0.1, 0.0, 45.0));
        let back = BeliefMap::from_som(&b.to_som()).unwrap();
        assert_eq!(back.grid().cells(), b.grid().cells());
        assert_eq!(back.seen(), b.seen());
    }

    #[test]
    fn start_estimate_is_origin_and_oracle_tracks_truth() {
        let start = Pose2D::new(2.0, -1.0, 90.0);
        let mut pb = PoseBelief::new(Localization::Oracle, start);
        assert_eq!(pb.estimate(), Pose2D::origin());
        let truth = Pose2D::new(2.0, -0.75, 100.0);
        pb.update(&Displacement::default(), &truth);
        let w = pb.world_estimate();
        assert!(w.position_error(&truth) < 1e-12);
        assert!((w.theta_deg - truth.theta_deg).abs() < 1e-9);
    }

    #[test]
    fn dead_reckoning_composes_in_body_frame() {
        let mut pb = PoseBelief::new(Localization::DeadReckoning, Pose2D::origin());
        let turn = Displacement {
            dtheta_deg: 90.0,
            ..Default::default()
        };
        let fwd = Displacement {
            dx_m: 0.25,
            ..Default::default()
        };
        pb.update(&turn, &Pose2D::origin());
        pb.update(&fwd, &Pose2D::origin());
        let e = pb.estimate();
        assert!(e.x_m.abs() < 1e-12 && (e.y_m - 0.25).abs() < 1e-12);
        assert_eq!(pb.steps(), 2);
    }
}
