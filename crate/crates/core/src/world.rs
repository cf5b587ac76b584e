//! The embodied world: ground truth, noisy kinematics with collisions, and a
//! raycast depth + semantic sensor.
//!
//! Obstacles come in two heights. Walls and other non-movable obstacles, and
//! everything outside explorable space, are tall and opaque. Movable furniture is
//! low: the sensor sees its top surface, so rays report where they cross it and
//! keep going until they meet something tall.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raycast::GridRay;
use crate::som::{
    collapse_to_occupancy, threshold_byte, ClassAction, ClassTaxonomy, Displacement,
    GridGeometry, OccupancyGrid, Pose2D, SemanticOccupancyMap,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub forward_m: f64,
    pub turn_deg: f64,
    pub agent_radius_m: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Self {
            forward_m: 0.25,
            turn_deg: 10.0,
            agent_radius_m: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_trans_m: f64,
    pub sigma_rot_deg: f64,
    /// Samples beyond this many standard deviations are redrawn.
    pub truncation: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_trans_m: 0.01,
            sigma_rot_deg: 1.0,
            truncation: 3.0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma_trans_m: 0.0,
            sigma_rot_deg: 0.0,
            truncation: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_trans_m >= 0.0 && self.sigma_rot_deg >= 0.0 && self.truncation > 0.0) {
            return Err(Error::InvalidConfig(format!("noise model {self:?}")));
        }
        Ok(())
    }
}

fn truncated_normal(rng: &mut ChaCha8Rng, sigma: f64, truncation: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= truncation {
            return z * sigma;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub n_rays: usize,
    pub fov_deg: f64,
    pub max_range_m: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            n_rays: 128,
            fov_deg: 90.0,
            max_range_m: 5.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rays == 0
            || !(self.fov_deg >= 0.0 && self.fov_deg < 360.0)
            || !(self.max_range_m > 0.0)
        {
            return Err(Error::InvalidConfig(format!("sensor {self:?}")));
        }
        Ok(())
    }

    /// Ray bearings relative to the heading, leftmost first.
    pub fn ray_angles_deg(&self) -> Vec<f64> {
        if self.n_rays == 1 {
            return vec![0.0];
        }
        let step = self.fov_deg / (self.n_rays - 1) as f64;
        (0..self.n_rays)
            .map(|i| self.fov_deg / 2.0 - i as f64 * step)
            .collect()
    }
}

/// One ray of a [`DepthScan`].
#[derive(Debug, Clone, PartialEq)]
pub struct RayReading {
    /// Bearing relative to the heading, counterclockwise positive.
    pub angle_deg: f64,
    /// Distance to the first obstacle of any height; `None` when nothing is hit in range.
    pub depth_m: Option<f64>,
    pub hit_channel: Option<usize>,
    /// Where the ray stops: the boundary of a tall obstacle, the map edge, or max range.
    pub range_m: f64,
    /// True when the ray stopped at a tall obstacle within range.
    pub blocked: bool,
    /// Intervals `[start, end)` along the ray that cross low obstacles.
    pub low_spans: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthScan {
    pub fov_deg: f64,
    pub max_range_m: f64,
    pub rays: Vec<RayReading>,
}

impl DepthScan {
    pub fn n_rays(&self) -> usize {
        self.rays.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum CellKind {
    Free = 0,
    Low = 1,
    Tall = 2,
}

const NO_CHANNEL: u16 = u16::MAX;

/// Immutable ground truth shared by every episode on the same map.
#[derive(Debug, Clone)]
pub struct WorldMap {
    som: SemanticOccupancyMap,
    occ: OccupancyGrid,
    kinds: Vec<CellKind>,
    hit_channel: Vec<u16>,
}

impl WorldMap {
    pub fn new(som: SemanticOccupancyMap, taxonomy: &ClassTaxonomy, threshold: f64) -> Result<Self> {
        let occ = collapse_to_occupancy(&som, taxonomy, threshold)?;
        let tb = threshold_byte(threshold);
        let n = som.width() * som.height();
        let obstacles = taxonomy.obstacle_channels();
        let mut kinds = vec![CellKind::Free; n];
        let mut hit_channel = vec![NO_CHANNEL; n];
        for i in 0..n {
            if !som.is_explorable_at(i) {
                kinds[i] = CellKind::Tall;
                continue;
            }
            let mut best = 0u8;
            for &ch in &obstacles {
                let b = som.value_at(ch, i);
                if b as u16 >= tb {
                    let tall = taxonomy.action(ch) == ClassAction::NoOperation;
                    if tall {
                        kinds[i] = CellKind::Tall;
                    } else if kinds[i] == CellKind::Free {
                        kinds[i] = CellKind::Low;
                    }
                    if b > best {
                        best = b;
                        hit_channel[i] = ch as u16;
                    }
                }
            }
        }
        Ok(Self {
            som,
            occ,
            kinds,
            hit_channel,
        })
    }

    pub fn som(&self) -> &SemanticOccupancyMap {
        &self.som
    }

    pub fn occupancy(&self) -> &OccupancyGrid {
        &self.occ
    }

    pub fn geometry(&self) -> GridGeometry {
        *self.occ.geometry()
    }

    pub fn kind_at(&self, idx: usize) -> CellKind {
        self.kinds[idx]
    }

    pub fn channel_at(&self, idx: usize) -> Option<usize> {
        let c = self.hit_channel[idx];
        (c != NO_CHANNEL).then_some(c as usize)
    }

    /// Is the world point inside an occupied (or out-of-map) cell?
    pub fn point_occupied(&self, x_m: f64, y_m: f64) -> bool {
        let g = self.geometry();
        let (u, v) = g.world_to_cell_unchecked(x_m, y_m);
        !g.contains(u, v) || self.occ.is_occupied(g.idx(u as usize, v as usize))
    }

    /// Does a disk of `radius` centered at the point overlap any occupied cell?
    pub fn disk_collides(&self, x_m: f64, y_m: f64, radius: f64) -> bool {
        let g = self.geometry();
        let cs = g.cell_size_m;
        let (u0, v0) = g.world_to_cell_unchecked(x_m - radius, y_m + radius);
        let (u1, v1) = g.world_to_cell_unchecked(x_m + radius, y_m - radius);
        for v in v0..=v1 {
            for u in u0..=u1 {
                if g.contains(u, v) && !self.occ.is_occupied(g.idx(u as usize, v as usize)) {
                    continue;
                }
                // Out-of-map cells count as occupied.
                let (cx, cy) = (
                    (u as f64 + 0.5 - g.width as f64 / 2.0) * cs,
                    (g.height as f64 / 2.0 - v as f64 - 0.5) * cs,
                );
                let dx = ((x_m - cx).abs() - cs / 2.0).max(0.0);
                let dy = ((y_m - cy).abs() - cs / 2.0).max(0.0);
                if dx * dx + dy * dy < radius * radius {
                    return true;
                }
            }
        }
        false
    }

    /// Casts one ray from a world point.
    pub fn cast(&self, x_m: f64, y_m: f64, angle_rad: f64, max_range_m: f64) -> RayReading {
        let g = self.geometry();
        let mut depth = None;
        let mut hit_channel = None;
        let mut spans: Vec<(f64, f64)> = Vec::new();
        let mut range = max_range_m;
        let mut blocked = false;
        for cell in GridRay::from_world(&g, x_m, y_m, angle_rad) {
            if cell.t_enter >= max_range_m {
                break;
            }
            if !g.contains(cell.u, cell.v) {
                range = cell.t_enter;
                break;
            }
            let idx = g.idx(cell.u as usize, cell.v as usize);
            let kind = self.kinds[idx];
            if kind != CellKind::Free && depth.is_none() {
                depth = Some(cell.t_enter);
                hit_channel = self.channel_at(idx);
            }
            match kind {
                CellKind::Tall => {
                    range = cell.t_enter;
                    blocked = true;
                    break;
                }
                CellKind::Low => {
                    let end = cell.t_exit.min(max_range_m);
                    match spans.last_mut() {
                        Some(last) if last.1 >= cell.t_enter => last.1 = end,
                        _ => spans.push((cell.t_enter, end)),
                    }
                }
                CellKind::Free => {}
            }
        }
        RayReading {
            angle_deg: 0.0,
            depth_m: depth,
            hit_channel,
            range_m: range,
            blocked,
            low_spans: spans,
        }
    }
}

/// Result of executing one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub pose: Pose2D,
    /// Reported body-frame displacement: the realized motion plus independent noise.
    pub odometry: Displacement,
    /// Forward motion was cut short by contact.
    pub bumped: bool,
}

/// Per-episode world state. The map is shared read-only; pose and noise stream are owned.
#[derive(Debug, Clone)]
pub struct WorldState {
    map: Arc<WorldMap>,
    pose: Pose2D,
    rng: ChaCha8Rng,
    kinematics: Kinematics,
}

impl WorldState {
    pub fn new(map: Arc<WorldMap>, start: Pose2D, seed: u64, kinematics: Kinematics) -> Result<Self> {
        if map.disk_collides(start.x_m, start.y_m, kinematics.agent_radius_m)
            || map.point_occupied(start.x_m, start.y_m)
        {
            return Err(Error::PoseInObstacle);
        }
        Ok(Self {
            map,
            pose: start,
            rng: ChaCha8Rng::seed_from_u64(seed),
            kinematics,
        })
    }

    pub fn map(&self) -> &Arc<WorldMap> {
        &self.map
    }

    pub fn pose(&self) -> Pose2D {
        self.pose
    }

    pub fn kinematics(&self) -> &Kinematics {
        &self.kinematics
    }

    /// Largest collision-free advance (≤ `distance`) along `heading_rad` from `from`.
    fn sweep(&self, from: &Pose2D, heading_rad: f64, distance: f64) -> f64 {
        let r = self.kinematics.agent_radius_m;
        let (s, c) = heading_rad.sin_cos();
        let hits = |d: f64| self.map.disk_collides(from.x_m + c * d, from.y_m + s * d, r);
        const STEP: f64 = 0.01;
        let mut free = 0.0;
        while free < distance {
            let next = (free + STEP).min(distance);
            if hits(next) {
                let mut hi = next;
                for _ in 0..40 {
                    let mid = 0.5 * (free + hi);
                    if hits(mid) {
                        hi = mid;
                    } else {
                        free = mid;
                    }
                }
                return free;
            }
            free = next;
        }
        distance
    }

    pub fn step(&mut self, action: Action, noise: &NoiseModel) -> StepOutcome {
        let k = self.kinematics;
        let before = self.pose;
        let rot_noise = truncated_normal(&mut self.rng, noise.sigma_rot_deg, noise.truncation);
        let mut bumped = false;
        self.pose = match action {
            Action::Forward => {
                let trans_noise =
                    truncated_normal(&mut self.rng, noise.sigma_trans_m, noise.truncation);
                let intended = (k.forward_m + trans_noise).max(0.0);
                let moved = self.sweep(&before, before.heading_rad(), intended);
                bumped = moved < intended;
                let (s, c) = before.heading_rad().sin_cos();
                Pose2D::new(
                    before.x_m + c * moved,
                    before.y_m + s * moved,
                    before.theta_deg + rot_noise,
                )
            }
            Action::TurnLeft => Pose2D::new(before.x_m, before.y_m, before.theta_deg + k.turn_deg + rot_noise),
            Action::TurnRight => Pose2D::new(before.x_m, before.y_m, before.theta_deg - k.turn_deg + rot_noise),
        };
        let realized = before.between(&self.pose);
        let mut odometry = realized;
        if action == Action::Forward {
            odometry.dx_m += truncated_normal(&mut self.rng, noise.sigma_trans_m, noise.truncation);
            odometry.dy_m += truncated_normal(&mut self.rng, noise.sigma_trans_m, noise.truncation);
        }
        odometry.dtheta_deg += truncated_normal(&mut self.rng, noise.sigma_rot_deg, noise.truncation);
        StepOutcome {
            pose: self.pose,
            odometry,
            bumped,
        }
    }

    pub fn sense(&self, cfg: &SensorConfig) -> Result<DepthScan> {
        sense(&self.map, &self.pose, cfg)
    }

    pub fn rng_mut(&mut self) -> &mut impl Rng {
        &mut self.rng
    }
}

/// Simulated depth scan from `pose`.
pub fn sense(map: &WorldMap, pose: &Pose2D, cfg: &SensorConfig) -> Result<DepthScan> {
    if map.point_occupied(pose.x_m, pose.y_m) {
        return Err(Error::PoseInObstacle);
    }
    let rays = cfg
        .ray_angles_deg()
        .into_iter()
        .map(|rel| {
            let mut r = map.cast(
                pose.x_m,
                pose.y_m,
                (pose.theta_deg + rel).to_radians(),
                cfg.max_range_m,
            );
            r.angle_deg = rel;
            r
        })
        .collect();
    Ok(DepthScan {
        fov_deg: cfg.fov_deg,
        max_range_m: cfg.max_range_m,
        rays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Empty explorable square of `n` cells with optional wall cells.
    fn room(n: usize, walls: &[(usize, usize)]) -> Arc<WorldMap> {
        let t = ClassTaxonomy::desk();
        let mut som = SemanticOccupancyMap::new(n, n, t.total_channels(), 0.05).unwrap();
        let e = som.explorable_channel();
        for i in 0..n * n {
            som.set_value_at(e, i, 255);
        }
        let wall = t.find("wall").unwrap();
        for &(u, v) in walls {
            som.set_value(wall, u, v, 255);
        }
        Arc::new(WorldMap::new(som, &t, 0.5).unwrap())
    }

    fn column_wall(n: usize, u: usize) -> Vec<(usize, usize)> {
        (0..n).map(|v| (u, v)).collect()
    }

    #[test]
    fn forward_moves_a_quarter_meter_east() {
        let mut w = WorldState::new(room(81, &[]), Pose2D::origin(), 1, Kinematics::default()).unwrap();
        let out = w.step(Action::Forward, &NoiseModel::noiseless());
        assert!((out.pose.x_m - 0.25).abs() < 1e-12 && out.pose.y_m.abs() < 1e-12);
        assert!(!out.bumped);
    }

    #[test]
    fn turn_left_adds_ten_degrees() {
        let mut w = WorldState::new(room(81, &[]), Pose2D::new(0.1, 0.2, 30.0), 1, Kinematics::default())
            .unwrap();
        let out = w.step(Action::TurnLeft, &NoiseModel::noiseless());
        assert!((out.pose.theta_deg - 40.0).abs() < 1e-12);
        assert_eq!((out.pose.x_m, out.pose.y_m), (0.1, 0.2));
        let out = w.step(Action::TurnRight, &NoiseModel::noiseless());
        assert!((out.pose.theta_deg - 30.0).abs() < 1e-12);
    }

    #[test]
    fn wall_ahead_truncates_motion() {
        // 81-cell map: column 47 spans x in [0.325, 0.375). Disk edge starts 0.10 m from it.
        let map = room(81, &column_wall(81, 47));
        let start = Pose2D::new(0.325 - 0.1 - 0.10, 0.0, 0.0);
        let mut w = WorldState::new(map.clone(), start, 1, Kinematics::default()).unwrap();
        let out = w.step(Action::Forward, &NoiseModel::noiseless());
        let moved = out.pose.x_m - start.x_m;
        assert!(out.bumped);
        assert!(moved < 0.25);
        assert!(!map.point_occupied(out.pose.x_m, out.pose.y_m));

        // Swept-motion oracle: advance 1 mm at a time while the disk stays clear.
        let mut d = 0.0;
        while d + 0.001 <= 0.25 && !map.disk_collides(start.x_m + d + 0.001, 0.0, 0.1) {
            d += 0.001;
        }
        assert!((moved - d).abs() <= 0.001, "moved {moved}, oracle {d}");
        assert!((moved - 0.10).abs() < 1e-6);
    }

    #[test]
    fn zero_noise_odometry_equals_true_displacement() {
        let map = room(81, &column_wall(81, 50));
        let mut w = WorldState::new(map, Pose2D::new(0.0, 0.0, 5.0), 3, Kinematics::default()).unwrap();
        let actions = [Action::Forward, Action::Forward, Action::TurnLeft, Action::Forward, Action::Forward];
        for a in actions {
            let before = w.pose();
            let out = w.step(a, &NoiseModel::noiseless());
            let truth = before.between(&out.pose);
            assert!((out.odometry.dx_m - truth.dx_m).abs() < 1e-12);
            assert!((out.odometry.dy_m - truth.dy_m).abs() < 1e-12);
            assert!((out.odometry.dtheta_deg - truth.dtheta_deg).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_is_truncated_and_seeded() {
        let map = room(161, &[]);
        let noise = NoiseModel::default();
        let run = |seed| {
            let mut w = WorldState::new(map.clone(), Pose2D::origin(), seed, Kinematics::default()).unwrap();
            (0..20)
                .map(|i| w.step(if i % 3 == 0 { Action::TurnLeft } else { Action::Forward }, &noise))
                .collect::<Vec<_>>()
        };
        let a = run(9);
        assert_eq!(a, run(9));
        assert_ne!(a, run(10));
        let mut prev = Pose2D::origin();
        for (i, o) in a.iter().enumerate() {
            let d = prev.between(&o.pose);
            if i % 3 == 0 {
                assert!((d.dtheta_deg - 10.0).abs() <= 3.0 + 1e-9);
            } else {
                assert!((d.dx_m - 0.25).abs() <= 0.03 + 1e-9);
                assert!(d.dtheta_deg.abs() <= 3.0 + 1e-9);
            }
            prev = o.pose;
        }
    }

    #[test]
    fn wall_half_a_meter_ahead() {
        // 101-cell map: column 60 spans x in [0.475, 0.525); stand 0.5 m west of its face.
        let map = room(101, &column_wall(101, 60));
        let pose = Pose2D::new(0.475 - 0.5, 0.0, 0.0);
        let scan = sense(&map, &pose, &SensorConfig::default()).unwrap();
        let center = &scan.rays[63];
        let d = center.depth_m.unwrap();
        assert!((0.475..=0.525).contains(&d), "depth {d}");
        assert!(center.blocked);
        assert_eq!(center.hit_channel, Some(0));
    }

    #[test]
    fn empty_world_has_no_hits() {
        let map = room(401, &[]);
        let scan = sense(&map, &Pose2D::new(0.0, 0.0, 33.0), &SensorConfig::default()).unwrap();
        assert_eq!(scan.n_rays(), 128);
        assert!(scan.rays.iter().all(|r| r.depth_m.is_none() && !r.blocked));
    }

    #[test]
    fn rays_run_left_to_right() {
        let a = SensorConfig::default().ray_angles_deg();
        assert_eq!(a.len(), 128);
        assert!((a[0] - 45.0).abs() < 1e-12 && (a[127] + 45.0).abs() < 1e-12);
        assert!(a.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn pose_in_obstacle_is_rejected() {
        let map = room(41, &[(20, 20)]);
        assert!(matches!(
            sense(&map, &Pose2D::origin(), &SensorConfig::default()),
            Err(Error::PoseInObstacle)
        ));
    }

    #[test]
    fn low_obstacles_are_seen_through() {
        let t = ClassTaxonomy::desk();
        let n = 81;
        let mut som = SemanticOccupancyMap::new(n, n, t.total_channels(), 0.05).unwrap();
        let e = som.explorable_channel();
        for i in 0..n * n {
            som.set_value_at(e, i, 255);
        }
        let table = t.find("table").unwrap();
        for u in 45..48 {
            som.set_value(table, u, 40, 255);
        }
        let wall = t.find("wall").unwrap();
        for v in 0..n {
            som.set_value(wall, 60, v, 255);
        }
        let map = WorldMap::new(som, &t, 0.5).unwrap();
        let r = map.cast(0.0, 0.0, 0.0, 5.0);
        assert_eq!(r.hit_channel, Some(table));
        assert!((r.depth_m.unwrap() - 0.225).abs() < 1e-6, "{r:?}");
        assert_eq!(r.low_spans.len(), 1);
        assert!((r.low_spans[0].1 - 0.375).abs() < 1e-6);
        assert!(r.blocked);
        assert!((r.range_m - 0.975).abs() < 1e-6);
    }
}
