//! One benchmark episode: sense, fuse, score, choose a goal, drive, repeat.
//!
//! Each step executes a single action. The reward record of step `t` covers the
//! observation made after that action (step 0 also includes the initial scan), so
//! reward sums telescope from the prior to the final belief.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{compute_metrics, r_global, CurvePoint, Metrics, MetricsReport, RewardRecord, RewardTrace};
use crate::mapping::{build_local_map, register, BeliefMap, LocalMapConfig, Localization, PoseBelief};
use crate::nav::{
    local_control, next_local_goal, plan, should_resample, try_select_global_goal, CostMap, DistanceField,
    GainBounds, GainTables, GlobalStrategy, GoalConfig, GoalContext, LocalGoalStatus, LocalReward, PlannerConfig, PolicySchedule,
    PriorIndex, Resample, VisibilityIndex, UNIT,
};
use crate::som::{ClassTaxonomy, GridGeometry, Mask, OccupancyGrid, Pose2D, SemanticOccupancyMap};
use crate::world::{Action, Kinematics, NoiseModel, SensorConfig, WorldMap, WorldState};

/// Consecutive blocked forward moves before the current goal is abandoned.
const STUCK_BUMPS: usize = 3;
/// Candidates this close to a reached goal are not chosen again.
const VISITED_RADIUS_M: f64 = 1.0;

/// Distance from the tracked path that triggers a replan.
const DEVIATION_M: f64 = 0.5;
const POLICY_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
/// First path-cost radius searched when choosing a global goal, in cells.
const INITIAL_SEARCH_CELLS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub strategy: GlobalStrategy,
    pub localization: Localization,
    pub budget_t: usize,
    pub seed: u64,
    pub threshold: f64,
    pub kinematics: Kinematics,
    pub noise: NoiseModel,
    pub sensor: SensorConfig,
    pub local_map: LocalMapConfig,
    pub planner: PlannerConfig,
    pub goal: GoalConfig,
    pub schedule: PolicySchedule,
    /// Steps between curve samples.
    pub curve_stride: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            strategy: GlobalStrategy::combined_default(),
            localization: Localization::DeadReckoning,
            budget_t: 1000,
            seed: 0,
            threshold: crate::som::DEFAULT_THRESHOLD,
            kinematics: Kinematics::default(),
            noise: NoiseModel::default(),
            sensor: SensorConfig::default(),
            local_map: LocalMapConfig::default(),
            planner: PlannerConfig::default(),
            goal: GoalConfig::default(),
            schedule: PolicySchedule::default(),
            curve_stride: 50,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self, cell_size_m: f64) -> Result<()> {
        if self.budget_t == 0 {
            return Err(Error::InvalidConfig("budget_T must be at least 1".into()));
        }
        if self.curve_stride == 0 || self.schedule.global_period == 0 {
            return Err(Error::InvalidConfig("curve stride and global period must be at least 1".into()));
        }
        self.strategy.validate()?;
        self.noise.validate()?;
        self.sensor.validate()?;
        self.planner.validate(self.kinematics.agent_radius_m, cell_size_m)
    }
}

/// Read-only map data for one episode. The visibility index depends only on walls,
/// so it can be shared by every variant of a floor.
#[derive(Debug, Clone)]
pub struct EpisodeMaps {
    pub truth: Arc<WorldMap>,
    /// Prior occupancy as the agent starts with it (unknown read as free).
    pub prior: OccupancyGrid,
    pub prior_index: PriorIndex,
    pub visibility: Arc<VisibilityIndex>,
    pub explorable: Mask,
}

impl EpisodeMaps {
    pub fn new(
        prior_som: &SemanticOccupancyMap,
        truth_som: SemanticOccupancyMap,
        taxonomy: &ClassTaxonomy,
        cfg: &EpisodeConfig,
    ) -> Result<Self> {
        let visibility = Arc::new(VisibilityIndex::new(prior_som, taxonomy, cfg.threshold, &cfg.goal)?);
        Self::with_visibility(prior_som, truth_som, taxonomy, cfg, visibility)
    }

    pub fn with_visibility(
        prior_som: &SemanticOccupancyMap,
        truth_som: SemanticOccupancyMap,
        taxonomy: &ClassTaxonomy,
        cfg: &EpisodeConfig,
        visibility: Arc<VisibilityIndex>,
    ) -> Result<Self> {
        prior_som.geometry().check_same(&truth_som.geometry(), "prior vs truth")?;
        visibility.geometry().check_same(&truth_som.geometry(), "visibility index vs truth")?;
        let explorable = truth_som.explorable_mask();
        let prior_occ = crate::som::collapse_to_occupancy(prior_som, taxonomy, cfg.threshold)?;
        let prior = BeliefMap::from_prior(&prior_occ).grid().clone();
        let prior_index = PriorIndex::new(prior_som, taxonomy, cfg.threshold, &cfg.goal)?;
        let truth = Arc::new(WorldMap::new(truth_som, taxonomy, cfg.threshold)?);
        Ok(Self {
            truth,
            prior,
            prior_index,
            visibility,
            explorable,
        })
    }

    pub fn geometry(&self) -> GridGeometry {
        self.truth.geometry()
    }

    /// Metrics of `belief` against this episode's prior and truth.
    pub fn metrics(&self, belief: &BeliefMap) -> Result<Metrics> {
        compute_metrics(&self.prior, self.truth.occupancy(), belief.grid(), belief.seen(), &self.explorable)
    }
}

/// Controller bookkeeping, for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub global_resamples: usize,
    pub replans: usize,
    pub abandoned_goals: usize,
    pub bumps: usize,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub trace: RewardTrace,
    pub report: MetricsReport,
    /// Position error of the pose estimate after each step, meters.
    pub pose_errors: Vec<f64>,
    pub belief: BeliefMap,
    pub steps_executed: usize,
    pub final_pose: Pose2D,
    /// Global goals in the order they were chosen.
    pub goals: Vec<usize>,
    pub stats: EpisodeStats,
}

/// Runs an episode from `start` for at most `cfg.budget_t` steps.
pub fn run_episode(maps: &EpisodeMaps, start: Pose2D, cfg: &EpisodeConfig) -> Result<EpisodeResult> {
    run_episode_with(maps, start, cfg, |_, _| {})
}

/// Like [`run_episode`], calling `observe(t, belief)` at every curve sample.
pub fn run_episode_with(
    maps: &EpisodeMaps,
    start: Pose2D,
    cfg: &EpisodeConfig,
    mut observe: impl FnMut(usize, &BeliefMap),
) -> Result<EpisodeResult> {
    let geom = maps.geometry();
    cfg.validate(geom.cell_size_m)?;
    let mut agent = Agent::new(maps, start, cfg)?;
    let mut trace = RewardTrace::default();
    let mut curves = Vec::new();
    let mut pose_errors = Vec::with_capacity(cfg.budget_t);

    let (mut pending_exp, mut pending_diff) = agent.observe()?;
    curves.push(agent.curve_point(0)?);
    observe(0, &agent.belief);

    for t in 0..cfg.budget_t {
        let Some(action) = agent.decide(t)? else {
            log::warn!("no reachable goal left after {t} steps; ending episode");
            break;
        };
        let r_local = agent.act(action);
        let (r_exp, r_diff) = agent.observe()?;
        let (r_exp, r_diff) = (r_exp + pending_exp, r_diff + pending_diff);
        (pending_exp, pending_diff) = (0, 0);
        trace.push(RewardRecord {
            t,
            r_diff,
            r_exp,
            r_global: r_global(r_exp as f64, r_diff as f64, agent.betas.0, agent.betas.1),
            r_local,
        });
        pose_errors.push(agent.world.pose().position_error(&agent.pose.world_estimate()));
        let steps = t + 1;
        if steps % cfg.curve_stride == 0 && steps < cfg.budget_t {
            curves.push(agent.curve_point(steps)?);
            observe(steps, &agent.belief);
        }
    }
    let steps_executed = trace.len();
    if curves.last().is_none_or(|c| c.t != steps_executed) {
        curves.push(agent.curve_point(steps_executed)?);
        observe(steps_executed, &agent.belief);
    }
    let metrics = maps.metrics(&agent.belief)?;
    Ok(EpisodeResult {
        trace,
        report: MetricsReport { metrics, curves },
        pose_errors,
        steps_executed,
        final_pose: agent.world.pose(),
        goals: agent.goals,
        stats: agent.stats,
        belief: agent.belief,
    })
}

struct Agent<'a> {
    maps: &'a EpisodeMaps,
    cfg: &'a EpisodeConfig,
    geom: GridGeometry,
    world: WorldState,
    pose: PoseBelief,
    belief: BeliefMap,
    cost: CostMap,
    rng: ChaCha8Rng,
    betas: (f64, f64),
    goal: Option<usize>,
    path: Vec<usize>,
    progress: usize,
    waypoint: Option<(f64, f64)>,
    local_reward: LocalReward,
    blacklist: Vec<usize>,
    bumps: usize,
    goals: Vec<usize>,
    stats: EpisodeStats,
    gain_bounds: GainBounds,
}

impl<'a> Agent<'a> {
    fn new(maps: &'a EpisodeMaps, start: Pose2D, cfg: &'a EpisodeConfig) -> Result<Self> {
        let world = WorldState::new(maps.truth.clone(), start, cfg.seed, cfg.kinematics)?;
        let belief = BeliefMap::from_prior(&maps.prior);
        let cost = CostMap::from_belief(&belief, &cfg.planner);
        Ok(Self {
            maps,
            cfg,
            geom: maps.geometry(),
            world,
            pose: PoseBelief::new(cfg.localization, start),
            belief,
            cost,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ POLICY_SEED_SALT),
            betas: cfg
                .strategy
                .score_weights()
                .unwrap_or_else(|| GlobalStrategy::combined_default().score_weights().unwrap()),
            goal: None,
            path: Vec::new(),
            progress: 0,
            waypoint: None,
            local_reward: LocalReward::default(),
            blacklist: Vec::new(),
            bumps: 0,
            goals: Vec::new(),
            stats: EpisodeStats::default(),
            gain_bounds: GainBounds::new(&maps.visibility),
        })
    }

    /// Senses at the true pose and fuses the scan at the estimated pose.
    /// Returns (newly seen explorable cells, change in cells matching the truth).
    fn observe(&mut self) -> Result<(u64, i64)> {
        let scan = self.world.sense(&self.cfg.sensor)?;
        let local = build_local_map(&scan, &self.cfg.local_map);
        let delta = register(&mut self.belief, &local, &self.pose.world_estimate());
        self.cost.apply_delta(&self.belief, &delta);
        let explorable = &self.maps.explorable;
        let truth = self.maps.truth.occupancy();
        let r_exp = delta.newly_seen.iter().filter(|&&i| explorable.at(i)).count() as u64;
        let r_diff = delta
            .flipped
            .iter()
            .filter(|&&i| explorable.at(i))
            .map(|&i| if self.belief.is_occupied(i) == truth.is_occupied(i) { 1 } else { -1 })
            .sum();
        Ok((r_exp, r_diff))
    }

    fn curve_point(&self, t: usize) -> Result<CurvePoint> {
        let m = self.maps.metrics(&self.belief)?;
        Ok(CurvePoint {
            t,
            acc: m.acc,
            iou: m.iou,
            seen_pct: m.seen_pct,
        })
    }

    fn agent_cell(&self) -> usize {
        let est = self.pose.world_estimate();
        let (u, v) = self.geom.world_to_cell_unchecked(est.x_m, est.y_m);
        let u = u.clamp(0, self.geom.width as i64 - 1) as usize;
        let v = v.clamp(0, self.geom.height as i64 - 1) as usize;
        self.geom.idx(u, v)
    }

    fn cell_distance(&self, cell: usize) -> f64 {
        let (u, v) = self.geom.uv(cell);
        let (x, y) = self.geom.cell_center(u, v);
        self.pose.world_estimate().distance_to(x, y)
    }

    /// Picks a new global goal and its path; false when nothing reachable remains.
    fn resample_global(&mut self) -> Result<bool> {
        let from = self.agent_cell();
        let opened = self.cost.clear_around(from);
        let mut field = DistanceField::start(&self.cost, from);
        let mut limit = INITIAL_SEARCH_CELLS * UNIT;
        let gains = GainTables::new(&self.maps.prior_index, self.belief.seen());
        let choice = loop {
                field.expand(&self.cost, limit);
                    let ctx = GoalContext {
                visibility: &self.maps.visibility,
                prior: &self.maps.prior_index,
                seen: self.belief.seen(),
                cost: &self.cost,
                field: &field,
                exclude: &self.blacklist,
                gains: Some(&gains),
                bounds: Some(&self.gain_bounds),
            };
            let r = try_select_global_goal(&ctx, &self.cfg.strategy, &self.cfg.goal, &mut self.rng);
                match r {
                Ok(Some(c)) => break Ok(c),
                Ok(None) => limit = limit.saturating_mul(2),
                Err(Error::NoReachableGoal) if !self.blacklist.is_empty() => self.blacklist.clear(),
                Err(e) => break Err(e),
            }
        };
        self.cost.restore(&opened);
        let choice = match choice {
            Ok(c) => c,
            Err(Error::NoReachableGoal) => return Ok(false),
            Err(e) => return Err(e),
        };
        self.goal = Some(choice.cell);
        self.goals.push(choice.cell);
        self.stats.global_resamples += 1;
        self.path = field.path_to(choice.cell)?.cells;
        self.progress = 0;
        self.waypoint = None;
        Ok(true)
    }

    fn exclude_around(&mut self, cell: usize, radius_m: f64) {
        let r = (radius_m / self.geom.cell_size_m).floor() as i64;
        let (u, v) = self.geom.uv(cell);
        for dv in -r..=r {
            for du in -r..=r {
                let (nu, nv) = (u as i64 + du, v as i64 + dv);
                if du * du + dv * dv > r * r || !self.geom.contains(nu, nv) {
                    continue;
                }
                let c = self.geom.idx(nu as usize, nv as usize);
                if self.maps.visibility.candidate_index(c).is_some() {
                    self.exclude(c);
                }
            }
        }
        self.exclude(cell);
    }

    fn exclude(&mut self, cell: usize) {
        if let Err(pos) = self.blacklist.binary_search(&cell) {
            self.blacklist.insert(pos, cell);
        }
    }

    fn replan(&mut self) -> bool {
        let Some(goal) = self.goal else { return false };
        let from = self.agent_cell();
        let opened = self.cost.clear_around(from);
        let path = plan(&self.cost, from, goal);
        self.cost.restore(&opened);
        match path {
            Ok(p) => {
                self.stats.replans += 1;
                self.path = p.cells;
                self.progress = 0;
                self.waypoint = None;
                true
            }
            Err(_) => false,
        }
    }

    fn abandon_goal(&mut self) {
        if let Some(g) = self.goal.take() {
            self.stats.abandoned_goals += 1;
            self.exclude(g);
        }
        self.path.clear();
        self.waypoint = None;
    }

    /// Inflation near the agent is ignored, matching the clearance used when planning.
    fn path_blocked(&self) -> bool {
        let (au, av) = self.geom.uv(self.agent_cell());
        let r = self.cfg.planner.inflation_cells as i64;
        self.path[self.progress..].iter().skip(1).any(|&c| {
            let (u, v) = self.geom.uv(c);
            let (du, dv) = (u as i64 - au as i64, v as i64 - av as i64);
            self.cost.is_occupied(c) || (self.cost.is_blocked(c) && du * du + dv * dv > r * r)
        })
    }

    fn decide(&mut self, t: usize) -> Result<Option<Action>> {
        let sched = &self.cfg.schedule;
        let goal_reached = self.goal.is_some_and(|g| self.cell_distance(g) <= sched.reach_tolerance_m);
        let stuck = self.bumps >= STUCK_BUMPS;
        if stuck {
            self.bumps = 0;
            self.abandon_goal();
        }
        let waypoint_status = LocalGoalStatus {
            reached: self.waypoint.is_some_and(|(x, y)| {
                self.pose.world_estimate().distance_to(x, y) <= sched.reach_tolerance_m
            }),
            blocked: self.waypoint.is_some_and(|(x, y)| {
                self.geom
                    .world_to_cell(x, y)
                    .is_ok_and(|(u, v)| self.belief.is_occupied(self.geom.idx(u, v)))
            }),
        };
        if goal_reached && !stuck {
            // Visited places stay excluded until nothing else is reachable.
            let g = self.goal.take().expect("reached goal");
            self.exclude_around(g, VISITED_RADIUS_M);
        }
        let periodic = should_resample(t, sched, waypoint_status) == Resample::NewGlobal;
        if periodic || self.goal.is_none() {
            // Retry a few times so a goal whose path is immediately blocked gets replaced.
            let mut ok = false;
            for _ in 0..3 {
                if !self.resample_global()? {
                    break;
                }
                if !self.path_blocked() {
                    ok = true;
                    break;
                }
                self.abandon_goal();
            }
            if !ok && self.goal.is_none() {
                return Ok(None);
            }
        }

        // Stay on the stored path unless it is blocked or the agent drifted off it.
        let off_path = self.cell_distance(self.path[self.progress]) > DEVIATION_M;
        if (self.path_blocked() || off_path) && !self.replan() {
            self.abandon_goal();
            if !self.resample_global()? {
                return Ok(None);
            }
        }

        let est = self.pose.world_estimate();
        if self.path.len() - self.progress <= 1 && self.goal.is_some_and(|g| self.cell_distance(g) <= sched.reach_tolerance_m) {
            // Standing on the goal: look around.
            self.waypoint = None;
            return Ok(Some(Action::TurnLeft));
        }
        let (k, wp) = next_local_goal(&self.path[self.progress..], &self.geom, &est, sched.local_goal_radius_m);
        self.progress += k;
        let wp = if k == 0 && self.progress + 1 < self.path.len() && est.distance_to(wp.0, wp.1) <= sched.reach_tolerance_m {
            // Already on the nearest cell; aim one further along.
            self.progress += 1;
            let (u, v) = self.geom.uv(self.path[self.progress]);
            self.geom.cell_center(u, v)
        } else {
            wp
        };
        if self.waypoint != Some(wp) {
            self.local_reward.reset(est.distance_to(wp.0, wp.1));
            self.waypoint = Some(wp);
        }
        Ok(Some(local_control(&est, wp, sched.heading_tolerance_deg)))
    }

    /// Records the contact point ahead of the agent as an obstacle for planning only;
    /// the flank outside the sensor's field of view is otherwise never observed.
    fn mark_bump(&mut self) {
        let est = self.pose.world_estimate();
        let reach = self.cfg.kinematics.agent_radius_m + 0.5 * self.geom.cell_size_m;
        let th = est.theta_deg.to_radians();
        if let Ok((u, v)) = self.geom.world_to_cell(est.x_m + reach * th.cos(), est.y_m + reach * th.sin()) {
            let idx = self.geom.idx(u, v);
            if idx != self.agent_cell() {
                self.cost.mark_obstacle(idx);
            }
        }
    }

    /// Executes `action`; returns r_local for the current waypoint.
    fn act(&mut self, action: Action) -> f64 {
        let out = self.world.step(action, &self.cfg.noise);
        self.pose.update(&out.odometry, &out.pose);
        if action == Action::Forward && out.bumped {
            self.bumps += 1;
            self.stats.bumps += 1;
            self.mark_bump();
        } else if action == Action::Forward {
            self.bumps = 0;
        }
        match self.waypoint {
            Some((x, y)) => self.local_reward.update(self.pose.world_estimate().distance_to(x, y)),
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::match_count;
    use crate::layout::{manipulate, synthesize_floorplan, FloorplanSpec, ManipulationSpec};

    fn maps(seed: u64, cfg: &EpisodeConfig) -> (EpisodeMaps, Pose2D) {
        let t = ClassTaxonomy::desk();
        let truth = synthesize_floorplan(
            &FloorplanSpec {
                seed,
                extent_m: 12.0,
                rooms_min: 2,
                rooms_max: 4,
                ..Default::default()
            },
            &t,
        )
        .unwrap();
        let (prior, _, _) = manipulate(&truth, &t, &ManipulationSpec { seed, ..Default::default() }).unwrap();
        let maps = EpisodeMaps::new(&prior, truth, &t, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = crate::layout::sample_start(&maps.truth, cfg.kinematics.agent_radius_m, &mut rng).unwrap();
        (maps, start)
    }

    fn cfg(budget_t: usize) -> EpisodeConfig {
        EpisodeConfig {
            budget_t,
            seed: 4,
            ..Default::default()
        }
    }

    #[test]
    fn rewards_telescope() {
        let c = cfg(150);
        let (m, start) = maps(1, &c);
        let r = run_episode(&m, start, &c).unwrap();
        assert_eq!(r.trace.len(), r.steps_executed);
        let totals = r.trace.totals();
        let truth = m.truth.occupancy();
        let expected = match_count(r.belief.grid(), truth, &m.explorable).unwrap() as i64
            - match_count(&m.prior, truth, &m.explorable).unwrap() as i64;
        assert_eq!(totals.r_diff, expected);
        let seen = (0..m.geometry().len()).filter(|&i| r.belief.is_seen(i) && m.explorable.at(i)).count() as u64;
        assert_eq!(totals.r_exp, seen);
    }

    #[test]
    fn oracle_pose_error_is_zero() {
        let c = EpisodeConfig {
            localization: Localization::Oracle,
            ..cfg(100)
        };
        let (m, start) = maps(2, &c);
        let r = run_episode(&m, start, &c).unwrap();
        assert!(r.pose_errors.iter().all(|&e| e < 1e-9));
    }

    #[test]
    fn deterministic() {
        let c = cfg(120);
        let (m, start) = maps(3, &c);
        let a = run_episode(&m, start, &c).unwrap();
        let b = run_episode(&m, start, &c).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.report, b.report);
        assert_eq!(a.belief, b.belief);
    }

    #[test]
    fn curves_are_sampled_and_seen_grows() {
        let c = cfg(200);
        let (m, start) = maps(4, &c);
        let r = run_episode(&m, start, &c).unwrap();
        let ts: Vec<usize> = r.report.curves.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![0, 50, 100, 150, 200]);
        assert!(r.report.curves.windows(2).all(|w| w[0].seen_pct <= w[1].seen_pct));
        assert_eq!(r.report.curves.last().unwrap().acc, r.report.metrics.acc);
    }

    #[test]
    fn agent_explores() {
        for strategy in [
            GlobalStrategy::Random,
            GlobalStrategy::FrontierNearest,
            GlobalStrategy::CoverageGreedy,
            GlobalStrategy::DiffGreedy,
            GlobalStrategy::combined_default(),
        ] {
            let c = EpisodeConfig { strategy, ..cfg(300) };
            let (m, start) = maps(5, &c);
            let r = run_episode(&m, start, &c).unwrap();
            assert_eq!(r.steps_executed, 300, "{}", strategy.name());
            assert!(r.report.metrics.seen_pct > 15.0, "{} saw {}", strategy.name(), r.report.metrics.seen_pct);
        }
    }

    #[test]
    fn observer_sees_every_sample() {
        let c = cfg(60);
        let (m, start) = maps(6, &c);
        let mut ts = Vec::new();
        let r = run_episode_with(&m, start, &c, |t, _| ts.push(t)).unwrap();
        assert_eq!(ts, r.report.curves.iter().map(|p| p.t).collect::<Vec<_>>());
    }

    #[test]
    fn start_inside_obstacle_is_rejected() {
        let c = cfg(10);
        let (m, _) = maps(7, &c);
        let g = m.geometry();
        let wall = (0..g.len()).find(|&i| m.truth.occupancy().is_occupied(i)).unwrap();
        let (u, v) = g.uv(wall);
        let (x, y) = g.cell_center(u, v);
        assert!(matches!(run_episode(&m, Pose2D::new(x, y, 0.0), &c), Err(Error::PoseInObstacle)));
    }
}
