//! Local goal extraction, the rotate-then-drive controller, and the resampling schedule.

use serde::{Deserialize, Serialize};

use crate::som::{wrap_deg, GridGeometry, Pose2D};
use crate::world::Action;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySchedule {
    /// Steps between global goal samples.
    pub global_period: usize,
    /// Local goals are taken from path cells within this distance of the agent.
    pub local_goal_radius_m: f64,
    /// A goal closer than this counts as reached.
    pub reach_tolerance_m: f64,
    /// Heading error tolerated before turning instead of driving.
    pub heading_tolerance_deg: f64,
}

impl Default for PolicySchedule {
    fn default() -> Self {
        Self {
            global_period: 25,
            local_goal_radius_m: 0.25,
            reach_tolerance_m: 0.15,
            heading_tolerance_deg: 5.0,
        }
    }
}

/// Farthest path cell (by path order) within the local radius of the pose, or the
/// first path cell when none is that close. Returns the path index and world point.
pub fn next_local_goal(path: &[usize], geom: &GridGeometry, pose: &Pose2D, radius_m: f64) -> (usize, (f64, f64)) {
    assert!(!path.is_empty(), "local goal needs a non-empty path");
    let center = |i: usize| {
        let (u, v) = geom.uv(path[i]);
        geom.cell_center(u, v)
    };
    let k = (0..path.len())
        .rev()
        .find(|&i| {
            let (x, y) = center(i);
            pose.distance_to(x, y) <= radius_m
        })
        .unwrap_or(0);
    (k, center(k))
}

/// Turns toward the waypoint when the bearing error exceeds the tolerance, else drives.
pub fn local_control(pose: &Pose2D, waypoint: (f64, f64), heading_tolerance_deg: f64) -> Action {
    let (dx, dy) = (waypoint.0 - pose.x_m, waypoint.1 - pose.y_m);
    if dx == 0.0 && dy == 0.0 {
        return Action::Forward;
    }
    let err = wrap_deg(dy.atan2(dx).to_degrees() - pose.theta_deg);
    if err.abs() <= heading_tolerance_deg {
        Action::Forward
    } else if err > 0.0 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// Tracks r_local = d(t-1) - d(t), positive when the agent closes in on its waypoint.
#[derive(Debug, Clone, Default)]
pub struct LocalReward {
    last: Option<f64>,
}

impl LocalReward {
    /// Call when a new waypoint is chosen; the next reward is measured from `distance`.
    pub fn reset(&mut self, distance: f64) {
        self.last = Some(distance);
    }

    pub fn update(&mut self, distance: f64) -> f64 {
        let r = self.last.map_or(0.0, |d| d - distance);
        self.last = Some(distance);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resample {
    NewGlobal,
    NewLocal,
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LocalGoalStatus {
    pub reached: bool,
    /// The waypoint's cell is occupied in the belief.
    pub blocked: bool,
}

pub fn should_resample(t: usize, schedule: &PolicySchedule, status: LocalGoalStatus) -> Resample {
    if t.is_multiple_of(schedule.global_period.max(1)) {
        Resample::NewGlobal
    } else if status.reached || status.blocked {
        Resample::NewLocal
    } else {
        Resample::Continue
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::som::Displacement;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn straight_ahead_drives() {
        assert_eq!(local_control(&Pose2D::origin(), (1.0, 0.0), 5.0), Action::Forward);
        assert_eq!(local_control(&Pose2D::new(0.0, 0.0, 90.0), (0.0, 1.0), 5.0), Action::Forward);
    }

    #[test]
    fn behind_turns_left() {
        assert_eq!(local_control(&Pose2D::origin(), (-1.0, 0.0), 5.0), Action::TurnLeft);
        assert_eq!(local_control(&Pose2D::origin(), (1.0, -0.5), 5.0), Action::TurnRight);
    }

    #[test]
    fn farthest_cell_within_radius() {
        let g = GridGeometry::new(41, 41, 0.05);
        // Cells east of the origin at 0.05 m, 0.10 m, ..., 0.50 m.
        let path: Vec<usize> = (20..31).map(|u| g.idx(u, 20)).collect();
        let (k, (x, _)) = next_local_goal(&path, &g, &Pose2D::origin(), 0.25);
        assert_eq!(k, 5);
        assert!((x - 0.25).abs() < 1e-12);
        let far = Pose2D::new(-1.0, 0.0, 0.0);
        assert_eq!(next_local_goal(&path, &g, &far, 0.25).0, 0);
        let on_goal = Pose2D::new(0.5, 0.0, 0.0);
        assert_eq!(next_local_goal(&path, &g, &on_goal, 0.25).0, 10);
    }

    #[test]
    fn schedule() {
        let s = PolicySchedule::default();
        let idle = LocalGoalStatus::default();
        assert_eq!(should_resample(25, &s, idle), Resample::NewGlobal);
        assert_eq!(should_resample(0, &s, idle), Resample::NewGlobal);
        assert_eq!(should_resample(13, &s, idle), Resample::Continue);
        let blocked = LocalGoalStatus { reached: false, blocked: true };
        assert_eq!(should_resample(13, &s, blocked), Resample::NewLocal);
        let reached = LocalGoalStatus { reached: true, blocked: false };
        assert_eq!(should_resample(7, &s, reached), Resample::NewLocal);
    }

    #[test]
    fn local_reward_is_distance_reduction() {
        let mut r = LocalReward::default();
        r.reset(1.0);
        assert!((r.update(0.75) - 0.25).abs() < 1e-12);
        assert!((r.update(0.8) + 0.05).abs() < 1e-12);
    }

    /// Closed loop in open space with exact kinematics: every waypoint within 0.5 m is
    /// reached to 0.15 m in at most 60 actions.
    #[test]
    fn closed_loop_reaches_waypoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let mut pose = Pose2D::new(0.0, 0.0, rng.random_range(0.0..360.0));
            let r = rng.random_range(0.0..0.5);
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let wp = (r * a.cos(), r * a.sin());
            let mut steps = 0;
            while pose.distance_to(wp.0, wp.1) > 0.15 {
                assert!(steps < 60, "waypoint {wp:?} not reached");
                let d = match local_control(&pose, wp, 5.0) {
                    Action::Forward => Displacement { dx_m: 0.25, ..Default::default() },
                    Action::TurnLeft => Displacement { dtheta_deg: 10.0, ..Default::default() },
                    Action::TurnRight => Displacement { dtheta_deg: -10.0, ..Default::default() },
                };
                pose = pose.compose(&d);
                steps += 1;
            }
        }
    }
}
