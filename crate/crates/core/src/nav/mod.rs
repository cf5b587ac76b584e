//! Hierarchical navigation: global goals, A* planning, local waypoints and control.

mod control;
mod goal;
mod planner;

pub use control::{
    local_control, next_local_goal, should_resample, LocalGoalStatus, LocalReward, PolicySchedule, Resample,
};
pub use goal::{
    greedy_score, opacity, select_global_goal, try_select_global_goal, GainBounds, GainTables, GlobalStrategy, GoalChoice, GoalConfig, GoalContext,
    PriorIndex, Span, VisibilityIndex,
};
pub use planner::{plan, CostMap, DistanceField, Path, PlannerConfig, DIAG, UNIT, UNREACHABLE};
