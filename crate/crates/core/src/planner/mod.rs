//! Chance-constrained Hybrid-A* over bicycle-model motion primitives.

mod checker;
mod primitives;
mod scenario;
mod search;

pub use checker::{
    obstacle_relevant, oracle_cp, request_stream, CheckRequest, CpChecker, DcpfChecker, SamplingChecker, StateCheck,
    PRUNE_SIGMAS,
};
pub use primitives::{arc_pose, motion_primitives, MotionPrimitive, PrimitiveParams};
pub use scenario::{
    combined_cp, predict_obstacle, Goal, Prediction, Scenario, SearchParams, UncertainObstacle, Waypoint, Workspace,
};
pub use search::{hybrid_astar, state_request, state_safe, PathStep, PlanResult, PlanState, PlanStatus};
