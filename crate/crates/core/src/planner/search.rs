use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checker::{CheckRequest, CpChecker, StateCheck};
use super::primitives::{motion_primitives, MotionPrimitive};
use super::scenario::{predict_obstacle, Scenario};
use crate::error::{DcpfError, Result};
use crate::geometry::{normalize_angle, ConvexPolygon, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanState {
    pub pose: Pose2<f64>,
    /// Seconds since the start; stays 0 in static planning.
    pub t: f64,
    pub g_cost: f64,
    /// Index of the parent node in the search arena.
    pub parent: Option<usize>,
}

/// One path element: the state reached and the primitive that led there
/// (none for the start state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub state: PlanState,
    pub primitive_id: Option<usize>,
    pub primitive: Option<MotionPrimitive>,
    pub cp_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Found,
    StartUnsafe,
    /// Open set exhausted.
    NoPath,
    BudgetExhausted,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub path: Vec<PathStep>,
    pub cost: f64,
    pub expanded: usize,
    /// State requests sent to the checker.
    pub checker_queries: u64,
    /// Monte-Carlo samples drawn by the checker.
    pub samples: u64,
    pub wall_time: f64,
}

impl PlanResult {
    pub fn solved(&self) -> bool {
        self.status == PlanStatus::Found
    }

    /// Writes `t,x,y,phi,primitive_id,combined_cp_estimate`, one row per state.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let write = || -> std::io::Result<()> {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(f, "t,x,y,phi,primitive_id,combined_cp_estimate")?;
            for s in &self.path {
                let id = s.primitive_id.map(|i| i.to_string()).unwrap_or_default();
                let p = s.state.pose;
                writeln!(f, "{},{},{},{},{},{}", s.state.t, p.x, p.y, p.phi, id, s.cp_estimate)?;
            }
            f.flush()
        };
        write().map_err(|e| DcpfError::io(path, e))
    }
}

/// Checker request for the robot at `pose`, obstacles predicted to time `t`.
pub fn state_request(scenario: &Scenario, pose: Pose2<f64>, t: f64) -> Result<CheckRequest> {
    let obstacles = scenario
        .uncertain_obstacles
        .iter()
        .map(|o| predict_obstacle(o, t).map(|p| p.spec))
        .collect::<Result<_>>()?;
    Ok(CheckRequest { pose, obstacles })
}

/// Full safety test of one state: every sweep pose leading into it and the
/// state itself must be inside the workspace and clear of static obstacles,
/// and the checker must accept the combined collision probability.
pub fn state_safe(
    state: &PlanState,
    sweep: &[Pose2<f64>],
    scenario: &Scenario,
    checker: &dyn CpChecker,
) -> Result<StateCheck> {
    let statics = scenario.static_polygons()?;
    let blocked = StateCheck {
        safe: false,
        cp_estimate: 1.0,
        samples: 0,
    };
    if !sweep
        .iter()
        .chain(std::iter::once(&state.pose))
        .all(|p| scenario.pose_free(p, &statics))
    {
        return Ok(blocked);
    }
    let req = state_request(scenario, state.pose, state.t)?;
    let out = checker.check_batch(&scenario.robot, &[req], scenario.p_max)?;
    Ok(out[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key(i64, i64, i64, i64);

struct OpenEntry {
    f: f64,
    h: f64,
    seq: u64,
    node: usize,
}

impl PartialEq for OpenEntry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for OpenEntry {}
impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for OpenEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then(o.h.total_cmp(&self.h))
            .then(o.seq.cmp(&self.seq))
    }
}

struct Node {
    state: PlanState,
    primitive_id: Option<usize>,
    cp: f64,
}

struct Search<'a> {
    sc: &'a Scenario,
    prims: Vec<MotionPrimitive>,
    statics: Vec<ConvexPolygon<f64>>,
    v_max: f64,
}

impl Search<'_> {
    fn key(&self, s: &PlanState) -> Key {
        let p = &self.sc.search;
        let n = p.n_heading as f64;
        let th = normalize_angle(s.pose.phi) + std::f64::consts::PI;
        let hb = ((th / (2.0 * std::f64::consts::PI) * n).floor() as i64).rem_euclid(p.n_heading as i64);
        let tb = if p.time_indexed { (s.t / p.time_bin + 1e-9).floor() as i64 } else { 0 };
        Key(
            (s.pose.x / p.grid_xy).floor() as i64,
            (s.pose.y / p.grid_xy).floor() as i64,
            hb,
            tb,
        )
    }

    fn heuristic(&self, pose: &Pose2<f64>) -> f64 {
        let d = self.sc.goal.distance(pose.position());
        if self.sc.search.time_indexed {
            d / self.v_max
        } else {
            d
        }
    }
}

/// Chance-constrained Hybrid-A*.
///
/// Cost is arc length, or elapsed time when `search.time_indexed` is set.
/// All successors of one expansion go to the checker as a single batch.
pub fn hybrid_astar(scenario: &Scenario, checker: &dyn CpChecker) -> Result<PlanResult> {
    let clock = Instant::now();
    scenario.validate()?;
    let prims = motion_primitives(&scenario.robot, &scenario.primitives)?;
    let search = Search {
        sc: scenario,
        v_max: scenario.primitives.max_speed(),
        statics: scenario.static_polygons()?,
        prims,
    };
    let timed = scenario.search.time_indexed;
    let mut result = PlanResult {
        status: PlanStatus::NoPath,
        path: Vec::new(),
        cost: f64::INFINITY,
        expanded: 0,
        checker_queries: 0,
        samples: 0,
        wall_time: 0.0,
    };
    let finish = |mut r: PlanResult| {
        r.wall_time = clock.elapsed().as_secs_f64();
        Ok(r)
    };

    let start = PlanState {
        pose: scenario.start,
        t: 0.0,
        g_cost: 0.0,
        parent: None,
    };
    if !scenario.pose_free(&start.pose, &search.statics) {
        result.status = PlanStatus::StartUnsafe;
        return finish(result);
    }
    let first = checker.check_batch(&scenario.robot, &[state_request(scenario, start.pose, 0.0)?], scenario.p_max)?[0];
    result.checker_queries += 1;
    result.samples += first.samples;
    if !first.safe {
        result.status = PlanStatus::StartUnsafe;
        return finish(result);
    }

    let mut nodes = vec![Node {
        state: start,
        primitive_id: None,
        cp: first.cp_estimate,
    }];
    let mut open = BinaryHeap::new();
    let mut closed: HashSet<Key> = HashSet::new();
    let mut seq = 0u64;
    let h0 = search.heuristic(&start.pose);
    open.push(OpenEntry {
        f: h0,
        h: h0,
        seq,
        node: 0,
    });

    while let Some(entry) = open.pop() {
        let cur = nodes[entry.node].state;
        if !closed.insert(search.key(&cur)) {
            continue;
        }
        if scenario.goal.contains(&cur.pose) {
            result.status = PlanStatus::Found;
            result.cost = cur.g_cost;
            result.path = reconstruct(&nodes, &search.prims, entry.node);
            return finish(result);
        }
        if result.expanded >= scenario.search.max_expansions {
            result.status = PlanStatus::BudgetExhausted;
            return finish(result);
        }
        if let Some(limit) = scenario.search.timeout {
            if clock.elapsed().as_secs_f64() > limit {
                result.status = PlanStatus::Timeout;
                return finish(result);
            }
        }
        result.expanded += 1;

        let mut cands = Vec::new();
        let mut reqs = Vec::new();
        for (id, prim) in search.prims.iter().enumerate() {
            if !prim.world_poses(&cur.pose).all(|p| scenario.pose_free(&p, &search.statics)) {
                continue;
            }
            let pose = cur.pose.compose(&prim.end);
            let pose = Pose2::new(pose.x, pose.y, normalize_angle(pose.phi));
            let (t, step) = if timed {
                (cur.t + prim.duration, prim.duration)
            } else {
                (0.0, prim.arc_length)
            };
            let next = PlanState {
                pose,
                t,
                g_cost: cur.g_cost + step,
                parent: Some(entry.node),
            };
            if closed.contains(&search.key(&next)) {
                continue;
            }
            reqs.push(state_request(scenario, pose, t)?);
            cands.push((id, next));
        }
        if reqs.is_empty() {
            continue;
        }
        let checks = checker.check_batch(&scenario.robot, &reqs, scenario.p_max)?;
        if checks.len() != reqs.len() {
            return Err(DcpfError::invalid("checker returned a wrong number of results"));
        }
        result.checker_queries += reqs.len() as u64;
        for ((id, next), chk) in cands.into_iter().zip(checks) {
            result.samples += chk.samples;
            if !chk.safe {
                continue;
            }
            let h = search.heuristic(&next.pose);
            seq += 1;
            nodes.push(Node {
                state: next,
                primitive_id: Some(id),
                cp: chk.cp_estimate,
            });
            open.push(OpenEntry {
                f: next.g_cost + h,
                h,
                seq,
                node: nodes.len() - 1,
            });
        }
    }
    finish(result)
}

fn reconstruct(nodes: &[Node], prims: &[MotionPrimitive], last: usize) -> Vec<PathStep> {
    let mut out = Vec::new();
    let mut i = Some(last);
    while let Some(k) = i {
        let n = &nodes[k];
        out.push(PathStep {
            state: n.state,
            primitive_id: n.primitive_id,
            primitive: n.primitive_id.map(|p| prims[p].clone()),
            cp_estimate: n.cp,
        });
        i = n.state.parent;
    }
    out.reverse();
    out
}
