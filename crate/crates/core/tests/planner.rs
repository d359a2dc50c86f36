use dcpf::bench::{make_narrow_passage, make_random_map, verify_path, RandomMapConfig};
use dcpf::mc::{SprtParams, ZTestSchedule};
use dcpf::planner::{hybrid_astar, PlanStatus, SamplingChecker, Scenario};

fn ztest(cap: u64) -> SamplingChecker {
    SamplingChecker::ztest(cap, ZTestSchedule::default(), 3)
}

fn pose_gap(a: &dcpf::geometry::Pose2<f64>, b: &dcpf::geometry::Pose2<f64>) -> f64 {
    (a.x - b.x).hypot(a.y - b.y) + (a.phi - b.phi).sin().abs()
}

fn assert_continuous(sc: &Scenario, path: &[dcpf::planner::PathStep]) {
    assert!(pose_gap(&sc.start, &path[0].state.pose) < 1e-12);
    for w in path.windows(2) {
        let prim = w[1].primitive.as_ref().unwrap();
        let end = prim.world_poses(&w[0].state.pose).last().unwrap();
        assert!(pose_gap(&end, &w[1].state.pose) < 1e-9);
        if sc.search.time_indexed {
            assert!((w[1].state.t - w[0].state.t - prim.duration).abs() < 1e-12);
        }
    }
    let last = path.last().unwrap().state.pose;
    assert!(sc.goal.contains(&last));
}

#[test]
fn narrow_passage_loose_budget_goes_through() {
    let sc = make_narrow_passage(1.0).unwrap().with_p_max(0.1);
    let res = hybrid_astar(&sc, &ztest(100_000)).unwrap();
    assert_eq!(res.status, PlanStatus::Found);
    assert_continuous(&sc, &res.path);
    // straight through the gap is 22 m; going around is far longer
    assert!(res.cost < 26.0, "cost {}", res.cost);
    for o in verify_path(&sc, &res, 100_000, 9).unwrap() {
        assert!(o.ci_lower <= 0.1, "state at t={} has oracle CP {}", o.t, o.p_hat);
    }
}

#[test]
fn tighter_budget_never_shortens_the_path() {
    let base = make_narrow_passage(1.0).unwrap();
    let chk = SamplingChecker::sprt(4_000_000, SprtParams::default(), 5);
    let loose = hybrid_astar(&base.with_p_max(0.1), &chk).unwrap();
    let tight = hybrid_astar(&base.with_p_max(0.001), &chk).unwrap();
    assert!(loose.solved() && tight.solved());
    assert!(tight.cost >= loose.cost);
}

#[test]
fn blocked_start_is_reported() {
    let mut sc = make_narrow_passage(1.0).unwrap();
    let s = sc.start;
    sc.static_obstacles.push([s.x, s.y, 0.0, 1.0, 1.0]);
    let res = hybrid_astar(&sc, &ztest(10_000)).unwrap();
    assert_eq!(res.status, PlanStatus::StartUnsafe);
    assert!(res.path.is_empty());
}

#[test]
fn sealed_goal_exhausts_or_fails() {
    let mut sc = make_narrow_passage(1.0).unwrap();
    // a deterministic wall across the whole workspace
    sc.static_obstacles.push([10.0, 0.0, 0.0, 1.0, 30.0]);
    sc.search.max_expansions = 3000;
    let res = hybrid_astar(&sc, &ztest(10_000)).unwrap();
    assert!(matches!(res.status, PlanStatus::NoPath | PlanStatus::BudgetExhausted));
    assert!(!res.solved());
}

#[test]
fn sparse_random_map_is_solved_and_sound() {
    let sc = make_random_map(4, &RandomMapConfig::sparse()).unwrap().with_p_max(0.01);
    let res = hybrid_astar(&sc, &ztest(100_000)).unwrap();
    assert!(res.solved(), "{:?}", res.status);
    assert_continuous(&sc, &res.path);
    assert!(res.checker_queries > 0 && res.samples > 0);
    for o in verify_path(&sc, &res, 50_000, 1).unwrap() {
        assert!(o.ci_lower <= 0.01);
    }
}

#[test]
fn scenario_file_round_trip_plans_identically() {
    let sc = make_narrow_passage(1.0).unwrap().with_p_max(0.1);
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("sc.json");
    sc.save(&f).unwrap();
    let back = Scenario::load(&f).unwrap();
    assert_eq!(back, sc);
    let a = hybrid_astar(&sc, &ztest(20_000)).unwrap();
    let b = hybrid_astar(&back, &ztest(20_000)).unwrap();
    assert_eq!(a.cost, b.cost);
    assert_eq!(a.path.len(), b.path.len());
}
