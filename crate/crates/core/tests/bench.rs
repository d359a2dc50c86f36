use dcpf::bench::{
    make_narrow_passage, make_random_map, run_bench, BenchConfig, RandomMapConfig, CELLS_HEADER, CSV_VERSION,
    RESULTS_HEADER,
};
use dcpf::mc::{SprtParams, ZTestSchedule};
use dcpf::planner::{CpChecker, SamplingChecker, Scenario};

fn small_report(dir: &std::path::Path) -> (dcpf::bench::BenchReport, Vec<Scenario>, BenchConfig) {
    let mut scenarios = vec![make_narrow_passage(1.0).unwrap()];
    for seed in 0..2 {
        scenarios.push(make_random_map(seed, &RandomMapConfig::sparse()).unwrap());
    }
    let z = SamplingChecker::ztest(20_000, ZTestSchedule::default(), 1);
    let s = SamplingChecker::sprt(200_000, SprtParams::default(), 1);
    let checkers: [&dyn CpChecker; 2] = [&z, &s];
    let cfg = BenchConfig {
        oracle_samples: 20_000,
        svg_draws: 3,
        ..Default::default()
    };
    let report = run_bench("test", &scenarios, &checkers, &cfg).unwrap();
    report.write(dir).unwrap();
    (report, scenarios, cfg)
}

#[test]
fn report_invariants_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (report, scenarios, cfg) = small_report(dir.path());
    assert_eq!(report.cells.len(), 2 * 3 * scenarios.len());

    // every row's solved count equals the number of cells with a nonempty path
    for row in &report.rows {
        let solved = report
            .cells
            .iter()
            .filter(|c| c.checker == row.checker && c.p_max == row.p_max && !c.result.path.is_empty())
            .count();
        assert_eq!(row.solved, solved);
        assert_eq!(row.instances, scenarios.len());
    }

    let results = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(results.lines().next().unwrap(), RESULTS_HEADER);
    assert_eq!(results.lines().count(), 1 + report.rows.len());
    assert!(results.lines().skip(1).all(|l| l.starts_with(&format!("{CSV_VERSION},test,"))));
    let cells = std::fs::read_to_string(dir.path().join("cells.csv")).unwrap();
    assert_eq!(cells.lines().next().unwrap(), CELLS_HEADER);
    let n_fields = RESULTS_HEADER.split(',').count();
    assert!(results.lines().all(|l| l.split(',').count() == n_fields));

    let n_solved = report.cells.iter().filter(|c| c.result.solved()).count();
    assert!(n_solved > 0);
    let paths = std::fs::read_dir(dir.path().join("paths")).unwrap().count();
    assert_eq!(paths, n_solved);

    let written = report.write_svgs(dir.path(), &scenarios, &cfg).unwrap();
    assert_eq!(written, n_solved);
    for entry in std::fs::read_dir(dir.path().join("svg")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let doc = roxmltree::Document::parse(&text).expect("svg is well-formed XML");
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        let polylines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
        assert_eq!(polylines, 1);
    }
}

#[test]
fn results_csv_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_report(a.path());
    small_report(b.path());
    for f in ["results.csv", "cells.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
}
