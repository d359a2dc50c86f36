//! Scenario generators and the planning benchmark harness.

mod report;
mod scenarios;
mod suites;
mod svg;
mod timing;

pub use report::{
    run_bench, run_cell, verify_path, BenchConfig, BenchReport, BenchRow, CellResult, OracleState, CELLS_HEADER,
    CSV_VERSION, RESULTS_HEADER, TIMING_HEADER,
};
pub use scenarios::{
    classify_overtake, make_narrow_passage, make_overtake, make_overtake_with, make_random_map,
    narrow_passage_with_gap, OvertakeClass, OvertakeParams, RandomMapConfig, NARROW_GAP, ONCOMING_LANE_Y, OWN_LANE_Y,
    SIGMA_1, SIGMA_2,
};
pub use suites::{overtake_counts, suite_scenarios, write_overtake_csv, OvertakeCounts, Suite};
pub use svg::render_svg;
pub use timing::{dcpf_batch_latency, query_mix, timing_suite, LatencyStats, TimingConfig, TimingReport};
