use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svg::render_svg;
use crate::error::{DcpfError, Result};
use crate::planner::{hybrid_astar, oracle_cp, state_request, CpChecker, PlanResult, PlanStatus, Scenario};

/// Version tag written as the first column of every results row.
pub const CSV_VERSION: u32 = 1;

pub const RESULTS_HEADER: &str = "version,suite,checker,p_max,instances,solved,cost_mean,cost_std,expanded_mean,queries_mean,samples_mean,oracle_states,violations,max_oracle_cp,min_margin";
pub const CELLS_HEADER: &str = "version,suite,scenario,checker,p_max,status,cost,expanded,queries,samples,path_states,violations,max_oracle_cp";
pub const TIMING_HEADER: &str = "version,suite,checker,p_max,instances,time_mean,time_std";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub p_max: [f64; 3],
    /// Samples per state in the re-verification oracle.
    pub oracle_samples: u64,
    pub oracle_seed: u64,
    /// Per-cell wall-clock limit (s), overriding the scenario's.
    pub timeout: Option<f64>,
    /// Sampled obstacle configurations drawn per obstacle in SVG overlays.
    pub svg_draws: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            p_max: [0.1, 0.01, 0.001],
            oracle_samples: 1_000_000,
            oracle_seed: 0,
            timeout: None,
            svg_draws: 20,
        }
    }
}

/// Oracle re-estimate of one path state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleState {
    pub t: f64,
    pub p_hat: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

/// One (scenario, checker, p_max) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: String,
    pub checker: String,
    pub p_max: f64,
    pub result: PlanResult,
    pub oracle: Vec<OracleState>,
}

impl CellResult {
    /// States whose oracle lower confidence bound exceeds `p_max`.
    pub fn violations(&self) -> usize {
        self.oracle.iter().filter(|o| o.ci_lower > self.p_max).count()
    }

    pub fn max_oracle_cp(&self) -> f64 {
        self.oracle.iter().map(|o| o.p_hat).fold(0.0, f64::max)
    }
}

/// Aggregate over all scenario instances of one checker and budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub checker: String,
    pub p_max: f64,
    pub instances: usize,
    pub solved: usize,
    pub cost_mean: f64,
    pub cost_std: f64,
    pub time_mean: f64,
    pub time_std: f64,
    pub expanded_mean: f64,
    pub queries_mean: f64,
    pub samples_mean: f64,
    pub oracle_states: usize,
    pub violations: usize,
    pub max_oracle_cp: f64,
    /// Smallest `p_max − p̂_oracle` over verified states.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub suite: String,
    pub cells: Vec<CellResult>,
    pub rows: Vec<BenchRow>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Re-estimates the joint collision probability of every state of a path.
pub fn verify_path(sc: &Scenario, res: &PlanResult, n: u64, seed: u64) -> Result<Vec<OracleState>> {
    res.path
        .iter()
        .map(|st| {
            let req = state_request(sc, st.state.pose, st.state.t)?;
            let (p_hat, ci_lower, ci_upper) = oracle_cp(&sc.robot, &req, n, seed)?;
            Ok(OracleState {
                t: st.state.t,
                p_hat,
                ci_lower,
                ci_upper,
            })
        })
        .collect()
}

/// Runs one planning cell and verifies its path.
pub fn run_cell(sc: &Scenario, checker: &dyn CpChecker, p_max: f64, cfg: &BenchConfig) -> Result<CellResult> {
    let mut sc = sc.with_p_max(p_max);
    if cfg.timeout.is_some() {
        sc.search.timeout = cfg.timeout;
    }
    let result = hybrid_astar(&sc, checker)?;
    let oracle = if result.solved() {
        verify_path(&sc, &result, cfg.oracle_samples, cfg.oracle_seed)?
    } else {
        Vec::new()
    };
    Ok(CellResult {
        scenario: sc.name.clone(),
        checker: checker.name().to_string(),
        p_max,
        result,
        oracle,
    })
}

/// Every scenario × checker × p_max cell, run on the rayon pool, then
/// aggregated per checker and budget.
pub fn run_bench(suite: &str, scenarios: &[Scenario], checkers: &[&dyn CpChecker], cfg: &BenchConfig) -> Result<BenchReport> {
    let mut jobs = Vec::new();
    for (ci, _) in checkers.iter().enumerate() {
        for &p in &cfg.p_max {
            for (si, _) in scenarios.iter().enumerate() {
                jobs.push((ci, p, si));
            }
        }
    }
    let clock = Instant::now();
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(ci, p, si)| run_cell(&scenarios[si], checkers[ci], p, cfg))
        .collect::<Result<_>>()?;
    log::info!("{suite}: {} cells in {:.1}s", cells.len(), clock.elapsed().as_secs_f64());
    let mut rows = Vec::new();
    for c in checkers {
        for &p in &cfg.p_max {
            let group: Vec<&CellResult> = cells.iter().filter(|x| x.checker == c.name() && x.p_max == p).collect();
            rows.push(aggregate(c.name(), p, &group));
        }
    }
    Ok(BenchReport {
        suite: suite.to_string(),
        cells,
        rows,
    })
}

fn aggregate(checker: &str, p_max: f64, group: &[&CellResult]) -> BenchRow {
    let solved: Vec<&&CellResult> = group.iter().filter(|c| !c.result.path.is_empty()).collect();
    let costs: Vec<f64> = solved.iter().map(|c| c.result.cost).collect();
    let times: Vec<f64> = group.iter().map(|c| c.result.wall_time).collect();
    let per = |f: &dyn Fn(&PlanResult) -> f64| mean_std(&group.iter().map(|c| f(&c.result)).collect::<Vec<_>>()).0;
    let (cost_mean, cost_std) = mean_std(&costs);
    let (time_mean, time_std) = mean_std(&times);
    let oracle: Vec<&super::report::OracleState> = group.iter().flat_map(|c| c.oracle.iter()).collect();
    BenchRow {
        checker: checker.to_string(),
        p_max,
        instances: group.len(),
        solved: solved.len(),
        cost_mean,
        cost_std,
        time_mean,
        time_std,
        expanded_mean: per(&|r| r.expanded as f64),
        queries_mean: per(&|r| r.checker_queries as f64),
        samples_mean: per(&|r| r.samples as f64),
        oracle_states: oracle.len(),
        violations: group.iter().map(|c| c.violations()).sum(),
        max_oracle_cp: oracle.iter().map(|o| o.p_hat).fold(0.0, f64::max),
        min_margin: oracle.iter().map(|o| p_max - o.p_hat).fold(f64::INFINITY, f64::min),
    }
}

fn status_name(s: PlanStatus) -> &'static str {
    match s {
        PlanStatus::Found => "found",
        PlanStatus::StartUnsafe => "start_unsafe",
        PlanStatus::NoPath => "no_path",
        PlanStatus::BudgetExhausted => "budget_exhausted",
        PlanStatus::Timeout => "timeout",
    }
}

fn file_stem(c: &CellResult) -> String {
    format!("{}_{}_{:e}", c.scenario, c.checker, c.p_max).replace(['/', ' '], "_")
}

impl BenchReport {
    /// Writes `results.csv`, `cells.csv`, `timing.csv`, a path CSV and an SVG
    /// per solved cell into `dir`. Everything except `timing.csv` is
    /// deterministic for a fixed scenario set and seeds.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| DcpfError::io(dir, e))?;
        let io = |p: &Path| {
            let p = p.to_path_buf();
            move |e| DcpfError::io(p.clone(), e)
        };

        let path = dir.join("results.csv");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io(&path))?);
        writeln!(f, "{RESULTS_HEADER}").map_err(io(&path))?;
        for r in &self.rows {
            writeln!(
                f,
                "{CSV_VERSION},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.suite,
                r.checker,
                r.p_max,
                r.instances,
                r.solved,
                r.cost_mean,
                r.cost_std,
                r.expanded_mean,
                r.queries_mean,
                r.samples_mean,
                r.oracle_states,
                r.violations,
                r.max_oracle_cp,
                r.min_margin
            )
            .map_err(io(&path))?;
        }
        f.flush().map_err(io(&path))?;

        let path = dir.join("timing.csv");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io(&path))?);
        writeln!(f, "{TIMING_HEADER}").map_err(io(&path))?;
        for r in &self.rows {
            writeln!(
                f,
                "{CSV_VERSION},{},{},{},{},{},{}",
                self.suite, r.checker, r.p_max, r.instances, r.time_mean, r.time_std
            )
            .map_err(io(&path))?;
        }
        f.flush().map_err(io(&path))?;

        let path = dir.join("cells.csv");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io(&path))?);
        writeln!(f, "{CELLS_HEADER}").map_err(io(&path))?;
        for c in &self.cells {
            writeln!(
                f,
                "{CSV_VERSION},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.suite,
                c.scenario,
                c.checker,
                c.p_max,
                status_name(c.result.status),
                c.result.cost,
                c.result.expanded,
                c.result.checker_queries,
                c.result.samples,
                c.result.path.len(),
                c.violations(),
                c.max_oracle_cp()
            )
            .map_err(io(&path))?;
        }
        f.flush().map_err(io(&path))?;

        let paths = dir.join("paths");
        std::fs::create_dir_all(&paths).map_err(io(&paths))?;
        for c in self.cells.iter().filter(|c| c.result.solved()) {
            c.result.write_csv(paths.join(format!("{}.csv", file_stem(c))))?;
        }
        Ok(())
    }

    /// Writes one SVG overlay per solved cell into `dir/svg`.
    pub fn write_svgs(&self, dir: impl AsRef<Path>, scenarios: &[Scenario], cfg: &BenchConfig) -> Result<usize> {
        let out = dir.as_ref().join("svg");
        std::fs::create_dir_all(&out).map_err(|e| DcpfError::io(&out, e))?;
        let mut n = 0;
        for c in self.cells.iter().filter(|c| c.result.solved()) {
            let sc = scenarios
                .iter()
                .find(|s| s.name == c.scenario)
                .ok_or_else(|| DcpfError::invalid(format!("unknown scenario {}", c.scenario)))?;
            let p = out.join(format!("{}.svg", file_stem(c)));
            std::fs::write(&p, render_svg(sc, Some(&c.result), cfg.svg_draws, cfg.oracle_seed))
                .map_err(|e| DcpfError::io(&p, e))?;
            n += 1;
        }
        Ok(n)
    }
}
