use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dcpf::bench::{
    overtake_counts, run_bench, suite_scenarios, timing_suite, write_overtake_csv, BenchConfig, Suite, TimingConfig,
};
use dcpf::dataset::{generate_dataset, split, Dataset, DatasetConfig};
use dcpf::mc::{AccuracyProfile, CpQuery, SprtParams, ZTestSchedule};
use dcpf::model::{load_model, save_model, Arch, EnsembleMode};
use dcpf::planner::{hybrid_astar, CpChecker, DcpfChecker, SamplingChecker, Scenario};
use dcpf::training::{evaluate, train, TrainConfig};
use dcpf::{DcpfError, DcpfModel, Result};

#[derive(Parser)]
#[command(name = "dcpf", version, about = "Neural collision-probability fields and chance-constrained planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Strict,
    Relaxed,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckerArg {
    Dcpf,
    Ztest,
    Sprt,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Narrow,
    Random,
    Overtake,
    Timing,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a balanced, Monte-Carlo labeled dataset.
    GenDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_records: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "relaxed")]
        profile: Profile,
    },
    /// Train an ensemble on a dataset (80/10/10 split).
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 2.4e-4)]
        lr: f64,
        #[arg(long, default_value_t = 0.01)]
        gamma: f64,
        /// Main-network size, width x depth.
        #[arg(long, default_value = "256x4")]
        arch: String,
        #[arg(long, default_value_t = 3)]
        ensemble: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Evaluate a model on a dataset: prints the metrics table and writes CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "metrics.csv")]
        out: PathBuf,
        /// Ensemble aggregation (single, mean, max, ci_upper, ci_lower).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Collision probability of one query in the obstacle frame.
    Estimate {
        #[arg(long)]
        model: PathBuf,
        /// "rx,ry,rphi,l1,l2,sx,sy,sphi,sl1,sl2"
        #[arg(long, allow_hyphen_values = true)]
        query: String,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Plan on a scenario file.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        checker: CheckerArg,
        #[arg(long)]
        pmax: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Required for the dcpf checker.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Sample cap of the sampling checkers.
        #[arg(long)]
        max_samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-cell wall-clock limit in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        /// Only run these checkers (comma separated).
        #[arg(long, value_delimiter = ',', value_enum)]
        checkers: Option<Vec<CheckerArg>>,
    },
}

fn parse_query(s: &str) -> Result<[f64; 10]> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| DcpfError::InvalidArgument(format!("bad number {v:?} in query")))
        })
        .collect::<Result<_>>()?;
    vals.try_into()
        .map_err(|v: Vec<f64>| DcpfError::InvalidArgument(format!("query needs 10 values, got {}", v.len())))
}

fn load(path: &Path, mode: Option<&str>) -> Result<DcpfModel> {
    let model: DcpfModel = load_model(path)?;
    match mode {
        Some(m) => model.with_mode(m.parse::<EnsembleMode>()?),
        None => Ok(model),
    }
}

fn sampling(kind: CheckerArg, cap: u64, seed: u64) -> SamplingChecker {
    match kind {
        CheckerArg::Sprt => SamplingChecker::sprt(cap, SprtParams::default(), seed),
        _ => SamplingChecker::ztest(cap, ZTestSchedule::default(), seed),
    }
}

fn need_model(model: &Option<PathBuf>) -> Result<DcpfChecker<f32>> {
    let path = model
        .as_ref()
        .ok_or_else(|| DcpfError::InvalidArgument("the dcpf checker needs --model".into()))?;
    DcpfChecker::new(load(path, None)?)
}

/// `Ok(false)` means the command ran but found no plan.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenDataset {
            out,
            n_records,
            seed,
            profile,
        } => {
            let profile = match profile {
                Profile::Strict => AccuracyProfile::strict(),
                Profile::Relaxed => AccuracyProfile::relaxed(),
            };
            let ds = generate_dataset(&DatasetConfig::balanced(n_records, profile, seed))?;
            ds.save(&out)?;
            println!("wrote {} records {:?} to {}", ds.len(), ds.bucket_counts(), out.display());
        }
        Command::Train {
            dataset,
            out,
            epochs,
            lr,
            gamma,
            arch,
            ensemble,
            seed,
            batch_size,
        } => {
            let ds = Dataset::load(&dataset)?;
            let (tr, va, _) = split(&ds, (0.8, 0.1, 0.1), seed)?;
            let mut cfg = TrainConfig {
                learning_rate: lr,
                gamma,
                epochs,
                seed,
                ensemble_size: ensemble,
                arch: Arch::parse_main(&arch)?,
                robot: ds.config.robot,
                ..Default::default()
            };
            if let Some(b) = batch_size {
                cfg.batch_size = b;
            }
            let (model, report) = train::<f32>(&tr.records, &va.records, &cfg)?;
            save_model(&model, &out)?;
            println!("member,epoch,train_loss,val_loss,val_bce,val_abs_drho");
            for (m, hist) in report.history.iter().enumerate() {
                for e in hist {
                    let tl = e.train_loss.map(|v| v.to_string()).unwrap_or_default();
                    println!("{m},{},{tl},{},{},{}", e.epoch, e.val_loss, e.val_bce, e.val_abs_drho);
                }
            }
            println!("wrote model ({} members, mode {}) to {}", model.k(), model.mode, out.display());
        }
        Command::Eval {
            model,
            dataset,
            out,
            mode,
        } => {
            let model = load(&model, mode.as_deref())?;
            let ds = Dataset::load(&dataset)?;
            let m = evaluate(&model, &ds.records)?;
            println!("{m}");
            m.write_csv(&out)?;
        }
        Command::Estimate { model, query, mode } => {
            let model = load(&model, mode.as_deref())?;
            let q = CpQuery::from_features(&parse_query(&query)?, model.robot)?;
            println!("{}", model.predict(&q)?);
        }
        Command::Plan {
            scenario,
            checker,
            pmax,
            out,
            model,
            max_samples,
            seed,
        } => {
            let mut sc = Scenario::load(&scenario)?;
            if let Some(p) = pmax {
                sc = sc.with_p_max(p);
                sc.validate()?;
            }
            let chk: Box<dyn CpChecker> = match checker {
                CheckerArg::Dcpf => Box::new(need_model(&model)?),
                k => Box::new(sampling(k, max_samples.unwrap_or(1_000_000), seed)),
            };
            let res = hybrid_astar(&sc, chk.as_ref())?;
            std::fs::create_dir_all(&out).map_err(|e| DcpfError::Io {
                path: out.clone(),
                source: e,
            })?;
            res.write_csv(out.join("path.csv"))?;
            let svg = dcpf::bench::render_svg(&sc, Some(&res), 20, seed);
            std::fs::write(out.join("plan.svg"), svg).map_err(|e| DcpfError::Io {
                path: out.join("plan.svg"),
                source: e,
            })?;
            println!(
                "status {:?} cost {} expanded {} queries {} samples {} time {:.3}s",
                res.status, res.cost, res.expanded, res.checker_queries, res.samples, res.wall_time
            );
            return Ok(res.solved());
        }
        Command::Bench {
            suite,
            out,
            model,
            instances,
            seed,
            timeout,
            checkers,
        } => {
            let suite = match suite {
                SuiteArg::Narrow => Suite::Narrow,
                SuiteArg::Random => Suite::Random,
                SuiteArg::Overtake => Suite::Overtake,
                SuiteArg::Timing => Suite::Timing,
            };
            if suite == Suite::Timing {
                let m = need_model(&model)?;
                let rep = timing_suite(&m.model, &TimingConfig { seed, ..Default::default() })?;
                std::fs::create_dir_all(&out).map_err(|e| DcpfError::Io {
                    path: out.clone(),
                    source: e,
                })?;
                rep.write_csv(out.join("timing.csv"))?;
                println!(
                    "batch speedup {:.1}x, sprt sample ratio {:.1}x, cv dcpf {:.3} sprt {:.3}",
                    rep.batch_speedup(),
                    rep.sprt_sample_ratio(),
                    rep.dcpf_mix.cv(),
                    rep.sprt_mix.cv()
                );
                return Ok(true);
            }
            let scenarios = suite_scenarios(suite, instances.unwrap_or(suite.default_instances()), seed)?;
            let kinds = checkers.unwrap_or_else(|| match suite {
                Suite::Overtake => vec![CheckerArg::Dcpf],
                _ => vec![CheckerArg::Dcpf, CheckerArg::Ztest, CheckerArg::Sprt],
            });
            let (zcap, scap) = suite.sample_caps();
            let mut boxes: Vec<Box<dyn CpChecker>> = Vec::new();
            for k in kinds {
                boxes.push(match k {
                    CheckerArg::Dcpf => Box::new(need_model(&model)?),
                    CheckerArg::Ztest => Box::new(sampling(k, zcap, seed)),
                    CheckerArg::Sprt => Box::new(sampling(k, scap, seed)),
                });
            }
            let refs: Vec<&dyn CpChecker> = boxes.iter().map(|b| b.as_ref()).collect();
            let cfg = BenchConfig {
                timeout,
                oracle_seed: seed,
                ..Default::default()
            };
            let report = run_bench(&suite.to_string(), &scenarios, &refs, &cfg)?;
            report.write(&out)?;
            report.write_svgs(&out, &scenarios, &cfg)?;
            if suite == Suite::Overtake {
                write_overtake_csv(&overtake_counts(&report)?, out.join("overtake.csv"))?;
            }
            println!("checker,p_max,solved,cost_mean,violations");
            for r in &report.rows {
                println!("{},{},{}/{},{:.2},{}", r.checker, r.p_max, r.solved, r.instances, r.cost_mean, r.violations);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // usage errors share the generic error code; 2 is reserved for infeasible plans
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
