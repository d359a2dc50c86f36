use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{BenchReport, CSV_VERSION};
use super::scenarios::{
    classify_overtake, make_narrow_passage, make_overtake_with, make_random_map, OvertakeClass, OvertakeParams,
    RandomMapConfig,
};
use crate::error::{DcpfError, Result};
use crate::planner::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Narrow,
    Random,
    Overtake,
    Timing,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Narrow => "narrow",
            Suite::Random => "random",
            Suite::Overtake => "overtake",
            Suite::Timing => "timing",
        })
    }
}

impl FromStr for Suite {
    type Err = DcpfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "narrow" => Ok(Suite::Narrow),
            "random" => Ok(Suite::Random),
            "overtake" => Ok(Suite::Overtake),
            "timing" => Ok(Suite::Timing),
            _ => Err(DcpfError::invalid(format!("unknown suite {s:?}"))),
        }
    }
}

impl Suite {
    /// Default number of scenario instances.
    pub fn default_instances(self) -> usize {
        match self {
            Suite::Narrow | Suite::Timing => 1,
            Suite::Random => 10,
            Suite::Overtake => 20,
        }
    }

    /// Sample caps `(z-test, SPRT)` of the sampling baselines.
    pub fn sample_caps(self) -> (u64, u64) {
        match self {
            Suite::Narrow => (100_000, 4_000_000),
            _ => (1_000_000, 4_000_000),
        }
    }
}

/// Scenario instances of a planning suite; instance `i` uses seed `seed + i`.
pub fn suite_scenarios(suite: Suite, instances: usize, seed: u64) -> Result<Vec<Scenario>> {
    match suite {
        Suite::Narrow => Ok(vec![make_narrow_passage(1.0)?]),
        Suite::Random => (0..instances as u64)
            .map(|i| make_random_map(seed + i, &RandomMapConfig::sparse()))
            .collect(),
        Suite::Overtake => (0..instances as u64)
            .map(|i| {
                let mut sc = make_overtake_with(&OvertakeParams::seeded(seed + i))?;
                sc.name = format!("overtake_{}", seed + i);
                Ok(sc)
            })
            .collect(),
        Suite::Timing => Err(DcpfError::invalid("the timing suite has no planning scenarios")),
    }
}

/// Overtake outcome counts per checker and `p_max`.
pub type OvertakeCounts = BTreeMap<(String, u64), BTreeMap<OvertakeClass, usize>>;

/// Classifies every overtake cell by the instance seed in its scenario name.
pub fn overtake_counts(report: &BenchReport) -> Result<OvertakeCounts> {
    let mut out: OvertakeCounts = BTreeMap::new();
    for c in &report.cells {
        let inst: u64 = c
            .scenario
            .strip_prefix("overtake_")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DcpfError::invalid(format!("{} is not an overtake instance", c.scenario)))?;
        let params = OvertakeParams::seeded(inst);
        let mut sc = make_overtake_with(&params)?;
        sc.p_max = c.p_max;
        let class = classify_overtake(&sc, &params, &c.result)?;
        let e = out.entry((c.checker.clone(), c.p_max.to_bits())).or_default();
        for k in [OvertakeClass::Before, OvertakeClass::After, OvertakeClass::None] {
            e.entry(k).or_insert(0);
        }
        *e.get_mut(&class).unwrap() += 1;
    }
    Ok(out)
}

pub fn write_overtake_csv(counts: &OvertakeCounts, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "version,checker,p_max,before,after,none")?;
        for ((checker, p), m) in counts {
            let g = |k| m.get(&k).copied().unwrap_or(0);
            writeln!(
                f,
                "{CSV_VERSION},{checker},{},{},{},{}",
                f64::from_bits(*p),
                g(OvertakeClass::Before),
                g(OvertakeClass::After),
                g(OvertakeClass::None)
            )?;
        }
        f.flush()
    };
    write().map_err(|e| DcpfError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Narrow, Suite::Random, Suite::Overtake, Suite::Timing] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("other".parse::<Suite>().is_err());
    }

    #[test]
    fn overtake_instances_have_unique_names() {
        let v = suite_scenarios(Suite::Overtake, 5, 10).unwrap();
        let mut names: Vec<_> = v.iter().map(|s| s.name.clone()).collect();
        names.dedup();
        assert_eq!(names.len(), 5);
        assert!(suite_scenarios(Suite::Timing, 1, 0).is_err());
    }
}
