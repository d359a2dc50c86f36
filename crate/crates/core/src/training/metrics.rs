use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{bucket_of, DatasetRecord, N_BUCKETS};
use crate::error::{DcpfError, Result};
use crate::model::EnsembleModel;
use crate::scalar::Scalar;

/// Rows per inference call in [`evaluate`].
const EVAL_CHUNK: usize = 4096;

/// MAE and fraction of predictions inside the label's confidence interval,
/// overall and per label bucket. Empty buckets report NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae_overall: f64,
    pub mae_per_bucket: [f64; N_BUCKETS],
    pub pap_overall: f64,
    pub pap_per_bucket: [f64; N_BUCKETS],
    pub count_per_bucket: [usize; N_BUCKETS],
}

impl Metrics {
    pub fn from_predictions(preds: &[f64], records: &[DatasetRecord]) -> Result<Self> {
        if preds.len() != records.len() {
            return Err(DcpfError::invalid("one prediction per record required"));
        }
        let mut err = [0.0; N_BUCKETS];
        let mut hit = [0usize; N_BUCKETS];
        let mut cnt = [0usize; N_BUCKETS];
        for (p, r) in preds.iter().zip(records) {
            let b = bucket_of(r.p_bar);
            let e = (p - r.p_bar).abs();
            err[b] += e;
            hit[b] += (e <= r.ci_half_width) as usize;
            cnt[b] += 1;
        }
        let n: usize = cnt.iter().sum();
        let ratio = |a: f64, c: usize| if c == 0 { f64::NAN } else { a / c as f64 };
        Ok(Metrics {
            mae_overall: ratio(err.iter().sum(), n),
            mae_per_bucket: std::array::from_fn(|b| ratio(err[b], cnt[b])),
            pap_overall: ratio(hit.iter().sum::<usize>() as f64, n),
            pap_per_bucket: std::array::from_fn(|b| ratio(hit[b] as f64, cnt[b])),
            count_per_bucket: cnt,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["bucket", "count", "mae", "pap"])?;
        let names = ["[0,0.01)", "[0.01,0.1)", "[0.1,1]"];
        for b in 0..N_BUCKETS {
            w.write_record([
                names[b].to_string(),
                self.count_per_bucket[b].to_string(),
                self.mae_per_bucket[b].to_string(),
                self.pap_per_bucket[b].to_string(),
            ])?;
        }
        w.write_record([
            "overall".to_string(),
            self.count_per_bucket.iter().sum::<usize>().to_string(),
            self.mae_overall.to_string(),
            self.pap_overall.to_string(),
        ])?;
        w.flush().map_err(|e| DcpfError::io(path, e))
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>8} {:>10} {:>8}", "bucket", "count", "MAE", "PAP")?;
        let names = ["[0,.01)", "[.01,.1)", "[.1,1]"];
        for b in 0..N_BUCKETS {
            writeln!(
                f,
                "{:<12} {:>8} {:>10.5} {:>8.4}",
                names[b], self.count_per_bucket[b], self.mae_per_bucket[b], self.pap_per_bucket[b]
            )?;
        }
        write!(
            f,
            "{:<12} {:>8} {:>10.5} {:>8.4}",
            "overall",
            self.count_per_bucket.iter().sum::<usize>(),
            self.mae_overall,
            self.pap_overall
        )
    }
}

/// Ensemble predictions (current mode) for every record.
pub fn predict_records<T: Scalar>(model: &EnsembleModel<T>, records: &[DatasetRecord]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(records.len());
    for chunk in records.chunks(EVAL_CHUNK) {
        let rows: Vec<[f64; 10]> = chunk.iter().map(|r| r.features()).collect();
        out.extend(model.predict_rows(&rows)?);
    }
    Ok(out)
}

pub fn evaluate<T: Scalar>(model: &EnsembleModel<T>, records: &[DatasetRecord]) -> Result<Metrics> {
    Metrics::from_predictions(&predict_records(model, records)?, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: f64, ci: f64) -> DatasetRecord {
        DatasetRecord {
            p_bar: p,
            ci_half_width: ci,
            ..Default::default()
        }
    }

    #[test]
    fn perfect_predictions() {
        let recs: Vec<_> = [0.0, 0.005, 0.05, 0.5, 1.0].iter().map(|&p| rec(p, 1e-3)).collect();
        let preds: Vec<f64> = recs.iter().map(|r| r.p_bar).collect();
        let m = Metrics::from_predictions(&preds, &recs).unwrap();
        assert_eq!(m.mae_overall, 0.0);
        assert_eq!(m.pap_overall, 1.0);
        assert_eq!(m.count_per_bucket, [2, 1, 2]);
    }

    #[test]
    fn constant_half_predictor() {
        let recs: Vec<_> = (0..100).map(|i| rec(i as f64 * 1e-4, 1e-4)).collect();
        let m = Metrics::from_predictions(&vec![0.5; 100], &recs).unwrap();
        assert!(m.mae_per_bucket[0] >= 0.49);
        assert_eq!(m.pap_overall, 0.0);
        assert!(m.mae_per_bucket[1].is_nan());
    }

    #[test]
    fn csv_output() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = Metrics::from_predictions(&[0.1], &[rec(0.1, 0.01)]).unwrap();
        m.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("bucket,count,mae,pap\n"));
        assert_eq!(text.lines().count(), 5);
        assert!(m.to_string().contains("overall"));
    }
}
