use crate::error::{DcpfError, Result};

/// Two-sided 95% normal quantile.
pub const Z95_TWO_SIDED: f64 = 1.96;
/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.645;

/// CLT 95% confidence interval for a Bernoulli proportion, clipped to `[0, 1]`.
///
/// With zero hits the interval is `[0, 1 - 0.05^(1/n)]`; with all hits it is
/// `[0.05^(1/n), 1]`.
pub fn clt_interval(hits: u64, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(DcpfError::invalid("confidence interval needs n >= 1"));
    }
    if hits > n {
        return Err(DcpfError::invalid(format!("hits {hits} exceed n {n}")));
    }
    let nf = n as f64;
    if hits == 0 {
        return Ok((0.0, 1.0 - 0.05f64.powf(1.0 / nf)));
    }
    if hits == n {
        return Ok((0.05f64.powf(1.0 / nf), 1.0));
    }
    let p = hits as f64 / nf;
    let hw = Z95_TWO_SIDED * (p * (1.0 - p) / nf).sqrt();
    Ok(((p - hw).max(0.0), (p + hw).min(1.0)))
}

/// Largest distance from the point estimate to either interval end.
///
/// Equals `1.96·sqrt(p̂(1−p̂)/n)` in the interior and the one-sided bound
/// width in the zero-hit and all-hit cases.
pub fn clt_half_width(hits: u64, n: u64) -> Result<f64> {
    let (lo, hi) = clt_interval(hits, n)?;
    let p = hits as f64 / n as f64;
    Ok((p - lo).max(hi - p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_half_width() {
        let (lo, hi) = clt_interval(500, 10_000).unwrap();
        let hw = 1.96 * (0.05f64 * 0.95 / 1e4).sqrt();
        assert!((hw - 0.004272).abs() < 1e-6);
        assert!(((hi - lo) / 2.0 - hw).abs() < 1e-15);
        assert!((clt_half_width(500, 10_000).unwrap() - hw).abs() < 1e-15);
    }

    #[test]
    fn zero_hits_bound() {
        let (lo, hi) = clt_interval(0, 40_000).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 7.489e-5).abs() < 1e-8);
        assert!((hi - (1.0 - 0.05f64.powf(1.0 / 40_000.0))).abs() < 1e-12);
    }

    #[test]
    fn all_hits_bound() {
        let (lo, hi) = clt_interval(7, 7).unwrap();
        assert_eq!(hi, 1.0);
        assert!((lo - 0.05f64.powf(1.0 / 7.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_overflow() {
        assert!(matches!(clt_interval(0, 0), Err(DcpfError::InvalidArgument(_))));
        assert!(clt_interval(3, 2).is_err());
    }

    #[test]
    fn clipping() {
        let (lo, _) = clt_interval(1, 10).unwrap();
        assert_eq!(lo, 0.0);
        let (_, hi) = clt_interval(9, 10).unwrap();
        assert_eq!(hi, 1.0);
    }
}
