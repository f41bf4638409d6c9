//! Descriptive statistics used by the reports.

use crate::error::{Error, Result};
use crate::ingest::PriceBar;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Statistic("mean of no values"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (n − 1 denominator); 0 for a single value.
pub fn sample_std(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Ok(0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// Normal-approximation 95% interval around the mean: `mean ± 1.96·s/√n`.
pub fn confidence_interval(values: &[f64]) -> Result<(f64, f64)> {
    let m = mean(values)?;
    let half = Z_95 * sample_std(values)? / (values.len() as f64).sqrt();
    Ok((m - half, m + half))
}

/// Nearest-rank percentile: the value at 1-based rank `⌈p/100 · n⌉` of the
/// sorted data (rank clamped to at least 1).
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Statistic("percentile of no values"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Statistic("percentile outside 0..=100"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Product-moment correlation; `Ok(None)` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Statistic("pearson series differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::Statistic("pearson needs at least two points"));
    }
    let (mx, my) = (mean(x)?, mean(y)?);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Daily price movement `(high − low) / low`.
pub fn price_movement(bar: &PriceBar) -> f64 {
    (bar.high - bar.low) / bar.low
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn bar(open: f64, high: f64, low: f64, close: f64) -> PriceBar {
        PriceBar {
            date: NaiveDate::from_ymd_opt(2022, 6, 15).unwrap(),
            open,
            high,
            low,
            close,
        }
    }

    #[test]
    fn ci_examples() {
        assert_eq!(confidence_interval(&[7.0, 7.0, 7.0]).unwrap(), (7.0, 7.0));
        assert_eq!(confidence_interval(&[42.0]).unwrap(), (42.0, 42.0));
        let (lo, hi) = confidence_interval(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        // 1.96 * sqrt(2.5) / sqrt(5) = 1.96 / sqrt(2)
        let half = 1.96 / 2f64.sqrt();
        assert!((lo - (3.0 - half)).abs() < 1e-12 && (hi - (3.0 + half)).abs() < 1e-12);
        assert!((lo - 1.614).abs() < 1e-3 && (hi - 4.386).abs() < 1e-3);
        assert!(confidence_interval(&[]).is_err());
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[10.0, 20.0, 30.0, 40.0], 90.0).unwrap(), 40.0);
        assert_eq!(percentile(&[40.0, 10.0, 30.0, 20.0], 50.0).unwrap(), 20.0);
        for p in [0.0, 1.0, 50.0, 100.0] {
            assert_eq!(percentile(&[5.0], p).unwrap(), 5.0);
        }
        let hundred: Vec<f64> = (1..=100).map(|i| i as f64 * 3.0).collect();
        assert_eq!(percentile(&hundred, 99.0).unwrap(), hundred[98]);
        assert!(percentile(&[], 50.0).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap().unwrap() - 1.0).abs() < 1e-9);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y).unwrap().unwrap() + 1.0).abs() < 1e-9);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap().unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 3.0]).unwrap(), None);
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn price_movement_examples() {
        assert_eq!(price_movement(&bar(105.0, 110.0, 100.0, 105.0)), 0.1);
        assert_eq!(price_movement(&bar(100.0, 100.0, 100.0, 100.0)), 0.0);
        assert!((price_movement(&bar(1200.0, 1250.0, 1100.0, 1230.0)) - 150.0 / 1100.0).abs() < 1e-12);
    }
}
