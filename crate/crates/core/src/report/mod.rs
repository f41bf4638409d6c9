//! Time-window aggregation of per-block metrics and report emission.

pub mod stats;

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate};
use serde::Serialize;

use crate::analysis::BlockMetrics;
use crate::error::{Error, Result};
use crate::ingest::PriceBar;

pub use stats::{confidence_interval, mean, pearson, percentile, price_movement};

/// Metrics of one block or batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRecord {
    pub first_block: u64,
    pub last_block: u64,
    /// Timestamp of the first block.
    pub timestamp: u64,
    pub metrics: BlockMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Daily,
    Monthly,
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "daily" => Ok(Window::Daily),
            "monthly" => Ok(Window::Monthly),
            other => Err(Error::InvalidArgument(format!("unknown window {other:?}"))),
        }
    }
}

impl Window {
    /// UTC date (`YYYY-MM-DD`) or month (`YYYY-MM`) of a unix timestamp.
    pub fn key(self, timestamp: u64) -> String {
        let date = utc_date(timestamp);
        match self {
            Window::Daily => date.format("%Y-%m-%d").to_string(),
            Window::Monthly => date.format("%Y-%m").to_string(),
        }
    }
}

pub fn utc_date(timestamp: u64) -> NaiveDate {
    DateTime::from_timestamp(timestamp as i64, 0)
        .map(|t| t.date_naive())
        .unwrap_or_default()
}

/// Reported metrics, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    TxCount,
    DependencyCount,
    TotalGas,
    HeaviestCcGas,
    HeaviestCliqueGas,
    ScheduleSequentialGas,
    HeaviestTxGas,
    SpeedupLower,
    SpeedupUpper,
    SpeedupLoose,
    RelativeError,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::TxCount,
        Metric::DependencyCount,
        Metric::TotalGas,
        Metric::HeaviestCcGas,
        Metric::HeaviestCliqueGas,
        Metric::ScheduleSequentialGas,
        Metric::HeaviestTxGas,
        Metric::SpeedupLower,
        Metric::SpeedupUpper,
        Metric::SpeedupLoose,
        Metric::RelativeError,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TxCount => "tx_count",
            Metric::DependencyCount => "dependency_count",
            Metric::TotalGas => "total_gas",
            Metric::HeaviestCcGas => "heaviest_cc_gas",
            Metric::HeaviestCliqueGas => "heaviest_clique_gas",
            Metric::ScheduleSequentialGas => "schedule_sequential_gas",
            Metric::HeaviestTxGas => "heaviest_tx_gas",
            Metric::SpeedupLower => "speedup_lower",
            Metric::SpeedupUpper => "speedup_upper",
            Metric::SpeedupLoose => "speedup_loose",
            Metric::RelativeError => "relative_error",
        }
    }

    pub fn value(self, m: &BlockMetrics) -> Option<f64> {
        Some(match self {
            Metric::TxCount => m.tx_count as f64,
            Metric::DependencyCount => m.dependency_count as f64,
            Metric::TotalGas => m.total_gas as f64,
            Metric::HeaviestCcGas => m.heaviest_cc_gas as f64,
            Metric::HeaviestCliqueGas => m.heaviest_clique_gas? as f64,
            Metric::ScheduleSequentialGas => m.schedule_sequential_gas as f64,
            Metric::HeaviestTxGas => m.heaviest_tx_gas as f64,
            Metric::SpeedupLower => m.speedup_lower,
            Metric::SpeedupUpper => m.speedup_upper,
            Metric::SpeedupLoose => m.speedup_loose,
            Metric::RelativeError => m.relative_error?,
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub records: Vec<MetricRecord>,
    pub window: Window,
}

impl MetricSeries {
    /// Sorts records by time so the series invariant holds.
    pub fn new(mut records: Vec<MetricRecord>, window: Window) -> MetricSeries {
        records.sort_by_key(|r| (r.timestamp, r.first_block));
        MetricSeries { records, window }
    }

    /// Values of `metric` grouped by window key; records lacking the metric
    /// are left out.
    pub fn grouped(&self, metric: Metric) -> BTreeMap<String, Vec<f64>> {
        let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            if let Some(v) = metric.value(&r.metrics) {
                out.entry(self.window.key(r.timestamp)).or_default().push(v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub window: String,
    pub metric: &'static str,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(p, value)` for each requested percentile.
    pub percentiles: Vec<(f64, f64)>,
    pub count: usize,
}

pub const DEFAULT_PERCENTILES: [f64; 2] = [90.0, 99.0];

/// One row per (window, metric), ordered by window key then metric order.
pub fn aggregate(series: &MetricSeries, percentiles: &[f64]) -> Result<Vec<AggregateRow>> {
    let mut rows = Vec::new();
    let mut by_metric: Vec<(Metric, BTreeMap<String, Vec<f64>>)> =
        Metric::ALL.iter().map(|&m| (m, series.grouped(m))).collect();
    let mut windows: Vec<String> = by_metric.iter().flat_map(|(_, g)| g.keys().cloned()).collect();
    windows.sort();
    windows.dedup();
    for window in windows {
        for (metric, groups) in &mut by_metric {
            let Some(values) = groups.remove(&window) else {
                continue;
            };
            let (ci_low, ci_high) = confidence_interval(&values)?;
            rows.push(AggregateRow {
                window: window.clone(),
                metric: metric.name(),
                mean: mean(&values)?,
                ci_low,
                ci_high,
                percentiles: percentiles
                    .iter()
                    .map(|&p| Ok((p, percentile(&values, p)?)))
                    .collect::<Result<_>>()?,
                count: values.len(),
            });
        }
    }
    Ok(rows)
}

/// `%g`-style rendering with `digits` significant digits.
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, value))
    }
}

fn sig6(v: f64) -> String {
    format_sig(v, 6)
}

fn percentile_label(p: f64) -> String {
    format!("p{}", format_sig(p, 6))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

/// Aggregates `series` and writes the rows in `format`.
pub fn emit_report<W: Write>(
    series: &MetricSeries,
    format: ReportFormat,
    percentiles: &[f64],
    writer: W,
) -> Result<()> {
    let rows = aggregate(series, percentiles)?;
    match format {
        ReportFormat::Csv => write_aggregate_csv(&rows, percentiles, writer),
        ReportFormat::Json => write_aggregate_json(&rows, writer),
    }
}

fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], percentiles: &[f64], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec![
        "window_key".to_string(),
        "metric".into(),
        "mean".into(),
        "ci_low".into(),
        "ci_high".into(),
    ];
    header.extend(percentiles.iter().map(|&p| percentile_label(p)));
    header.push("count".into());
    out.write_record(&header)?;
    for row in rows {
        let mut record = vec![
            row.window.clone(),
            row.metric.to_string(),
            sig6(row.mean),
            sig6(row.ci_low),
            sig6(row.ci_high),
        ];
        record.extend(row.percentiles.iter().map(|&(_, v)| sig6(v)));
        record.push(row.count.to_string());
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

fn rounded(v: f64) -> serde_json::Value {
    sig6(v)
        .parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

fn write_aggregate_json<W: Write>(rows: &[AggregateRow], mut writer: W) -> Result<()> {
    let array: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            obj.insert("window_key".into(), row.window.clone().into());
            obj.insert("metric".into(), row.metric.into());
            obj.insert("mean".into(), rounded(row.mean));
            obj.insert("ci_low".into(), rounded(row.ci_low));
            obj.insert("ci_high".into(), rounded(row.ci_high));
            for &(p, v) in &row.percentiles {
                obj.insert(percentile_label(p), rounded(v));
            }
            obj.insert("count".into(), row.count.into());
            serde_json::Value::Object(obj)
        })
        .collect();
    serde_json::to_writer_pretty(&mut writer, &array)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub const RECORD_HEADER: [&str; 15] = [
    "first_block",
    "last_block",
    "timestamp",
    "tx_count",
    "dependency_count",
    "total_gas",
    "heaviest_cc_gas",
    "heaviest_clique_gas",
    "schedule_sequential_gas",
    "heaviest_tx_gas",
    "speedup_lower",
    "speedup_upper",
    "speedup_loose",
    "relative_error",
    "clique_exact",
];

/// Per-block (or per-batch) CSV; absent values are left empty.
pub fn write_records_csv<W: Write>(records: &[MetricRecord], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(RECORD_HEADER)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in records {
        let m = &r.metrics;
        out.write_record([
            r.first_block.to_string(),
            r.last_block.to_string(),
            r.timestamp.to_string(),
            m.tx_count.to_string(),
            m.dependency_count.to_string(),
            m.total_gas.to_string(),
            m.heaviest_cc_gas.to_string(),
            opt(m.heaviest_clique_gas.map(|g| g.to_string())),
            m.schedule_sequential_gas.to_string(),
            m.heaviest_tx_gas.to_string(),
            sig6(m.speedup_lower),
            sig6(m.speedup_upper),
            sig6(m.speedup_loose),
            opt(m.relative_error.map(sig6)),
            m.heaviest_clique_gas.is_some().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a per-block CSV written by [`write_records_csv`].
pub fn read_records_csv<R: std::io::Read>(reader: R) -> Result<Vec<MetricRecord>> {
    let mut input = csv::Reader::from_reader(reader);
    if input.headers()?.iter().ne(RECORD_HEADER) {
        return Err(Error::InvalidArgument("not a per-block metrics CSV".into()));
    }
    let field =
        |rec: &csv::StringRecord, i: usize| -> Result<String> { Ok(rec.get(i).unwrap_or_default().to_string()) };
    let int = |rec: &csv::StringRecord, i: usize| -> Result<u64> {
        field(rec, i)?
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("column {} is not an integer", RECORD_HEADER[i])))
    };
    let float = |rec: &csv::StringRecord, i: usize| -> Result<Option<f64>> {
        let text = field(rec, i)?;
        if text.is_empty() {
            return Ok(None);
        }
        text.parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("column {} is not a number", RECORD_HEADER[i])))
    };
    let mut out = Vec::new();
    for rec in input.records() {
        let rec = rec?;
        let clique = field(&rec, 7)?;
        out.push(MetricRecord {
            first_block: int(&rec, 0)?,
            last_block: int(&rec, 1)?,
            timestamp: int(&rec, 2)?,
            metrics: BlockMetrics {
                tx_count: int(&rec, 3)? as usize,
                dependency_count: int(&rec, 4)? as usize,
                total_gas: int(&rec, 5)?,
                heaviest_cc_gas: int(&rec, 6)?,
                heaviest_clique_gas: if clique.is_empty() { None } else { Some(int(&rec, 7)?) },
                schedule_sequential_gas: int(&rec, 8)?,
                heaviest_tx_gas: int(&rec, 9)?,
                speedup_lower: float(&rec, 10)?.unwrap_or(1.0),
                speedup_upper: float(&rec, 11)?.unwrap_or(1.0),
                speedup_loose: float(&rec, 12)?.unwrap_or(1.0),
                relative_error: float(&rec, 13)?,
            },
        });
    }
    Ok(out)
}

/// Per-day join of a metric's daily mean with prices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceDay {
    pub date: NaiveDate,
    pub metric_mean: f64,
    pub open: f64,
    pub close: f64,
    pub movement: f64,
}

/// Days present in both the series and the price data, ascending.
pub fn join_prices(series: &MetricSeries, prices: &[PriceBar], metric: Metric) -> Result<Vec<PriceDay>> {
    let daily = MetricSeries {
        records: series.records.clone(),
        window: Window::Daily,
    };
    let grouped = daily.grouped(metric);
    let mut out = Vec::new();
    for bar in prices {
        let key = bar.date.format("%Y-%m-%d").to_string();
        if let Some(values) = grouped.get(&key) {
            out.push(PriceDay {
                date: bar.date,
                metric_mean: mean(values)?,
                open: bar.open,
                close: bar.close,
                movement: price_movement(bar),
            });
        }
    }
    out.sort_by_key(|d| d.date);
    Ok(out)
}

/// Correlation between a metric's daily mean and the daily close price.
pub fn price_correlation(days: &[PriceDay]) -> Result<Option<f64>> {
    let x: Vec<f64> = days.iter().map(|d| d.metric_mean).collect();
    let y: Vec<f64> = days.iter().map(|d| d.close).collect();
    pearson(&x, &y)
}

pub fn write_price_days_csv<W: Write>(days: &[PriceDay], metric: Metric, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "date",
        &format!("mean_{}", metric.name()),
        "open",
        "close",
        "price_movement",
    ])?;
    for d in days {
        out.write_record([
            d.date.format("%Y-%m-%d").to_string(),
            sig6(d.metric_mean),
            sig6(d.open),
            sig6(d.close),
            sig6(d.movement),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(total: u64) -> BlockMetrics {
        BlockMetrics {
            tx_count: 3,
            dependency_count: 2,
            total_gas: total,
            heaviest_cc_gas: total / 2,
            heaviest_clique_gas: Some(total / 4),
            schedule_sequential_gas: total / 4,
            heaviest_tx_gas: total / 10,
            speedup_lower: 2.0,
            speedup_upper: 4.0,
            speedup_loose: 10.0,
            relative_error: Some(0.0),
        }
    }

    fn record(n: u64, ts: u64, total: u64) -> MetricRecord {
        MetricRecord {
            first_block: n,
            last_block: n,
            timestamp: ts,
            metrics: metrics(total),
        }
    }

    #[test]
    fn format_sig_matches_printf_g() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.386_409_6, "1.38641"),
            (15_000_000.0, "1.5e+07"),
            (123_456.0, "123456"),
            (1_234_567.0, "1.23457e+06"),
            (0.000_012_345_67, "1.23457e-05"),
            (0.000_123_456_7, "0.000123457"),
            (-2.5, "-2.5"),
            (999_999.5, "1e+06"),
        ];
        for (v, expect) in cases {
            assert_eq!(format_sig(v, 6), expect, "{v}");
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let series = MetricSeries::new(vec![], Window::Daily);
        let mut out = Vec::new();
        emit_report(&series, ReportFormat::Csv, &DEFAULT_PERCENTILES, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "window_key,metric,mean,ci_low,ci_high,p90,p99,count\n"
        );
    }

    #[test]
    fn single_block_gives_one_row_per_metric() {
        let series = MetricSeries::new(vec![record(1, 1_654_041_600, 100)], Window::Daily);
        let rows = aggregate(&series, &DEFAULT_PERCENTILES).unwrap();
        assert_eq!(rows.len(), Metric::ALL.len());
        assert!(rows.iter().all(|r| r.count == 1 && r.window == "2022-06-01"));
        assert_eq!(
            rows.iter().map(|r| r.metric).collect::<Vec<_>>(),
            Metric::ALL.map(Metric::name)
        );
    }

    #[test]
    fn absent_metrics_are_skipped() {
        let mut r = record(1, 0, 100);
        r.metrics.heaviest_clique_gas = None;
        r.metrics.relative_error = None;
        let rows = aggregate(&MetricSeries::new(vec![r], Window::Monthly), &[50.0]).unwrap();
        assert_eq!(rows.len(), Metric::ALL.len() - 2);
        assert_eq!(rows[0].window, "1970-01");
    }

    #[test]
    fn windows_sort_and_group() {
        let day = 86_400;
        let t0 = 1_654_041_600;
        let series = MetricSeries::new(
            vec![record(3, t0 + day, 30), record(1, t0, 10), record(2, t0 + 10, 20)],
            Window::Daily,
        );
        let rows = aggregate(&series, &DEFAULT_PERCENTILES).unwrap();
        let total: Vec<_> = rows.iter().filter(|r| r.metric == "total_gas").collect();
        assert_eq!(total.len(), 2);
        assert_eq!(
            (total[0].window.as_str(), total[0].mean, total[0].count),
            ("2022-06-01", 15.0, 2)
        );
        assert_eq!(total[0].percentiles, vec![(90.0, 20.0), (99.0, 20.0)]);
        assert_eq!((total[1].window.as_str(), total[1].mean), ("2022-06-02", 30.0));
    }

    #[test]
    fn json_report_has_rounded_numbers() {
        let series = MetricSeries::new(vec![record(1, 0, 100)], Window::Daily);
        let mut out = Vec::new();
        emit_report(&series, ReportFormat::Json, &DEFAULT_PERCENTILES, &mut out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v[0]["window_key"], "1970-01-01");
        assert_eq!(v[0]["metric"], "tx_count");
        assert_eq!(v[0]["p99"], 3.0);
        assert_eq!(v[0]["count"], 1);
    }

    #[test]
    fn records_csv_round_trips() {
        let mut b = record(2, 5, 1000);
        b.metrics.heaviest_clique_gas = None;
        b.metrics.relative_error = None;
        let records = vec![record(1, 1, 100), b];
        let mut out = Vec::new();
        write_records_csv(&records, &mut out).unwrap();
        assert_eq!(read_records_csv(out.as_slice()).unwrap(), records);
    }

    #[test]
    fn price_join_and_correlation() {
        let t0 = 1_654_041_600;
        let day = 86_400;
        let series = MetricSeries::new(
            (0..3).map(|d| record(d, t0 + d * day, 100 * (d + 1))).collect(),
            Window::Monthly,
        );
        let bar = |d: u32, close: f64| PriceBar {
            date: NaiveDate::from_ymd_opt(2022, 6, d).unwrap(),
            open: close,
            high: close * 1.1,
            low: close,
            close,
        };
        let prices = vec![bar(1, 1000.0), bar(2, 1100.0), bar(3, 1200.0), bar(9, 5.0)];
        let days = join_prices(&series, &prices, Metric::TotalGas).unwrap();
        assert_eq!(days.len(), 3);
        assert!((price_correlation(&days).unwrap().unwrap() - 1.0).abs() < 1e-9);
        assert!((days[0].movement - 0.1).abs() < 1e-12);
    }
}
