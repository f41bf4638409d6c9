//! Daily Ether price bars from CSV.

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PRICE_HEADER: [&str; 5] = ["date", "open", "high", "low", "close"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl PriceBar {
    pub fn validate(&self) -> Result<()> {
        let PriceBar {
            date,
            open,
            high,
            low,
            close,
        } = *self;
        let all_finite = [open, high, low, close].iter().all(|p| p.is_finite());
        if !all_finite || low <= 0.0 {
            return Err(Error::Price(format!("{date}: prices must be positive")));
        }
        if !(low <= open.min(close) && open.max(close) <= high) {
            return Err(Error::Price(format!(
                "{date}: need low <= open, close <= high (open {open}, high {high}, low {low}, close {close})"
            )));
        }
        Ok(())
    }
}

pub fn parse_price_csv<R: Read>(input: R) -> Result<Vec<PriceBar>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(PRICE_HEADER) {
        return Err(Error::Price(format!(
            "expected header `{}`, found `{}`",
            PRICE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut bars = Vec::new();
    for row in reader.deserialize() {
        let bar: PriceBar = row.map_err(|e| Error::Price(e.to_string()))?;
        bar.validate()?;
        bars.push(bar);
    }
    Ok(bars)
}
