//! Random per-day block sampling.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::ops::RangeInclusive;

use chrono::{DateTime, Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

pub const DEFAULT_PER_DAY: usize = 65;

/// Calendar day to the inclusive range of blocks mined on it.
pub type DayRanges = BTreeMap<NaiveDate, RangeInclusive<u64>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    pub seed: u64,
    pub per_day: usize,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
}

impl SamplePlan {
    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.first_day.iter_days().take_while(move |d| *d <= self.last_day)
    }
}

/// Generator for one day's draw. Each day has its own stream so that a
/// plan over a longer range reproduces the draws of a shorter one.
pub fn day_rng(seed: u64, day: NaiveDate) -> ChaCha8Rng {
    let ordinal = day.num_days_from_ce() as u64;
    ChaCha8Rng::seed_from_u64(seed ^ ordinal.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Draws `k` distinct values from `range` by a partial Fisher-Yates shuffle
/// that only records displaced positions.
fn draw_without_replacement(rng: &mut ChaCha8Rng, range: &RangeInclusive<u64>, k: usize) -> Vec<u64> {
    let (lo, hi) = (*range.start(), *range.end());
    let n = hi - lo + 1;
    let mut displaced: HashMap<u64, u64> = HashMap::new();
    let mut out = Vec::with_capacity(k);
    for i in 0..k as u64 {
        let j = rng.gen_range(i..n);
        let at_j = *displaced.get(&j).unwrap_or(&j);
        let at_i = *displaced.get(&i).unwrap_or(&i);
        displaced.insert(j, at_i);
        out.push(lo + at_j);
    }
    out
}

/// Block numbers to analyse: `per_day` blocks drawn uniformly without
/// replacement from every day of the plan (the whole day if it has fewer),
/// sorted ascending.
pub fn plan_samples(plan: &SamplePlan, ranges: &DayRanges) -> Result<Vec<u64>> {
    if plan.per_day == 0 {
        return Err(Error::SamplePlan("per_day must be at least 1".into()));
    }
    if plan.last_day < plan.first_day {
        return Err(Error::SamplePlan("last day precedes first day".into()));
    }
    let mut out = Vec::new();
    for day in plan.days() {
        let range = ranges
            .get(&day)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| Error::SamplePlan(format!("no blocks known for {day}")))?;
        let size = range.end() - range.start() + 1;
        if size <= plan.per_day as u64 {
            out.extend(range.clone());
        } else {
            out.extend(draw_without_replacement(
                &mut day_rng(plan.seed, day),
                range,
                plan.per_day,
            ));
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Day ranges from `(number, timestamp)` pairs, grouped by UTC date.
pub fn day_ranges_from_blocks(blocks: impl IntoIterator<Item = (u64, u64)>) -> DayRanges {
    let mut out: DayRanges = BTreeMap::new();
    for (number, timestamp) in blocks {
        let Some(day) = DateTime::from_timestamp(timestamp as i64, 0).map(|t| t.date_naive()) else {
            continue;
        };
        out.entry(day)
            .and_modify(|r| *r = (*r.start()).min(number)..=(*r.end()).max(number))
            .or_insert(number..=number);
    }
    out
}

#[derive(Deserialize)]
struct DayRangeRow {
    date: NaiveDate,
    first_block: u64,
    last_block: u64,
}

/// Reads `date,first_block,last_block` rows.
pub fn parse_day_ranges_csv<R: Read>(input: R) -> Result<DayRanges> {
    let mut out = BTreeMap::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: DayRangeRow = row?;
        if row.last_block < row.first_block {
            return Err(Error::SamplePlan(format!("{}: empty block range", row.date)));
        }
        out.insert(row.date, row.first_block..=row.last_block);
    }
    Ok(out)
}
