//! Greedy list scheduling on the conflict graph with unlimited parallelism.

use std::cmp::Reverse;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::TxGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    /// Each transaction takes the earliest slot free of its already-placed
    /// conflicts, filling gaps left between them.
    #[default]
    EarliestStart,
    /// Rounds of a greedy maximal independent set, separated by barriers.
    BarrierRounds,
}

impl FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "earliest-start" => Ok(ScheduleMode::EarliestStart),
            "barrier-rounds" => Ok(ScheduleMode::BarrierRounds),
            other => Err(Error::InvalidArgument(format!("unknown schedule mode {other:?}"))),
        }
    }
}

/// Half-open execution interval in gas units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Slot {
    pub start: u64,
    pub end: u64,
}

impl Slot {
    fn overlaps(&self, other: &Slot) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub slots: Vec<Slot>,
    /// Sequential gas: the latest end time.
    pub makespan: u64,
    pub mode: ScheduleMode,
}

impl Schedule {
    /// Every slot has the vertex's length and no two conflicting vertices overlap.
    pub fn is_valid_for(&self, g: &TxGraph) -> bool {
        self.slots.len() == g.len()
            && self
                .slots
                .iter()
                .enumerate()
                .all(|(v, s)| s.end - s.start == g.weight(v) && s.end <= self.makespan)
            && g.edges().all(|(u, v)| !self.slots[u].overlaps(&self.slots[v]))
    }
}

/// Descending gas, then ascending position.
pub fn priority_order(g: &TxGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by_key(|&v| (Reverse(g.weight(v)), v));
    order
}

pub fn list_schedule(g: &TxGraph, mode: ScheduleMode) -> Schedule {
    list_schedule_with_order(g, mode, &priority_order(g))
}

/// Schedules vertices in the given priority order.
pub fn list_schedule_with_order(g: &TxGraph, mode: ScheduleMode, order: &[usize]) -> Schedule {
    let slots = match mode {
        ScheduleMode::EarliestStart => earliest_start(g, order),
        ScheduleMode::BarrierRounds => barrier_rounds(g, order),
    };
    let makespan = slots.iter().map(|s| s.end).max().unwrap_or(0);
    Schedule { slots, makespan, mode }
}

fn earliest_start(g: &TxGraph, order: &[usize]) -> Vec<Slot> {
    let n = g.len();
    let mut slots = vec![Slot::default(); n];
    let mut placed = FixedBitSet::with_capacity(n);
    for &v in order {
        let w = g.weight(v);
        let mut busy: Vec<Slot> = g.neighbors(v).intersection(&placed).map(|u| slots[u]).collect();
        busy.sort_by_key(|s| (s.start, s.end));
        // First gap among placed conflicts long enough for v.
        let mut start = 0;
        for s in busy {
            if start + w <= s.start {
                break;
            }
            start = start.max(s.end);
        }
        slots[v] = Slot { start, end: start + w };
        placed.insert(v);
    }
    slots
}

fn barrier_rounds(g: &TxGraph, order: &[usize]) -> Vec<Slot> {
    let n = g.len();
    let mut slots = vec![Slot::default(); n];
    let mut remaining: Vec<usize> = order.to_vec();
    let mut clock = 0;
    while !remaining.is_empty() {
        let mut chosen = FixedBitSet::with_capacity(n);
        let mut blocked = FixedBitSet::with_capacity(n);
        let mut round_len = 0;
        remaining.retain(|&v| {
            if blocked.contains(v) {
                return true;
            }
            chosen.insert(v);
            blocked.union_with(g.neighbors(v));
            round_len = round_len.max(g.weight(v));
            false
        });
        for v in chosen.ones() {
            slots[v] = Slot {
                start: clock,
                end: clock + g.weight(v),
            };
        }
        clock += round_len;
    }
    slots
}
