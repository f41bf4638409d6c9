//! Parallelizability bounds of a transaction graph.
//!
//! For a block with total gas `T`:
//!
//! | bound | sequential gas | speedup |
//! |-------|----------------|---------|
//! | lower | heaviest connected component | `T / cc` |
//! | upper | heaviest clique (or the list schedule as proxy) | `T / clique` |
//! | loose | heaviest transaction | `T / tx` |

mod clique;
mod components;
mod schedule;

use std::time::Duration;

use serde::Serialize;

pub use clique::{max_weight_clique, CliqueResult};
pub use components::{components, heaviest_component, Component, DisjointSets};
pub use schedule::{list_schedule, list_schedule_with_order, priority_order, Schedule, ScheduleMode, Slot};

use crate::graph::{dependency_count, TxGraph};

pub const DEFAULT_CLIQUE_BUDGET: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliqueSearch {
    /// Exact search, falling back to the schedule proxy if the budget runs out.
    Exact { budget: Option<Duration> },
    /// Use the schedule's sequential gas as the clique proxy.
    Skip,
}

impl Default for CliqueSearch {
    fn default() -> Self {
        CliqueSearch::Exact {
            budget: Some(DEFAULT_CLIQUE_BUDGET),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AnalysisOptions {
    pub clique: CliqueSearch,
    pub schedule: ScheduleMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockMetrics {
    pub tx_count: usize,
    pub dependency_count: usize,
    pub total_gas: u64,
    pub heaviest_cc_gas: u64,
    /// Absent when the search was skipped or ran out of budget.
    pub heaviest_clique_gas: Option<u64>,
    pub schedule_sequential_gas: u64,
    pub heaviest_tx_gas: u64,
    pub speedup_lower: f64,
    pub speedup_upper: f64,
    pub speedup_loose: f64,
    /// Schedule against exact clique; absent without an exact clique.
    pub relative_error: Option<f64>,
}

impl BlockMetrics {
    /// Gas bound behind `speedup_upper`.
    pub fn upper_bound_gas(&self) -> u64 {
        self.heaviest_clique_gas.unwrap_or(self.schedule_sequential_gas)
    }
}

fn speedup(total: u64, sequential: u64) -> f64 {
    if sequential == 0 {
        1.0
    } else {
        total as f64 / sequential as f64
    }
}

/// `(schedule − clique) / clique`; undefined for an empty clique.
pub fn relative_error(schedule_gas: u64, clique_gas: u64) -> Option<f64> {
    if clique_gas == 0 {
        return None;
    }
    Some((schedule_gas as f64 - clique_gas as f64) / clique_gas as f64)
}

pub fn analyze_block(g: &TxGraph, opts: &AnalysisOptions) -> BlockMetrics {
    let total_gas = g.total_gas();
    let heaviest_tx_gas = g.weights().into_iter().max().unwrap_or(0);
    let heaviest_cc_gas = heaviest_component(g).gas;
    let schedule = list_schedule(g, opts.schedule);
    let heaviest_clique_gas = match opts.clique {
        CliqueSearch::Skip => None,
        CliqueSearch::Exact { budget } => {
            let c = max_weight_clique(g, budget);
            c.exact.then_some(c.gas)
        }
    };
    let upper = heaviest_clique_gas.unwrap_or(schedule.makespan);
    BlockMetrics {
        tx_count: g.len(),
        dependency_count: dependency_count(g),
        total_gas,
        heaviest_cc_gas,
        heaviest_clique_gas,
        schedule_sequential_gas: schedule.makespan,
        heaviest_tx_gas,
        speedup_lower: speedup(total_gas, heaviest_cc_gas),
        speedup_upper: speedup(total_gas, upper),
        speedup_loose: speedup(total_gas, heaviest_tx_gas),
        relative_error: heaviest_clique_gas.and_then(|c| relative_error(schedule.makespan, c)),
    }
}
