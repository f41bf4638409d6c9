//! Conflict graphs and parallelizability bounds for EVM blocks.
//!
//! Pipeline: call traces ([`trace`]) are read from files or an archive node
//! ([`ingest`]), optionally stripped of non-essential dependencies
//! ([`disentangle`]), turned into address and transaction graphs
//! ([`graph`]), bounded ([`analysis`]) and aggregated into reports
//! ([`report`]). [`synth`] produces deterministic workloads for tests and
//! benchmarks.

pub mod access;
pub mod analysis;
pub mod disentangle;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod trace;

pub use access::{conflicting, disentangle, tx_scope_set, TxAccess};
pub use analysis::{analyze_block, AnalysisOptions, BlockMetrics, CliqueSearch, ScheduleMode};
pub use disentangle::DisentangleConfig;
pub use error::{Error, Result};
pub use graph::{build_address_graph, build_tx_graph, dependency_count, merge_blocks, AddressGraph, TxGraph};
pub use pipeline::{analyze_batch, analyze_blocks, PipelineOptions};
pub use trace::{AccessMode, AccessScope, Address, BlockTrace, CallFrame, CallKind, ConflictMode, Transaction};
