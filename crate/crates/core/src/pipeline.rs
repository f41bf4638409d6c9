//! Blocks in, metric records out.

use crate::analysis::{analyze_block, AnalysisOptions};
use crate::disentangle::DisentangleConfig;
use crate::error::Result;
use crate::graph::{merge_blocks, BatchAccess};
use crate::par::{map_ordered, Execution};
use crate::report::MetricRecord;
use crate::trace::{BlockTrace, ConflictMode};

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub conflict_mode: ConflictMode,
    /// `None` analyses the original call trees.
    pub disentangle: Option<DisentangleConfig>,
    pub analysis: AnalysisOptions,
    pub execution: Execution,
}

/// Metrics of one batch of consecutive blocks treated as a single block.
pub fn analyze_batch(blocks: &[BlockTrace], opts: &PipelineOptions) -> Result<MetricRecord> {
    let access = BatchAccess::new(blocks, opts.disentangle.as_ref())?;
    let graph = access.tx_graph(opts.conflict_mode);
    Ok(MetricRecord {
        first_block: access.block_range.first,
        last_block: access.block_range.last,
        timestamp: blocks[0].timestamp,
        metrics: analyze_block(&graph, &opts.analysis),
    })
}

/// Per-batch metrics for `blocks` split into batches of `batch_size`.
///
/// With `batch_size == 1` blocks need not be consecutive (sampled input).
pub fn analyze_blocks(blocks: &[BlockTrace], batch_size: usize, opts: &PipelineOptions) -> Result<Vec<MetricRecord>> {
    let batches: Vec<&[BlockTrace]> = if batch_size == 1 {
        blocks.chunks(1).collect()
    } else {
        merge_blocks(blocks, batch_size)?
    };
    map_ordered(&batches, opts.execution, |batch| analyze_batch(batch, opts))
        .into_iter()
        .collect()
}
