//! Address-based and transaction-based graphs over a block or a batch of
//! consecutive blocks.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use serde::Serialize;
use serde_json::json;

use crate::access::{RewriteStats, TxAccess};
use crate::disentangle::DisentangleConfig;
use crate::error::{Error, Result};
use crate::trace::{AccessMode, BlockTrace, ConflictMode, ScopeTarget, TxHash};

/// Inclusive range of block numbers a graph was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BlockRange {
    pub first: u64,
    pub last: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AddressEdge {
    pub from: ScopeTarget,
    pub to: ScopeTarget,
    pub gas: u64,
    pub tx_index: usize,
    pub mode: AccessMode,
}

/// Addresses (and virtual cells) as vertices, one edge per call.
#[derive(Debug, Clone, Default)]
pub struct AddressGraph {
    pub vertices: BTreeSet<ScopeTarget>,
    pub edges: Vec<AddressEdge>,
    pub block_range: BlockRange,
    pub tx_count: usize,
}

impl AddressGraph {
    /// Partition of transaction indices induced by the graph's connected
    /// components, each transaction's calls being executed atomically.
    pub fn transaction_partition(&self) -> Vec<Vec<usize>> {
        let index: HashMap<ScopeTarget, usize> = self.vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut dsu = crate::analysis::DisjointSets::new(self.vertices.len());
        let mut anchor: Vec<Option<usize>> = vec![None; self.tx_count];
        for e in &self.edges {
            let (u, v) = (index[&e.from], index[&e.to]);
            dsu.union(u, v);
            match anchor[e.tx_index] {
                Some(a) => {
                    dsu.union(a, u);
                }
                None => anchor[e.tx_index] = Some(u),
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut loose = Vec::new();
        for (tx, a) in anchor.iter().enumerate() {
            match a {
                Some(a) => groups.entry(dsu.find(*a)).or_default().push(tx),
                None => loose.push(vec![tx]),
            }
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().chain(loose).collect();
        out.sort();
        out
    }

    /// Canonical dump with sorted vertex and edge lists.
    pub fn to_json(&self) -> serde_json::Value {
        let mut edges = self.edges.clone();
        edges.sort_by(|a, b| (a.from, a.to, a.tx_index, a.gas, a.mode).cmp(&(b.from, b.to, b.tx_index, b.gas, b.mode)));
        json!({
            "blockRange": [self.block_range.first, self.block_range.last],
            "vertices": self.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "edges": edges,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TxVertex {
    pub block: u64,
    pub position: usize,
    pub hash: TxHash,
    pub gas: u64,
}

/// Transactions as gas-weighted vertices, conflicts as edges.
#[derive(Debug, Clone)]
pub struct TxGraph {
    pub vertices: Vec<TxVertex>,
    adjacency: Vec<FixedBitSet>,
    edge_count: usize,
    pub block_range: BlockRange,
    pub mode: ConflictMode,
}

impl TxGraph {
    /// Graph over bare weights, mainly for tests and benchmarks.
    pub fn from_edges(weights: &[u64], edges: &[(usize, usize)]) -> TxGraph {
        let vertices = weights
            .iter()
            .enumerate()
            .map(|(i, &gas)| TxVertex {
                block: 0,
                position: i,
                hash: TxHash::default(),
                gas,
            })
            .collect();
        let mut g = TxGraph::empty(vertices, BlockRange::default(), ConflictMode::default());
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    fn empty(vertices: Vec<TxVertex>, block_range: BlockRange, mode: ConflictMode) -> TxGraph {
        let n = vertices.len();
        TxGraph {
            vertices,
            adjacency: vec![FixedBitSet::with_capacity(n); n],
            edge_count: 0,
            block_range,
            mode,
        }
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        if u == v || self.adjacency[u].contains(v) {
            return;
        }
        self.adjacency[u].insert(v);
        self.adjacency[v].insert(u);
        self.edge_count += 1;
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn weight(&self, v: usize) -> u64 {
        self.vertices[v].gas
    }

    pub fn weights(&self) -> Vec<u64> {
        self.vertices.iter().map(|v| v.gas).collect()
    }

    pub fn total_gas(&self) -> u64 {
        self.vertices.iter().map(|v| v.gas).sum()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].contains(v)
    }

    pub fn neighbors(&self, v: usize) -> &FixedBitSet {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].count_ones(..)
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.ones().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "blockRange": [self.block_range.first, self.block_range.last],
            "mode": self.mode,
            "vertices": self.vertices,
            "edges": self.edges().map(|(u, v)| [u, v]).collect::<Vec<_>>(),
        })
    }
}

/// Footprints of all transactions of a batch, computed once and shared by
/// both graph builders.
#[derive(Debug, Clone)]
pub struct BatchAccess {
    pub block_range: BlockRange,
    pub vertices: Vec<TxVertex>,
    pub access: Vec<TxAccess>,
}

impl BatchAccess {
    pub fn new(blocks: &[BlockTrace], cfg: Option<&DisentangleConfig>) -> Result<BatchAccess> {
        let block_range = check_consecutive(blocks)?;
        let cfg = cfg.filter(|c| !c.is_identity());
        let mut vertices = Vec::new();
        let mut access = Vec::new();
        for block in blocks {
            for (position, tx) in block.transactions.iter().enumerate() {
                vertices.push(TxVertex {
                    block: block.number,
                    position,
                    hash: tx.hash,
                    gas: tx.gas_used,
                });
                access.push(TxAccess::of(tx, cfg));
            }
        }
        Ok(BatchAccess {
            block_range,
            vertices,
            access,
        })
    }

    pub fn rewrite_stats(&self) -> RewriteStats {
        let mut stats = RewriteStats::default();
        for a in &self.access {
            stats.merge(a.stats);
        }
        stats
    }

    pub fn address_graph(&self) -> AddressGraph {
        let mut graph = AddressGraph {
            block_range: self.block_range,
            tx_count: self.access.len(),
            ..AddressGraph::default()
        };
        for (tx_index, a) in self.access.iter().enumerate() {
            graph.vertices.extend(a.touched.iter().copied());
            graph.edges.extend(a.edges.iter().map(|e| AddressEdge {
                from: e.from,
                to: e.to,
                gas: e.gas,
                tx_index,
                mode: e.mode,
            }));
        }
        graph
    }

    pub fn tx_graph(&self, mode: ConflictMode) -> TxGraph {
        let mut graph = TxGraph::empty(self.vertices.clone(), self.block_range, mode);
        match mode {
            ConflictMode::WriteAware => {
                let mut by_target: HashMap<ScopeTarget, (Vec<usize>, Vec<usize>)> = HashMap::new();
                for (i, a) in self.access.iter().enumerate() {
                    for (target, &m) in &a.scopes {
                        let entry = by_target.entry(*target).or_default();
                        match m {
                            AccessMode::Write => entry.0.push(i),
                            AccessMode::Read => entry.1.push(i),
                        }
                    }
                }
                for (writers, readers) in by_target.values() {
                    for (k, &u) in writers.iter().enumerate() {
                        for &v in &writers[k + 1..] {
                            graph.add_edge(u, v);
                        }
                        for &v in readers {
                            graph.add_edge(u, v);
                        }
                    }
                }
            }
            ConflictMode::AnyTouch => {
                let mut by_target: HashMap<ScopeTarget, Vec<usize>> = HashMap::new();
                for (i, a) in self.access.iter().enumerate() {
                    for target in &a.touched {
                        by_target.entry(*target).or_default().push(i);
                    }
                }
                for txs in by_target.values() {
                    for (k, &u) in txs.iter().enumerate() {
                        for &v in &txs[k + 1..] {
                            graph.add_edge(u, v);
                        }
                    }
                }
            }
        }
        graph
    }
}

fn check_consecutive(blocks: &[BlockTrace]) -> Result<BlockRange> {
    let Some(first) = blocks.first() else {
        return Err(Error::InvalidArgument("no blocks to build a graph from".into()));
    };
    for pair in blocks.windows(2) {
        if pair[1].number != pair[0].number + 1 {
            return Err(Error::NonConsecutive {
                previous: pair[0].number,
                block: pair[1].number,
            });
        }
    }
    Ok(BlockRange {
        first: first.number,
        last: blocks[blocks.len() - 1].number,
    })
}

pub fn build_address_graph(blocks: &[BlockTrace], rewrites: Option<&DisentangleConfig>) -> Result<AddressGraph> {
    Ok(BatchAccess::new(blocks, rewrites)?.address_graph())
}

pub fn build_tx_graph(
    blocks: &[BlockTrace],
    mode: ConflictMode,
    rewrites: Option<&DisentangleConfig>,
) -> Result<TxGraph> {
    Ok(BatchAccess::new(blocks, rewrites)?.tx_graph(mode))
}

/// Number of conflicting transaction pairs, each pair counted once.
pub fn dependency_count(g: &TxGraph) -> usize {
    g.edge_count()
}

/// Splits consecutive blocks into batches of `k`; a trailing partial batch
/// is dropped.
pub fn merge_blocks(blocks: &[BlockTrace], k: usize) -> Result<Vec<&[BlockTrace]>> {
    if k == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    if !blocks.is_empty() {
        check_consecutive(blocks)?;
    }
    Ok(blocks.chunks_exact(k).collect())
}
