//! Exact maximum-weight clique by branch and bound.
//!
//! Vertices are relabelled in a weighted degeneracy order so that bitsets
//! index the search order directly. At every node the candidate set is
//! greedily partitioned into independent sets; a clique takes at most one
//! vertex per set, so the sum of the heaviest vertex of each set bounds
//! what the remaining candidates can add.

use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;

use crate::graph::TxGraph;

/// Nodes explored between two clock reads.
const CLOCK_STRIDE: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueResult {
    /// Vertex indices of the graph, ascending.
    pub members: Vec<usize>,
    pub gas: u64,
    /// False when the budget ran out before the search space was exhausted.
    pub exact: bool,
}

/// Weighted degeneracy order: repeatedly peel the vertex whose own weight
/// plus the weight of its remaining neighbourhood is smallest; the reverse
/// peel order puts the heaviest dense core first.
fn search_order(g: &TxGraph) -> Vec<usize> {
    let n = g.len();
    let mut load: Vec<u64> = (0..n)
        .map(|v| g.weight(v) + g.neighbors(v).ones().map(|u| g.weight(u)).sum::<u64>())
        .collect();
    let mut removed = vec![false; n];
    let mut peeled = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| (load[v], g.weight(v), std::cmp::Reverse(v)))
            .expect("vertex left");
        removed[v] = true;
        peeled.push(v);
        for u in g.neighbors(v).ones() {
            if !removed[u] {
                load[u] -= g.weight(v);
            }
        }
    }
    peeled.reverse();
    peeled
}

struct Search {
    weight: Vec<u64>,
    adj: Vec<FixedBitSet>,
    best_gas: u64,
    best: Vec<usize>,
    current: Vec<usize>,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
}

impl Search {
    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(CLOCK_STRIDE) {
            if let Some(deadline) = self.deadline {
                self.timed_out = Instant::now() >= deadline;
            }
        }
        self.timed_out
    }

    /// Candidates in colour order with the bound reachable up to each one.
    fn colour(&self, candidates: &FixedBitSet) -> Vec<(usize, u64)> {
        let mut ordered = Vec::with_capacity(candidates.count_ones(..));
        let mut uncoloured = candidates.clone();
        let mut bound = 0u64;
        while let Some(first) = uncoloured.ones().next() {
            let mut class = uncoloured.clone();
            let start = ordered.len();
            let mut heaviest = 0;
            let mut next = Some(first);
            while let Some(v) = next {
                class.set(v, false);
                class.difference_with(&self.adj[v]);
                uncoloured.set(v, false);
                heaviest = heaviest.max(self.weight[v]);
                ordered.push((v, 0));
                next = class.ones().next();
            }
            bound += heaviest;
            for entry in &mut ordered[start..] {
                entry.1 = bound;
            }
        }
        ordered
    }

    fn expand(&mut self, gas: u64, mut candidates: FixedBitSet) {
        if self.out_of_time() {
            return;
        }
        if gas > self.best_gas {
            self.best_gas = gas;
            self.best = self.current.clone();
        }
        let ordered = self.colour(&candidates);
        for &(v, bound) in ordered.iter().rev() {
            if gas + bound <= self.best_gas {
                return;
            }
            let mut next = candidates.clone();
            next.intersect_with(&self.adj[v]);
            self.current.push(v);
            self.expand(gas + self.weight[v], next);
            self.current.pop();
            if self.timed_out {
                return;
            }
            candidates.set(v, false);
        }
    }
}

/// Greedy clique grown from `seed` by descending weight.
fn greedy_from(seed: usize, weight: &[u64], adj: &[FixedBitSet]) -> (Vec<usize>, u64) {
    let mut members = vec![seed];
    let mut gas = weight[seed];
    let mut candidates = adj[seed].clone();
    while let Some(v) = candidates.ones().max_by_key(|&v| (weight[v], std::cmp::Reverse(v))) {
        members.push(v);
        gas += weight[v];
        candidates.intersect_with(&adj[v]);
    }
    (members, gas)
}

/// Heaviest set of pairwise-conflicting transactions.
///
/// With `budget` set, the search stops at the deadline and returns the best
/// clique found so far with `exact == false`.
pub fn max_weight_clique(g: &TxGraph, budget: Option<Duration>) -> CliqueResult {
    let n = g.len();
    if n == 0 {
        return CliqueResult {
            members: Vec::new(),
            gas: 0,
            exact: true,
        };
    }
    let deadline = budget.map(|b| Instant::now() + b);
    let order = search_order(g);
    let mut rank = vec![0; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let weight: Vec<u64> = order.iter().map(|&v| g.weight(v)).collect();
    let adj: Vec<FixedBitSet> = order
        .iter()
        .map(|&v| {
            let mut bits = FixedBitSet::with_capacity(n);
            for u in g.neighbors(v).ones() {
                bits.insert(rank[u]);
            }
            bits
        })
        .collect();

    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (std::cmp::Reverse(weight[v]), v));
    let (best, best_gas) = seeds
        .iter()
        .take(32)
        .map(|&s| greedy_from(s, &weight, &adj))
        .max_by_key(|(_, gas)| *gas)
        .expect("non-empty graph");

    let mut search = Search {
        weight,
        adj,
        best_gas,
        best,
        current: Vec::new(),
        deadline,
        nodes: 0,
        timed_out: false,
    };
    let mut all = FixedBitSet::with_capacity(n);
    all.insert_range(..);
    search.expand(0, all);

    let mut members: Vec<usize> = search.best.iter().map(|&r| order[r]).collect();
    members.sort_unstable();
    CliqueResult {
        members,
        gas: search.best_gas,
        exact: !search.timed_out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_clique(g: &TxGraph, members: &[usize]) -> bool {
        members
            .iter()
            .enumerate()
            .all(|(i, &u)| members[i + 1..].iter().all(|&v| g.has_edge(u, v)))
    }

    #[test]
    fn singleton_beats_lighter_triangle() {
        let g = TxGraph::from_edges(&[4, 2, 3, 10], &[(0, 1), (1, 2), (0, 2)]);
        let c = max_weight_clique(&g, None);
        assert_eq!(c.members, vec![3]);
        assert_eq!(c.gas, 10);
        assert!(c.exact);
    }

    #[test]
    fn heavy_pair_beats_triangle() {
        // K3 {4,2,3} plus the edge {6,5}.
        let g = TxGraph::from_edges(&[4, 2, 3, 6, 5], &[(0, 1), (1, 2), (0, 2), (3, 4)]);
        let c = max_weight_clique(&g, None);
        assert_eq!(c.members, vec![3, 4]);
        assert_eq!(c.gas, 11);
    }

    #[test]
    fn empty_and_complete_graphs() {
        let g = TxGraph::from_edges(&[], &[]);
        assert_eq!(max_weight_clique(&g, None).gas, 0);
        let n = 40;
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let weights: Vec<u64> = (1..=n as u64).collect();
        let c = max_weight_clique(&TxGraph::from_edges(&weights, &edges), None);
        assert_eq!(c.members.len(), n);
        assert_eq!(c.gas, weights.iter().sum::<u64>());
    }

    #[test]
    fn zero_budget_still_returns_a_clique() {
        let n = 60;
        let edges: Vec<_> = (0..n)
            .flat_map(|u| {
                (u + 1..n)
                    .filter(move |v| (u * 7 + v * 13) % 3 != 0)
                    .map(move |v| (u, v))
            })
            .collect();
        let weights: Vec<u64> = (0..n as u64).map(|i| 100 + (i * 37) % 91).collect();
        let g = TxGraph::from_edges(&weights, &edges);
        let c = max_weight_clique(&g, Some(Duration::ZERO));
        assert!(is_clique(&g, &c.members));
        assert!(c.gas >= *weights.iter().max().unwrap());
        assert_eq!(c.gas, c.members.iter().map(|&v| weights[v]).sum::<u64>());
        let exact = max_weight_clique(&g, None);
        assert!(exact.exact && exact.gas >= c.gas && is_clique(&g, &exact.members));
    }
}
