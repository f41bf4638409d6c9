//! Connected components by union-find.

use crate::graph::TxGraph;

#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Component {
    /// Vertex indices, ascending.
    pub members: Vec<usize>,
    pub gas: u64,
}

/// All connected components, each with its summed vertex weight.
pub fn components(g: &TxGraph) -> Vec<Component> {
    let n = g.len();
    let mut sets = DisjointSets::new(n);
    for (u, v) in g.edges() {
        sets.union(u, v);
    }
    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<Component> = Vec::new();
    for v in 0..n {
        let root = sets.find(v);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push(Component::default());
        }
        let c = &mut out[slot[root]];
        c.members.push(v);
        c.gas += g.weight(v);
    }
    out
}

/// The component of largest total gas; ties go to the one holding the
/// lowest vertex index. An empty graph yields an empty component of weight 0.
pub fn heaviest_component(g: &TxGraph) -> Component {
    components(g)
        .into_iter()
        .reduce(|best, c| if c.gas > best.gas { c } else { best })
        .unwrap_or_default()
}
