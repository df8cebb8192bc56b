//! Incremental cycle detection for a growing directed graph.
//!
//! [`CycleGuard`] answers "would inserting arc a -> b close a cycle?" against
//! the arcs inserted so far. It keeps two structures in sync:
//!
//! - a union-find over *weakly* connected components, and
//! - a total order `ord` on the nodes that is consistent with every inserted
//!   arc (`ord[a] < ord[b]` whenever a -> b is present).
//!
//! A query first tries two constant-time dismissals: endpoints in different
//! components cannot close a cycle, and neither can an arc that already agrees
//! with the ordering (`ord[a] < ord[b]`). Only when both filters fail does it
//! run a depth-first search from `b`, bounded to nodes numbered at most
//! `ord[a]`. The bound is sound because along any path into `a` the numbering
//! increases, so a path from `b` to `a` can never leave the searched region.
//!
//! Insertions that violate the ordering repair it by renumbering just the
//! affected region (the nodes reachable from `b` below `ord[a]`, and those
//! reaching `a` above `ord[b]`), so the cost of an insertion is bounded by the
//! size of that region rather than the whole graph.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CycleError {
    #[error("arc {from} -> {to} would close a cycle")]
    WouldCycle { from: usize, to: usize },
}

/// Cycle guard over a fixed node set `0..len`.
#[derive(Debug, Clone)]
pub struct CycleGuard {
    parent: Vec<usize>,
    rank: Vec<u8>,
    /// Permutation of `0..len`; consistent with all inserted arcs.
    ord: Vec<usize>,
    successors: Vec<Vec<usize>>,
    predecessors: Vec<Vec<usize>>,
    arcs: usize,
}

impl CycleGuard {
    /// Guard over `len` isolated nodes. `len` must be at least 1.
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "node set must be non-empty");
        CycleGuard {
            parent: (0..len).collect(),
            rank: vec![0; len],
            ord: (0..len).collect(),
            successors: vec![Vec::new(); len],
            predecessors: vec![Vec::new(); len],
            arcs: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of distinct arcs inserted so far.
    pub fn arc_count(&self) -> usize {
        self.arcs
    }

    /// Current position of `node` in the maintained total order.
    pub fn topo_number(&self, node: usize) -> usize {
        self.ord[node]
    }

    /// Whether two nodes share a weakly connected component.
    pub fn same_component(&self, a: usize, b: usize) -> bool {
        self.root(a) == self.root(b)
    }

    // Non-mutating find; trees stay shallow via union by rank, and insertions
    // compress paths, so queries on a borrowed guard stay cheap.
    fn root(&self, mut node: usize) -> usize {
        while self.parent[node] != node {
            node = self.parent[node];
        }
        node
    }

    fn root_compressing(&mut self, node: usize) -> usize {
        let root = self.root(node);
        let mut walk = node;
        while self.parent[walk] != root {
            walk = std::mem::replace(&mut self.parent[walk], root);
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.root_compressing(a);
        let rb = self.root_compressing(b);
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }

    /// True iff adding `from -> to` would close a directed cycle.
    ///
    /// Endpoints must be in range and distinct; a self-loop is not a
    /// meaningful query here and panics.
    pub fn would_create_cycle(&self, from: usize, to: usize) -> bool {
        let len = self.len();
        assert!(from < len && to < len, "node out of range");
        assert_ne!(from, to, "self-loop");
        // A cycle through the new arc needs an existing path to -> ... -> from,
        // which requires weak connectivity and an ordering violation.
        if !self.same_component(from, to) {
            return false;
        }
        if self.ord[from] < self.ord[to] {
            return false;
        }
        self.reaches_within(to, from, self.ord[from])
    }

    // DFS from `start` over nodes with ord <= bound, looking for `target`.
    fn reaches_within(&self, start: usize, target: usize, bound: usize) -> bool {
        let mut visited = vec![false; self.len()];
        let mut stack = vec![start];
        visited[start] = true;
        while let Some(node) = stack.pop() {
            if node == target {
                return true;
            }
            for &next in &self.successors[node] {
                if !visited[next] && self.ord[next] <= bound {
                    visited[next] = true;
                    stack.push(next);
                }
            }
        }
        false
    }

    /// Records arc `from -> to`, repairing the node order if needed.
    ///
    /// Re-inserting an existing arc is a no-op (the order is left untouched).
    /// An arc that would close a cycle is rejected without mutating anything.
    pub fn insert_arc(&mut self, from: usize, to: usize) -> Result<(), CycleError> {
        let len = self.len();
        assert!(from < len && to < len, "node out of range");
        assert_ne!(from, to, "self-loop");
        if self.successors[from].contains(&to) {
            return Ok(());
        }
        if self.ord[from] > self.ord[to] {
            // Affected region: forward set F from `to` (ord <= ord[from]) and
            // backward set B into `from` (ord >= ord[to]).
            let forward = self.collect(to, &self.successors, self.ord[from], true);
            if forward.contains(&from) {
                return Err(CycleError::WouldCycle { from, to });
            }
            let backward = self.collect(from, &self.predecessors, self.ord[to], false);
            self.reorder(backward, forward);
        }
        self.successors[from].push(to);
        self.predecessors[to].push(from);
        self.union(from, to);
        self.arcs += 1;
        Ok(())
    }

    // Reachable set from `start` along `edges`, restricted to nodes whose
    // order key stays on the feasible side of `bound`.
    fn collect(
        &self,
        start: usize,
        edges: &[Vec<usize>],
        bound: usize,
        below: bool,
    ) -> Vec<usize> {
        let mut visited = vec![false; self.len()];
        let mut stack = vec![start];
        let mut found = Vec::new();
        visited[start] = true;
        while let Some(node) = stack.pop() {
            found.push(node);
            for &next in &edges[node] {
                let inside = if below {
                    self.ord[next] <= bound
                } else {
                    self.ord[next] >= bound
                };
                if !visited[next] && inside {
                    visited[next] = true;
                    stack.push(next);
                }
            }
        }
        found
    }

    // Reassigns the order keys held by B ∪ F so that all of B (ending in
    // `from`) precedes all of F (starting at `to`), preserving the relative
    // order inside each set. Nodes outside the region keep their keys, so
    // consistency with untouched arcs is preserved.
    fn reorder(&mut self, mut backward: Vec<usize>, mut forward: Vec<usize>) {
        backward.sort_unstable_by_key(|&v| self.ord[v]);
        forward.sort_unstable_by_key(|&v| self.ord[v]);
        let mut keys: Vec<usize> = backward
            .iter()
            .chain(forward.iter())
            .map(|&v| self.ord[v])
            .collect();
        keys.sort_unstable();
        for (node, key) in backward.iter().chain(forward.iter()).zip(keys) {
            self.ord[*node] = key;
        }
    }
}
