//! Compact undirected graph used by the metric, robustness and ERGM code.
//!
//! Nodes are `0..n`. Neighbour lists are kept sorted; each neighbour carries
//! an edge weight (1.0 for unweighted graphs). Self-loops and parallel edges
//! are not representable.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    wts: Vec<Vec<f64>>,
    m: usize,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], wts: vec![Vec::new(); n], m: 0 }
    }

    /// Unit-weight graph from an edge list. Self-loops and repeated edges are
    /// ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v, 1.0);
        }
        g
    }

    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut g = Self::new(n);
        for &(u, v, w) in edges {
            g.add_edge(u, v, w);
        }
        g
    }

    /// Adds `u -- v`; returns false for self-loops and existing edges.
    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> bool {
        if u == v {
            return false;
        }
        match self.adj[u].binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[u].insert(pos, v);
                self.wts[u].insert(pos, w);
                let pos = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(pos, u);
                self.wts[v].insert(pos, w);
                self.m += 1;
                true
            }
        }
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        match self.adj[u].binary_search(&v) {
            Ok(pos) => {
                self.adj[u].remove(pos);
                self.wts[u].remove(pos);
                let pos = self.adj[v].binary_search(&u).unwrap();
                self.adj[v].remove(pos);
                self.wts[v].remove(pos);
                self.m -= 1;
                true
            }
            Err(_) => false,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn neighbor_weights(&self, u: usize) -> &[f64] {
        &self.wts[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, ns)| ns.iter().copied().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// Connected components, each sorted ascending, ordered by their
    /// smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        self.components_masked(&vec![false; self.node_count()])
    }

    /// Components of the graph with the `removed` nodes deleted.
    pub fn components_masked(&self, removed: &[bool]) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = removed.to_vec();
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            queue.push_back(s);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Nodes of a maximum-cardinality component; ties go to the component
    /// containing the smallest node id. Empty for the empty graph.
    pub fn largest_component(&self) -> Vec<usize> {
        largest_of(self.components())
    }

    /// Size of the largest component after deleting `removed` nodes.
    pub fn largest_component_size_masked(&self, removed: &[bool]) -> usize {
        self.components_masked(removed).iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Subgraph induced by `nodes` (which must be distinct), relabelled in
    /// the given order.
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.node_count()];
        for (i, &u) in nodes.iter().enumerate() {
            index[u] = i;
        }
        let mut g = Graph::new(nodes.len());
        for (i, &u) in nodes.iter().enumerate() {
            for (&v, &w) in self.adj[u].iter().zip(&self.wts[u]) {
                let j = index[v];
                if j != usize::MAX && i < j {
                    g.add_edge(i, j, w);
                }
            }
        }
        g
    }

    /// Unweighted BFS distances from `s`; `usize::MAX` marks unreachable.
    pub fn bfs_distances(&self, s: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = VecDeque::new();
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

pub(crate) fn largest_of(components: Vec<Vec<usize>>) -> Vec<usize> {
    let mut best: Option<Vec<usize>> = None;
    for c in components {
        // components arrive ordered by smallest member, so strict > keeps the
        // earliest on ties
        if best.as_ref().is_none_or(|b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    best.unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_and_lcc() {
        // sizes {3, 2, 1}
        let g = Graph::from_edges(6, &[(3, 4), (0, 5), (5, 2)]);
        let comps = g.components();
        assert_eq!(comps, vec![vec![0, 2, 5], vec![1], vec![3, 4]]);
        assert_eq!(g.largest_component(), vec![0, 2, 5]);
    }

    #[test]
    fn lcc_tie_prefers_smallest_id() {
        let g = Graph::from_edges(4, &[(2, 3), (0, 1)]);
        assert_eq!(g.largest_component(), vec![0, 1]);
        assert!(Graph::new(0).largest_component().is_empty());
    }

    #[test]
    fn edge_bookkeeping() {
        let mut g = Graph::new(3);
        assert!(g.add_edge(0, 1, 2.0));
        assert!(!g.add_edge(1, 0, 2.0));
        assert!(!g.add_edge(2, 2, 1.0));
        assert_eq!(g.edge_count(), 1);
        assert!(g.remove_edge(1, 0));
        assert_eq!(g.edge_count(), 0);
        assert!(!g.has_edge(0, 1));
    }

    #[test]
    fn induced_keeps_weights() {
        let g = Graph::from_weighted_edges(4, &[(0, 1, 3.0), (1, 2, 5.0), (2, 3, 1.0)]);
        let h = g.induced(&[2, 1]);
        assert_eq!(h.edge_count(), 1);
        assert_eq!(h.neighbor_weights(0), &[5.0]);
    }
}
