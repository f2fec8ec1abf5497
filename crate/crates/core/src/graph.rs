//! Simple undirected graphs with contiguous node ids `0..n`.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// An immutable simple undirected graph.
///
/// Adjacency lists are sorted and mutually consistent; there are no
/// self-loops and no parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: usize,
}

impl Graph {
    /// Builds a graph from an edge iterator, silently skipping self-loops and
    /// duplicate pairs. Panics if an endpoint is out of range.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut b = GraphBuilder::new(n);
        for (u, v) in edges {
            b.add_edge(u, v);
        }
        b.build()
    }

    pub fn empty(n: usize) -> Self {
        GraphBuilder::new(n).build()
    }

    pub fn complete(n: usize) -> Self {
        Self::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn cycle(n: usize) -> Self {
        Self::from_edges(n, (0..n).map(|u| (u, (u + 1) % n)))
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|u| (u - 1, u)))
    }

    /// Star with one hub (node 0) and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Self::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v)))
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.adj.iter().map(Vec::len)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Relabels nodes: node `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.node_count());
        Graph::from_edges(
            self.node_count(),
            self.edges().map(|(u, v)| (perm[u], perm[v])),
        )
    }

    /// Checks every structural invariant. Graphs built through this module
    /// always pass; the check exists for tests and for external input.
    pub fn validate(&self) -> Result<()> {
        let n = self.adj.len();
        let mut half_edges = 0;
        for (u, nb) in self.adj.iter().enumerate() {
            for w in nb.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::param(format!(
                        "adjacency of {u} is unsorted or has duplicates"
                    )));
                }
            }
            for &v in nb {
                if v >= n {
                    return Err(Error::param(format!("node {v} out of range")));
                }
                if v == u {
                    return Err(Error::param(format!("self-loop at {u}")));
                }
                if self.adj[v].binary_search(&u).is_err() {
                    return Err(Error::param(format!("edge {u}-{v} is one-sided")));
                }
            }
            half_edges += nb.len();
        }
        if half_edges != 2 * self.edges {
            return Err(Error::param("edge count does not match adjacency"));
        }
        Ok(())
    }

    /// Serializes as a whitespace-separated edge list. `header` lines are
    /// written as `#` comments after the mandatory node-count line.
    pub fn to_edge_list(&self, header: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# n={} edges={}", self.node_count(), self.edge_count());
        for h in header {
            let _ = writeln!(out, "# {h}");
        }
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// Mutable adjacency used while a generator is running.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    adj: Vec<Vec<usize>>,
    edges: usize,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edges: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Adds `{u, v}` unless it is a loop or already present. Returns whether
    /// an edge was added.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        let n = self.adj.len();
        assert!(u < n && v < n, "edge {u}-{v} out of range for n={n}");
        if u == v || self.has_edge(u, v) {
            return false;
        }
        self.push_edge_unchecked(u, v);
        true
    }

    /// Adds an edge the caller knows to be new and non-loop.
    pub(crate) fn push_edge_unchecked(&mut self, u: usize, v: usize) {
        debug_assert!(u != v);
        self.adj[u].push(v);
        self.adj[v].push(u);
        self.edges += 1;
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        let Some(i) = self.adj[u].iter().position(|&x| x == v) else {
            return false;
        };
        self.adj[u].swap_remove(i);
        let j = self.adj[v].iter().position(|&x| x == u).expect("symmetric");
        self.adj[v].swap_remove(j);
        self.edges -= 1;
        true
    }

    pub fn build(mut self) -> Graph {
        for nb in &mut self.adj {
            nb.sort_unstable();
        }
        Graph {
            adj: self.adj,
            edges: self.edges,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_give_expected_shapes() {
        assert_eq!(Graph::complete(5).edge_count(), 10);
        assert_eq!(Graph::cycle(10).edge_count(), 10);
        assert_eq!(Graph::path(4).edge_count(), 3);
        assert_eq!(Graph::star(5).node_count(), 6);
        for g in [Graph::complete(5), Graph::cycle(10), Graph::star(5)] {
            g.validate().unwrap();
        }
    }

    #[test]
    fn loops_and_duplicates_are_skipped() {
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (2, 2), (1, 2)]);
        assert_eq!(g.edge_count(), 2);
        g.validate().unwrap();
    }

    #[test]
    fn remove_keeps_symmetry() {
        let mut b = GraphBuilder::new(4);
        b.add_edge(0, 1);
        b.add_edge(1, 2);
        assert!(b.remove_edge(2, 1));
        assert!(!b.remove_edge(2, 1));
        let g = b.build();
        assert_eq!(g.edge_count(), 1);
        g.validate().unwrap();
    }

    #[test]
    fn edge_list_has_header() {
        let text = Graph::path(3).to_edge_list(&["family=path".into()]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines, ["# n=3 edges=2", "# family=path", "0 1", "1 2"]);
    }
}
