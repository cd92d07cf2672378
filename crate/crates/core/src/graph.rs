//! Simple undirected graphs over vertices `1..=n`.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

/// A graph vertex, numbered from 1.
pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("edge {0}-{1} has an endpoint outside 1..={2}")]
    OutOfRange(Vertex, Vertex, usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(Vertex, Vertex),
}

/// An undirected simple graph. Vertices are `1..=vertex_count`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<BTreeSet<Vertex>>,
    edge_count: usize,
}

impl Graph {
    pub fn new(vertex_count: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        let mut adj = vec![BTreeSet::new(); vertex_count];
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if u == 0 || v == 0 || u > vertex_count || v > vertex_count {
                return Err(GraphError::OutOfRange(u, v, vertex_count));
            }
            if !adj[u - 1].insert(v) {
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
            adj[v - 1].insert(u);
        }
        Ok(Graph {
            adj,
            edge_count: edges.len(),
        })
    }

    pub fn empty(vertex_count: usize) -> Self {
        Graph {
            adj: vec![BTreeSet::new(); vertex_count],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (1..=n)
            .flat_map(|u| (u + 1..=n).map(move |v| (u, v)))
            .collect();
        Graph::new(n, &edges).expect("complete graph is simple")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|u| (u, u + 1)).collect();
        Graph::new(n, &edges).expect("path is simple")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycles need at least three vertices");
        let mut edges: Vec<_> = (1..n).map(|u| (u, u + 1)).collect();
        edges.push((1, n));
        Graph::new(n, &edges).expect("cycle is simple")
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        1..=self.adj.len()
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        v >= 1 && v <= self.adj.len()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in self.vertices() {
            for &v in &self.adj[u - 1] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, v: Vertex) -> &BTreeSet<Vertex> {
        &self.adj[v - 1]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v - 1].len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.contains_vertex(u) && self.adj[u - 1].contains(&v)
    }

    /// Whether the subgraph induced by `set` is connected. The empty set counts as connected.
    pub fn is_connected_subset(&self, set: &BTreeSet<Vertex>) -> bool {
        let Some(&start) = set.iter().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if set.contains(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == set.len()
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<Vertex>> {
        let mut seen = vec![false; self.vertex_count()];
        let mut out = Vec::new();
        for s in self.vertices() {
            if seen[s - 1] {
                continue;
            }
            seen[s - 1] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    if !seen[w - 1] {
                        seen[w - 1] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Finds a perfect elimination ordering by repeatedly removing a simplicial
    /// vertex (smallest id first). Returns `None` when the graph is not chordal.
    pub fn perfect_elimination_order(&self) -> Option<Vec<Vertex>> {
        let mut alive: BTreeSet<Vertex> = self.vertices().collect();
        let mut order = Vec::with_capacity(alive.len());
        while !alive.is_empty() {
            let simplicial = alive.iter().copied().find(|&v| {
                let nbrs: Vec<_> = self
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|w| alive.contains(w))
                    .collect();
                nbrs.iter().enumerate().all(|(i, &a)| {
                    nbrs[i + 1..].iter().all(|&b| self.has_edge(a, b))
                })
            })?;
            alive.remove(&simplicial);
            order.push(simplicial);
        }
        Some(order)
    }

    pub fn is_chordal(&self) -> bool {
        self.perfect_elimination_order().is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_edges() {
        assert_eq!(Graph::new(2, &[(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert_eq!(Graph::new(2, &[(1, 3)]), Err(GraphError::OutOfRange(1, 3, 2)));
        assert_eq!(
            Graph::new(2, &[(1, 2), (2, 1)]),
            Err(GraphError::DuplicateEdge(1, 2))
        );
    }

    #[test]
    fn edges_are_sorted_pairs() {
        let g = Graph::new(3, &[(3, 1), (2, 1)]).unwrap();
        assert_eq!(g.edges(), vec![(1, 2), (1, 3)]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn connectivity_of_subsets() {
        let g = Graph::path(4);
        assert!(g.is_connected_subset(&BTreeSet::from([1, 2, 3])));
        assert!(!g.is_connected_subset(&BTreeSet::from([1, 3])));
        assert!(g.is_connected_subset(&BTreeSet::new()));
        assert_eq!(Graph::empty(2).components(), vec![vec![1], vec![2]]);
    }

    #[test]
    fn chordality() {
        assert!(Graph::complete(4).is_chordal());
        assert!(Graph::path(5).is_chordal());
        assert!(!Graph::cycle(4).is_chordal());
        assert!(!Graph::cycle(5).is_chordal());
        assert!(Graph::empty(0).is_chordal());
    }
}
