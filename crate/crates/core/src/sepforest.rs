//! Separation forests, their induced decompositions, and the reduced normal form.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::decomposition::{DecompositionError, TreeDecomposition};
use crate::factorization::maximal_factorization;
use crate::forest::{ForestError, RootedForest};
use crate::graph::{Graph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SepForestError {
    #[error("forest has {nodes} nodes but the graph has {vertices} vertices")]
    SizeMismatch { nodes: usize, vertices: usize },
    #[error("edge {0}-{1} joins vertices that are not in ancestor-descendant relation")]
    UnrelatedEdge(Vertex, Vertex),
    #[error("order is not a permutation of the vertex set")]
    BadOrder,
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

/// A rooted forest on the vertex set of a graph whose ancestor-descendant
/// closure contains every edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationForest<'g> {
    graph: &'g Graph,
    forest: RootedForest,
}

impl<'g> SeparationForest<'g> {
    pub fn new(graph: &'g Graph, forest: RootedForest) -> Result<Self, SepForestError> {
        if forest.node_count() != graph.vertex_count() {
            return Err(SepForestError::SizeMismatch {
                nodes: forest.node_count(),
                vertices: graph.vertex_count(),
            });
        }
        for (u, v) in graph.edges() {
            if !forest.comparable(u, v) {
                return Err(SepForestError::UnrelatedEdge(u, v));
            }
        }
        Ok(SeparationForest { graph, forest })
    }

    pub fn from_parents(graph: &'g Graph, parents: Vec<Option<Vertex>>) -> Result<Self, SepForestError> {
        Self::new(graph, RootedForest::new(parents)?)
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn forest(&self) -> &RootedForest {
        &self.forest
    }

    pub fn into_forest(self) -> RootedForest {
        self.forest
    }

    /// Bag of every vertex in the induced decomposition, indexed by `vertex - 1`:
    /// the vertex itself plus every strict ancestor with a neighbor among its descendants.
    pub fn induced_bags(&self) -> Vec<Vec<Vertex>> {
        let f = &self.forest;
        let mut bags: Vec<Vec<Vertex>> = f.nodes().map(|u| vec![u]).collect();
        for a in f.nodes() {
            let mut marked = vec![false; f.node_count()];
            for &w in self.graph.neighbors(a) {
                if !f.is_strict_ancestor(a, w) {
                    continue;
                }
                let mut cur = w;
                while cur != a && !marked[cur - 1] {
                    marked[cur - 1] = true;
                    bags[cur - 1].push(a);
                    cur = f.parent(cur).unwrap();
                }
            }
        }
        for bag in &mut bags {
            bag.sort_unstable();
        }
        bags
    }

    /// The decomposition over this forest with the induced bags.
    pub fn induced_decomposition(&self) -> TreeDecomposition<'g> {
        TreeDecomposition::new(self.graph, self.forest.clone(), self.induced_bags())
            .expect("induced bags are well formed")
    }

    pub fn width(&self) -> usize {
        self.induced_bags()
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    /// Whether `u` has a neighbor among the descendants of `v`.
    fn sees_subtree(&self, u: Vertex, v: Vertex) -> bool {
        self.forest
            .descendants(v)
            .iter()
            .any(|&w| self.graph.has_edge(u, w))
    }

    /// Parent-child pairs `(u, v)` where `u` has no neighbor below `v`, in pre-order of `v`.
    pub fn reduction_violations(&self) -> Vec<(Vertex, Vertex)> {
        self.forest
            .preorder()
            .iter()
            .filter_map(|&v| {
                let u = self.forest.parent(v)?;
                (!self.sees_subtree(u, v)).then_some((u, v))
            })
            .collect()
    }

    pub fn is_reduced(&self) -> bool {
        self.reduction_violations().is_empty()
    }

    /// Repeatedly re-attaches the first offending child to its grandparent
    /// (or makes it a root) until the forest is reduced.
    pub fn reduce(&self) -> SeparationForest<'g> {
        let mut current = self.clone();
        while let Some((u, v)) = current.reduction_violations().into_iter().next() {
            let mut parents = current.forest.parents().to_vec();
            parents[v - 1] = current.forest.parent(u);
            current = SeparationForest {
                graph: self.graph,
                forest: RootedForest::new(parents).expect("re-attachment keeps a forest"),
            };
        }
        current
    }

    /// Vertices `u` whose descendant set induces a disconnected subgraph.
    pub fn disconnected_tree_factors(&self) -> Vec<Vertex> {
        self.forest
            .nodes()
            .filter(|&u| {
                let set: BTreeSet<Vertex> = self.forest.descendants(u).iter().copied().collect();
                !self.graph.is_connected_subset(&set)
            })
            .collect()
    }

    /// Converts a decomposition into a separation forest: each margin becomes a chain
    /// ordered by `order`, hung below the last vertex of the nearest ancestor with a
    /// nonempty margin. `order` lists all vertices, earliest first.
    pub fn from_decomposition(
        t: &TreeDecomposition<'g>,
        order: &[Vertex],
    ) -> Result<SeparationForest<'g>, SepForestError> {
        let g = t.graph();
        let n = g.vertex_count();
        let mut rank = vec![usize::MAX; n];
        if order.len() != n {
            return Err(SepForestError::BadOrder);
        }
        for (i, &v) in order.iter().enumerate() {
            if !g.contains_vertex(v) || rank[v - 1] != usize::MAX {
                return Err(SepForestError::BadOrder);
            }
            rank[v - 1] = i;
        }
        let phi = t.margin_map()?;
        let tf = t.forest();
        let mut parents: Vec<Option<Vertex>> = vec![None; n];
        // Last vertex of the chain hanging at each node, or of its nearest nonempty ancestor.
        let mut tail: Vec<Option<Vertex>> = vec![None; tf.node_count()];
        for &x in tf.preorder() {
            let mut above = tf.parent(x).and_then(|p| tail[p - 1]);
            let mut margin = phi.preimage(x);
            margin.sort_by_key(|&v| rank[v - 1]);
            for v in margin {
                parents[v - 1] = above;
                above = Some(v);
            }
            tail[x - 1] = above;
        }
        SeparationForest::from_parents(g, parents)
    }

    /// For a partition `(X, A_1, ..., A_p)` of the vertex set with no edges between
    /// distinct `A_i`, the largest number of sets `A_i` met by one context factor of
    /// fact(V \ X).
    pub fn max_parts_per_context(&self, x: &BTreeSet<Vertex>, parts: &[BTreeSet<Vertex>]) -> usize {
        let rest: BTreeSet<Vertex> = self.graph.vertices().filter(|v| !x.contains(v)).collect();
        maximal_factorization(&self.forest, &rest)
            .factors()
            .iter()
            .filter(|f| f.is_context())
            .map(|f| parts.iter().filter(|a| !a.is_disjoint(f.nodes())).count())
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f_ex_parents() -> Vec<Option<Vertex>> {
        vec![None, Some(1), Some(2), Some(2), Some(1)]
    }

    #[test]
    fn induced_bags_example() {
        let g = Graph::new(5, &[(1, 3), (1, 5), (2, 4)]).unwrap();
        let f = SeparationForest::from_parents(&g, f_ex_parents()).unwrap();
        assert_eq!(
            f.induced_bags(),
            vec![vec![1], vec![1, 2], vec![1, 3], vec![2, 4], vec![1, 5]]
        );
        assert_eq!(f.width(), 1);
        let t = f.induced_decomposition();
        assert!(t.is_valid());
        assert_eq!(t.margin_map().unwrap().as_slice(), &[1, 2, 3, 4, 5]);
    }

    #[test]
    fn star_and_clique() {
        let g = Graph::new(4, &[(1, 2), (1, 3), (1, 4)]).unwrap();
        let f = SeparationForest::from_parents(&g, vec![None, Some(1), Some(1), Some(1)]).unwrap();
        assert_eq!(f.induced_bags(), vec![vec![1], vec![1, 2], vec![1, 3], vec![1, 4]]);
        let k = Graph::complete(4);
        let f = SeparationForest::from_parents(&k, vec![None, Some(1), Some(2), Some(3)]).unwrap();
        assert_eq!(f.width(), 3);
        assert_eq!(Graph::empty(3).vertex_count(), 3);
        let e = Graph::empty(3);
        let f = SeparationForest::from_parents(&e, vec![None, Some(1), Some(2)]).unwrap();
        assert_eq!(f.width(), 0);
    }

    #[test]
    fn rejects_unrelated_edges() {
        let g = Graph::path(3);
        assert_eq!(
            SeparationForest::from_parents(&g, vec![None, Some(1), Some(1)]),
            Err(SepForestError::UnrelatedEdge(2, 3))
        );
    }

    #[test]
    fn reduce_example() {
        let g = Graph::new(3, &[(1, 2)]).unwrap();
        let f = SeparationForest::from_parents(&g, vec![None, Some(1), Some(2)]).unwrap();
        assert_eq!(f.disconnected_tree_factors(), vec![1, 2]);
        let r = f.reduce();
        assert_eq!(r.forest().parents(), &[None, Some(1), None]);
        assert!(r.is_reduced());
        assert!(r.disconnected_tree_factors().is_empty());
        assert_eq!(r.reduce(), r);
    }

    #[test]
    fn from_single_bag() {
        let g = Graph::complete(3);
        let t = TreeDecomposition::new(&g, RootedForest::new(vec![None]).unwrap(), vec![vec![1, 2, 3]])
            .unwrap();
        let f = SeparationForest::from_decomposition(&t, &[1, 2, 3]).unwrap();
        assert_eq!(f.forest().parents(), &[None, Some(1), Some(2)]);
        assert_eq!(f.width(), 2);
    }
}
