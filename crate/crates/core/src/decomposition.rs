//! Rooted tree decompositions and the adhesion / margin / component operators.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::forest::{Node, RootedForest};
use crate::graph::{Graph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("{bags} bags given for {nodes} forest nodes")]
    BagCountMismatch { bags: usize, nodes: usize },
    #[error("bag of node {node} contains vertex {vertex} outside the graph")]
    VertexOutOfRange { node: Node, vertex: Vertex },
    #[error("unknown decomposition node {0}")]
    UnknownNode(Node),
    #[error("margins do not partition the vertex set: {0}")]
    NotAPartition(String),
    #[error("decomposition is invalid: {0}")]
    Invalid(Violation),
}

/// A reason why a bag assignment fails to be a tree decomposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    EmptyBag(Node),
    UncoveredEdge(Vertex, Vertex),
    MissingVertex(Vertex),
    DisconnectedVertex(Vertex),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyBag(x) => write!(f, "bag of node {x} is empty"),
            Violation::UncoveredEdge(u, v) => write!(f, "(T1) edge {u}-{v} is not covered by any bag"),
            Violation::MissingVertex(v) => write!(f, "(T2) vertex {v} occurs in no bag"),
            Violation::DisconnectedVertex(v) => {
                write!(f, "(T2) nodes containing vertex {v} are not connected")
            }
        }
    }
}

/// A rooted forest with a bag of graph vertices at every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition<'g> {
    graph: &'g Graph,
    forest: RootedForest,
    bags: Vec<Vec<Vertex>>,
}

impl<'g> TreeDecomposition<'g> {
    /// Structural construction: bags are sorted and deduplicated, vertices range-checked.
    /// (T1)/(T2) are not enforced here; see [`TreeDecomposition::validate`].
    pub fn new(
        graph: &'g Graph,
        forest: RootedForest,
        bags: Vec<Vec<Vertex>>,
    ) -> Result<Self, DecompositionError> {
        if bags.len() != forest.node_count() {
            return Err(DecompositionError::BagCountMismatch {
                bags: bags.len(),
                nodes: forest.node_count(),
            });
        }
        let mut clean = Vec::with_capacity(bags.len());
        for (i, mut bag) in bags.into_iter().enumerate() {
            if let Some(&v) = bag.iter().find(|&&v| !graph.contains_vertex(v)) {
                return Err(DecompositionError::VertexOutOfRange { node: i + 1, vertex: v });
            }
            bag.sort_unstable();
            bag.dedup();
            clean.push(bag);
        }
        Ok(TreeDecomposition {
            graph,
            forest,
            bags: clean,
        })
    }

    /// Like [`TreeDecomposition::new`] but also requires an empty validation report.
    pub fn new_valid(
        graph: &'g Graph,
        forest: RootedForest,
        bags: Vec<Vec<Vertex>>,
    ) -> Result<Self, DecompositionError> {
        let t = Self::new(graph, forest, bags)?;
        match t.validate().into_iter().next() {
            Some(v) => Err(DecompositionError::Invalid(v)),
            None => Ok(t),
        }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn forest(&self) -> &RootedForest {
        &self.forest
    }

    pub fn node_count(&self) -> usize {
        self.forest.node_count()
    }

    pub fn bag(&self, x: Node) -> &[Vertex] {
        &self.bags[x - 1]
    }

    pub fn bags(&self) -> &[Vec<Vertex>] {
        &self.bags
    }

    /// Violations of (T1), (T2) and bag nonemptiness, sorted. Empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for x in self.forest.nodes() {
            if self.bag(x).is_empty() {
                out.push(Violation::EmptyBag(x));
            }
        }
        let n = self.graph.vertex_count();
        let mut occ: Vec<Vec<Node>> = vec![Vec::new(); n];
        for x in self.forest.nodes() {
            for &v in self.bag(x) {
                occ[v - 1].push(x);
            }
        }
        for (u, v) in self.graph.edges() {
            let covered = occ[u - 1]
                .iter()
                .any(|&x| self.bag(x).binary_search(&v).is_ok());
            if !covered {
                out.push(Violation::UncoveredEdge(u, v));
            }
        }
        for v in self.graph.vertices() {
            let nodes = &occ[v - 1];
            if nodes.is_empty() {
                out.push(Violation::MissingVertex(v));
                continue;
            }
            let tops = nodes
                .iter()
                .filter(|&&x| {
                    self.forest
                        .parent(x)
                        .is_none_or(|p| self.bag(p).binary_search(&v).is_err())
                })
                .count();
            if tops != 1 {
                out.push(Violation::DisconnectedVertex(v));
            }
        }
        out.sort();
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Maximum bag size minus one; zero for the empty decomposition.
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(1).saturating_sub(1)
    }

    fn check_node(&self, x: Node) -> Result<(), DecompositionError> {
        if self.forest.contains(x) {
            Ok(())
        } else {
            Err(DecompositionError::UnknownNode(x))
        }
    }

    /// σ(x): the bag of `x` intersected with its parent's bag; empty at roots.
    pub fn adhesion(&self, x: Node) -> Result<Vec<Vertex>, DecompositionError> {
        self.check_node(x)?;
        Ok(match self.forest.parent(x) {
            None => Vec::new(),
            Some(p) => {
                let parent_bag = self.bag(p);
                self.bag(x)
                    .iter()
                    .copied()
                    .filter(|v| parent_bag.binary_search(v).is_ok())
                    .collect()
            }
        })
    }

    /// μ(x): the bag of `x` minus its adhesion.
    pub fn margin(&self, x: Node) -> Result<Vec<Vertex>, DecompositionError> {
        self.check_node(x)?;
        Ok(match self.forest.parent(x) {
            None => self.bag(x).to_vec(),
            Some(p) => {
                let parent_bag = self.bag(p);
                self.bag(x)
                    .iter()
                    .copied()
                    .filter(|v| parent_bag.binary_search(v).is_err())
                    .collect()
            }
        })
    }

    /// α(x): the union of margins over all descendants of `x`.
    pub fn component(&self, x: Node) -> Result<BTreeSet<Vertex>, DecompositionError> {
        self.check_node(x)?;
        let mut out = BTreeSet::new();
        for &y in self.forest.descendants(x) {
            out.extend(self.margin(y)?);
        }
        Ok(out)
    }

    /// α(x) for every node, indexed by `node - 1`.
    pub fn all_components(&self) -> Vec<BTreeSet<Vertex>> {
        let mut out: Vec<BTreeSet<Vertex>> = vec![BTreeSet::new(); self.node_count()];
        for x in self.forest.postorder() {
            let mut comp: BTreeSet<Vertex> = self.margin(x).unwrap().into_iter().collect();
            for &c in self.forest.children(x) {
                comp.extend(out[c - 1].iter().copied());
            }
            out[x - 1] = comp;
        }
        out
    }

    /// φ: maps each vertex to the node whose margin contains it.
    pub fn margin_map(&self) -> Result<VertexNodeMap, DecompositionError> {
        let mut owner: Vec<Option<Node>> = vec![None; self.graph.vertex_count()];
        for x in self.forest.nodes() {
            for v in self.margin(x)? {
                if let Some(y) = owner[v - 1] {
                    return Err(DecompositionError::NotAPartition(format!(
                        "vertex {v} lies in the margins of nodes {y} and {x}"
                    )));
                }
                owner[v - 1] = Some(x);
            }
        }
        let mut map = Vec::with_capacity(owner.len());
        for (i, o) in owner.into_iter().enumerate() {
            match o {
                Some(x) => map.push(x),
                None => {
                    return Err(DecompositionError::NotAPartition(format!(
                        "vertex {} lies in no margin",
                        i + 1
                    )))
                }
            }
        }
        Ok(VertexNodeMap { map })
    }
}

/// The total map sending each vertex to the node whose margin contains it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexNodeMap {
    map: Vec<Node>,
}

impl VertexNodeMap {
    pub fn node_of(&self, v: Vertex) -> Node {
        self.map[v - 1]
    }

    pub fn as_slice(&self) -> &[Node] {
        &self.map
    }

    /// Vertices mapped to `x`, ascending.
    pub fn preimage(&self, x: Node) -> Vec<Vertex> {
        (1..=self.map.len()).filter(|&v| self.map[v - 1] == x).collect()
    }
}
