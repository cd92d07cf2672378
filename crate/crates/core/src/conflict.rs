//! Stains, the conflict graph, its coloring, and the witness encoding of a separation forest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::dealternation::Bounds;
use crate::decomposition::{TreeDecomposition, VertexNodeMap};
use crate::factorization::maximal_factorization;
use crate::forest::{Node, RootedForest};
use crate::graph::{Graph, Vertex};
use crate::io::ParseError;
use crate::sepforest::{SepForestError, SeparationForest};

pub type Color = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConflictError {
    #[error("decomposition is invalid: {0}")]
    InvalidDecomposition(String),
    #[error("decomposition and forest are over different graphs")]
    GraphMismatch,
    #[error("no path in the decomposition between the nodes of vertex {0} and its child {1}")]
    NoPath(Vertex, Vertex),
    #[error("coloring has {got} entries for {expected} vertices")]
    ColoringSize { got: usize, expected: usize },
    #[error("coloring is not proper: vertices {0} and {1} have overlapping stains and the same color")]
    ImproperColoring(Vertex, Vertex),
    #[error("witness describes {got} vertices, graph has {expected}")]
    WitnessSize { got: usize, expected: usize },
    #[error("vertex {0} is not a root but has no parent color")]
    MissingParentColor(Vertex),
    #[error("edge set of color {0} names node {1} which has no parent edge in the decomposition")]
    BadEdge(Color, Node),
    #[error("no vertex of color {color} shares a component with the node of vertex {vertex}")]
    NoParent { vertex: Vertex, color: Color },
    #[error("several vertices of color {color} share a component with the node of vertex {vertex}")]
    AmbiguousParent { vertex: Vertex, color: Color },
    #[error("decoded parent relation is not a forest")]
    NotAForest,
    #[error("decoded forest is not a separation forest: {0}")]
    NotSeparating(String),
}

fn phi_of(t: &TreeDecomposition<'_>) -> Result<VertexNodeMap, ConflictError> {
    if let Some(v) = t.validate().first() {
        return Err(ConflictError::InvalidDecomposition(v.to_string()));
    }
    t.margin_map()
        .map_err(|e| ConflictError::InvalidDecomposition(e.to_string()))
}

/// The subtree of a decomposition spanned by φ(u) and φ(v) for the children v of u.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stain {
    pub owner: Vertex,
    pub nodes: BTreeSet<Node>,
    /// Decomposition edges, each named by its child endpoint.
    pub edges: BTreeSet<Node>,
}

impl Stain {
    /// The node of the stain closest to the root of the decomposition.
    pub fn top(&self, t: &RootedForest) -> Node {
        *self.nodes.iter().min_by_key(|&&x| (t.depth(x), x)).unwrap()
    }
}

fn stain_with(
    tf: &RootedForest,
    f: &SeparationForest<'_>,
    phi: &VertexNodeMap,
    u: Vertex,
) -> Result<Stain, ConflictError> {
    let home = phi.node_of(u);
    let mut nodes = BTreeSet::from([home]);
    let mut edges = BTreeSet::new();
    for &v in f.forest().children(u) {
        let path = tf
            .path(home, phi.node_of(v))
            .ok_or(ConflictError::NoPath(u, v))?;
        for pair in path.windows(2) {
            let child = if tf.parent(pair[0]) == Some(pair[1]) { pair[0] } else { pair[1] };
            edges.insert(child);
        }
        nodes.extend(path);
    }
    Ok(Stain {
        owner: u,
        nodes,
        edges,
    })
}

fn check_graphs(t: &TreeDecomposition<'_>, f: &SeparationForest<'_>) -> Result<(), ConflictError> {
    if t.graph() != f.graph() {
        return Err(ConflictError::GraphMismatch);
    }
    Ok(())
}

pub fn stain(
    t: &TreeDecomposition<'_>,
    f: &SeparationForest<'_>,
    u: Vertex,
) -> Result<Stain, ConflictError> {
    check_graphs(t, f)?;
    let phi = phi_of(t)?;
    stain_with(t.forest(), f, &phi, u)
}

/// Stains of all vertices, indexed by `vertex - 1`.
pub fn stains(t: &TreeDecomposition<'_>, f: &SeparationForest<'_>) -> Result<Vec<Stain>, ConflictError> {
    check_graphs(t, f)?;
    let phi = phi_of(t)?;
    f.graph()
        .vertices()
        .map(|u| stain_with(t.forest(), f, &phi, u))
        .collect()
}

/// H(t, F): vertices adjacent iff their stains share a node.
pub fn conflict_graph(t: &TreeDecomposition<'_>, f: &SeparationForest<'_>) -> Result<Graph, ConflictError> {
    let all = stains(t, f)?;
    Ok(intersection_graph(&all))
}

fn intersection_graph(all: &[Stain]) -> Graph {
    let mut edges = Vec::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if !all[i].nodes.is_disjoint(&all[j].nodes) {
                edges.push((i + 1, j + 1));
            }
        }
    }
    Graph::new(all.len(), &edges).expect("stain pairs are distinct")
}

/// Number of stains containing each decomposition node, indexed by `node - 1`.
pub fn node_loads(t: &TreeDecomposition<'_>, f: &SeparationForest<'_>) -> Result<Vec<usize>, ConflictError> {
    let mut load = vec![0; t.node_count()];
    for s in stains(t, f)? {
        for x in s.nodes {
            load[x - 1] += 1;
        }
    }
    Ok(load)
}

pub fn max_stain_load(t: &TreeDecomposition<'_>, f: &SeparationForest<'_>) -> Result<usize, ConflictError> {
    Ok(node_loads(t, f)?.into_iter().max().unwrap_or(0))
}

/// Greedy coloring of H(t, F) in order of stain-top depth, then vertex id.
/// Colors are `0..`; the number used never exceeds the maximum stain load.
pub fn color_conflict_graph(
    t: &TreeDecomposition<'_>,
    f: &SeparationForest<'_>,
) -> Result<Vec<Color>, ConflictError> {
    let all = stains(t, f)?;
    let h = intersection_graph(&all);
    let tf = t.forest();
    let mut order: Vec<Vertex> = h.vertices().collect();
    order.sort_by_key(|&u| (tf.depth(all[u - 1].top(tf)), u));
    let mut color: Vec<Option<Color>> = vec![None; h.vertex_count()];
    for u in order {
        let taken: BTreeSet<Color> = h.neighbors(u).iter().filter_map(|&w| color[w - 1]).collect();
        color[u - 1] = Some((0..).find(|c| !taken.contains(c)).unwrap());
    }
    Ok(color.into_iter().map(Option::unwrap).collect())
}

/// Whether `coloring` gives distinct colors to the endpoints of every edge of `h`.
pub fn is_proper(h: &Graph, coloring: &[Color]) -> bool {
    h.edges().iter().all(|&(a, b)| coloring[a - 1] != coloring[b - 1])
}

pub fn colors_used(coloring: &[Color]) -> usize {
    coloring.iter().collect::<BTreeSet<_>>().len()
}

/// Guessed data from which a separation forest is decoded against a decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictWitness {
    /// λ, indexed by `vertex - 1`.
    pub coloring: Vec<Color>,
    pub is_root: Vec<bool>,
    /// Color of the parent of each non-root vertex.
    pub parent_color: Vec<Option<Color>>,
    /// M_c as the set of decomposition nodes whose parent edge lies in M_c; colors
    /// with no edges are absent.
    pub color_edges: BTreeMap<Color, BTreeSet<Node>>,
}

pub fn encode_witness(
    t: &TreeDecomposition<'_>,
    f: &SeparationForest<'_>,
    coloring: &[Color],
) -> Result<ConflictWitness, ConflictError> {
    let n = f.graph().vertex_count();
    if coloring.len() != n {
        return Err(ConflictError::ColoringSize {
            got: coloring.len(),
            expected: n,
        });
    }
    let all = stains(t, f)?;
    for i in 0..n {
        for j in i + 1..n {
            if coloring[i] == coloring[j] && !all[i].nodes.is_disjoint(&all[j].nodes) {
                return Err(ConflictError::ImproperColoring(i + 1, j + 1));
            }
        }
    }
    let forest = f.forest();
    let mut color_edges: BTreeMap<Color, BTreeSet<Node>> = BTreeMap::new();
    for s in all.iter().filter(|s| !s.edges.is_empty()) {
        color_edges
            .entry(coloring[s.owner - 1])
            .or_default()
            .extend(s.edges.iter().copied());
    }
    Ok(ConflictWitness {
        coloring: coloring.to_vec(),
        is_root: forest.nodes().map(|v| forest.is_root(v)).collect(),
        parent_color: forest
            .nodes()
            .map(|v| forest.parent(v).map(|p| coloring[p - 1]))
            .collect(),
        color_edges,
    })
}

/// Minimal union-find over decomposition nodes.
struct Components {
    parent: Vec<usize>,
}

impl Components {
    fn new(n: usize) -> Self {
        Components {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut cur = x;
        while self.parent[cur] != r {
            let next = self.parent[cur];
            self.parent[cur] = r;
            cur = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Rebuilds the separation forest: `v`'s parent is the unique vertex `u` with
/// λ(u) = parent_color(v) whose node lies in the same component of M_c as φ(v).
pub fn decode_witness<'g>(
    t: &TreeDecomposition<'g>,
    w: &ConflictWitness,
) -> Result<SeparationForest<'g>, ConflictError> {
    let g = t.graph();
    let n = g.vertex_count();
    for len in [w.coloring.len(), w.is_root.len(), w.parent_color.len()] {
        if len != n {
            return Err(ConflictError::WitnessSize { got: len, expected: n });
        }
    }
    let phi = phi_of(t)?;
    let tf = t.forest();
    let mut by_color: BTreeMap<Color, Vec<Vertex>> = BTreeMap::new();
    for v in g.vertices() {
        by_color.entry(w.coloring[v - 1]).or_default().push(v);
    }
    let mut comps: BTreeMap<Color, (Components, BTreeSet<Node>)> = BTreeMap::new();
    let colors: BTreeSet<Color> = by_color.keys().chain(w.color_edges.keys()).copied().collect();
    for c in colors {
        let mut uf = Components::new(t.node_count());
        let mut touched: BTreeSet<Node> = by_color
            .get(&c)
            .map(|vs| vs.iter().map(|&v| phi.node_of(v)).collect())
            .unwrap_or_default();
        for &x in w.color_edges.get(&c).into_iter().flatten() {
            let p = tf
                .contains(x)
                .then(|| tf.parent(x))
                .flatten()
                .ok_or(ConflictError::BadEdge(c, x))?;
            uf.union(x - 1, p - 1);
            touched.insert(x);
            touched.insert(p);
        }
        comps.insert(c, (uf, touched));
    }
    let mut parents: Vec<Option<Vertex>> = vec![None; n];
    for v in g.vertices() {
        if w.is_root[v - 1] {
            continue;
        }
        let c = w.parent_color[v - 1].ok_or(ConflictError::MissingParentColor(v))?;
        let no_parent = ConflictError::NoParent { vertex: v, color: c };
        let (uf, touched) = comps.get_mut(&c).ok_or(no_parent.clone())?;
        let home = phi.node_of(v);
        if !touched.contains(&home) {
            return Err(no_parent);
        }
        let target = uf.find(home - 1);
        let candidates: Vec<Vertex> = by_color
            .get(&c)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&u| uf.find(phi.node_of(u) - 1) == target)
            .collect();
        match candidates.as_slice() {
            [] => return Err(no_parent),
            [u] => parents[v - 1] = Some(*u),
            _ => return Err(ConflictError::AmbiguousParent { vertex: v, color: c }),
        }
    }
    let forest = RootedForest::new(parents).map_err(|_| ConflictError::NotAForest)?;
    SeparationForest::new(g, forest).map_err(|e: SepForestError| ConflictError::NotSeparating(e.to_string()))
}

/// Writes a witness: `w <n>`, one `<v> <color> <root:0|1> <parent_color|->` line per
/// vertex, then `e <c> <node>` per M_c edge.
pub fn write_witness(w: &ConflictWitness) -> String {
    let mut out = format!("w {}\n", w.coloring.len());
    for i in 0..w.coloring.len() {
        let pc = w.parent_color[i].map_or("-".to_string(), |c| c.to_string());
        let _ = writeln!(out, "{} {} {} {}", i + 1, w.coloring[i], u8::from(w.is_root[i]), pc);
    }
    for (c, nodes) in &w.color_edges {
        for x in nodes {
            let _ = writeln!(out, "e {c} {x}");
        }
    }
    out
}

pub fn parse_witness(text: &str) -> Result<ConflictWitness, ParseError> {
    let mut n: Option<usize> = None;
    let mut rows: Vec<Option<(Color, bool, Option<Color>)>> = Vec::new();
    let mut color_edges: BTreeMap<Color, BTreeSet<Node>> = BTreeMap::new();
    let num = |no: usize, s: &str| {
        s.parse::<usize>()
            .map_err(|_| ParseError::new(no, format!("expected a nonnegative integer, found {s:?}")))
    };
    let mut last = 0;
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() || fields[0] == "c" {
            continue;
        }
        last = no;
        match fields[0] {
            "w" => {
                if n.is_some() || fields.len() != 2 {
                    return Err(ParseError::new(no, "header must be a single \"w <n>\" line"));
                }
                let count = num(no, fields[1])?;
                n = Some(count);
                rows = vec![None; count];
            }
            "e" => {
                if fields.len() != 3 {
                    return Err(ParseError::new(no, "edge line must be \"e <color> <node>\""));
                }
                color_edges
                    .entry(num(no, fields[1])?)
                    .or_default()
                    .insert(num(no, fields[2])?);
            }
            _ => {
                let Some(count) = n else {
                    return Err(ParseError::new(no, "vertex line before header"));
                };
                if fields.len() != 4 {
                    return Err(ParseError::new(no, "vertex line must be \"<v> <color> <root> <parent_color|->\""));
                }
                let v = num(no, fields[0])?;
                if v == 0 || v > count {
                    return Err(ParseError::new(no, format!("vertex {v} outside 1..={count}")));
                }
                let root = match fields[2] {
                    "0" => false,
                    "1" => true,
                    other => return Err(ParseError::new(no, format!("root flag must be 0 or 1, found {other:?}"))),
                };
                let pc = if fields[3] == "-" { None } else { Some(num(no, fields[3])?) };
                if rows[v - 1].is_some() {
                    return Err(ParseError::new(no, format!("vertex {v} listed twice")));
                }
                rows[v - 1] = Some((num(no, fields[1])?, root, pc));
            }
        }
    }
    if n.is_none() {
        return Err(ParseError::new(last.max(1), "missing header \"w <n>\""));
    }
    let mut w = ConflictWitness {
        coloring: Vec::new(),
        is_root: Vec::new(),
        parent_color: Vec::new(),
        color_edges,
    };
    for (i, r) in rows.into_iter().enumerate() {
        let (c, root, pc) = r.ok_or_else(|| ParseError::new(last, format!("vertex {} missing", i + 1)))?;
        w.coloring.push(c);
        w.is_root.push(root);
        w.parent_color.push(pc);
    }
    Ok(w)
}

/// Stain accounting at one decomposition node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewContextReport {
    pub node: Node,
    /// Stains through the node whose owner is outside the node's margin.
    pub passing: usize,
    /// Context factors of the factorization refining the partition
    /// (α(y_1), …, α(y_p), μ(x), V \ α(x)).
    pub context_factors: usize,
    /// g(k)·f(k) + 2f(k) + k.
    pub bound: usize,
}

impl FewContextReport {
    pub fn holds(&self) -> bool {
        self.passing <= self.context_factors && self.context_factors <= self.bound
    }
}

pub fn few_context_report(
    t: &TreeDecomposition<'_>,
    f: &SeparationForest<'_>,
    k: usize,
) -> Result<Vec<FewContextReport>, ConflictError> {
    let all = stains(t, f)?;
    let comps = t.all_components();
    let b = Bounds::new(k);
    let bound = b.g() * b.f() + 2 * b.f() + k;
    let g = f.graph();
    let mut out = Vec::new();
    for x in t.forest().nodes() {
        let margin: BTreeSet<Vertex> = t.margin(x).unwrap().into_iter().collect();
        let outside: BTreeSet<Vertex> = g.vertices().filter(|v| !comps[x - 1].contains(v)).collect();
        let mut parts: Vec<BTreeSet<Vertex>> = t
            .forest()
            .children(x)
            .iter()
            .map(|&y| comps[y - 1].clone())
            .collect();
        parts.push(margin.clone());
        parts.push(outside);
        let context_factors = parts
            .iter()
            .map(|p| maximal_factorization(f.forest(), p).context_count())
            .sum();
        let passing = all
            .iter()
            .filter(|s| s.nodes.contains(&x) && !margin.contains(&s.owner))
            .count();
        out.push(FewContextReport {
            node: x,
            passing,
            context_factors,
            bound,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> Graph {
        Graph::new(5, &[(1, 3), (1, 5), (2, 4)]).unwrap()
    }

    #[test]
    fn stains_on_the_induced_decomposition() {
        let g = example();
        let f = SeparationForest::from_parents(&g, vec![None, Some(1), Some(2), Some(2), Some(1)]).unwrap();
        let t = f.induced_decomposition();
        let s1 = stain(&t, &f, 1).unwrap();
        assert_eq!(s1.nodes, BTreeSet::from([1, 2, 5]));
        assert_eq!(s1.edges, BTreeSet::from([2, 5]));
        let s3 = stain(&t, &f, 3).unwrap();
        assert_eq!(s3.nodes, BTreeSet::from([3]));
        let h = conflict_graph(&t, &f).unwrap();
        assert!(h.has_edge(1, 2) && h.has_edge(1, 5));
        assert!(h.is_chordal());
        let lambda = color_conflict_graph(&t, &f).unwrap();
        assert!(is_proper(&h, &lambda));
        assert!(colors_used(&lambda) <= max_stain_load(&t, &f).unwrap());
    }

    #[test]
    fn single_vertex_round_trip() {
        let g = Graph::empty(1);
        let f = SeparationForest::from_parents(&g, vec![None]).unwrap();
        let t = f.induced_decomposition();
        let lambda = color_conflict_graph(&t, &f).unwrap();
        assert_eq!(lambda, vec![0]);
        let w = encode_witness(&t, &f, &lambda).unwrap();
        assert_eq!(w.is_root, vec![true]);
        assert_eq!(decode_witness(&t, &w).unwrap(), f);
        assert_eq!(max_stain_load(&t, &f).unwrap(), 1);
    }

    #[test]
    fn witness_text_round_trip() {
        let g = example();
        let f = SeparationForest::from_parents(&g, vec![None, Some(1), Some(2), Some(2), Some(1)]).unwrap();
        let t = f.induced_decomposition();
        let lambda = color_conflict_graph(&t, &f).unwrap();
        let w = encode_witness(&t, &f, &lambda).unwrap();
        let text = write_witness(&w);
        assert_eq!(parse_witness(&text).unwrap(), w);
        assert_eq!(decode_witness(&t, &w).unwrap(), f);
    }

    #[test]
    fn improper_coloring_is_rejected() {
        let g = example();
        let f = SeparationForest::from_parents(&g, vec![None, Some(1), Some(2), Some(2), Some(1)]).unwrap();
        let t = f.induced_decomposition();
        assert_eq!(
            encode_witness(&t, &f, &[0, 0, 1, 1, 1]),
            Err(ConflictError::ImproperColoring(1, 2))
        );
    }
}
