//! Generators for the exhaustive and sampled test corpora.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::decomposition::TreeDecomposition;
use crate::forest::{Node, RootedForest};
use crate::graph::{Graph, Vertex};
use crate::oracle::{decomposition_from_order, optimal_elimination_order};

fn edge_code(n: usize, adj: &[u32], perm: &[usize]) -> u64 {
    // perm[new] = old
    let mut code = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            code <<= 1;
            if adj[perm[i]] >> perm[j] & 1 == 1 {
                code |= 1;
            }
        }
    }
    code
}

fn permutations_within(cells: &[Vec<usize>], out: &mut Vec<Vec<usize>>) {
    let mut current: Vec<Vec<usize>> = vec![Vec::new()];
    for cell in cells {
        let mut perms_of_cell: Vec<Vec<usize>> = Vec::new();
        let mut c = cell.clone();
        c.sort_unstable();
        heap_permutations(&mut c, cell.len(), &mut perms_of_cell);
        let mut next = Vec::with_capacity(current.len() * perms_of_cell.len());
        for prefix in &current {
            for p in &perms_of_cell {
                let mut v = prefix.clone();
                v.extend_from_slice(p);
                next.push(v);
            }
        }
        current = next;
    }
    out.extend(current);
}

fn heap_permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permutations(items, k - 1, out);
        let j = if k.is_multiple_of(2) { i } else { 0 };
        items.swap(j, k - 1);
    }
    items.truncate(items.len());
}

/// A canonical code for a graph on at most 11 vertices: the smallest upper-triangle
/// adjacency code over vertex orders that sort vertices by a degree invariant.
pub fn canonical_code(g: &Graph) -> u64 {
    let n = g.vertex_count();
    assert!(n <= 11, "canonical codes fit graphs with at most 11 vertices");
    let adj: Vec<u32> = g
        .vertices()
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << (w - 1)))
        .collect();
    let invariant = |v: usize| {
        let mut nd: Vec<usize> = g.neighbors(v + 1).iter().map(|&w| g.degree(w)).collect();
        nd.sort_unstable();
        (g.degree(v + 1), nd)
    };
    let mut groups: BTreeMap<(usize, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        groups.entry(invariant(v)).or_default().push(v);
    }
    let cells: Vec<Vec<usize>> = groups.into_values().collect();
    let mut perms = Vec::new();
    permutations_within(&cells, &mut perms);
    perms
        .iter()
        .map(|p| edge_code(n, &adj, p))
        .min()
        .unwrap_or(0)
}

/// All graphs with exactly `n` vertices, one per isomorphism class.
pub fn graphs_with_vertices(n: usize) -> Vec<Graph> {
    let mut level: Vec<Graph> = vec![Graph::empty(0)];
    for size in 1..=n {
        let mut seen = BTreeSet::new();
        let mut next = Vec::new();
        for g in &level {
            let base = g.edges();
            for mask in 0u32..(1 << (size - 1)) {
                let mut edges = base.clone();
                edges.extend((0..size - 1).filter(|b| mask >> b & 1 == 1).map(|b| (b + 1, size)));
                let h = Graph::new(size, &edges).unwrap();
                if seen.insert(canonical_code(&h)) {
                    next.push(h);
                }
            }
        }
        level = next;
    }
    level
}

/// All graphs with at most `n` vertices up to isomorphism, including the empty graph.
pub fn graphs_up_to(n: usize) -> Vec<Graph> {
    (0..=n).flat_map(graphs_with_vertices).collect()
}

fn ahu_code(f: &RootedForest, x: Node) -> String {
    let mut kids: Vec<String> = f.children(x).iter().map(|&c| ahu_code(f, c)).collect();
    kids.sort();
    format!("({})", kids.concat())
}

/// Canonical string of an unlabeled rooted forest.
pub fn forest_code(f: &RootedForest) -> String {
    let mut trees: Vec<String> = f.roots().iter().map(|&r| ahu_code(f, r)).collect();
    trees.sort();
    trees.concat()
}

/// All rooted forests with exactly `n` nodes up to isomorphism, each labelled so
/// that parents precede children.
pub fn forests_with_nodes(n: usize) -> Vec<RootedForest> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut parents: Vec<Option<Node>> = vec![None; n];
    loop {
        let f = RootedForest::new(parents.clone()).unwrap();
        if seen.insert(forest_code(&f)) {
            out.push(f);
        }
        // Odometer over parent[i] in {None, 1..i}.
        let mut i = n;
        loop {
            if i <= 1 {
                return out;
            }
            i -= 1;
            let next = parents[i].map_or(1, |p| p + 1);
            if next <= i {
                parents[i] = Some(next);
                break;
            }
            parents[i] = None;
        }
    }
}

/// All rooted forests with 1 to `n` nodes up to isomorphism.
pub fn forests_up_to(n: usize) -> Vec<RootedForest> {
    (1..=n).flat_map(forests_with_nodes).collect()
}

/// A random forest on `n` nodes with shuffled labels.
pub fn random_forest<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RootedForest {
    let mut label: Vec<Node> = (1..=n).collect();
    label.shuffle(rng);
    let mut parents = vec![None; n];
    for i in 1..n {
        let p = rng.gen_range(0..=i);
        if p < i {
            parents[label[i] - 1] = Some(label[p]);
        }
    }
    if n > 0 && rng.gen_bool(0.5) {
        parents[label[0] - 1] = None;
    }
    RootedForest::new(parents).unwrap()
}

/// A random graph on `n` vertices with edge probability `p`.
pub fn random_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, &edges).unwrap()
}

fn rebuild<'g>(g: &'g Graph, parents: Vec<Option<Node>>, bags: Vec<Vec<Vertex>>) -> TreeDecomposition<'g> {
    TreeDecomposition::new(g, RootedForest::new(parents).unwrap(), bags).unwrap()
}

/// Re-roots every tree of a decomposition at its highest-numbered node.
pub fn reroot<'g>(t: &TreeDecomposition<'g>) -> TreeDecomposition<'g> {
    let f = t.forest();
    let mut parents = f.parents().to_vec();
    for &r in f.roots() {
        let new_root = *f.descendants(r).iter().max().unwrap();
        let mut path = vec![new_root];
        while let Some(p) = f.parent(*path.last().unwrap()) {
            path.push(p);
        }
        parents[new_root - 1] = None;
        for pair in path.windows(2) {
            parents[pair[1] - 1] = Some(pair[0]);
        }
    }
    rebuild(t.graph(), parents, t.bags().to_vec())
}

/// Adds `copies` leaf children with the same bag below every node.
pub fn pad_leaves<'g>(t: &TreeDecomposition<'g>, copies: usize) -> TreeDecomposition<'g> {
    let n = t.node_count();
    let mut parents = t.forest().parents().to_vec();
    let mut bags = t.bags().to_vec();
    for x in 1..=n {
        for _ in 0..copies {
            parents.push(Some(x));
            bags.push(t.bag(x).to_vec());
        }
    }
    rebuild(t.graph(), parents, bags)
}

/// Inserts a copy of each node's bag between the node and its parent, and a copy of
/// each root above it.
pub fn subdivide<'g>(t: &TreeDecomposition<'g>) -> TreeDecomposition<'g> {
    let n = t.node_count();
    let mut parents = t.forest().parents().to_vec();
    let mut bags = t.bags().to_vec();
    for x in 1..=n {
        let id = parents.len() + 1;
        parents.push(t.forest().parent(x));
        bags.push(t.bag(x).to_vec());
        parents[x - 1] = Some(id);
    }
    rebuild(t.graph(), parents, bags)
}

/// The decomposition shapes used by the property suites: optimum, re-rooted,
/// subdivided, padded, and decompositions of a few fixed elimination orders,
/// restricted to width at most `max_width` and deduplicated.
pub fn decomposition_shapes(g: &Graph, max_width: usize) -> Vec<TreeDecomposition<'_>> {
    let mut out: Vec<TreeDecomposition<'_>> = Vec::new();
    let Ok(opt) = optimal_elimination_order(g) else {
        return out;
    };
    let optimum = decomposition_from_order(g, &opt.order);
    let ascending: Vec<Vertex> = g.vertices().collect();
    let descending: Vec<Vertex> = (1..=g.vertex_count()).rev().collect();
    let mut reversed = opt.order.clone();
    reversed.reverse();
    let candidates = vec![
        reroot(&optimum),
        subdivide(&optimum),
        pad_leaves(&optimum, 1),
        pad_leaves(&optimum, 2),
        decomposition_from_order(g, &ascending),
        decomposition_from_order(g, &descending),
        decomposition_from_order(g, &reversed),
        optimum,
    ];
    let mut seen = BTreeSet::new();
    for t in candidates.into_iter().rev() {
        if t.width() > max_width || !t.is_valid() {
            continue;
        }
        if seen.insert((t.forest().parents().to_vec(), t.bags().to_vec())) {
            out.push(t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_counts_match_known_values() {
        let counts: Vec<usize> = (0..=5).map(|n| graphs_with_vertices(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 11, 34]);
    }

    #[test]
    fn forest_counts_match_known_values() {
        let counts: Vec<usize> = (1..=6).map(|n| forests_with_nodes(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 9, 20, 48]);
    }

    #[test]
    fn shapes_are_valid_and_plentiful() {
        for g in graphs_up_to(4).iter().filter(|g| g.vertex_count() > 0) {
            let shapes = decomposition_shapes(g, 3);
            assert!(shapes.len() >= 3);
            assert!(shapes.iter().all(|t| t.is_valid() && t.width() <= 3));
        }
    }
}
