//! Exact, exponential-time ground truth for small instances.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::decomposition::TreeDecomposition;
use crate::factorization::{Factor, Shape};
use crate::forest::{Node, RootedForest};
use crate::graph::{Graph, Vertex};
use crate::sepforest::SeparationForest;

/// Largest graph accepted by the treewidth oracle.
pub const MAX_ORACLE_VERTICES: usize = 16;
/// Largest forest accepted by the factor enumerator.
pub const MAX_ENUMERATION_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {size} elements, the oracle accepts at most {max}")]
    GuardExceeded { size: usize, max: usize },
}

fn adjacency_masks(g: &Graph) -> Vec<u32> {
    g.vertices()
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << (w - 1)))
        .collect()
}

/// Vertices outside `s ∪ {v}` reachable from `v` through `s`.
fn escape_count(adj: &[u32], s: u32, v: usize) -> u32 {
    let mut inside = 1u32 << v;
    let mut frontier = inside;
    let mut outside = 0u32;
    while frontier != 0 {
        let mut next = 0u32;
        let mut bits = frontier;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            next |= adj[b];
        }
        outside |= next & !s & !(1 << v);
        next &= s & !inside;
        inside |= next;
        frontier = next;
    }
    outside.count_ones()
}

/// An exact elimination order together with the treewidth it attains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder {
    pub order: Vec<Vertex>,
    pub width: usize,
}

/// Treewidth and an optimal elimination order by dynamic programming over vertex subsets.
pub fn optimal_elimination_order(g: &Graph) -> Result<EliminationOrder, OracleError> {
    let n = g.vertex_count();
    if n > MAX_ORACLE_VERTICES {
        return Err(OracleError::GuardExceeded {
            size: n,
            max: MAX_ORACLE_VERTICES,
        });
    }
    if n == 0 {
        return Ok(EliminationOrder {
            order: Vec::new(),
            width: 0,
        });
    }
    let adj = adjacency_masks(g);
    let full = (1u32 << n) - 1;
    // tw[s]: best width for eliminating exactly the set s first; `u8::MAX` stands for -inf at s = 0.
    let mut tw = vec![u8::MAX; 1 << n];
    let mut choice = vec![0u8; 1 << n];
    tw[0] = 0;
    for s in 1..=full {
        let mut best = u8::MAX;
        let mut best_v = 0;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1 << v);
            let q = escape_count(&adj, rest, v) as u8;
            let val = if rest == 0 { q } else { tw[rest as usize].max(q) };
            if val < best {
                best = val;
                best_v = v;
            }
        }
        tw[s as usize] = best;
        choice[s as usize] = best_v as u8;
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let v = choice[s as usize] as usize;
        order.push(v + 1);
        s &= !(1 << v);
    }
    order.reverse();
    Ok(EliminationOrder {
        order,
        width: tw[full as usize] as usize,
    })
}

pub fn exact_treewidth(g: &Graph) -> Result<usize, OracleError> {
    Ok(optimal_elimination_order(g)?.width)
}

/// The decomposition of an elimination order: node `v` has bag `{v}` plus the
/// later-eliminated neighbors of `v` in the filled graph, and its parent is the
/// earliest-eliminated of those neighbors.
pub fn decomposition_from_order<'g>(g: &'g Graph, order: &[Vertex]) -> TreeDecomposition<'g> {
    let n = g.vertex_count();
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v - 1] = i;
    }
    let mut filled: Vec<BTreeSet<Vertex>> = g.vertices().map(|v| g.neighbors(v).clone()).collect();
    let mut bags = vec![Vec::new(); n];
    let mut parents = vec![None; n];
    for &v in order {
        let higher: Vec<Vertex> = filled[v - 1]
            .iter()
            .copied()
            .filter(|&w| pos[w - 1] > pos[v - 1])
            .collect();
        for (i, &a) in higher.iter().enumerate() {
            for &b in &higher[i + 1..] {
                filled[a - 1].insert(b);
                filled[b - 1].insert(a);
            }
        }
        parents[v - 1] = higher.iter().copied().min_by_key(|&w| pos[w - 1]);
        let mut bag = higher;
        bag.push(v);
        bags[v - 1] = bag;
    }
    let forest = RootedForest::new(parents).expect("parents are eliminated later");
    TreeDecomposition::new(g, forest, bags).expect("bags are in range")
}

pub fn optimum_decomposition(g: &Graph) -> Result<TreeDecomposition<'_>, OracleError> {
    let e = optimal_elimination_order(g)?;
    Ok(decomposition_from_order(g, &e.order))
}

/// Reduced separation forest of optimum width derived from [`optimum_decomposition`]
/// with ascending vertex order inside margins.
pub fn optimum_reduced_sepforest(g: &Graph) -> Result<SeparationForest<'_>, OracleError> {
    let t = optimum_decomposition(g)?;
    let order: Vec<Vertex> = g.vertices().collect();
    let f = SeparationForest::from_decomposition(&t, &order).expect("oracle decomposition is valid");
    Ok(f.reduce())
}

fn mask_of(nodes: impl IntoIterator<Item = Node>) -> u32 {
    nodes.into_iter().fold(0, |m, x| m | 1 << (x - 1))
}

fn nodes_of(mask: u32) -> BTreeSet<Node> {
    (0..32).filter(|b| mask >> b & 1 == 1).map(|b| b as usize + 1).collect()
}

/// Every factor of the forest, by definition: forest factors are unions of tree
/// factors at a nonempty set of siblings; context factors are a tree factor minus
/// such a union strictly below its root.
pub fn all_factors(forest: &RootedForest) -> Result<Vec<Factor>, OracleError> {
    let n = forest.node_count();
    if n > MAX_ENUMERATION_NODES {
        return Err(OracleError::GuardExceeded {
            size: n,
            max: MAX_ENUMERATION_NODES,
        });
    }
    let tree: Vec<u32> = forest.nodes().map(|x| mask_of(forest.descendants(x).iter().copied())).collect();
    let mut groups: Vec<Vec<Node>> = vec![forest.roots().to_vec()];
    groups.extend(forest.nodes().map(|x| forest.children(x).to_vec()).filter(|c| !c.is_empty()));
    let mut forest_factors: Vec<(u32, Vec<Node>)> = Vec::new();
    for group in &groups {
        for pick in 1u32..(1 << group.len()) {
            let roots: Vec<Node> = (0..group.len())
                .filter(|i| pick >> i & 1 == 1)
                .map(|i| group[i])
                .collect();
            let mask = roots.iter().fold(0, |m, &r| m | tree[r - 1]);
            forest_factors.push((mask, roots));
        }
    }
    let mut out = Vec::new();
    for (mask, roots) in &forest_factors {
        out.push(Factor::from_parts(nodes_of(*mask), Shape::Forest { roots: roots.clone() }));
    }
    for r in forest.nodes() {
        for (mask, roots) in &forest_factors {
            if roots.iter().all(|&a| forest.is_strict_ancestor(r, a)) {
                out.push(Factor::from_parts(
                    nodes_of(tree[r - 1] & !mask),
                    Shape::Context {
                        root: r,
                        appendices: roots.clone(),
                    },
                ));
            }
        }
    }
    Ok(out)
}

/// All U-factors, deduplicated and sorted.
pub fn enumerate_factors(forest: &RootedForest, u: &BTreeSet<Node>) -> Result<Vec<Factor>, OracleError> {
    let mut out: Vec<Factor> = all_factors(forest)?
        .into_iter()
        .filter(|f| f.nodes().is_subset(u))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// For every subset `s` of nodes (as a bitmask), the fewest factors partitioning `s`.
pub fn min_factorization_sizes(forest: &RootedForest) -> Result<Vec<u8>, OracleError> {
    let n = forest.node_count();
    let mut is_factor = vec![false; 1 << n];
    for f in all_factors(forest)? {
        is_factor[mask_of(f.nodes().iter().copied()) as usize] = true;
    }
    let mut best = vec![u8::MAX; 1 << n];
    best[0] = 0;
    for s in 1u32..(1 << n) {
        let low = s & s.wrapping_neg();
        let rest = s & !low;
        // Submasks of `rest`, each combined with the lowest bit.
        let mut sub = rest;
        loop {
            let part = sub | low;
            if is_factor[part as usize] {
                let r = best[(s & !part) as usize];
                if r != u8::MAX {
                    best[s as usize] = best[s as usize].min(r + 1);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_treewidths() {
        assert_eq!(exact_treewidth(&Graph::complete(4)).unwrap(), 3);
        assert_eq!(exact_treewidth(&Graph::path(5)).unwrap(), 1);
        assert_eq!(exact_treewidth(&Graph::cycle(5)).unwrap(), 2);
        assert_eq!(exact_treewidth(&Graph::empty(3)).unwrap(), 0);
        assert_eq!(exact_treewidth(&Graph::empty(0)).unwrap(), 0);
        assert!(exact_treewidth(&Graph::empty(17)).is_err());
    }

    #[test]
    fn optimum_objects_have_optimum_width() {
        let g = Graph::cycle(5);
        let t = optimum_decomposition(&g).unwrap();
        assert!(t.is_valid());
        assert_eq!(t.width(), 2);
        let f = optimum_reduced_sepforest(&g).unwrap();
        assert!(f.is_reduced());
        assert_eq!(f.width(), 2);
        let e = Graph::empty(3);
        let f = optimum_reduced_sepforest(&e).unwrap();
        assert_eq!(f.forest().roots(), &[1, 2, 3]);
    }

    #[test]
    fn enumeration_examples() {
        let f = RootedForest::new(vec![None, Some(1), Some(2), Some(2), Some(1)]).unwrap();
        let leaf = enumerate_factors(&f, &BTreeSet::from([3])).unwrap();
        assert_eq!(leaf.len(), 1);
        let pair = enumerate_factors(&f, &BTreeSet::from([1, 3])).unwrap();
        let sets: Vec<_> = pair.iter().map(|x| x.nodes().clone()).collect();
        assert_eq!(sets, vec![BTreeSet::from([1]), BTreeSet::from([3])]);
        let sizes = min_factorization_sizes(&f).unwrap();
        assert_eq!(sizes[0b11100], 2);
        assert_eq!(sizes[0b11111], 1);
    }
}
