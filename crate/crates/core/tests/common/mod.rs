#![allow(dead_code)]

use std::collections::BTreeSet;

use twopt_core::{Graph, Node, RootedForest};

/// The running example forest: 1 is the root with children 2 and 5, and 2 has children 3 and 4.
pub fn f_ex() -> RootedForest {
    RootedForest::new(vec![None, Some(1), Some(2), Some(2), Some(1)]).unwrap()
}

pub fn set_of_mask(mask: u32) -> BTreeSet<Node> {
    (0..32).filter(|b| mask >> b & 1 == 1).map(|b| b as usize + 1).collect()
}

pub fn mask_of_set(set: &BTreeSet<Node>) -> u32 {
    set.iter().fold(0, |m, &x| m | 1 << (x - 1))
}

/// Size of a largest clique, by exhaustive search over vertex subsets.
pub fn brute_force_max_clique(g: &Graph) -> usize {
    let n = g.vertex_count();
    let adj: Vec<u32> = g
        .vertices()
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << (w - 1)))
        .collect();
    let mut best = 0;
    for s in 0u32..(1 << n) {
        let size = s.count_ones() as usize;
        if size <= best {
            continue;
        }
        let clique = (0..n).filter(|&v| s >> v & 1 == 1).all(|v| s & !(1 << v) & !adj[v] == 0);
        if clique {
            best = size;
        }
    }
    best
}

/// Smallest number of colors in a proper coloring, by exhaustive search.
pub fn brute_force_chromatic_number(g: &Graph) -> usize {
    let n = g.vertex_count();
    if n == 0 {
        return 0;
    }
    (1..=n)
        .find(|&k| {
            let mut col = vec![0usize; n];
            color_from(g, 0, k, &mut col)
        })
        .unwrap()
}

fn color_from(g: &Graph, v: usize, k: usize, col: &mut Vec<usize>) -> bool {
    if v == col.len() {
        return true;
    }
    for c in 0..k {
        if g.neighbors(v + 1).iter().all(|&w| w > v || col[w - 1] != c) {
            col[v] = c;
            if color_from(g, v + 1, k, col) {
                return true;
            }
        }
    }
    false
}
