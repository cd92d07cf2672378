mod common;

use std::collections::BTreeSet;

use common::{brute_force_chromatic_number, brute_force_max_clique};
use twopt_core::conflict::{
    color_conflict_graph, colors_used, conflict_graph, decode_witness, encode_witness, few_context_report,
    is_proper, max_stain_load, node_loads, parse_witness, stains, write_witness, ConflictError, ConflictWitness,
};
use twopt_core::corpus::{decomposition_shapes, graphs_up_to};
use twopt_core::dealternation::{global_dealternate, Bounds};
use twopt_core::oracle::optimum_reduced_sepforest;
use twopt_core::{Graph, SeparationForest, TreeDecomposition};

/// Runs every conflict check on one decomposition with the dealternated forest.
fn check_instance(t: &TreeDecomposition<'_>) -> Result<(), String> {
    let g = t.graph();
    let k = t.width();
    let f0 = optimum_reduced_sepforest(g).unwrap();
    let f = global_dealternate(t, &f0).map_err(|e| e.to_string())?.forest;
    let tf = t.forest();
    let all = stains(t, &f).map_err(|e| e.to_string())?;
    for s in &all {
        let tops = s
            .nodes
            .iter()
            .filter(|&&x| tf.parent(x).is_none_or(|p| !s.nodes.contains(&p)))
            .count();
        if tops != 1 {
            return Err(format!("stain of {} is not a connected subtree", s.owner));
        }
        let implied: BTreeSet<_> = s.nodes.iter().copied().filter(|&x| x != s.top(tf)).collect();
        if implied != s.edges {
            return Err(format!("stain of {} has edges {:?}", s.owner, s.edges));
        }
        if f.forest().is_leaf(s.owner) && s.nodes.len() != 1 {
            return Err(format!("leaf {} has a large stain", s.owner));
        }
    }

    let h = conflict_graph(t, &f).map_err(|e| e.to_string())?;
    if !h.is_chordal() {
        return Err("conflict graph is not chordal".into());
    }
    let load = max_stain_load(t, &f).map_err(|e| e.to_string())?;
    if load != brute_force_max_clique(&h) {
        return Err(format!("load {load} differs from max clique"));
    }
    if load != brute_force_chromatic_number(&h) {
        return Err("chromatic number differs from max clique".into());
    }
    if load > Bounds::new(k).h() {
        return Err("load above h(k)".into());
    }
    let loads = node_loads(t, &f).map_err(|e| e.to_string())?;
    if loads.iter().max().copied().unwrap_or(0) != load {
        return Err("node loads disagree with the maximum".into());
    }

    // Helly: every pairwise-intersecting family shares a node.
    let n = all.len();
    for mask in 1u32..(1 << n) {
        let family: Vec<_> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &all[i].nodes).collect();
        let pairwise = family
            .iter()
            .enumerate()
            .all(|(i, a)| family[i + 1..].iter().all(|b| !a.is_disjoint(b)));
        if pairwise {
            let common = family
                .iter()
                .skip(1)
                .fold(family[0].clone(), |acc, s| acc.intersection(s).copied().collect());
            if common.is_empty() {
                return Err(format!("Helly fails for family {mask:b}"));
            }
        }
    }

    let coloring = color_conflict_graph(t, &f).map_err(|e| e.to_string())?;
    if !is_proper(&h, &coloring) || colors_used(&coloring) > load.max(usize::from(n > 0)) {
        return Err("greedy coloring is improper or too large".into());
    }
    for r in few_context_report(t, &f, k).map_err(|e| e.to_string())? {
        if !r.holds() {
            return Err(format!("few-context accounting fails: {r:?}"));
        }
    }

    let w = encode_witness(t, &f, &coloring).map_err(|e| e.to_string())?;
    let back = decode_witness(t, &w).map_err(|e| e.to_string())?;
    if back.forest().parents() != f.forest().parents() {
        return Err("witness round trip changed the forest".into());
    }
    if parse_witness(&write_witness(&w)).map_err(|e| e.to_string())? != w {
        return Err("witness text round trip failed".into());
    }
    Ok(())
}

#[test]
fn conflict_properties_on_small_graphs() {
    for g in graphs_up_to(6).iter().filter(|g| g.vertex_count() > 0) {
        for t in decomposition_shapes(g, 3) {
            if let Err(e) = check_instance(&t) {
                panic!("graph {:?}, bags {:?}: {e}", g.edges(), t.bags());
            }
        }
    }
}

fn example() -> (Graph, Vec<Option<usize>>) {
    (
        Graph::new(5, &[(1, 3), (1, 5), (2, 4)]).unwrap(),
        vec![None, Some(1), Some(2), Some(2), Some(1)],
    )
}

/// A width-2 path decomposition of the example graph, so that stains are nontrivial.
fn example_decomposition(g: &Graph) -> TreeDecomposition<'_> {
    let forest = twopt_core::RootedForest::new(vec![None, Some(1), Some(2)]).unwrap();
    TreeDecomposition::new(g, forest, vec![vec![1, 3, 5], vec![1, 2], vec![2, 4]]).unwrap()
}

fn example_witness(t: &TreeDecomposition<'_>, f: &SeparationForest<'_>) -> ConflictWitness {
    let coloring = color_conflict_graph(t, f).unwrap();
    encode_witness(t, f, &coloring).unwrap()
}

#[test]
fn example_round_trips() {
    let (g, parents) = example();
    let f = SeparationForest::from_parents(&g, parents).unwrap();
    let t = example_decomposition(&g);
    assert!(t.is_valid());
    let w = example_witness(&t, &f);
    assert_eq!(decode_witness(&t, &w).unwrap().forest().parents(), f.forest().parents());
}

#[test]
fn parent_color_of_an_unused_color_is_rejected() {
    let (g, parents) = example();
    let f = SeparationForest::from_parents(&g, parents).unwrap();
    let t = example_decomposition(&g);
    let mut w = example_witness(&t, &f);
    let unused = w.coloring.iter().max().unwrap() + 7;
    w.parent_color[2] = Some(unused);
    assert!(matches!(
        decode_witness(&t, &w),
        Err(ConflictError::NoParent { vertex: 3, .. })
    ));
}

#[test]
fn recoloring_into_a_clash_is_rejected() {
    let (g, parents) = example();
    let f = SeparationForest::from_parents(&g, parents).unwrap();
    let t = example_decomposition(&g);
    let h = conflict_graph(&t, &f).unwrap();
    let (a, b) = h.edges()[0];
    let mut coloring = color_conflict_graph(&t, &f).unwrap();
    coloring[b - 1] = coloring[a - 1];
    assert!(matches!(
        encode_witness(&t, &f, &coloring),
        Err(ConflictError::ImproperColoring(..))
    ));

    // The same clash smuggled into a valid witness: vertex 2 takes the color of 1,
    // so two color-c vertices sit in the component that holds φ(2).
    let mut w = example_witness(&t, &f);
    let c1 = w.coloring[0];
    w.coloring[1] = c1;
    let e1 = w.color_edges.get(&c1).cloned().unwrap_or_default();
    w.color_edges.entry(c1).or_default().extend(e1);
    let old = w.coloring.clone();
    let decoded = decode_witness(&t, &w);
    assert!(
        decoded.is_err() || decoded.unwrap().forest().parents() != f.forest().parents(),
        "coloring {old:?} must not reproduce the forest"
    );
}

#[test]
fn dropped_edge_is_rejected() {
    let (g, parents) = example();
    let f = SeparationForest::from_parents(&g, parents).unwrap();
    let t = example_decomposition(&g);
    let mut w = example_witness(&t, &f);
    let c = w.coloring[0];
    let edges = w.color_edges.get_mut(&c).unwrap();
    assert!(!edges.is_empty(), "the stain of vertex 1 spans a decomposition edge");
    let first = *edges.iter().next().unwrap();
    edges.remove(&first);
    assert!(matches!(decode_witness(&t, &w), Err(ConflictError::NoParent { .. })));
}

#[test]
fn root_flip_is_rejected() {
    let (g, parents) = example();
    let f = SeparationForest::from_parents(&g, parents).unwrap();
    let t = example_decomposition(&g);
    let mut w = example_witness(&t, &f);
    // Vertex 1 claims a parent of the color of its own child 2, whose stain meets φ(1).
    w.is_root[0] = false;
    w.parent_color[0] = Some(w.coloring[1]);
    assert!(matches!(
        decode_witness(&t, &w),
        Err(ConflictError::NotAForest | ConflictError::NotSeparating(_) | ConflictError::AmbiguousParent { .. })
    ));
}

#[test]
fn missing_parent_color_and_size_errors() {
    let (g, parents) = example();
    let f = SeparationForest::from_parents(&g, parents).unwrap();
    let t = example_decomposition(&g);
    let mut w = example_witness(&t, &f);
    w.parent_color[1] = None;
    assert_eq!(decode_witness(&t, &w).unwrap_err(), ConflictError::MissingParentColor(2));
    let mut w = example_witness(&t, &f);
    w.coloring.pop();
    assert!(matches!(decode_witness(&t, &w), Err(ConflictError::WitnessSize { .. })));
    let mut w = example_witness(&t, &f);
    w.color_edges.entry(0).or_default().insert(1);
    assert_eq!(decode_witness(&t, &w).unwrap_err(), ConflictError::BadEdge(0, 1));
}

#[test]
fn witness_text_errors_carry_lines() {
    let err = parse_witness("w 2\n1 0 1 -\n2 0 2 -\n").unwrap_err();
    assert_eq!(err.line, 3);
    assert!(parse_witness("1 0 1 -\n").is_err());
}
