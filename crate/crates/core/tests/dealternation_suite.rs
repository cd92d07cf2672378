use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twopt_core::corpus::{decomposition_shapes, graphs_up_to, random_graph};
use twopt_core::dealternation::{
    analyze_context, dealternation_report, global_dealternate, local_dealternate, t_alternation, Bounds,
    DealternationError, Tripartition,
};
use twopt_core::factorization::{is_factor, maximal_factorization};
use twopt_core::oracle::{all_factors, exact_treewidth, optimum_reduced_sepforest};
use twopt_core::{Graph, SeparationForest, TreeDecomposition, Vertex};

fn monochromatic(part: &Tripartition, set: &[Vertex]) -> Option<char> {
    let c = part.color(set[0])?;
    set.iter().all(|&v| part.color(v) == Some(c)).then_some(c)
}

/// Adhesion sizes of the decomposition induced by `f`, indexed by `vertex - 1`.
fn induced_adhesions(f: &SeparationForest<'_>) -> Vec<usize> {
    f.induced_bags().iter().map(|b| b.len() - 1).collect()
}

/// Checks every promise of one local step of `f` under `part`, with bounds for width `k`,
/// and returns the new forest.
fn check_local_step<'g>(
    f: &SeparationForest<'g>,
    part: &Tripartition,
    k: usize,
) -> Result<SeparationForest<'g>, String> {
    let forest = f.forest();
    let l = f.width();
    let colored = part.colored();

    // Every tree factor inside U ∪ W is monochromatic.
    for v in forest.nodes() {
        let desc = forest.descendants(v);
        if desc.iter().all(|d| colored.contains(d)) && monochromatic(part, desc).is_none() {
            return Err(format!("tree factor at {v} is not monochromatic"));
        }
    }
    let fact_uw = maximal_factorization(forest, &colored);
    if part.x.len() <= k + 1 && (fact_uw.forest_count() > k + 2 || fact_uw.context_count() > 2 * k + 1) {
        return Err(format!("fact(U ∪ W) too large: {fact_uw}"));
    }

    let out = local_dealternate(f, part).map_err(|e| e.to_string())?;
    let g2 = &out.forest;
    let f2 = g2.forest();

    if !g2.is_reduced() {
        return Err("output not reduced".into());
    }
    if g2.width() > l {
        return Err(format!("width grew from {l} to {}", g2.width()));
    }
    let fact_u = maximal_factorization(f2, &part.u);
    if fact_u.len() != out.u_factor_count || fact_u.len() > Bounds::new(k).f() {
        return Err(format!("{} U-factors exceed f({k})", fact_u.len()));
    }

    // LD2 and LD3: factors inside U or inside W survive.
    for factor in all_factors(forest).map_err(|e| e.to_string())? {
        if (factor.nodes().is_subset(&part.u) || factor.nodes().is_subset(&part.w))
            && is_factor(f2, factor.nodes()).is_none()
        {
            return Err(format!("factor {factor} lost"));
        }
    }

    for v in forest.nodes() {
        // I1: same-colored parent-child pairs stay.
        if let Some(u) = forest.parent(v) {
            if part.color(u).is_some() && part.color(u) == part.color(v) && f2.parent(v) != Some(u) {
                return Err(format!("parent {u} of {v} changed"));
            }
        }
        // I3: colored leaves stay leaves.
        if part.color(v).is_some() && forest.is_leaf(v) && !f2.is_leaf(v) {
            return Err(format!("leaf {v} gained children"));
        }
    }
    // I2: siblings with monochromatic tree factors of one color stay siblings.
    for a in forest.nodes() {
        for b in forest.siblings(a) {
            let (ca, cb) = (
                monochromatic(part, forest.descendants(a)),
                monochromatic(part, forest.descendants(b)),
            );
            if ca.is_some() && ca == cb && !f2.are_siblings(a, b) {
                return Err(format!("siblings {a} and {b} separated"));
            }
        }
    }

    // Forest factors of fact(U ∪ W) keep all their parent pointers.
    for factor in fact_uw.factors().iter().filter(|x| !x.is_context()) {
        for &v in factor.nodes() {
            if forest.parent(v) != f2.parent(v) {
                return Err(format!("forest factor {factor} was moved"));
            }
        }
    }

    // Spine claims, recomputed from the induced decomposition of the input.
    let sigma = induced_adhesions(f);
    let contexts: Vec<_> = fact_uw.factors().iter().filter(|x| x.is_context()).collect();
    if contexts.len() != out.analyses.len() {
        return Err("one analysis per context factor expected".into());
    }
    for a in &out.analyses {
        if !a.claims.all() {
            return Err(format!("spine claims failed: {:?}", a.claims));
        }
        for (i, hang) in a.hang_sets.iter().enumerate() {
            let c = part.color(a.spine[i]);
            if hang.iter().any(|&v| part.color(v) != c) {
                return Err(format!("hang set of {} is not monochromatic", a.spine[i]));
            }
        }
        let m = a.m();
        for i in 0..m {
            let lhs = 1 - a.escape_sets[i].len() as i64;
            let rhs = sigma[a.spine[i + 1] - 1] as i64 - sigma[a.spine[i] - 1] as i64;
            if lhs != rhs {
                return Err(format!("telescope fails at spine vertex {}", a.spine[i]));
            }
        }
        if m > 0 {
            if a.word.pmax() > l as i64 + 1 - sigma[a.spine[0] - 1] as i64 {
                return Err("pmax prerequisite fails".into());
            }
            for c in ['r', 'b'] {
                if a.word.restriction(c).pmin() < -(l as i64) {
                    return Err("pmin prerequisite fails".into());
                }
            }
        }
        let u_part: BTreeSet<Vertex> = a.context.nodes().intersection(&part.u).copied().collect();
        if 2 * maximal_factorization(f2, &u_part).len() > 5 * l + 5 {
            return Err(format!("context {} splits into too many U-factors", a.context));
        }
        for (c, group) in a.color_groups(part) {
            if is_factor(f2, &group).is_none() || group.iter().any(|&v| part.color(v) != Some(c)) {
                return Err(format!("color group {group:?} is not a monochromatic factor"));
            }
        }
    }
    Ok(out.forest)
}

/// Replays the global driver one node at a time with every local check, then compares
/// against [`global_dealternate`].
fn check_global(t: &TreeDecomposition<'_>) -> Result<(), String> {
    let g = t.graph();
    let k = t.width();
    let tw = exact_treewidth(g).unwrap();
    let f0 = optimum_reduced_sepforest(g).unwrap();
    let mut f = f0.clone();
    let order = t.forest().postorder();
    for (i, &x) in order.iter().enumerate() {
        let part = Tripartition::at_node(t, x).map_err(|e| e.to_string())?;
        f = check_local_step(&f, &part, k).map_err(|e| format!("node {x}: {e}"))?;
        for &y in &order[..=i] {
            let n = maximal_factorization(f.forest(), &t.component(y).unwrap()).len();
            if n > Bounds::new(k).f() {
                return Err(format!("after node {x}, node {y} has {n} factors"));
            }
        }
    }
    let global = global_dealternate(t, &f0).map_err(|e| e.to_string())?;
    if global.forest.forest().parents() != f.forest().parents() {
        return Err("global driver disagrees with the replay".into());
    }
    if global.forest.width() != tw || !global.forest.is_reduced() {
        return Err("output not optimum and reduced".into());
    }
    if global.steps.iter().any(|s| !s.reduced || s.width != tw) {
        return Err("an intermediate forest is not reduced or not optimum".into());
    }
    if !dealternation_report(t, &global.forest, k).iter().all(|r| r.ok()) {
        return Err("dealternation report fails".into());
    }
    if t_alternation(t, &global.forest) > Bounds::new(k).f() {
        return Err("t-alternation above f(k)".into());
    }
    Ok(())
}

#[test]
fn local_and_global_dealternation_on_small_graphs() {
    for g in graphs_up_to(6).iter().filter(|g| g.vertex_count() > 0) {
        for t in decomposition_shapes(g, 3) {
            if let Err(e) = check_global(&t) {
                panic!("graph {:?}, bags {:?}: {e}", g.edges(), t.bags());
            }
        }
    }
}

#[test]
fn local_and_global_dealternation_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..90 {
        let n = 7 + i % 4;
        let p = [0.2, 0.3, 0.45][i % 3];
        let g = random_graph(n, p, &mut rng);
        for t in decomposition_shapes(&g, 5) {
            if let Err(e) = check_global(&t) {
                panic!("graph {:?}, bags {:?}: {e}", g.edges(), t.bags());
            }
        }
    }
}

#[test]
fn monochromatic_forest_factor_is_left_alone() {
    let g = Graph::new(4, &[(1, 2), (2, 3)]).unwrap();
    let f = SeparationForest::from_parents(&g, vec![None, Some(1), Some(2), None]).unwrap();
    let part = Tripartition::new(&g, BTreeSet::from([1, 2, 3]), BTreeSet::new(), BTreeSet::from([4])).unwrap();
    let out = local_dealternate(&f, &part).unwrap();
    assert_eq!(out.forest.forest().parents(), f.forest().parents());
    assert!(out.analyses.is_empty());
}

#[test]
fn single_node_decomposition_is_one_step() {
    let g = Graph::complete(3);
    let t = TreeDecomposition::new(
        &g,
        twopt_core::RootedForest::new(vec![None]).unwrap(),
        vec![vec![1, 2, 3]],
    )
    .unwrap();
    let f0 = optimum_reduced_sepforest(&g).unwrap();
    let out = global_dealternate(&t, &f0).unwrap();
    assert_eq!(out.steps.len(), 1);
    let report = dealternation_report(&t, &out.forest, 2);
    assert_eq!(
        report[0].to_string(),
        "node 1 factors=1 context_children=0 bound_f=44 bound_g=1215 ok=true"
    );
}

#[test]
fn preconditions_are_enforced() {
    let g = Graph::path(3);
    let wide = SeparationForest::from_parents(&g, vec![None, Some(1), Some(2)]).unwrap();
    let t = twopt_core::oracle::optimum_decomposition(&g).unwrap();
    let unreduced_g = Graph::new(3, &[(1, 2)]).unwrap();
    let unreduced = SeparationForest::from_parents(&unreduced_g, vec![None, Some(1), Some(2)]).unwrap();
    let t2 = twopt_core::oracle::optimum_decomposition(&unreduced_g).unwrap();
    assert!(matches!(
        global_dealternate(&t2, &unreduced),
        Err(DealternationError::NotReduced(2, 3))
    ));
    let other = Graph::new(3, &[(1, 2), (1, 3)]).unwrap();
    let f_other = optimum_reduced_sepforest(&other).unwrap();
    assert!(matches!(
        global_dealternate(&t, &f_other),
        Err(DealternationError::GraphMismatch)
    ));
    // A path rooted at an end has width 1, matching the decomposition.
    assert!(global_dealternate(&t, &wide).is_ok());
    let part = Tripartition::new(&g, BTreeSet::from([1]), BTreeSet::from([2]), BTreeSet::from([3])).unwrap();
    let not_context = is_factor(wide.forest(), &BTreeSet::from([3])).unwrap();
    assert!(matches!(
        analyze_context(&wide, &part, &not_context),
        Err(DealternationError::NotAContext)
    ));
    assert!(Tripartition::new(&g, BTreeSet::from([1]), BTreeSet::new(), BTreeSet::from([2, 3])).is_err());
}
