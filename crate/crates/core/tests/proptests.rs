use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twopt_core::conflict::{color_conflict_graph, decode_witness, encode_witness, max_stain_load, colors_used};
use twopt_core::corpus::{canonical_code, decomposition_shapes, random_forest, random_graph};
use twopt_core::oracle::{exact_treewidth, optimum_reduced_sepforest};
use twopt_core::words::{block_bound_holds, dealternate_word, is_block_shuffle};
use twopt_core::{ColoredWord, Graph, Letter};

fn colored_word() -> impl Strategy<Value = ColoredWord> {
    prop::collection::vec((any::<bool>(), any::<bool>()), 0..40).prop_map(|v| {
        ColoredWord::new(
            v.iter().map(|&(p, _)| if p { Letter::Plus } else { Letter::Minus }).collect(),
            v.iter().map(|&(_, c)| if c { 'b' } else { 'r' }).collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn forest_queries_are_consistent(n in 1usize..30, seed in any::<u64>()) {
        let f = random_forest(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let post = f.postorder();
        prop_assert_eq!(post.len(), n);
        let pos: Vec<usize> = {
            let mut p = vec![0; n];
            for (i, &x) in post.iter().enumerate() { p[x - 1] = i; }
            p
        };
        for x in f.nodes() {
            if let Some(p) = f.parent(x) {
                prop_assert!(pos[x - 1] < pos[p - 1]);
                prop_assert_eq!(f.depth(x), f.depth(p) + 1);
                prop_assert!(f.is_strict_ancestor(p, x));
            }
            for &d in f.descendants(x) {
                prop_assert!(f.is_ancestor(x, d));
            }
            prop_assert_eq!(f.strict_ancestors(x).len(), f.depth(x));
        }
        for a in f.nodes() {
            for b in f.nodes() {
                match f.lca(a, b) {
                    Some(c) => {
                        prop_assert!(f.is_ancestor(c, a) && f.is_ancestor(c, b));
                        let path = f.path(a, b).unwrap();
                        prop_assert_eq!(path.len(), f.depth(a) + f.depth(b) - 2 * f.depth(c) + 1);
                        prop_assert_eq!(path[0], a);
                        prop_assert_eq!(*path.last().unwrap(), b);
                    }
                    None => prop_assert_ne!(f.root_of(a), f.root_of(b)),
                }
            }
        }
    }

    #[test]
    fn long_words_dealternate_within_bounds(w in colored_word()) {
        let d = dealternate_word(&w).unwrap();
        prop_assert!(is_block_shuffle(&w, &d.word));
        prop_assert!(d.word.pmax() <= w.pmax());
        let b = ['r', 'b'].iter().map(|&c| -w.restriction(c).pmin()).max().unwrap();
        for c in ['r', 'b'] {
            prop_assert!(block_bound_holds(d.word.blocks_of_color(c), w.pmax(), b));
        }
    }

    #[test]
    fn witnesses_round_trip_on_random_graphs(n in 1usize..=9, p in 0.1f64..0.7, seed in any::<u64>()) {
        let g = random_graph(n, p, &mut ChaCha8Rng::seed_from_u64(seed));
        let f = optimum_reduced_sepforest(&g).unwrap();
        prop_assert_eq!(f.width(), exact_treewidth(&g).unwrap());
        for t in decomposition_shapes(&g, n) {
            let coloring = color_conflict_graph(&t, &f).unwrap();
            prop_assert!(colors_used(&coloring) <= max_stain_load(&t, &f).unwrap());
            let w = encode_witness(&t, &f, &coloring).unwrap();
            let back = decode_witness(&t, &w).unwrap();
            prop_assert_eq!(back.forest().parents(), f.forest().parents());
        }
    }

    #[test]
    fn canonical_code_is_invariant_under_relabelling(n in 1usize..=7, p in 0.1f64..0.9, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        let mut perm: Vec<usize> = (1..=n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let edges: Vec<_> = g.edges().iter().map(|&(u, v)| (perm[u - 1], perm[v - 1])).collect();
        let h = Graph::new(n, &edges).unwrap();
        prop_assert_eq!(canonical_code(&g), canonical_code(&h));
    }
}
