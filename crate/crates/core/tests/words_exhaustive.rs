use std::collections::BTreeSet;

use twopt_core::words::{block_bound_holds, dealternate_word, is_block_shuffle, swap_blocks};
use twopt_core::{ColoredWord, Letter};

fn word_from_bits(n: usize, letters: u32, colors: u32) -> ColoredWord {
    ColoredWord::new(
        (0..n)
            .map(|i| if letters >> i & 1 == 1 { Letter::Plus } else { Letter::Minus })
            .collect(),
        (0..n).map(|i| if colors >> i & 1 == 1 { 'b' } else { 'r' }).collect(),
    )
    .unwrap()
}

fn all_words(max_len: usize) -> impl Iterator<Item = ColoredWord> {
    (0..=max_len).flat_map(|n| {
        (0u32..1 << n).flat_map(move |l| (0u32..1 << n).map(move |c| word_from_bits(n, l, c)))
    })
}

/// Every block-shuffle of `w`, built as interleavings of the red and blue block sequences.
fn oracle_shuffles(w: &ColoredWord) -> BTreeSet<String> {
    let blocks: Vec<ColoredWord> = w
        .blocks()
        .into_iter()
        .map(|r| ColoredWord::new(w.letters()[r.clone()].to_vec(), w.colors()[r].to_vec()).unwrap())
        .collect();
    let red: Vec<&ColoredWord> = blocks.iter().filter(|b| b.colors()[0] == 'r').collect();
    let blue: Vec<&ColoredWord> = blocks.iter().filter(|b| b.colors()[0] == 'b').collect();
    let mut out = BTreeSet::new();
    interleave(&red, &blue, String::new(), &mut out);
    out
}

fn interleave(red: &[&ColoredWord], blue: &[&ColoredWord], acc: String, out: &mut BTreeSet<String>) {
    if red.is_empty() && blue.is_empty() {
        out.insert(acc.trim().to_string());
        return;
    }
    if let Some((first, rest)) = red.split_first() {
        interleave(rest, blue, format!("{acc} {}", first.to_debug_string()), out);
    }
    if let Some((first, rest)) = blue.split_first() {
        interleave(red, rest, format!("{acc} {}", first.to_debug_string()), out);
    }
}

fn max_negative_prefix(w: &ColoredWord) -> i64 {
    ['r', 'b'].iter().map(|&c| -w.restriction(c).pmin()).max().unwrap()
}

#[test]
fn figure_word_statistics_and_swap() {
    let left = ColoredWord::parse("+-++---++", "rrbbbrbrr").unwrap();
    let stats = left.stats();
    assert_eq!((stats.sum, stats.pmax, stats.pmin, stats.blocks), (1, 2, -1, 5));
    let (right, _) = swap_blocks(&left, 1);
    assert_eq!(right.to_string(), ColoredWord::parse("+--++--++", "rrrbbbbrr").unwrap().to_string());
    assert!(right.pmax() <= 2);
    assert!(is_block_shuffle(&left, &right));
    let done = dealternate_word(&left).unwrap();
    assert!(done.word.blocks().len() <= 7);
}

#[test]
fn block_shuffle_matches_interleaving_oracle() {
    for w in all_words(4) {
        let shuffles = oracle_shuffles(&w);
        for w2 in all_words(4).filter(|x| x.len() == w.len()) {
            assert_eq!(
                is_block_shuffle(&w, &w2),
                shuffles.contains(&w2.to_debug_string()),
                "{w:?} vs {w2:?}"
            );
        }
    }
}

#[test]
fn block_shuffle_is_transitive() {
    for w in all_words(5) {
        for s2 in oracle_shuffles(&w) {
            let w2 = ColoredWord::from_debug(&s2).unwrap();
            for s3 in oracle_shuffles(&w2) {
                let w3 = ColoredWord::from_debug(&s3).unwrap();
                assert!(is_block_shuffle(&w, &w3));
            }
        }
    }
}

#[test]
fn swap_claim_holds_for_every_applicable_pair() {
    for w in all_words(8) {
        let blocks = w.blocks();
        for i in 0..blocks.len().saturating_sub(1) {
            let sum = |r: &std::ops::Range<usize>| -> i64 { w.letters()[r.clone()].iter().map(|l| l.value()).sum() };
            if sum(&blocks[i]) >= 0 && sum(&blocks[i + 1]) <= 0 {
                let (w2, _) = swap_blocks(&w, i);
                assert!(is_block_shuffle(&w, &w2));
                assert!(w2.pmax() <= w.pmax());
                assert!(w2.blocks().len() < blocks.len() || blocks.len() <= 2);
            }
        }
    }
}

#[test]
fn dealternation_postconditions_for_words_up_to_ten() {
    for w in all_words(10) {
        let d = dealternate_word(&w).unwrap();
        assert!(is_block_shuffle(&w, &d.word), "{w:?}");
        assert_eq!(w.permuted(&d.permutation), d.word);
        assert!(d.word.pmax() <= w.pmax());
        for c in ['r', 'b'] {
            assert_eq!(d.word.restriction(c), w.restriction(c));
        }
        let (a, b) = (w.pmax(), max_negative_prefix(&w));
        for c in ['r', 'b'] {
            assert!(block_bound_holds(d.word.blocks_of_color(c), a, b), "{w:?} -> {:?}", d.word);
        }
        assert!(d.word.blocks().len() as i64 <= (a + 4 * b + 1).max(2));
    }
}

#[test]
fn three_colors_are_rejected() {
    let w = ColoredWord::parse("+-+", "rgb").unwrap();
    assert!(dealternate_word(&w).is_err());
}
