//! Colored words over {-, +}, their prefix statistics, and block dealternation.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Minus,
    Plus,
}

impl Letter {
    pub fn value(self) -> i64 {
        match self {
            Letter::Minus => -1,
            Letter::Plus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Letter::Minus => '-',
            Letter::Plus => '+',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("{letters} letters but {colors} colors")]
    LengthMismatch { letters: usize, colors: usize },
    #[error("word uses {0} colors, at most two are allowed")]
    TooManyColors(usize),
    #[error("unrecognised letter {0:?}")]
    BadLetter(char),
    #[error("malformed token {0:?}, expected color:letter")]
    BadToken(String),
}

/// A word over {-, +} with a color at every position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ColoredWord {
    letters: Vec<Letter>,
    colors: Vec<char>,
}

/// Prefix statistics of a word. The empty prefix is included, so `pmax >= 0 >= pmin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordStats {
    pub sum: i64,
    pub pmax: i64,
    pub pmin: i64,
    pub blocks: usize,
}

impl ColoredWord {
    pub fn new(letters: Vec<Letter>, colors: Vec<char>) -> Result<Self, WordError> {
        if letters.len() != colors.len() {
            return Err(WordError::LengthMismatch {
                letters: letters.len(),
                colors: colors.len(),
            });
        }
        Ok(ColoredWord { letters, colors })
    }

    /// Builds a word from a string of `+`/`-` and a string of color characters.
    pub fn parse(letters: &str, colors: &str) -> Result<Self, WordError> {
        let letters = letters
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '+' => Ok(Letter::Plus),
                '-' | '−' => Ok(Letter::Minus),
                other => Err(WordError::BadLetter(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let colors = colors.chars().filter(|c| !c.is_whitespace()).collect();
        Self::new(letters, colors)
    }

    /// Parses the debug form `r:+ r:- b:+`.
    pub fn from_debug(text: &str) -> Result<Self, WordError> {
        let mut letters = Vec::new();
        let mut colors = Vec::new();
        for token in text.split_whitespace() {
            let mut chars = token.chars();
            let (Some(c), Some(':'), Some(l), None) = (chars.next(), chars.next(), chars.next(), chars.next())
            else {
                return Err(WordError::BadToken(token.to_string()));
            };
            colors.push(c);
            letters.push(match l {
                '+' => Letter::Plus,
                '-' => Letter::Minus,
                other => return Err(WordError::BadLetter(other)),
            });
        }
        Self::new(letters, colors)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn colors(&self) -> &[char] {
        &self.colors
    }

    pub fn distinct_colors(&self) -> BTreeSet<char> {
        self.colors.iter().copied().collect()
    }

    pub fn sum(&self) -> i64 {
        self.letters.iter().map(|l| l.value()).sum()
    }

    pub fn pmax(&self) -> i64 {
        prefix_extremes(&self.letters).0
    }

    pub fn pmin(&self) -> i64 {
        prefix_extremes(&self.letters).1
    }

    pub fn stats(&self) -> WordStats {
        let (pmax, pmin) = prefix_extremes(&self.letters);
        WordStats {
            sum: self.sum(),
            pmax,
            pmin,
            blocks: self.blocks().len(),
        }
    }

    /// Maximal runs of equal color, as position ranges.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.colors.len() {
            if i == self.colors.len() || self.colors[i] != self.colors[start] {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    pub fn blocks_of_color(&self, color: char) -> usize {
        self.blocks()
            .iter()
            .filter(|b| self.colors[b.start] == color)
            .count()
    }

    /// The subsequence of letters of one color.
    pub fn restriction(&self, color: char) -> ColoredWord {
        let (letters, colors) = self
            .letters
            .iter()
            .zip(&self.colors)
            .filter(|(_, &c)| c == color)
            .map(|(&l, &c)| (l, c))
            .unzip();
        ColoredWord { letters, colors }
    }

    /// Rearranges positions: the result has at position `j` the letter at `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> ColoredWord {
        ColoredWord {
            letters: perm.iter().map(|&i| self.letters[i]).collect(),
            colors: perm.iter().map(|&i| self.colors[i]).collect(),
        }
    }

    pub fn to_debug_string(&self) -> String {
        self.letters
            .iter()
            .zip(&self.colors)
            .map(|(l, c)| format!("{c}:{}", l.symbol()))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for ColoredWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_debug_string())
    }
}

fn prefix_extremes(letters: &[Letter]) -> (i64, i64) {
    let (mut s, mut hi, mut lo) = (0i64, 0i64, 0i64);
    for l in letters {
        s += l.value();
        hi = hi.max(s);
        lo = lo.min(s);
    }
    (hi, lo)
}

/// The unique color-order-preserving position map from `w` to `w2`, if the two
/// words have the same per-color letter sequences. Entry `i` is the position in
/// `w2` of the letter at position `i` of `w`.
fn color_preserving_map(w: &ColoredWord, w2: &ColoredWord) -> Option<Vec<usize>> {
    if w.len() != w2.len() {
        return None;
    }
    let mut positions: std::collections::BTreeMap<char, Vec<usize>> = Default::default();
    for (j, &c) in w2.colors.iter().enumerate() {
        positions.entry(c).or_default().push(j);
    }
    let mut used: std::collections::BTreeMap<char, usize> = Default::default();
    let mut map = Vec::with_capacity(w.len());
    for (i, &c) in w.colors.iter().enumerate() {
        let k = used.entry(c).or_insert(0);
        let j = *positions.get(&c)?.get(*k)?;
        if w2.letters[j] != w.letters[i] {
            return None;
        }
        *k += 1;
        map.push(j);
    }
    Some(map)
}

/// Whether `w2` is a block-shuffle of `w`: a rearrangement keeping the letter order
/// within each color and keeping every block of `w` contiguous.
pub fn is_block_shuffle(w: &ColoredWord, w2: &ColoredWord) -> bool {
    let Some(map) = color_preserving_map(w, w2) else {
        return false;
    };
    w.blocks()
        .iter()
        .all(|b| map[b.end - 1] - map[b.start] == b.len() - 1)
}

/// Swaps blocks `i` and `i + 1`; returns the new word and the position permutation.
pub fn swap_blocks(w: &ColoredWord, i: usize) -> (ColoredWord, Vec<usize>) {
    let blocks = w.blocks();
    let (a, b) = (blocks[i].clone(), blocks[i + 1].clone());
    let perm: Vec<usize> = (0..a.start).chain(b).chain(a.clone()).chain(blocks[i + 1].end..w.len()).collect();
    (w.permuted(&perm), perm)
}

/// Result of dealternating a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dealternated {
    pub word: ColoredWord,
    /// Position `j` of `word` holds the letter from position `permutation[j]` of the input.
    pub permutation: Vec<usize>,
    pub swaps: usize,
}

fn block_sum(w: &ColoredWord, r: &Range<usize>) -> i64 {
    w.letters[r.clone()].iter().map(|l| l.value()).sum()
}

/// Repeatedly swaps the leftmost adjacent block pair with sums `>= 0` then `<= 0`,
/// stopping when no swap applies or at most two blocks remain.
pub fn dealternate_word(w: &ColoredWord) -> Result<Dealternated, WordError> {
    let colors = w.distinct_colors();
    if colors.len() > 2 {
        return Err(WordError::TooManyColors(colors.len()));
    }
    let mut word = w.clone();
    let mut permutation: Vec<usize> = (0..w.len()).collect();
    let mut swaps = 0;
    loop {
        let blocks = word.blocks();
        if blocks.len() <= 2 {
            break;
        }
        let Some(i) = (0..blocks.len() - 1)
            .find(|&i| block_sum(&word, &blocks[i]) >= 0 && block_sum(&word, &blocks[i + 1]) <= 0)
        else {
            break;
        };
        let (next, perm) = swap_blocks(&word, i);
        permutation = perm.iter().map(|&p| permutation[p]).collect();
        word = next;
        swaps += 1;
    }
    Ok(Dealternated {
        word,
        permutation,
        swaps,
    })
}

/// Checks the per-color block bound `blocks <= a/2 + 2b + 1` in integer form.
pub fn block_bound_holds(blocks_per_color: usize, a: i64, b: i64) -> bool {
    2 * blocks_per_color as i64 <= a + 4 * b + 2
}
