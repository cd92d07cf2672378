//! Vocabularies, finite relational structures and isomorphism testing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Relation names with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vocabulary(BTreeMap<String, usize>);

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("relation {0} declared twice")]
    DuplicateRelation(String),
    #[error("`{0}` is not a valid relation name")]
    BadName(String),
    #[error("tuple {tuple:?} of {name} does not match its arity or universe")]
    BadTuple { name: String, tuple: Vec<usize> },
    #[error("structure does not match the vocabulary")]
    VocabularyMismatch,
    #[error("isomorphism search exceeded {0} leaves")]
    SearchLimit(usize),
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary::default()
    }

    pub fn from_pairs(pairs: &[(&str, usize)]) -> Result<Self, StructureError> {
        let mut v = Vocabulary::new();
        for &(name, arity) in pairs {
            v.insert(name, arity)?;
        }
        Ok(v)
    }

    pub fn insert(&mut self, name: &str, arity: usize) -> Result<(), StructureError> {
        if !crate::formula::is_identifier(name) {
            return Err(StructureError::BadName(name.to_string()));
        }
        if self.0.insert(name.to_string(), arity).is_some() {
            return Err(StructureError::DuplicateRelation(name.to_string()));
        }
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(n, &a)| (n.as_str(), a))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(n, a)| format!("{n}/{a}")).collect();
        write!(out, "{}", parts.join(" "))
    }
}

/// A finite structure with universe `0..size`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Structure {
    size: usize,
    relations: BTreeMap<String, (usize, BTreeSet<Vec<usize>>)>,
}

impl Structure {
    /// A structure over `vocab` with every relation empty.
    pub fn empty(vocab: &Vocabulary, size: usize) -> Self {
        Structure {
            size,
            relations: vocab.iter().map(|(n, a)| (n.to_string(), (a, BTreeSet::new()))).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary(self.relations.iter().map(|(n, (a, _))| (n.clone(), *a)).collect())
    }

    pub fn tuples(&self, name: &str) -> Option<&BTreeSet<Vec<usize>>> {
        self.relations.get(name).map(|(_, t)| t)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize, &BTreeSet<Vec<usize>>)> {
        self.relations.iter().map(|(n, (a, t))| (n.as_str(), *a, t))
    }

    pub fn add_tuple(&mut self, name: &str, tuple: Vec<usize>) -> Result<(), StructureError> {
        let size = self.size;
        let bad = || StructureError::BadTuple { name: name.to_string(), tuple: tuple.clone() };
        let (arity, tuples) = self.relations.get_mut(name).ok_or_else(bad)?;
        if tuple.len() != *arity || tuple.iter().any(|&e| e >= size) {
            return Err(bad());
        }
        tuples.insert(tuple);
        Ok(())
    }

    /// Replaces the tuple set of an existing relation.
    pub(crate) fn set_tuples(&mut self, name: &str, tuples: BTreeSet<Vec<usize>>) {
        self.relations.get_mut(name).expect("relation exists").1 = tuples;
    }

    pub(crate) fn insert_relation(&mut self, name: &str, arity: usize, tuples: BTreeSet<Vec<usize>>) {
        self.relations.insert(name.to_string(), (arity, tuples));
    }

    /// ‖A‖: the universe size plus arity times tuple count over all relations.
    pub fn weight(&self) -> usize {
        self.size + self.relations.values().map(|(a, t)| a * t.len()).sum::<usize>()
    }

    /// The canonical form of the structure; two structures are isomorphic exactly
    /// when their canonical forms are equal. The search explores at most `limit`
    /// leaves of the individualization tree.
    pub fn canonical_form(&self, limit: usize) -> Result<CanonicalForm, StructureError> {
        let mut search = Search { structure: self, limit, leaves: 0, first: None, best: None, automorphisms: Vec::new() };
        search.node(vec![0u32; self.size], &mut Vec::new())?;
        let code = search.best.map_or_else(|| self.code_under(&[]), |(code, _)| code);
        Ok(CanonicalForm { vocabulary: self.vocabulary(), code })
    }

    pub fn is_isomorphic(&self, other: &Structure, limit: usize) -> Result<bool, StructureError> {
        if self.size != other.size || self.vocabulary() != other.vocabulary() {
            return Ok(false);
        }
        Ok(self.canonical_form(limit)? == other.canonical_form(limit)?)
    }

    /// Color refinement. Each element's signature is a sum of hashes over the
    /// tuples it occurs in, so collisions can only coarsen the partition and the
    /// result stays invariant under isomorphism.
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let mut count = distinct(&colors);
        loop {
            let mut sigs: Vec<u64> = vec![0; self.size];
            for (r, (_, (_, tuples))) in self.relations.iter().enumerate() {
                for t in tuples {
                    let th = t.iter().fold(mix(r as u64 + 1), |h, &e| mix(h ^ u64::from(colors[e])));
                    for (p, &e) in t.iter().enumerate() {
                        sigs[e] = sigs[e].wrapping_add(mix(th ^ (p as u64 + 1) << 40));
                    }
                }
            }
            let mut keys: Vec<(u32, u64)> = colors.iter().copied().zip(sigs).collect();
            let mut sorted = keys.clone();
            sorted.sort_unstable();
            sorted.dedup();
            for k in &mut keys {
                k.0 = sorted.binary_search(k).unwrap() as u32;
            }
            let next: Vec<u32> = keys.into_iter().map(|k| k.0).collect();
            let next_count = distinct(&next);
            colors = next;
            if next_count == count {
                return colors;
            }
            count = next_count;
        }
    }

    fn code_under(&self, colors: &[u32]) -> Vec<usize> {
        let mut code = vec![self.size];
        for (arity, tuples) in self.relations.values() {
            let mut mapped: Vec<Vec<usize>> = tuples
                .iter()
                .map(|t| t.iter().map(|&e| colors[e] as usize).collect())
                .collect();
            mapped.sort_unstable();
            code.push(*arity);
            code.push(mapped.len());
            code.extend(mapped.into_iter().flatten());
        }
        code
    }

    /// A uniformly random structure over `vocab` in which each tuple is present
    /// with probability `density`.
    pub fn random<R: Rng + ?Sized>(vocab: &Vocabulary, size: usize, density: f64, rng: &mut R) -> Self {
        let mut s = Structure::empty(vocab, size);
        for (name, arity) in vocab.iter() {
            let tuples: BTreeSet<Vec<usize>> = all_tuples(size, arity).filter(|_| rng.gen_bool(density)).collect();
            s.set_tuples(name, tuples);
        }
        s
    }

    /// Every structure over `vocab` with exactly `size` elements.
    pub fn enumerate(vocab: &Vocabulary, size: usize) -> Vec<Structure> {
        let slots: Vec<(String, Vec<usize>)> = vocab
            .iter()
            .flat_map(|(name, arity)| all_tuples(size, arity).map(move |t| (name.to_string(), t)))
            .collect();
        assert!(slots.len() < 24, "too many structures to enumerate");
        (0u32..1 << slots.len())
            .map(|mask| {
                let mut s = Structure::empty(vocab, size);
                for (i, (name, t)) in slots.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        s.relations.get_mut(name).unwrap().1.insert(t.clone());
                    }
                }
                s
            })
            .collect()
    }

    /// Every structure over `vocab` with at most `max_size` elements.
    pub fn enumerate_up_to(vocab: &Vocabulary, max_size: usize) -> Vec<Structure> {
        (0..=max_size).flat_map(|n| Structure::enumerate(vocab, n)).collect()
    }
}

/// Individualization-refinement search for the least leaf code, pruning
/// children that an automorphism found so far maps onto an explored sibling.
struct Search<'a> {
    structure: &'a Structure,
    limit: usize,
    leaves: usize,
    first: Option<(Vec<usize>, Vec<u32>)>,
    best: Option<(Vec<usize>, Vec<u32>)>,
    automorphisms: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn node(&mut self, colors: Vec<u32>, path: &mut Vec<usize>) -> Result<(), StructureError> {
        let colors = self.structure.refine(colors);
        let n = colors.len();
        if distinct(&colors) == n {
            return self.leaf(colors);
        }
        // Smallest color whose cell is not a singleton.
        let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &colors {
            *sizes.entry(c).or_default() += 1;
        }
        let target = sizes.iter().find(|(_, &s)| s > 1).map(|(&c, _)| c).unwrap();
        let mut explored: Vec<usize> = Vec::new();
        for e in (0..n).filter(|&e| colors[e] == target) {
            if !explored.is_empty() {
                let orbit = self.orbits(path, n);
                if explored.iter().any(|&x| orbit[x] == orbit[e]) {
                    continue;
                }
            }
            explored.push(e);
            // Individualize e in front of the rest of its cell.
            let split: Vec<u32> = (0..n)
                .map(|x| 2 * colors[x] + u32::from(colors[x] == target && x != e))
                .collect();
            path.push(e);
            self.node(split, path)?;
            path.pop();
        }
        Ok(())
    }

    fn leaf(&mut self, colors: Vec<u32>) -> Result<(), StructureError> {
        self.leaves += 1;
        if self.leaves > self.limit {
            return Err(StructureError::SearchLimit(self.limit));
        }
        let code = self.structure.code_under(&colors);
        for (c, labels) in [&self.first, &self.best].into_iter().flatten() {
            if *c == code {
                let mut at = vec![0; colors.len()];
                for (x, &p) in colors.iter().enumerate() {
                    at[p as usize] = x;
                }
                let gamma: Vec<usize> = labels.iter().map(|&p| at[p as usize]).collect();
                if gamma.iter().enumerate().any(|(x, &y)| x != y) {
                    self.automorphisms.push(gamma);
                }
                break;
            }
        }
        if self.first.is_none() {
            self.first = Some((code.clone(), colors.clone()));
        }
        if self.best.as_ref().is_none_or(|(b, _)| code < *b) {
            self.best = Some((code, colors));
        }
        Ok(())
    }

    /// Orbit representatives under the automorphisms found so far that fix `path` pointwise.
    fn orbits(&self, path: &[usize], n: usize) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for g in self.automorphisms.iter().filter(|g| path.iter().all(|&v| g[v] == v)) {
            for (x, &y) in g.iter().enumerate() {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..n).map(|x| find(&mut parent, x)).collect()
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "universe {}", self.size)?;
        for (name, (_, tuples)) in &self.relations {
            write!(out, "; {name} =")?;
            if tuples.is_empty() {
                write!(out, " {{}}")?;
            }
            for t in tuples {
                let parts: Vec<String> = t.iter().map(usize::to_string).collect();
                write!(out, " ({})", parts.join(","))?;
            }
        }
        Ok(())
    }
}

/// An isomorphism invariant that determines a structure up to isomorphism.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm {
    vocabulary: Vocabulary,
    code: Vec<usize>,
}

/// A bijective 64-bit mixer.
fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn distinct(colors: &[u32]) -> usize {
    colors.iter().collect::<BTreeSet<_>>().len()
}

/// All tuples of the given arity over `0..size`, in lexicographic order.
pub fn all_tuples(size: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = if size == 0 && arity > 0 { 0 } else { size.pow(arity as u32) };
    (0..total).map(move |mut i| {
        let mut t = vec![0; arity];
        for p in (0..arity).rev() {
            t[p] = i % size;
            i /= size;
        }
        t
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::from_pairs(&[("E", 2), ("P", 1)]).unwrap()
    }

    fn relabeled(a: &Structure, perm: &[usize]) -> Structure {
        let mut b = Structure::empty(&a.vocabulary(), a.size());
        for (name, _, tuples) in a.relations() {
            for t in tuples {
                b.add_tuple(name, t.iter().map(|&e| perm[e]).collect()).unwrap();
            }
        }
        b
    }

    #[test]
    fn symmetric_structures_stay_within_a_small_budget() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let v = Vocabulary::from_pairs(&[("copy", 2), ("layer_1", 1), ("layer_2", 1), ("layer_3", 1)]).unwrap();
        for n in [0, 1, 5] {
            // Three copies of n unrelated points: n! · 3! automorphisms when the layers are ignored.
            let mut a = Structure::empty(&v, 3 * n);
            for e in 0..n {
                for l in 0..3 {
                    a.add_tuple(&format!("layer_{}", l + 1), vec![l * n + e]).unwrap();
                    for m in 0..3 {
                        a.add_tuple("copy", vec![l * n + e, m * n + e]).unwrap();
                    }
                }
            }
            let plain = Structure::empty(&Vocabulary::new(), 16);
            for s in [a, plain] {
                let mut perm: Vec<usize> = (0..s.size()).collect();
                perm.shuffle(&mut rng);
                let b = relabeled(&s, &perm);
                assert_eq!(s.canonical_form(200).unwrap(), b.canonical_form(200).unwrap());
            }
        }
    }

    fn brute_isomorphic(a: &Structure, b: &Structure) -> bool {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for i in 0..n {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        if a.size != b.size || a.vocabulary() != b.vocabulary() {
            return false;
        }
        perms(a.size).iter().any(|p| {
            a.relations.iter().all(|(name, (_, tuples))| {
                let mapped: BTreeSet<Vec<usize>> = tuples.iter().map(|t| t.iter().map(|&e| p[e]).collect()).collect();
                mapped == b.relations[name].1
            })
        })
    }

    #[test]
    fn canonical_forms_agree_with_permutation_search() {
        let all = Structure::enumerate_up_to(&vocab(), 3);
        assert_eq!(all.len(), 1 + 4 + 64 + 4096);
        let forms: Vec<CanonicalForm> = all.iter().map(|s| s.canonical_form(10_000).unwrap()).collect();
        let sample: Vec<usize> = (0..all.len()).step_by(37).collect();
        for &i in &sample {
            for &j in &sample {
                assert_eq!(forms[i] == forms[j], brute_isomorphic(&all[i], &all[j]), "{} vs {}", all[i], all[j]);
            }
        }
        // The class count on three elements agrees with pairwise permutation search.
        let classes3: BTreeSet<&CanonicalForm> = forms[69..].iter().collect();
        let mut reps: Vec<&Structure> = Vec::new();
        for s in &all[69..] {
            if !reps.iter().any(|r| brute_isomorphic(r, s)) {
                reps.push(s);
            }
        }
        assert_eq!(classes3.len(), reps.len());
    }

    #[test]
    fn weight_counts_arity_times_tuples() {
        let mut s = Structure::empty(&vocab(), 3);
        s.add_tuple("E", vec![0, 1]).unwrap();
        s.add_tuple("E", vec![1, 2]).unwrap();
        s.add_tuple("P", vec![2]).unwrap();
        assert_eq!(s.weight(), 3 + 2 * 2 + 1);
        assert!(s.add_tuple("E", vec![0, 3]).is_err());
        assert!(s.add_tuple("P", vec![0, 1]).is_err());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        assert!(Vocabulary::from_pairs(&[("E", 2), ("E", 1)]).is_err());
        assert!(Vocabulary::from_pairs(&[("2x", 1)]).is_err());
    }

    #[test]
    fn tuples_over_empty_universe() {
        assert_eq!(all_tuples(0, 0).count(), 1);
        assert_eq!(all_tuples(0, 2).count(), 0);
        assert_eq!(all_tuples(3, 2).count(), 9);
    }
}
