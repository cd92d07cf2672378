//! Random formulas and pipelines for property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{and, eq, exists, exists_set, forall, forall_set, mem, not, or, Formula};
use crate::pipeline::{params, InterpretDef, Pipeline, Step, StepKind};
use crate::structure::Vocabulary;
use crate::surgery::CopyNames;

/// Shape parameters of random pipelines.
#[derive(Clone, Copy, Debug)]
pub struct PipelineShape {
    pub max_steps: usize,
    pub max_arity: usize,
    /// Largest input universe the pipeline must stay within its guards on.
    pub universe_max: usize,
    /// Largest universe any intermediate structure may reach.
    pub universe_cap: usize,
    /// Largest universe a coloring may branch over.
    pub color_universe: usize,
    /// Largest universe on which set quantifiers are generated.
    pub set_universe: usize,
    /// Largest total number of coloring bits, summed over coloring steps.
    pub color_bits: usize,
    pub formula_depth: usize,
}

impl Default for PipelineShape {
    fn default() -> Self {
        PipelineShape {
            max_steps: 8,
            max_arity: 2,
            universe_max: 4,
            universe_cap: 16,
            color_universe: 6,
            set_universe: 8,
            color_bits: 8,
            formula_depth: 3,
        }
    }
}

struct FormulaGen<'a> {
    vocab: &'a Vocabulary,
    allow_sets: bool,
    counter: usize,
}

impl FormulaGen<'_> {
    fn fresh(&mut self, base: &str) -> String {
        self.counter += 1;
        format!("{base}{}", self.counter)
    }

    fn atom<R: Rng + ?Sized>(&mut self, rng: &mut R, fo: &[String], sets: &[String]) -> Formula {
        let rels: Vec<(&str, usize)> = self.vocab.iter().filter(|&(_, a)| a == 0 || !fo.is_empty()).collect();
        let mut options = vec![0];
        if !rels.is_empty() {
            options.extend([1, 1, 1]);
        }
        if !fo.is_empty() {
            options.push(2);
        }
        if !fo.is_empty() && !sets.is_empty() {
            options.extend([3, 3]);
        }
        match *options.choose(rng).unwrap() {
            1 => {
                let (name, arity) = *rels.choose(rng).unwrap();
                Formula::Rel(name.to_string(), (0..arity).map(|_| fo.choose(rng).unwrap().clone()).collect())
            }
            2 => eq(fo.choose(rng).unwrap(), fo.choose(rng).unwrap()),
            3 => mem(fo.choose(rng).unwrap(), sets.choose(rng).unwrap()),
            _ => {
                if rng.gen_bool(0.5) {
                    Formula::True
                } else {
                    Formula::False
                }
            }
        }
    }

    fn formula<R: Rng + ?Sized>(&mut self, rng: &mut R, depth: usize, fo: &mut Vec<String>, sets: &mut Vec<String>) -> Formula {
        if depth == 0 || rng.gen_bool(0.25) {
            return self.atom(rng, fo, sets);
        }
        match rng.gen_range(0..9) {
            0 => not(self.formula(rng, depth - 1, fo, sets)),
            1 | 2 => and(vec![self.formula(rng, depth - 1, fo, sets), self.formula(rng, depth - 1, fo, sets)]),
            3 | 4 => or(vec![self.formula(rng, depth - 1, fo, sets), self.formula(rng, depth - 1, fo, sets)]),
            5 | 6 => {
                let x = self.fresh("v");
                fo.push(x.clone());
                let body = self.formula(rng, depth - 1, fo, sets);
                fo.pop();
                if rng.gen_bool(0.5) {
                    exists(&x, body)
                } else {
                    forall(&x, body)
                }
            }
            _ if self.allow_sets && sets.is_empty() => {
                let x = self.fresh("S");
                sets.push(x.clone());
                let body = self.formula(rng, depth - 1, fo, sets);
                sets.pop();
                if rng.gen_bool(0.5) {
                    exists_set(&x, body)
                } else {
                    forall_set(&x, body)
                }
            }
            _ => self.atom(rng, fo, sets),
        }
    }
}

/// A random formula over `vocab` whose free first-order variables are among `free`.
pub fn random_formula<R: Rng + ?Sized>(
    rng: &mut R,
    vocab: &Vocabulary,
    free: &[String],
    depth: usize,
    allow_sets: bool,
) -> Formula {
    let mut g = FormulaGen { vocab, allow_sets, counter: 0 };
    g.formula(rng, depth, &mut free.to_vec(), &mut Vec::new())
}

fn random_vocabulary<R: Rng + ?Sized>(rng: &mut R, max_arity: usize, prefix: &str, count: usize) -> Vocabulary {
    let mut v = Vocabulary::new();
    for i in 0..count {
        v.insert(&format!("{prefix}{i}"), rng.gen_range(0..=max_arity)).unwrap();
    }
    v
}

fn unused(vocab: &Vocabulary, base: &str, counter: &mut usize) -> String {
    loop {
        *counter += 1;
        let name = format!("{base}{counter}");
        if !vocab.contains(&name) {
            return name;
        }
    }
}

/// A random well-formed pipeline whose guards hold on every input with at most
/// `shape.universe_max` elements.
pub fn random_pipeline<R: Rng + ?Sized>(rng: &mut R, shape: &PipelineShape) -> Pipeline {
    let count = rng.gen_range(1..=3);
    let input = random_vocabulary(rng, shape.max_arity, "R", count);
    let mut vocab = input.clone();
    let mut bound = shape.universe_max;
    let mut bits = 0;
    let mut counter = 0;
    let mut steps = Vec::new();
    let len = rng.gen_range(1..=shape.max_steps);
    while steps.len() < len {
        let kind = *[
            StepKind::Color,
            StepKind::Filter,
            StepKind::Copy,
            StepKind::Interpret,
            StepKind::Restrict,
            StepKind::Rename,
        ]
        .choose(rng)
        .unwrap();
        let allow_sets = bound <= shape.set_universe;
        let depth = shape.formula_depth;
        let step = match kind {
            StepKind::Color => {
                if bound > shape.color_universe || bits + bound > shape.color_bits {
                    continue;
                }
                bits += bound;
                Step::Color(unused(&vocab, "X", &mut counter))
            }
            StepKind::Copy => {
                let k = rng.gen_range(1..=3);
                if bound * k > shape.universe_cap {
                    continue;
                }
                bound *= k;
                let standard = CopyNames::standard(k);
                if standard.all().any(|n| vocab.contains(n)) {
                    let copy = unused(&vocab, "cp", &mut counter);
                    let layers = (0..k).map(|_| unused(&vocab, "ly", &mut counter)).collect();
                    Step::Copy(CopyNames { copy, layers })
                } else {
                    Step::Copy(standard)
                }
            }
            StepKind::Filter => Step::Filter(random_formula(rng, &vocab, &[], depth, allow_sets)),
            StepKind::Restrict => Step::Restrict {
                var: "u".into(),
                formula: random_formula(rng, &vocab, &["u".to_string()], depth, allow_sets),
            },
            StepKind::Interpret => {
                let count = rng.gen_range(1..=3);
                let mut defs = Vec::new();
                let mut taken = Vocabulary::new();
                for _ in 0..count {
                    let reuse: Vec<(&str, usize)> = vocab.iter().filter(|(n, _)| !taken.contains(n)).collect();
                    let (name, arity) = if !reuse.is_empty() && rng.gen_bool(0.6) {
                        let (n, a) = *reuse.choose(rng).unwrap();
                        (n.to_string(), a)
                    } else {
                        (unused(&vocab, "T", &mut counter), rng.gen_range(0..=shape.max_arity))
                    };
                    if taken.contains(&name) {
                        continue;
                    }
                    taken.insert(&name, arity).unwrap();
                    defs.push(InterpretDef {
                        formula: random_formula(rng, &vocab, &params(arity), depth, allow_sets),
                        name,
                        arity,
                    });
                }
                Step::Interpret(defs)
            }
            StepKind::Rename => {
                let mut pairs = Vec::new();
                let mut used = Vocabulary::new();
                for (name, arity) in vocab.iter() {
                    if rng.gen_bool(0.2) {
                        continue;
                    }
                    let new = if rng.gen_bool(0.5) {
                        name.to_string()
                    } else {
                        unused(&vocab, "N", &mut counter)
                    };
                    if used.insert(&new, arity).is_ok() {
                        pairs.push((name.to_string(), new));
                    }
                }
                pairs.shuffle(rng);
                Step::Rename(pairs)
            }
        };
        match step.output_vocabulary(&vocab) {
            Ok(v) => {
                vocab = v;
                steps.push(step);
            }
            Err(_) => continue,
        }
    }
    Pipeline::new(input, steps).expect("generated pipelines are well formed")
}

/// Total coloring bits of a pipeline on inputs with at most `universe_max`
/// elements, bounding each intermediate universe by the copies taken so far.
pub fn color_bits(p: &Pipeline, universe_max: usize) -> usize {
    let mut bound = universe_max;
    let mut bits = 0;
    for s in &p.steps {
        match s {
            Step::Copy(c) => bound *= c.k(),
            Step::Color(_) => bits += bound,
            _ => {}
        }
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_pipelines_are_well_formed_and_parse_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = random_pipeline(&mut rng, &PipelineShape::default());
            assert!(!p.steps.is_empty() && p.steps.len() <= 8);
            assert_eq!(Pipeline::parse(&p.to_string()).unwrap(), p);
            assert!(color_bits(&p, 4) <= 8);
        }
    }

    #[test]
    fn generated_formulas_are_well_scoped() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = Vocabulary::from_pairs(&[("E", 2), ("P", 1), ("Z", 0)]).unwrap();
        for _ in 0..500 {
            let f = random_formula(&mut rng, &v, &["x1".to_string()], 4, true);
            f.check(&v, &["x1"], &[]).unwrap();
        }
    }
}
