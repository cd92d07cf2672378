//! Semantic comparison of pipelines on sampled or enumerated structures.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::{EvalError, Limits};
use crate::pipeline::Pipeline;
use crate::structure::Structure;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EquivalenceError {
    #[error("input vocabularies differ: {{{0}}} and {{{1}}}")]
    InputMismatch(String, String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A structure on which two pipelines produce different output sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub input: Structure,
    pub left_outputs: usize,
    pub right_outputs: usize,
    /// An output of one side with no isomorphic counterpart on the other.
    pub witness: Option<(Side, Structure)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub trials: usize,
    pub counterexample: Option<Counterexample>,
}

impl EquivalenceReport {
    pub fn equivalent(&self) -> bool {
        self.counterexample.is_none()
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.counterexample {
            None => write!(out, "equivalent ({} trials)", self.trials),
            Some(c) => {
                writeln!(out, "counterexample after {} trials", self.trials)?;
                writeln!(out, "input: {}", c.input)?;
                write!(out, "outputs: {} vs {}", c.left_outputs, c.right_outputs)?;
                if let Some((side, s)) = &c.witness {
                    let side = if *side == Side::Left { "first" } else { "second" };
                    write!(out, "\nonly in {side}: {s}")?;
                }
                Ok(())
            }
        }
    }
}

/// Compares the output sets of `p` and `q` on one structure.
pub fn compare_on(p: &Pipeline, q: &Pipeline, a: &Structure, limits: Limits) -> Result<Option<Counterexample>, EvalError> {
    let left = p.evaluate(a, limits)?;
    let right = q.evaluate(a, limits)?;
    if left.keys().eq(right.keys()) {
        return Ok(None);
    }
    let witness = left
        .iter()
        .find(|(k, _)| !right.contains_key(k))
        .map(|(_, s)| (Side::Left, s.clone()))
        .or_else(|| {
            right
                .iter()
                .find(|(k, _)| !left.contains_key(k))
                .map(|(_, s)| (Side::Right, s.clone()))
        });
    Ok(Some(Counterexample {
        input: a.clone(),
        left_outputs: left.len(),
        right_outputs: right.len(),
        witness,
    }))
}

fn check_inputs(p: &Pipeline, q: &Pipeline) -> Result<(), EquivalenceError> {
    if p.input != q.input {
        return Err(EquivalenceError::InputMismatch(p.input.to_string(), q.input.to_string()));
    }
    Ok(())
}

/// Compares `p` and `q` on `trials` random structures with at most
/// `universe_max` elements drawn from a generator seeded with `seed`.
pub fn check_equivalence(
    p: &Pipeline,
    q: &Pipeline,
    trials: usize,
    universe_max: usize,
    seed: u64,
    limits: Limits,
) -> Result<EquivalenceReport, EquivalenceError> {
    check_inputs(p, q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let n = rng.gen_range(0..=universe_max);
        let density = rng.gen_range(0.2..0.7);
        let a = Structure::random(&p.input, n, density, &mut rng);
        if let Some(c) = compare_on(p, q, &a, limits)? {
            return Ok(EquivalenceReport { trials: t + 1, counterexample: Some(c) });
        }
    }
    Ok(EquivalenceReport { trials, counterexample: None })
}

/// Compares `p` and `q` on every structure of `inputs`.
pub fn check_on_all(
    p: &Pipeline,
    q: &Pipeline,
    inputs: &[Structure],
    limits: Limits,
) -> Result<EquivalenceReport, EquivalenceError> {
    check_inputs(p, q)?;
    for (t, a) in inputs.iter().enumerate() {
        if let Some(c) = compare_on(p, q, a, limits)? {
            return Ok(EquivalenceReport { trials: t + 1, counterexample: Some(c) });
        }
    }
    Ok(EquivalenceReport { trials: inputs.len(), counterexample: None })
}
