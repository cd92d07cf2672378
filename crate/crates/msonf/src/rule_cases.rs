//! Two-step pipelines exercising every branch of every rewrite rule.

use crate::equivalence::check_on_all;
use crate::eval::Limits;
use crate::normalize::{applicable_rule, name_supply, normalize, rewrite, Rule};
use crate::pipeline::Pipeline;
use crate::structure::Structure;

/// Input line shared by every case.
pub const RULE_INPUT: &str = "input E/2 P/1\n";

/// Step pairs, each rewritten by the named rule.
pub const RULE_CASES: &[(Rule, &str)] = &[
    (Rule::Merge, "filter (exists x (rel P x))\nfilter (forall x (exists y (rel E x y)))\n"),
    (Rule::Merge, "restrict u (rel P u)\nrestrict v (exists w (rel E v w))\n"),
    (
        Rule::Merge,
        "restrict u (exists y (rel E u y))\nrestrict u (exists-set S (and (mem u S) (forall x (or (not (mem x S)) (rel P x)))))\n",
    ),
    (
        Rule::Merge,
        "interpret E/2 (rel E x2 x1) P/1 (exists y (rel E x1 y))\ninterpret E/2 (and (rel E x1 x2) (rel P x1)) P/1 (not (rel P x1))\n",
    ),
    (
        Rule::Merge,
        "interpret Q/0 (exists x (rel P x)) E/2 (rel E x1 x2)\ninterpret E/2 (or (rel E x1 x2) (rel Q)) P/1 (rel Q)\n",
    ),
    (Rule::Merge, "copy 2\ncopy 2 twin m1 m2\n"),
    (Rule::Merge, "copy 1\ncopy 3 twin m1 m2 m3\n"),
    (Rule::Merge, "rename E=F P=Q\nrename F=E Q=R\n"),
    (Rule::Merge, "rename E=P P=E\nrename P=E\n"),
    (Rule::RenameSwap, "rename E=F P=Q\nfilter (exists x (and (rel Q x) (rel F x x)))\n"),
    (Rule::RenameSwap, "rename E=F\nrestrict u (exists v (rel F u v))\n"),
    (Rule::RenameSwap, "rename E=P P=E\ninterpret P/2 (rel P x2 x1) T/1 (rel E x1)\n"),
    (Rule::RenameSwap, "rename P=Q E=F\ncopy 2\n"),
    (Rule::RenameSwap, "rename E=E P=X\ncolor Y\n"),
    (Rule::RenameSwap, "rename E=F P=Q\ncolor E\n"),
    (Rule::RestrictSwap, "restrict u (rel P u)\nfilter (forall x (exists y (rel E x y)))\n"),
    (
        Rule::RestrictSwap,
        "restrict u (not (rel E u u))\nfilter (exists-set S (forall x (or (mem x S) (rel P x))))\n",
    ),
    (
        Rule::RestrictSwap,
        "restrict u (exists v (rel E u v))\ninterpret E/2 (exists z (and (rel E x1 z) (rel E z x2))) P/1 (forall z (rel E x1 z))\n",
    ),
    (Rule::RestrictSwap, "restrict u (rel P u)\ncopy 2\n"),
    (Rule::RestrictSwap, "restrict u (or (rel P u) (rel E u u))\ncolor X\n"),
    (Rule::InterpretSwap, "interpret E/2 (rel E x2 x1) P/1 (exists y (rel E x1 y))\ncolor X\n"),
    (
        Rule::InterpretSwap,
        "interpret E/2 (rel E x2 x1) P/1 (exists y (rel E x1 y))\nfilter (exists x (and (rel P x) (rel E x x)))\n",
    ),
    (
        Rule::InterpretSwap,
        "interpret F/2 (and (rel P x1) (rel E x1 x2))\nfilter (forall-set S (or (exists x (mem x S)) (forall x (not (rel F x x)))))\n",
    ),
    (Rule::InterpretSwap, "interpret E/2 (rel E x2 x1) P/1 (exists y (rel E x1 y))\ncopy 2\n"),
    (Rule::CopySwap, "copy 2\ncolor X\n"),
    (Rule::CopySwap, "copy 2\nfilter (exists x (and (rel layer_2 x) (rel P x)))\n"),
    (Rule::CopySwap, "copy 2\nfilter (forall x (forall y (or (not (rel copy x y)) (eq x y) (rel E x y))))\n"),
    (
        Rule::CopySwap,
        "copy 2\nfilter (exists-set S (and (exists x (and (rel layer_1 x) (mem x S))) (forall x (or (not (mem x S)) (rel layer_2 x) (rel P x)))))\n",
    ),
    (Rule::CopySwap, "copy 1\ncolor X\n"),
    (Rule::ColorFilter, "filter (exists x (rel P x))\ncolor X\n"),
    (Rule::ColorFilter, "filter (forall-set S (exists x (or (mem x S) (not (mem x S)))))\ncolor X\n"),
];

/// Every structure over the case vocabulary with at most three elements.
pub fn rule_inputs() -> Vec<Structure> {
    let vocab = Pipeline::parse(RULE_INPUT).expect("fixed input line").input;
    Structure::enumerate_up_to(&vocab, 3)
}

/// Applies `rule` once to the two steps of `body` and compares both sides on
/// `inputs`, then does the same for the full normalization.
pub fn check_rule_case(rule: Rule, body: &str, inputs: &[Structure], limits: Limits) -> Result<(), String> {
    let p = Pipeline::parse(&format!("{RULE_INPUT}{body}")).map_err(|e| e.to_string())?;
    if p.steps.len() != 2 || applicable_rule(&p.steps[0], &p.steps[1]) != Some(rule) {
        return Err(format!("{rule} does not apply to\n{p}"));
    }
    let mut names = name_supply(&p).map_err(|e| e.to_string())?;
    let (_, out) = rewrite(&p.steps[0], &p.steps[1], &p.input, &mut names)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| format!("{rule} produced nothing"))?;
    let q = Pipeline::new(p.input.clone(), out).map_err(|e| e.to_string())?;
    let report = check_on_all(&p, &q, inputs, limits).map_err(|e| e.to_string())?;
    if !report.equivalent() {
        return Err(format!("{rule} on\n{p}rewritten to\n{q}{report}"));
    }
    let n = normalize(&p).map_err(|e| e.to_string())?.pipeline;
    let report = check_on_all(&p, &n, inputs, limits).map_err(|e| e.to_string())?;
    if !report.equivalent() {
        return Err(format!("normalizing\n{p}gave\n{n}{report}"));
    }
    Ok(())
}
