//! The merge and swap rules for atomic steps and the normalization driver.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::formula::{and, exists, or, rel, Formula};
use crate::pipeline::{params, InterpretDef, Pipeline, PipelineError, Step, StepKind};
use crate::structure::Vocabulary;
use crate::surgery::{
    copy_backwards, relativize, relativize_with_free, rename_relations, rename_variables, substitute_atoms,
    CopyNames, Definition, NameSupply, SurgeryError,
};

/// The rewrite rules, named after the kinds of steps they move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Two consecutive steps of one kind other than coloring become one.
    Merge,
    /// A renaming moves past the following step.
    RenameSwap,
    /// A universe restriction moves past the following step.
    RestrictSwap,
    /// An interpretation moves past a following coloring, filtering or copying.
    InterpretSwap,
    /// A copying moves past a following filtering or coloring.
    CopySwap,
    /// A filtering moves past a following coloring.
    ColorFilter,
}

impl Rule {
    pub const ALL: [Rule; 6] = [
        Rule::Merge,
        Rule::RenameSwap,
        Rule::RestrictSwap,
        Rule::InterpretSwap,
        Rule::CopySwap,
        Rule::ColorFilter,
    ];
}

impl fmt::Display for Rule {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::Merge => "merge",
            Rule::RenameSwap => "*-rename",
            Rule::RestrictSwap => "*-restrict",
            Rule::InterpretSwap => "*-interprete",
            Rule::CopySwap => "*-copy",
            Rule::ColorFilter => "color-filter",
        };
        write!(out, "{name}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Malformed(#[from] PipelineError),
    #[error(transparent)]
    Surgery(#[from] SurgeryError),
}

fn identity_defs(vocab: &Vocabulary) -> Vec<InterpretDef> {
    vocab
        .iter()
        .map(|(name, arity)| {
            let ps = params(arity);
            let ps: Vec<&str> = ps.iter().map(String::as_str).collect();
            InterpretDef { name: name.to_string(), arity, formula: rel(name, &ps) }
        })
        .collect()
}

fn definitions(defs: &[InterpretDef]) -> BTreeMap<String, Definition> {
    defs.iter()
        .map(|d| (d.name.clone(), Definition { params: params(d.arity), body: d.formula.clone() }))
        .collect()
}

fn unary(name: &str) -> Formula {
    rel(name, &["x1"])
}

/// Which rule rewrites the consecutive steps `a` then `b`, if any.
pub fn applicable_rule(a: &Step, b: &Step) -> Option<Rule> {
    use StepKind::*;
    match (a.kind(), b.kind()) {
        (Color, _) => None,
        (x, y) if x == y => Some(Rule::Merge),
        (Rename, _) => Some(Rule::RenameSwap),
        (Restrict, Rename) => None,
        (Restrict, _) => Some(Rule::RestrictSwap),
        (Interpret, Color | Filter | Copy) => Some(Rule::InterpretSwap),
        (Copy, Color | Filter) => Some(Rule::CopySwap),
        (Filter, Color) => Some(Rule::ColorFilter),
        _ => None,
    }
}

/// Rewrites `a` then `b`, where `sigma` is the input vocabulary of `a`, into an
/// equivalent sequence. Returns `None` when no rule applies.
pub fn rewrite(
    a: &Step,
    b: &Step,
    sigma: &Vocabulary,
    names: &mut NameSupply,
) -> Result<Option<(Rule, Vec<Step>)>, NormalizeError> {
    let Some(rule) = applicable_rule(a, b) else { return Ok(None) };
    let out = match rule {
        Rule::Merge => merge(a, b, sigma, names)?,
        Rule::RenameSwap => rename_swap(a, b, sigma, names)?,
        Rule::RestrictSwap => restrict_swap(a, b, sigma, names)?,
        Rule::InterpretSwap => interpret_swap(a, b, sigma, names)?,
        Rule::CopySwap => copy_swap(a, b, sigma, names)?,
        Rule::ColorFilter => vec![b.clone(), a.clone()],
    };
    Ok(Some((rule, out)))
}

fn merge(a: &Step, b: &Step, sigma: &Vocabulary, names: &mut NameSupply) -> Result<Vec<Step>, NormalizeError> {
    Ok(match (a, b) {
        (Step::Filter(p), Step::Filter(q)) => vec![Step::Filter(and(vec![p.clone(), q.clone()]).simplify())],
        (Step::Restrict { var: u, formula: p }, Step::Restrict { var: v, formula: q }) => {
            let q_u = rename_variables(q, &BTreeMap::from([(v.clone(), u.clone())]), &BTreeMap::new(), names);
            let guard = Definition::new(&[u], p.clone());
            let q_rel = relativize(&q_u, &guard, names);
            vec![Step::Restrict { var: u.clone(), formula: and(vec![p.clone(), q_rel]).simplify() }]
        }
        (Step::Interpret(m1), Step::Interpret(m2)) => {
            let defs = definitions(m1);
            let mut out = Vec::new();
            for d in m2 {
                let formula = substitute_atoms(&d.formula, &defs, names)?.simplify();
                out.push(InterpretDef { formula, ..d.clone() });
            }
            vec![Step::Interpret(out)]
        }
        (Step::Copy(first), Step::Copy(second)) => {
            let (k1, k2) = (first.k(), second.k());
            let merged = CopyNames {
                copy: names.fresh("copy"),
                layers: (1..=k1 * k2).map(|i| names.fresh(&format!("layer_{i}"))).collect(),
            };
            let layer = |i: usize, j: usize, x: &str| rel(&merged.layers[i * k2 + j], &[x]);
            let block = |i: usize, x: &str| or((0..k2).map(|j| layer(i, j, x)).collect());
            let mut defs = identity_defs(sigma);
            defs.push(InterpretDef { name: first.copy.clone(), arity: 2, formula: rel(&merged.copy, &["x1", "x2"]) });
            for (i, l) in first.layers.iter().enumerate() {
                defs.push(InterpretDef { name: l.clone(), arity: 1, formula: block(i, "x1") });
            }
            defs.push(InterpretDef {
                name: second.copy.clone(),
                arity: 2,
                formula: and(vec![
                    rel(&merged.copy, &["x1", "x2"]),
                    or((0..k1).map(|i| and(vec![block(i, "x1"), block(i, "x2")])).collect()),
                ])
                .simplify(),
            });
            for (j, l) in second.layers.iter().enumerate() {
                defs.push(InterpretDef {
                    name: l.clone(),
                    arity: 1,
                    formula: or((0..k1).map(|i| layer(i, j, "x1")).collect()).simplify(),
                });
            }
            vec![Step::Copy(merged), Step::Interpret(defs)]
        }
        (Step::Rename(r1), Step::Rename(r2)) => {
            let back: BTreeMap<&String, &String> = r1.iter().map(|(old, mid)| (mid, old)).collect();
            vec![Step::Rename(r2.iter().map(|(mid, new)| (back[mid].clone(), new.clone())).collect())]
        }
        _ => unreachable!("merge needs two steps of one kind"),
    })
}

/// Replaces names of `sigma` by fresh ones and reports the pairs `(fresh, original)`.
fn avoid(name: &str, sigma: &Vocabulary, names: &mut NameSupply) -> String {
    if sigma.contains(name) {
        names.fresh(name)
    } else {
        name.to_string()
    }
}

fn rename_swap(a: &Step, b: &Step, sigma: &Vocabulary, names: &mut NameSupply) -> Result<Vec<Step>, NormalizeError> {
    let Step::Rename(pairs) = a else { unreachable!() };
    let back: BTreeMap<String, String> = pairs.iter().map(|(old, new)| (new.clone(), old.clone())).collect();
    Ok(match b {
        Step::Rename(_) => return merge(a, b, sigma, names),
        Step::Interpret(defs) => vec![Step::Interpret(
            defs.iter()
                .map(|d| InterpretDef { formula: rename_relations(&d.formula, &back), ..d.clone() })
                .collect(),
        )],
        Step::Filter(q) => vec![Step::Filter(rename_relations(q, &back)), a.clone()],
        Step::Restrict { var, formula } => vec![
            Step::Restrict { var: var.clone(), formula: rename_relations(formula, &back) },
            a.clone(),
        ],
        Step::Color(n) => {
            let fresh = avoid(n, sigma, names);
            let mut kept = pairs.clone();
            kept.push((fresh.clone(), n.clone()));
            vec![Step::Color(fresh), Step::Rename(kept)]
        }
        Step::Copy(cn) => {
            let renamed = CopyNames {
                copy: avoid(&cn.copy, sigma, names),
                layers: cn.layers.iter().map(|l| avoid(l, sigma, names)).collect(),
            };
            let mut kept = pairs.clone();
            kept.extend(renamed.all().zip(cn.all()).map(|(f, o)| (f.to_string(), o.to_string())));
            vec![Step::Copy(renamed), Step::Rename(kept)]
        }
    })
}

fn restrict_swap(a: &Step, b: &Step, sigma: &Vocabulary, names: &mut NameSupply) -> Result<Vec<Step>, NormalizeError> {
    let Step::Restrict { var: u, formula: p } = a else { unreachable!() };
    let guard = Definition::new(&[u], p.clone());
    Ok(match b {
        Step::Restrict { .. } => return merge(a, b, sigma, names),
        Step::Rename(_) => unreachable!("restriction before renaming is in order"),
        Step::Color(_) => vec![b.clone(), a.clone()],
        Step::Filter(q) => vec![Step::Filter(relativize(q, &guard, names).simplify()), a.clone()],
        Step::Copy(cn) => {
            let first = &cn.layers[0];
            let u1 = names.fresh(&format!("{u}_first"));
            let moved = rename_variables(p, &BTreeMap::from([(u.clone(), u1.clone())]), &BTreeMap::new(), names);
            let on_first = crate::surgery::layer_restrict(&moved, first, names);
            let formula = exists(&u1, and(vec![rel(&cn.copy, &[u, &u1]), rel(first, &[&u1]), on_first])).simplify();
            vec![b.clone(), Step::Restrict { var: u.clone(), formula }]
        }
        Step::Interpret(defs) => {
            let mut widened = identity_defs(sigma);
            let mut back = Vec::new();
            for d in defs {
                let fresh = names.fresh(&format!("{}_r", d.name));
                let ps = params(d.arity);
                let formula = relativize_with_free(&d.formula, &ps, &guard, names).simplify();
                widened.push(InterpretDef { name: fresh.clone(), arity: d.arity, formula });
                back.push((fresh, d.name.clone()));
            }
            vec![Step::Interpret(widened), a.clone(), Step::Rename(back)]
        }
    })
}

fn interpret_swap(a: &Step, b: &Step, sigma: &Vocabulary, names: &mut NameSupply) -> Result<Vec<Step>, NormalizeError> {
    let Step::Interpret(defs) = a else { unreachable!() };
    Ok(match b {
        Step::Interpret(_) => return merge(a, b, sigma, names),
        Step::Color(n) => {
            let fresh = avoid(n, sigma, names);
            let mut out = defs.clone();
            out.push(InterpretDef { name: n.clone(), arity: 1, formula: unary(&fresh) });
            vec![Step::Color(fresh), Step::Interpret(out)]
        }
        Step::Filter(q) => {
            let q2 = substitute_atoms(q, &definitions(defs), names)?.simplify();
            vec![Step::Filter(q2), a.clone()]
        }
        Step::Copy(cn) => {
            let renamed = CopyNames {
                copy: avoid(&cn.copy, sigma, names),
                layers: cn.layers.iter().map(|l| avoid(l, sigma, names)).collect(),
            };
            let first = &renamed.layers[0];
            let mut out = Vec::new();
            for d in defs {
                let ps = params(d.arity);
                let primes: Vec<String> = ps.iter().map(|x| names.fresh(&format!("{x}_first"))).collect();
                let map: BTreeMap<String, String> = ps.iter().cloned().zip(primes.iter().cloned()).collect();
                let moved = rename_variables(&d.formula, &map, &BTreeMap::new(), names);
                let mut parts = Vec::new();
                for (x, x1) in ps.iter().zip(&primes) {
                    parts.push(rel(&renamed.copy, &[x, x1]));
                    parts.push(rel(first, &[x1]));
                }
                parts.push(crate::surgery::layer_restrict(&moved, first, names));
                let mut formula = and(parts);
                for x1 in primes.iter().rev() {
                    formula = exists(x1, formula);
                }
                out.push(InterpretDef { formula: formula.simplify(), ..d.clone() });
            }
            out.push(InterpretDef { name: cn.copy.clone(), arity: 2, formula: rel(&renamed.copy, &["x1", "x2"]) });
            for (l, r) in cn.layers.iter().zip(&renamed.layers) {
                out.push(InterpretDef { name: l.clone(), arity: 1, formula: unary(r) });
            }
            vec![Step::Copy(renamed), Step::Interpret(out)]
        }
        _ => unreachable!("interpretation before {} is in order", b.kind()),
    })
}

fn copy_swap(a: &Step, b: &Step, sigma: &Vocabulary, names: &mut NameSupply) -> Result<Vec<Step>, NormalizeError> {
    let Step::Copy(cn) = a else { unreachable!() };
    Ok(match b {
        Step::Copy(_) => return merge(a, b, sigma, names),
        Step::Filter(q) => vec![Step::Filter(copy_backwards(q, cn, names)?.simplify()), a.clone()],
        Step::Color(n) => {
            let parts: Vec<String> = (1..=cn.k()).map(|i| names.fresh(&format!("{n}_{i}"))).collect();
            let mut out: Vec<Step> = parts.iter().map(|p| Step::Color(p.clone())).collect();
            out.push(a.clone());
            let mut copied = sigma.clone();
            copied.insert(&cn.copy, 2).expect("copy names are fresh");
            for l in &cn.layers {
                copied.insert(l, 1).expect("copy names are fresh");
            }
            let mut defs = identity_defs(&copied);
            let formula = or(cn
                .layers
                .iter()
                .zip(&parts)
                .map(|(l, p)| and(vec![unary(l), unary(p)]))
                .collect());
            defs.push(InterpretDef { name: n.clone(), arity: 1, formula });
            out.push(Step::Interpret(defs));
            out
        }
        _ => unreachable!("copying before {} is in order", b.kind()),
    })
}

/// Whether the steps, in execution order, are colorings followed by at most one
/// filtering, copying, interpretation, universe restriction and renaming in that order.
pub fn is_normal_form(kinds: &[StepKind]) -> bool {
    let mut i = 0;
    while i < kinds.len() && kinds[i] == StepKind::Color {
        i += 1;
    }
    let mut last: Option<StepKind> = None;
    for &k in &kinds[i..] {
        if k == StepKind::Color || last.is_some_and(|l| l >= k) {
            return false;
        }
        last = Some(k);
    }
    true
}

/// Priority of the redex at a position: renamings first, then restrictions,
/// interpretations, copyings and finally filterings.
fn phase(kind: StepKind) -> usize {
    match kind {
        StepKind::Rename => 0,
        StepKind::Restrict => 1,
        StepKind::Interpret => 2,
        StepKind::Copy => 3,
        StepKind::Filter => 4,
        StepKind::Color => 5,
    }
}

/// Result of normalization with the number of applications of each rule.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub pipeline: Pipeline,
    pub applications: BTreeMap<Rule, usize>,
}

/// Rewrites `p` into the normal form: colorings, then one filtering, one copying,
/// one interpretation, one universe restriction and one renaming, each optional.
pub fn normalize(p: &Pipeline) -> Result<Normalized, NormalizeError> {
    let mut names = name_supply(p)?;
    let mut steps = p.steps.clone();
    let mut applications = BTreeMap::new();
    loop {
        let vocabs = Pipeline { input: p.input.clone(), steps: steps.clone() }.vocabularies()?;
        let redex = (0..steps.len().saturating_sub(1))
            .filter(|&i| applicable_rule(&steps[i], &steps[i + 1]).is_some())
            .min_by_key(|&i| (phase(steps[i].kind()), i));
        let Some(i) = redex else { break };
        let (rule, replacement) = rewrite(&steps[i], &steps[i + 1], &vocabs[i], &mut names)?
            .expect("the redex has a rule");
        *applications.entry(rule).or_insert(0) += 1;
        steps.splice(i..i + 2, replacement);
    }
    let vocabs = Pipeline { input: p.input.clone(), steps: steps.clone() }.vocabularies()?;
    let mut kept = Vec::new();
    for (s, v) in steps.into_iter().zip(&vocabs) {
        if !is_identity(&s, v) {
            kept.push(s);
        }
    }
    let pipeline = Pipeline::new(p.input.clone(), kept)?;
    debug_assert!(is_normal_form(&pipeline.kinds()));
    Ok(Normalized { pipeline, applications })
}

/// A name supply that avoids every relation and variable name of `p`.
pub fn name_supply(p: &Pipeline) -> Result<NameSupply, PipelineError> {
    let mut names = NameSupply::new();
    for v in &p.vocabularies()? {
        v.names().for_each(|n| names.reserve(n));
    }
    for s in &p.steps {
        reserve_step(s, &mut names);
    }
    Ok(names)
}

fn reserve_step(s: &Step, names: &mut NameSupply) {
    match s {
        Step::Filter(f) => names.reserve_formula(f),
        Step::Restrict { var, formula } => {
            names.reserve(var);
            names.reserve_formula(formula);
        }
        Step::Interpret(defs) => defs.iter().for_each(|d| names.reserve_formula(&d.formula)),
        _ => {}
    }
}

/// Steps that leave every structure unchanged.
fn is_identity(s: &Step, input: &Vocabulary) -> bool {
    match s {
        Step::Filter(Formula::True) | Step::Restrict { formula: Formula::True, .. } => true,
        Step::Rename(pairs) => pairs.len() == input.len() && pairs.iter().all(|(o, n)| o == n),
        Step::Interpret(defs) => {
            let mut a = defs.clone();
            let mut b = identity_defs(input);
            a.sort_by(|x, y| x.name.cmp(&y.name));
            b.sort_by(|x, y| x.name.cmp(&y.name));
            a == b
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_then_color_swaps() {
        let p = Pipeline::parse("input E/2\nfilter (exists x (rel E x x))\ncolor X\n").unwrap();
        let n = normalize(&p).unwrap();
        assert_eq!(n.pipeline.to_string(), "input E/2\ncolor X\nfilter (exists x (rel E x x))\n");
        assert_eq!(n.applications[&Rule::ColorFilter], 1);
    }

    #[test]
    fn color_then_copy_splits_the_color() {
        let p = Pipeline::parse("input E/2\ncopy 2\ncolor X\n").unwrap();
        let n = normalize(&p).unwrap().pipeline;
        let kinds = n.kinds();
        assert_eq!(
            kinds,
            vec![StepKind::Color, StepKind::Color, StepKind::Copy, StepKind::Interpret]
        );
        assert_eq!(n.steps[0], Step::Color("X_1".into()));
        assert_eq!(n.steps[1], Step::Color("X_2".into()));
    }

    #[test]
    fn normal_pipelines_are_fixed_points() {
        let text = "input E/2\ncolor X\nfilter (exists x (rel X x))\ncopy 2\n\
                    interpret F/2 (rel E x1 x2)\nrestrict u (exists v (rel F u v))\nrename F=G\n";
        let p = Pipeline::parse(text).unwrap();
        let n = normalize(&p).unwrap();
        assert!(n.applications.is_empty());
        assert_eq!(n.pipeline.to_string(), text);
    }

    #[test]
    fn shape_recognizer() {
        use StepKind::*;
        assert!(is_normal_form(&[Color, Color, Filter, Copy, Interpret, Restrict, Rename]));
        assert!(is_normal_form(&[]));
        assert!(is_normal_form(&[Copy, Rename]));
        assert!(!is_normal_form(&[Filter, Color]));
        assert!(!is_normal_form(&[Filter, Filter]));
        assert!(!is_normal_form(&[Rename, Restrict]));
    }
}
