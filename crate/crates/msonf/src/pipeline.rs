//! Atomic transduction steps, pipelines, their text format and their semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::eval::{Compiled, EvalError, Limits, Tables};
use crate::formula::{is_identifier, Formula, FormulaError};
use crate::structure::{all_tuples, CanonicalForm, Structure, Vocabulary};
use crate::surgery::CopyNames;

/// One relation of an interpretation: `name` of `arity` defined by `formula`
/// with free variables among `x1, …, x{arity}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpretDef {
    pub name: String,
    pub arity: usize,
    pub formula: Formula,
}

/// The parameter names of a definition of the given arity.
pub fn params(arity: usize) -> Vec<String> {
    (1..=arity).map(|i| format!("x{i}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Keeps the structure exactly when the sentence holds.
    Filter(Formula),
    /// Keeps the elements satisfying `formula(var)`.
    Restrict { var: String, formula: Formula },
    /// Replaces the vocabulary by the defined relations.
    Interpret(Vec<InterpretDef>),
    /// Takes `k` disjoint copies and adds the copy relation and layer predicates.
    Copy(CopyNames),
    /// Adds a unary predicate, branching over all its interpretations.
    Color(String),
    /// Keeps the listed `(old, new)` symbols under their new names and drops the rest.
    Rename(Vec<(String, String)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepKind {
    Color,
    Filter,
    Copy,
    Interpret,
    Restrict,
    Rename,
}

impl fmt::Display for StepKind {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StepKind::Color => "color",
            StepKind::Filter => "filter",
            StepKind::Copy => "copy",
            StepKind::Interpret => "interpret",
            StepKind::Restrict => "restrict",
            StepKind::Rename => "rename",
        };
        write!(out, "{name}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("step {step}: {message}")]
    Malformed { step: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl Step {
    pub fn kind(&self) -> StepKind {
        match self {
            Step::Filter(_) => StepKind::Filter,
            Step::Restrict { .. } => StepKind::Restrict,
            Step::Interpret(_) => StepKind::Interpret,
            Step::Copy(_) => StepKind::Copy,
            Step::Color(_) => StepKind::Color,
            Step::Rename(_) => StepKind::Rename,
        }
    }

    /// Size of the step: copies for copying, 1 for coloring, and the total
    /// formula size otherwise. A renaming counts one atom per kept symbol.
    pub fn size(&self) -> usize {
        match self {
            Step::Filter(f) | Step::Restrict { formula: f, .. } => f.size(),
            Step::Interpret(defs) => defs.iter().map(|d| d.formula.size()).sum(),
            Step::Copy(names) => names.k(),
            Step::Color(_) => 1,
            Step::Rename(pairs) => pairs.len(),
        }
    }

    /// Validates the step against its input vocabulary and returns its output vocabulary.
    pub fn output_vocabulary(&self, input: &Vocabulary) -> Result<Vocabulary, String> {
        let check = |f: &Formula, fo: &[&str]| f.check(input, fo, &[]).map_err(|e: FormulaError| e.to_string());
        match self {
            Step::Filter(f) => {
                check(f, &[])?;
                Ok(input.clone())
            }
            Step::Restrict { var, formula } => {
                if !is_identifier(var) {
                    return Err(format!("`{var}` is not a variable"));
                }
                check(formula, &[var])?;
                Ok(input.clone())
            }
            Step::Interpret(defs) => {
                let mut out = Vocabulary::new();
                for d in defs {
                    let ps = params(d.arity);
                    let ps: Vec<&str> = ps.iter().map(String::as_str).collect();
                    check(&d.formula, &ps).map_err(|e| format!("{}: {e}", d.name))?;
                    out.insert(&d.name, d.arity).map_err(|e| e.to_string())?;
                }
                Ok(out)
            }
            Step::Copy(names) => {
                if names.k() == 0 {
                    return Err("copying needs at least one copy".into());
                }
                let mut out = input.clone();
                out.insert(&names.copy, 2).map_err(|e| format!("copy relation: {e}"))?;
                for l in &names.layers {
                    out.insert(l, 1).map_err(|e| format!("layer predicate: {e}"))?;
                }
                Ok(out)
            }
            Step::Color(name) => {
                let mut out = input.clone();
                out.insert(name, 1).map_err(|e| format!("color: {e}"))?;
                Ok(out)
            }
            Step::Rename(pairs) => {
                let mut out = Vocabulary::new();
                let mut olds = BTreeSet::new();
                for (old, new) in pairs {
                    let arity = input.arity(old).ok_or_else(|| format!("unknown relation {old}"))?;
                    if !olds.insert(old) {
                        return Err(format!("relation {old} renamed twice"));
                    }
                    out.insert(new, arity).map_err(|e| e.to_string())?;
                }
                Ok(out)
            }
        }
    }

    /// All structures the step produces from `a`.
    pub fn apply(&self, a: &Structure, limits: Limits) -> Result<Vec<Structure>, EvalError> {
        let n = a.size();
        match self {
            Step::Filter(f) => {
                let tables = Tables::new(a);
                let keep = Compiled::new(f, &tables, &[], limits)?.eval(&tables, &[], limits)?;
                Ok(if keep { vec![a.clone()] } else { vec![] })
            }
            Step::Restrict { var, formula } => {
                let tables = Tables::new(a);
                let c = Compiled::new(formula, &tables, &[var], limits)?;
                let mut kept = Vec::new();
                for e in 0..n {
                    if c.eval(&tables, &[e], limits)? {
                        kept.push(e);
                    }
                }
                let mut index = vec![usize::MAX; n];
                for (i, &e) in kept.iter().enumerate() {
                    index[e] = i;
                }
                let mut out = Structure::empty(&a.vocabulary(), kept.len());
                for (name, _, tuples) in a.relations() {
                    let t: BTreeSet<Vec<usize>> = tuples
                        .iter()
                        .filter(|t| t.iter().all(|&e| index[e] != usize::MAX))
                        .map(|t| t.iter().map(|&e| index[e]).collect())
                        .collect();
                    out.set_tuples(name, t);
                }
                Ok(vec![out])
            }
            Step::Interpret(defs) => {
                let tables = Tables::new(a);
                let mut out = Structure::empty(&Vocabulary::new(), n);
                for d in defs {
                    if n.checked_pow(d.arity as u32).is_none_or(|t| t > limits.interpret_tuples) {
                        return Err(EvalError::Guard(format!("interpreting {} over {n} elements", d.name)));
                    }
                    let ps = params(d.arity);
                    if let Formula::Rel(r, args) = &d.formula {
                        if *args == ps {
                            let tuples = a.tuples(r).ok_or_else(|| EvalError::VocabularyMismatch(r.clone()))?;
                            out.insert_relation(&d.name, d.arity, tuples.clone());
                            continue;
                        }
                    }
                    let ps: Vec<&str> = ps.iter().map(String::as_str).collect();
                    let c = Compiled::new(&d.formula, &tables, &ps, limits)?;
                    let mut tuples = BTreeSet::new();
                    for t in all_tuples(n, d.arity) {
                        if c.eval(&tables, &t, limits)? {
                            tuples.insert(t);
                        }
                    }
                    out.insert_relation(&d.name, d.arity, tuples);
                }
                Ok(vec![out])
            }
            Step::Copy(names) => {
                let k = names.k();
                let mut out = Structure::empty(&a.vocabulary(), n * k);
                for (name, arity, tuples) in a.relations() {
                    let mut t = BTreeSet::new();
                    for tuple in tuples {
                        for layers in all_tuples(k, arity) {
                            t.insert(tuple.iter().zip(&layers).map(|(&e, &l)| l * n + e).collect());
                        }
                    }
                    out.set_tuples(name, t);
                }
                let copy: BTreeSet<Vec<usize>> = (0..n)
                    .flat_map(|e| all_tuples(k, 2).map(move |l| vec![l[0] * n + e, l[1] * n + e]))
                    .collect();
                out.insert_relation(&names.copy, 2, copy);
                for (i, l) in names.layers.iter().enumerate() {
                    out.insert_relation(l, 1, (0..n).map(|e| vec![i * n + e]).collect());
                }
                Ok(vec![out])
            }
            Step::Color(name) => {
                if n > limits.color_universe {
                    return Err(EvalError::Guard(format!(
                        "coloring {n} elements exceeds {}",
                        limits.color_universe
                    )));
                }
                Ok((0u64..1 << n)
                    .map(|mask| {
                        let mut out = a.clone();
                        let set = (0..n).filter(|e| mask >> e & 1 == 1).map(|e| vec![e]).collect();
                        out.insert_relation(name, 1, set);
                        out
                    })
                    .collect())
            }
            Step::Rename(pairs) => {
                let mut out = Structure::empty(&Vocabulary::new(), n);
                for (old, new) in pairs {
                    let tuples = a.tuples(old).ok_or_else(|| EvalError::VocabularyMismatch(old.clone()))?;
                    let arity = a.vocabulary().arity(old).unwrap();
                    out.insert_relation(new, arity, tuples.clone());
                }
                Ok(vec![out])
            }
        }
    }
}

/// A sequence of steps with the vocabulary of its inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pipeline {
    pub input: Vocabulary,
    pub steps: Vec<Step>,
}

/// Isomorphism classes of the outputs of a pipeline on one structure.
pub type OutputSet = BTreeMap<CanonicalForm, Structure>;

impl Pipeline {
    pub fn new(input: Vocabulary, steps: Vec<Step>) -> Result<Self, PipelineError> {
        let p = Pipeline { input, steps };
        p.vocabularies()?;
        Ok(p)
    }

    /// The vocabulary before each step followed by the output vocabulary.
    pub fn vocabularies(&self) -> Result<Vec<Vocabulary>, PipelineError> {
        let mut out = vec![self.input.clone()];
        for (i, s) in self.steps.iter().enumerate() {
            let next = s
                .output_vocabulary(out.last().unwrap())
                .map_err(|message| PipelineError::Malformed { step: i + 1, message })?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn output_vocabulary(&self) -> Result<Vocabulary, PipelineError> {
        Ok(self.vocabularies()?.pop().unwrap())
    }

    /// ‖I‖, the sum of the step sizes.
    pub fn size(&self) -> usize {
        self.steps.iter().map(Step::size).sum()
    }

    pub fn kinds(&self) -> Vec<StepKind> {
        self.steps.iter().map(Step::kind).collect()
    }

    /// Runs the pipeline on `a` and returns the outputs up to isomorphism.
    pub fn evaluate(&self, a: &Structure, limits: Limits) -> Result<OutputSet, EvalError> {
        if a.vocabulary() != self.input {
            return Err(EvalError::VocabularyMismatch(format!(
                "structure over {{{}}}, pipeline expects {{{}}}",
                a.vocabulary(),
                self.input
            )));
        }
        let mut current: BTreeSet<Structure> = BTreeSet::from([a.clone()]);
        for step in &self.steps {
            let mut next = BTreeSet::new();
            for s in &current {
                next.extend(step.apply(s, limits)?);
                if next.len() > limits.outputs {
                    return Err(EvalError::Guard(format!("more than {} intermediate outputs", limits.outputs)));
                }
            }
            current = next;
        }
        let mut out = OutputSet::new();
        for s in current {
            out.entry(s.canonical_form(limits.iso_leaves)?).or_insert(s);
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Pipeline, ParseError> {
        let mut input: Option<Vocabulary> = None;
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ParseError { line, message };
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (head, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
            let rest = rest.trim();
            if head == "input" {
                if input.is_some() {
                    return Err(err("second input line".into()));
                }
                let mut v = Vocabulary::new();
                for item in rest.split_whitespace() {
                    let (name, arity) = parse_signature(item).map_err(err)?;
                    v.insert(&name, arity).map_err(|e| err(e.to_string()))?;
                }
                input = Some(v);
                continue;
            }
            if input.is_none() {
                return Err(err("the input vocabulary must come first".into()));
            }
            let step = match head {
                "filter" => Step::Filter(parse_whole_formula(rest).map_err(err)?),
                "restrict" => {
                    let (var, f) = rest.split_once(char::is_whitespace).ok_or_else(|| err("expected a variable and a formula".into()))?;
                    if !is_identifier(var) {
                        return Err(err(format!("`{var}` is not a variable")));
                    }
                    Step::Restrict { var: var.to_string(), formula: parse_whole_formula(f).map_err(err)? }
                }
                "interpret" => Step::Interpret(parse_definitions(rest).map_err(err)?),
                "copy" => {
                    let mut words = rest.split_whitespace();
                    let k: usize = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| err("expected a positive copy count".into()))?;
                    let custom: Vec<&str> = words.collect();
                    let names = if custom.is_empty() {
                        CopyNames::standard(k)
                    } else if custom.len() == k + 1 && custom.iter().all(|w| is_identifier(w)) {
                        CopyNames {
                            copy: custom[0].to_string(),
                            layers: custom[1..].iter().map(|w| w.to_string()).collect(),
                        }
                    } else {
                        return Err(err(format!("expected a copy relation and {k} layer names")));
                    };
                    Step::Copy(names)
                }
                "color" => {
                    if !is_identifier(rest) {
                        return Err(err(format!("`{rest}` is not a relation name")));
                    }
                    Step::Color(rest.to_string())
                }
                "rename" => {
                    let mut pairs = Vec::new();
                    for item in rest.split_whitespace() {
                        let (old, new) = item
                            .split_once('=')
                            .filter(|(o, n)| is_identifier(o) && is_identifier(n))
                            .ok_or_else(|| err(format!("expected old=new, found `{item}`")))?;
                        pairs.push((old.to_string(), new.to_string()));
                    }
                    Step::Rename(pairs)
                }
                other => return Err(err(format!("unknown step `{other}`"))),
            };
            steps.push(step);
        }
        let input = input.ok_or(ParseError { line: 0, message: "missing input vocabulary".into() })?;
        Pipeline::new(input, steps).map_err(|e| {
            let PipelineError::Malformed { step, message } = &e;
            ParseError { line: text_line_of_step(text, *step), message: message.clone() }
        })
    }
}

fn text_line_of_step(text: &str, step: usize) -> usize {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let c = l.split('#').next().unwrap().trim();
            !c.is_empty() && !c.starts_with("input")
        })
        .nth(step - 1)
        .map_or(0, |(i, _)| i + 1)
}

fn parse_signature(item: &str) -> Result<(String, usize), String> {
    let (name, arity) = item.split_once('/').ok_or_else(|| format!("expected name/arity, found `{item}`"))?;
    let arity: usize = arity.parse().map_err(|_| format!("bad arity in `{item}`"))?;
    if !is_identifier(name) {
        return Err(format!("`{name}` is not a relation name"));
    }
    Ok((name.to_string(), arity))
}

fn parse_whole_formula(text: &str) -> Result<Formula, String> {
    Formula::parse(text).map_err(|e| format!("formula {e}"))
}

fn parse_definitions(text: &str) -> Result<Vec<InterpretDef>, String> {
    let mut defs = Vec::new();
    let mut rest = text.trim_start();
    while !rest.is_empty() {
        let sig_end = rest.find(char::is_whitespace).ok_or("expected a formula after the signature")?;
        let (name, arity) = parse_signature(&rest[..sig_end])?;
        rest = rest[sig_end..].trim_start();
        let end = formula_span(rest)?;
        let formula = parse_whole_formula(&rest[..end])?;
        defs.push(InterpretDef { name, arity, formula });
        rest = rest[end..].trim_start();
    }
    Ok(defs)
}

/// Length of the leading formula of `text`: a balanced parenthesized term or one atom.
fn formula_span(text: &str) -> Result<usize, String> {
    if !text.starts_with('(') {
        return Ok(text.find(char::is_whitespace).unwrap_or(text.len()));
    }
    let mut depth = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(i + 1);
                }
            }
            _ => {}
        }
    }
    Err("unclosed parenthesis".into())
}

impl fmt::Display for Step {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Filter(f) => write!(out, "filter {f}"),
            Step::Restrict { var, formula } => write!(out, "restrict {var} {formula}"),
            Step::Interpret(defs) => {
                write!(out, "interpret")?;
                for d in defs {
                    write!(out, " {}/{} {}", d.name, d.arity, d.formula)?;
                }
                Ok(())
            }
            Step::Copy(names) => {
                write!(out, "copy {}", names.k())?;
                if *names != CopyNames::standard(names.k()) {
                    write!(out, " {}", names.copy)?;
                    for l in &names.layers {
                        write!(out, " {l}")?;
                    }
                }
                Ok(())
            }
            Step::Color(name) => write!(out, "color {name}"),
            Step::Rename(pairs) => {
                write!(out, "rename")?;
                for (old, new) in pairs {
                    write!(out, " {old}={new}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.input.is_empty() {
            writeln!(out, "input")?;
        } else {
            writeln!(out, "input {}", self.input)?;
        }
        for s in &self.steps {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# a sample pipeline
input E/2 P/1
color X
filter (exists x (mem_ok x))
";

    fn f(text: &str) -> Formula {
        Formula::parse(text).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let text = "input E/2 P/1\n\
                    color X\n\
                    filter (exists x (rel X x))\n\
                    copy 2\n\
                    interpret F/2 (and (rel E x1 x2) (rel copy x1 x2)) Q/1 (rel layer_1 x1) Z/0 true\n\
                    restrict u (rel Q u)\n\
                    rename F=E Q=P\n";
        let p = Pipeline::parse(text).unwrap();
        assert_eq!(p.to_string(), text);
        assert_eq!(p.kinds().len(), 6);
        let messy = text.replace(' ', "   ").replace("input   ", "input ");
        assert_eq!(Pipeline::parse(&messy).unwrap().to_string(), text);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = Pipeline::parse(SAMPLE).unwrap_err();
        assert_eq!(e.line, 4);
        let e = Pipeline::parse("input E/2\ncolor E\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(Pipeline::parse("color X\n").is_err());
        assert_eq!(Pipeline::parse("input E/2\n\ncopy 0\n").unwrap_err().line, 3);
        assert!(Pipeline::parse("input E/2\nrename E=F E=G\n").is_err());
        assert!(Pipeline::parse("input E/2\nfilter (rel E x y)\n").is_err());
    }

    #[test]
    fn copy_two_on_a_point() {
        let a = Structure::empty(&Vocabulary::new(), 1);
        let out = Step::Copy(CopyNames::standard(2)).apply(&a, Limits::default()).unwrap();
        assert_eq!(out.len(), 1);
        let s = &out[0];
        assert_eq!(s.size(), 2);
        assert_eq!(s.tuples("copy").unwrap().len(), 4);
        assert!(s.tuples("copy").unwrap().contains(&vec![0, 1]));
        assert_eq!(s.tuples("layer_1").unwrap(), &BTreeSet::from([vec![0]]));
        assert_eq!(s.tuples("layer_2").unwrap(), &BTreeSet::from([vec![1]]));
    }

    #[test]
    fn coloring_branches_over_subsets() {
        let a = Structure::empty(&Vocabulary::new(), 2);
        let out = Step::Color("X".into()).apply(&a, Limits::default()).unwrap();
        assert_eq!(out.len(), 4);
        let big = Structure::empty(&Vocabulary::new(), 7);
        assert!(matches!(Step::Color("X".into()).apply(&big, Limits::default()), Err(EvalError::Guard(_))));
    }

    #[test]
    fn filter_true_is_identity_and_pipelines_fold() {
        let v = Vocabulary::from_pairs(&[("E", 2)]).unwrap();
        let mut a = Structure::empty(&v, 2);
        a.add_tuple("E", vec![0, 1]).unwrap();
        assert_eq!(Step::Filter(Formula::True).apply(&a, Limits::default()).unwrap(), vec![a.clone()]);
        let empty = Pipeline::new(v.clone(), vec![]).unwrap();
        assert_eq!(empty.evaluate(&a, Limits::default()).unwrap().len(), 1);

        let p = Pipeline::new(
            Vocabulary::new(),
            vec![Step::Color("X".into()), Step::Filter(f("(forall x (rel X x))"))],
        )
        .unwrap();
        let point = Structure::empty(&Vocabulary::new(), 1);
        assert_eq!(p.evaluate(&point, Limits::default()).unwrap().len(), 1);
    }

    #[test]
    fn restriction_drops_incident_tuples() {
        let v = Vocabulary::from_pairs(&[("E", 2), ("P", 1)]).unwrap();
        let mut a = Structure::empty(&v, 3);
        a.add_tuple("E", vec![0, 2]).unwrap();
        a.add_tuple("E", vec![1, 2]).unwrap();
        a.add_tuple("P", vec![0]).unwrap();
        a.add_tuple("P", vec![2]).unwrap();
        let out = Step::Restrict { var: "u".into(), formula: f("(rel P u)") }.apply(&a, Limits::default()).unwrap();
        assert_eq!(out[0].size(), 2);
        assert_eq!(out[0].tuples("E").unwrap(), &BTreeSet::from([vec![0, 1]]));
    }

    #[test]
    fn sizes_follow_the_step_kinds() {
        let p = Pipeline::parse("input E/2\ncolor X\ncopy 3\nfilter (exists x (rel X x))\nrename E=F\n").unwrap();
        assert_eq!(p.size(), 1 + 3 + 2 + 1);
    }
}
