//! Monadic second-order formulas and their S-expression syntax.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::structure::Vocabulary;

/// An MSO formula over a relational vocabulary.
///
/// First-order variables range over elements, set variables over subsets of the
/// universe. The two sorts live in separate namespaces.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    /// `R(x_1, …, x_r)`.
    Rel(String, Vec<String>),
    /// `x = y`.
    Eq(String, String),
    /// `x ∈ X`.
    Mem(String, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    ExistsSet(String, Box<Formula>),
    ForallSet(String, Box<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("relation {name} has arity {expected}, used with {found} arguments")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("unbound first-order variable {0}")]
    UnboundVariable(String),
    #[error("unbound set variable {0}")]
    UnboundSetVariable(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct FormulaParseError {
    pub column: usize,
    pub message: String,
}

pub fn rel(name: &str, args: &[&str]) -> Formula {
    Formula::Rel(name.to_string(), args.iter().map(|a| a.to_string()).collect())
}

pub fn eq(x: &str, y: &str) -> Formula {
    Formula::Eq(x.to_string(), y.to_string())
}

pub fn mem(x: &str, set: &str) -> Formula {
    Formula::Mem(x.to_string(), set.to_string())
}

pub fn not(f: Formula) -> Formula {
    Formula::Not(Box::new(f))
}

pub fn and(fs: Vec<Formula>) -> Formula {
    Formula::And(fs)
}

pub fn or(fs: Vec<Formula>) -> Formula {
    Formula::Or(fs)
}

pub fn exists(x: &str, f: Formula) -> Formula {
    Formula::Exists(x.to_string(), Box::new(f))
}

pub fn forall(x: &str, f: Formula) -> Formula {
    Formula::Forall(x.to_string(), Box::new(f))
}

pub fn exists_set(x: &str, f: Formula) -> Formula {
    Formula::ExistsSet(x.to_string(), Box::new(f))
}

pub fn forall_set(x: &str, f: Formula) -> Formula {
    Formula::ForallSet(x.to_string(), Box::new(f))
}

/// Free variables of a formula, split by sort.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVariables {
    pub first_order: BTreeSet<String>,
    pub sets: BTreeSet<String>,
}

impl Formula {
    /// Number of nodes of the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Rel(..) | Formula::Eq(..) | Formula::Mem(..) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::ExistsSet(_, f) | Formula::ForallSet(_, f) => {
                1 + f.size()
            }
        }
    }

    pub fn free_variables(&self) -> FreeVariables {
        let mut out = FreeVariables::default();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, fo: &mut Vec<&'a str>, so: &mut Vec<&'a str>, out: &mut FreeVariables) {
        let fo_use = |x: &String, fo: &Vec<&str>, out: &mut FreeVariables| {
            if !fo.contains(&x.as_str()) {
                out.first_order.insert(x.clone());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Rel(_, args) => args.iter().for_each(|a| fo_use(a, fo, out)),
            Formula::Eq(x, y) => {
                fo_use(x, fo, out);
                fo_use(y, fo, out);
            }
            Formula::Mem(x, s) => {
                fo_use(x, fo, out);
                if !so.contains(&s.as_str()) {
                    out.sets.insert(s.clone());
                }
            }
            Formula::Not(f) => f.collect_free(fo, so, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(fo, so, out)),
            Formula::Exists(x, f) | Formula::Forall(x, f) => {
                fo.push(x);
                f.collect_free(fo, so, out);
                fo.pop();
            }
            Formula::ExistsSet(x, f) | Formula::ForallSet(x, f) => {
                so.push(x);
                f.collect_free(fo, so, out);
                so.pop();
            }
        }
    }

    /// Every variable name occurring in the formula, bound or free, of either sort.
    pub fn variable_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Rel(_, args) => out.extend(args.iter().cloned()),
            Formula::Eq(x, y) | Formula::Mem(x, y) => {
                out.insert(x.clone());
                out.insert(y.clone());
            }
            Formula::Not(f) => f.variable_names(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.variable_names(out)),
            Formula::Exists(x, f) | Formula::Forall(x, f) | Formula::ExistsSet(x, f) | Formula::ForallSet(x, f) => {
                out.insert(x.clone());
                f.variable_names(out);
            }
        }
    }

    /// Relation names used by the formula with the arities they are used at.
    pub fn relations(&self, out: &mut BTreeMap<String, BTreeSet<usize>>) {
        match self {
            Formula::Rel(name, args) => {
                out.entry(name.clone()).or_default().insert(args.len());
            }
            Formula::Not(f) => f.relations(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.relations(out)),
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::ExistsSet(_, f) | Formula::ForallSet(_, f) => {
                f.relations(out)
            }
            _ => {}
        }
    }

    /// Checks arities against `vocab` and that every free variable is among the
    /// given first-order and set parameters.
    pub fn check(&self, vocab: &Vocabulary, first_order: &[&str], sets: &[&str]) -> Result<(), FormulaError> {
        let mut fo: Vec<&str> = first_order.to_vec();
        let mut so: Vec<&str> = sets.to_vec();
        self.check_in(vocab, &mut fo, &mut so)
    }

    fn check_in<'a>(&'a self, vocab: &Vocabulary, fo: &mut Vec<&'a str>, so: &mut Vec<&'a str>) -> Result<(), FormulaError> {
        let bound = |x: &String, fo: &Vec<&str>| {
            if fo.contains(&x.as_str()) {
                Ok(())
            } else {
                Err(FormulaError::UnboundVariable(x.clone()))
            }
        };
        match self {
            Formula::True | Formula::False => Ok(()),
            Formula::Rel(name, args) => {
                let arity = vocab.arity(name).ok_or_else(|| FormulaError::UnknownRelation(name.clone()))?;
                if arity != args.len() {
                    return Err(FormulaError::ArityMismatch {
                        name: name.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| bound(a, fo))
            }
            Formula::Eq(x, y) => bound(x, fo).and_then(|_| bound(y, fo)),
            Formula::Mem(x, s) => {
                bound(x, fo)?;
                if so.contains(&s.as_str()) {
                    Ok(())
                } else {
                    Err(FormulaError::UnboundSetVariable(s.clone()))
                }
            }
            Formula::Not(f) => f.check_in(vocab, fo, so),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|f| f.check_in(vocab, fo, so)),
            Formula::Exists(x, f) | Formula::Forall(x, f) => {
                fo.push(x);
                let r = f.check_in(vocab, fo, so);
                fo.pop();
                r
            }
            Formula::ExistsSet(x, f) | Formula::ForallSet(x, f) => {
                so.push(x);
                let r = f.check_in(vocab, fo, so);
                so.pop();
                r
            }
        }
    }

    /// Folds boolean constants and flattens nested conjunctions and disjunctions.
    ///
    /// First-order quantifiers over constants are kept when their value depends on
    /// whether the universe is empty.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::Not(f) => match f.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Not(g) => *g,
                g => not(g),
            },
            Formula::And(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    match f.simplify() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        Formula::And(gs) => out.extend(gs),
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    match f.simplify() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        Formula::Or(gs) => out.extend(gs),
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
            Formula::Exists(x, f) => match f.simplify() {
                Formula::False => Formula::False,
                g => exists(x, g),
            },
            Formula::Forall(x, f) => match f.simplify() {
                Formula::True => Formula::True,
                g => forall(x, g),
            },
            Formula::ExistsSet(x, f) => match f.simplify() {
                g @ (Formula::True | Formula::False) => g,
                g => exists_set(x, g),
            },
            Formula::ForallSet(x, f) => match f.simplify() {
                g @ (Formula::True | Formula::False) => g,
                g => forall_set(x, g),
            },
            other => other.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Formula, FormulaParseError> {
        let tokens = tokenize(text)?;
        let mut pos = 0;
        let f = parse_formula(&tokens, &mut pos)?;
        if let Some(t) = tokens.get(pos) {
            return Err(perr(t.column, format!("trailing input `{}`", t.text)));
        }
        Ok(f)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(out, "true"),
            Formula::False => write!(out, "false"),
            Formula::Rel(name, args) => {
                write!(out, "(rel {name}")?;
                for a in args {
                    write!(out, " {a}")?;
                }
                write!(out, ")")
            }
            Formula::Eq(x, y) => write!(out, "(eq {x} {y})"),
            Formula::Mem(x, s) => write!(out, "(mem {x} {s})"),
            Formula::Not(f) => write!(out, "(not {f})"),
            Formula::And(fs) | Formula::Or(fs) => {
                write!(out, "({}", if matches!(self, Formula::And(_)) { "and" } else { "or" })?;
                for f in fs {
                    write!(out, " {f}")?;
                }
                write!(out, ")")
            }
            Formula::Exists(x, f) => write!(out, "(exists {x} {f})"),
            Formula::Forall(x, f) => write!(out, "(forall {x} {f})"),
            Formula::ExistsSet(x, f) => write!(out, "(exists-set {x} {f})"),
            Formula::ForallSet(x, f) => write!(out, "(forall-set {x} {f})"),
        }
    }
}

/// Whether `name` is a legal relation or variable name.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub text: String,
    pub column: usize,
}

fn perr(column: usize, message: String) -> FormulaParseError {
    FormulaParseError { column, message }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, FormulaParseError> {
    let mut tokens = Vec::new();
    let mut current: Option<Token> = None;
    for (i, c) in text.char_indices() {
        let column = i + 1;
        if c == '(' || c == ')' || c.is_whitespace() {
            tokens.extend(current.take());
            if !c.is_whitespace() {
                tokens.push(Token { text: c.to_string(), column });
            }
        } else if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
            current.get_or_insert_with(|| Token { text: String::new(), column }).text.push(c);
        } else {
            return Err(perr(column, format!("unexpected character `{c}`")));
        }
    }
    tokens.extend(current);
    Ok(tokens)
}

fn expect_ident(tokens: &[Token], pos: &mut usize, what: &str) -> Result<String, FormulaParseError> {
    let t = tokens.get(*pos).ok_or_else(|| perr(0, format!("expected {what}, found end of input")))?;
    if !is_identifier(&t.text) {
        return Err(perr(t.column, format!("expected {what}, found `{}`", t.text)));
    }
    *pos += 1;
    Ok(t.text.clone())
}

pub(crate) fn parse_formula(tokens: &[Token], pos: &mut usize) -> Result<Formula, FormulaParseError> {
    let t = tokens.get(*pos).ok_or_else(|| perr(0, "expected a formula, found end of input".into()))?;
    *pos += 1;
    match t.text.as_str() {
        "true" => return Ok(Formula::True),
        "false" => return Ok(Formula::False),
        "(" => {}
        other => return Err(perr(t.column, format!("expected a formula, found `{other}`"))),
    }
    let head = tokens.get(*pos).ok_or_else(|| perr(t.column, "unclosed parenthesis".into()))?;
    *pos += 1;
    let f = match head.text.as_str() {
        "rel" => {
            let name = expect_ident(tokens, pos, "a relation name")?;
            let mut args = Vec::new();
            while tokens.get(*pos).is_some_and(|t| t.text != ")") {
                args.push(expect_ident(tokens, pos, "a variable")?);
            }
            Formula::Rel(name, args)
        }
        "eq" => Formula::Eq(expect_ident(tokens, pos, "a variable")?, expect_ident(tokens, pos, "a variable")?),
        "mem" => Formula::Mem(
            expect_ident(tokens, pos, "a variable")?,
            expect_ident(tokens, pos, "a set variable")?,
        ),
        "not" => not(parse_formula(tokens, pos)?),
        "and" | "or" => {
            let mut fs = Vec::new();
            while tokens.get(*pos).is_some_and(|t| t.text != ")") {
                fs.push(parse_formula(tokens, pos)?);
            }
            if head.text == "and" {
                Formula::And(fs)
            } else {
                Formula::Or(fs)
            }
        }
        q @ ("exists" | "forall" | "exists-set" | "forall-set") => {
            let x = expect_ident(tokens, pos, "a bound variable")?;
            let body = Box::new(parse_formula(tokens, pos)?);
            match q {
                "exists" => Formula::Exists(x, body),
                "forall" => Formula::Forall(x, body),
                "exists-set" => Formula::ExistsSet(x, body),
                _ => Formula::ForallSet(x, body),
            }
        }
        other => return Err(perr(head.column, format!("unknown connective `{other}`"))),
    };
    match tokens.get(*pos) {
        Some(t) if t.text == ")" => {
            *pos += 1;
            Ok(f)
        }
        Some(t) => Err(perr(t.column, format!("expected `)`, found `{}`", t.text))),
        None => Err(perr(t.column, "unclosed parenthesis".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_size() {
        let text = "(and (rel R x y) (exists x (mem x X)))";
        let f = Formula::parse(text).unwrap();
        assert_eq!(f.to_string(), text);
        assert_eq!(f.size(), 4);
        let free = f.free_variables();
        assert_eq!(free.first_order, BTreeSet::from(["x".to_string(), "y".to_string()]));
        assert_eq!(free.sets, BTreeSet::from(["X".to_string()]));
    }

    #[test]
    fn whitespace_is_canonicalized() {
        let f = Formula::parse("  (or\n true   (rel P)\t(not false))").unwrap();
        assert_eq!(f.to_string(), "(or true (rel P) (not false))");
        assert_eq!(f.simplify(), Formula::True);
    }

    #[test]
    fn parse_errors_carry_columns() {
        assert_eq!(Formula::parse("(rel R x").unwrap_err().message, "unclosed parenthesis");
        assert_eq!(Formula::parse("(foo x)").unwrap_err().column, 2);
        assert!(Formula::parse("(eq x y) z").is_err());
        assert!(Formula::parse("(eq x 1y)").is_err());
        assert!(Formula::parse("(eq x y!)").is_err());
    }

    #[test]
    fn check_reports_scope_and_arity() {
        let vocab = Vocabulary::from_pairs(&[("E", 2)]).unwrap();
        let f = Formula::parse("(exists y (rel E x y))").unwrap();
        assert!(f.check(&vocab, &["x"], &[]).is_ok());
        assert_eq!(f.check(&vocab, &[], &[]), Err(FormulaError::UnboundVariable("x".into())));
        let g = Formula::parse("(rel E x)").unwrap();
        assert!(matches!(g.check(&vocab, &["x"], &[]), Err(FormulaError::ArityMismatch { .. })));
        let h = Formula::parse("(exists x (mem x X))").unwrap();
        assert_eq!(h.check(&vocab, &[], &[]), Err(FormulaError::UnboundSetVariable("X".into())));
    }

    #[test]
    fn simplify_respects_empty_universes() {
        let f = Formula::parse("(exists x true)").unwrap();
        assert_eq!(f.simplify(), f);
        let g = Formula::parse("(forall x false)").unwrap();
        assert_eq!(g.simplify(), g);
        assert_eq!(Formula::parse("(exists-set X (and))").unwrap().simplify(), Formula::True);
    }
}
