//! A naive model checker for MSO formulas on small structures.

use std::cell::Cell;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{Formula, FormulaError};
use crate::structure::{Structure, StructureError};

/// Resource guards of the evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest universe a coloring step may branch over.
    pub color_universe: usize,
    /// Largest number of candidate elements for a set quantifier.
    pub set_universe: usize,
    /// Largest number of tuples an interpretation may test per relation.
    pub interpret_tuples: usize,
    /// Largest number of structures alive after a step.
    pub outputs: usize,
    /// Leaf budget of one isomorphism search.
    pub iso_leaves: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            color_universe: 6,
            set_universe: 20,
            interpret_tuples: 1 << 20,
            outputs: 1 << 16,
            iso_leaves: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("guard exceeded: {0}")]
    Guard(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Dense membership tables for the relations of one structure.
pub struct Tables {
    size: usize,
    index: BTreeMap<String, usize>,
    tables: Vec<(usize, Vec<bool>)>,
}

impl Tables {
    pub fn new(s: &Structure) -> Self {
        let n = s.size();
        let mut index = BTreeMap::new();
        let mut tables = Vec::new();
        for (name, arity, tuples) in s.relations() {
            let mut bits = vec![false; n.pow(arity as u32).max(1)];
            for t in tuples {
                bits[t.iter().fold(0, |acc, &e| acc * n + e)] = true;
            }
            index.insert(name.to_string(), tables.len());
            tables.push((arity, bits));
        }
        Tables { size: n, index, tables }
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

enum Node {
    Const(bool),
    Rel(usize, Vec<usize>),
    Eq(usize, usize),
    Mem(usize, usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Exists(usize, Box<Node>),
    Forall(usize, Box<Node>),
    /// Set quantifier, optionally ranging only over subsets of `{y : guard(y)}`.
    Set {
        universal: bool,
        slot: usize,
        guard: Option<(usize, Box<Node>)>,
        body: Box<Node>,
    },
}

/// A formula compiled against the tables of one structure.
pub struct Compiled {
    node: Node,
    fo_slots: usize,
    set_slots: usize,
    params: usize,
}

struct Compiler<'a> {
    tables: &'a Tables,
    fo: Vec<(String, usize)>,
    sets: Vec<(String, usize)>,
    fo_slots: usize,
    set_slots: usize,
    limits: Limits,
}

/// Matches `∀y (¬ y ∈ X ∨ G(y))` and returns `y` and `G`, provided `X` is not free in `G`.
fn subset_guard<'f>(f: &'f Formula, set: &str) -> Option<(&'f str, Formula)> {
    let Formula::Forall(y, body) = f else { return None };
    let Formula::Or(ds) = body.as_ref() else { return None };
    let (Formula::Not(first), rest) = ds.split_first()? else { return None };
    if !matches!(first.as_ref(), Formula::Mem(a, b) if a == y && b == set) || rest.is_empty() {
        return None;
    }
    let g = if rest.len() == 1 { rest[0].clone() } else { Formula::Or(rest.to_vec()) };
    (!g.free_variables().sets.contains(set)).then_some((y.as_str(), g))
}

impl Compiler<'_> {
    fn fo_slot(&self, x: &str) -> Result<usize, EvalError> {
        self.fo
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|&(_, s)| s)
            .ok_or_else(|| FormulaError::UnboundVariable(x.to_string()).into())
    }

    fn bind_fo<T>(&mut self, x: &str, k: impl FnOnce(&mut Self, usize) -> Result<T, EvalError>) -> Result<T, EvalError> {
        let slot = self.fo.len();
        self.fo_slots = self.fo_slots.max(slot + 1);
        self.fo.push((x.to_string(), slot));
        let r = k(self, slot);
        self.fo.pop();
        r
    }

    fn compile(&mut self, f: &Formula) -> Result<Node, EvalError> {
        Ok(match f {
            Formula::True => Node::Const(true),
            Formula::False => Node::Const(false),
            Formula::Rel(name, args) => {
                let &t = self
                    .tables
                    .index
                    .get(name)
                    .ok_or_else(|| FormulaError::UnknownRelation(name.clone()))?;
                let arity = self.tables.tables[t].0;
                if arity != args.len() {
                    return Err(FormulaError::ArityMismatch { name: name.clone(), expected: arity, found: args.len() }.into());
                }
                Node::Rel(t, args.iter().map(|a| self.fo_slot(a)).collect::<Result<_, _>>()?)
            }
            Formula::Eq(x, y) => Node::Eq(self.fo_slot(x)?, self.fo_slot(y)?),
            Formula::Mem(x, s) => {
                let set = self
                    .sets
                    .iter()
                    .rev()
                    .find(|(n, _)| n == s)
                    .map(|&(_, slot)| slot)
                    .ok_or_else(|| FormulaError::UnboundSetVariable(s.clone()))?;
                Node::Mem(self.fo_slot(x)?, set)
            }
            Formula::Not(g) => Node::Not(Box::new(self.compile(g)?)),
            Formula::And(gs) => Node::And(gs.iter().map(|g| self.compile(g)).collect::<Result<_, _>>()?),
            Formula::Or(gs) => Node::Or(gs.iter().map(|g| self.compile(g)).collect::<Result<_, _>>()?),
            Formula::Exists(x, g) => self.bind_fo(x, |c, slot| Ok(Node::Exists(slot, Box::new(c.compile(g)?))))?,
            Formula::Forall(x, g) => self.bind_fo(x, |c, slot| Ok(Node::Forall(slot, Box::new(c.compile(g)?))))?,
            Formula::ExistsSet(x, g) | Formula::ForallSet(x, g) => {
                let universal = matches!(f, Formula::ForallSet(..));
                // Relativized quantifiers: ∃X (X ⊆ G ∧ φ) and ∀X (¬ X ⊆ G ∨ φ).
                let split = match (universal, g.as_ref()) {
                    (false, Formula::And(cs)) => cs.split_first().and_then(|(first, rest)| {
                        subset_guard(first, x).map(|(y, guard)| (y.to_string(), guard, Formula::And(rest.to_vec())))
                    }),
                    (true, Formula::Or(ds)) => ds.split_first().and_then(|(first, rest)| match first {
                        Formula::Not(inner) => subset_guard(inner, x)
                            .map(|(y, guard)| (y.to_string(), guard, Formula::Or(rest.to_vec()))),
                        _ => None,
                    }),
                    _ => None,
                };
                if self.tables.size > 64 {
                    return Err(EvalError::Guard(format!("set quantifier over {} elements", self.tables.size)));
                }
                let guard = match &split {
                    Some((y, guard, _)) => {
                        Some(self.bind_fo(y, |c, slot| Ok((slot, Box::new(c.compile(guard)?))))?)
                    }
                    None => {
                        if self.tables.size > self.limits.set_universe {
                            return Err(EvalError::Guard(format!(
                                "set quantifier over {} elements exceeds {}",
                                self.tables.size, self.limits.set_universe
                            )));
                        }
                        None
                    }
                };
                let slot = self.sets.len();
                self.set_slots = self.set_slots.max(slot + 1);
                self.sets.push((x.clone(), slot));
                let body = match &split {
                    Some((_, _, rest)) => self.compile(rest),
                    None => self.compile(g),
                };
                self.sets.pop();
                Node::Set { universal, slot, guard, body: Box::new(body?) }
            }
        })
    }
}

impl Compiled {
    /// Compiles `f` whose free first-order variables are among `params`; the
    /// assignment passed to [`Compiled::eval`] follows the order of `params`.
    pub fn new(f: &Formula, tables: &Tables, params: &[&str], limits: Limits) -> Result<Self, EvalError> {
        let mut c = Compiler {
            tables,
            fo: Vec::new(),
            sets: Vec::new(),
            fo_slots: params.len(),
            set_slots: 0,
            limits,
        };
        for (i, p) in params.iter().enumerate() {
            c.fo.push((p.to_string(), i));
        }
        let node = c.compile(f)?;
        Ok(Compiled {
            node,
            fo_slots: c.fo_slots,
            set_slots: c.set_slots,
            params: params.len(),
        })
    }

    pub fn eval(&self, tables: &Tables, assignment: &[usize], limits: Limits) -> Result<bool, EvalError> {
        assert_eq!(assignment.len(), self.params);
        let mut fo = vec![0; self.fo_slots];
        fo[..self.params].copy_from_slice(assignment);
        let mut env = Env {
            n: tables.size,
            fo,
            sets: vec![0; self.set_slots],
            tables,
            limit: limits.set_universe,
            exceeded: Cell::new(false),
        };
        let r = env.eval(&self.node);
        if env.exceeded.get() {
            return Err(EvalError::Guard(format!("set quantifier over more than {} elements", limits.set_universe)));
        }
        Ok(r)
    }
}

struct Env<'a> {
    n: usize,
    fo: Vec<usize>,
    sets: Vec<u64>,
    tables: &'a Tables,
    limit: usize,
    exceeded: Cell<bool>,
}

impl Env<'_> {
    fn eval(&mut self, node: &Node) -> bool {
        match node {
            Node::Const(b) => *b,
            Node::Rel(t, args) => {
                let n = self.n;
                let idx = args.iter().fold(0, |acc, &s| acc * n + self.fo[s]);
                self.tables.tables[*t].1[idx]
            }
            Node::Eq(a, b) => self.fo[*a] == self.fo[*b],
            Node::Mem(x, s) => self.sets[*s] >> self.fo[*x] & 1 == 1,
            Node::Not(g) => !self.eval(g),
            Node::And(gs) => gs.iter().all(|g| self.eval(g)),
            Node::Or(gs) => gs.iter().any(|g| self.eval(g)),
            Node::Exists(slot, g) => (0..self.n).any(|e| {
                self.fo[*slot] = e;
                self.eval(g)
            }),
            Node::Forall(slot, g) => (0..self.n).all(|e| {
                self.fo[*slot] = e;
                self.eval(g)
            }),
            Node::Set { universal, slot, guard, body } => {
                let full: u64 = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
                let range = match guard {
                    None => full,
                    Some((y, g)) => (0..self.n).fold(0u64, |m, e| {
                        self.fo[*y] = e;
                        if self.eval(g) {
                            m | 1 << e
                        } else {
                            m
                        }
                    }),
                };
                if range.count_ones() as usize > self.limit {
                    self.exceeded.set(true);
                    return false;
                }
                let saved = self.sets[*slot];
                // Enumerate submasks of `range`, starting from the full range.
                let mut sub = range;
                let result = loop {
                    self.sets[*slot] = sub;
                    let v = self.eval(body);
                    if v != *universal {
                        break v;
                    }
                    if sub == 0 {
                        break *universal;
                    }
                    sub = (sub - 1) & range;
                };
                self.sets[*slot] = saved;
                result
            }
        }
    }
}

/// Whether `sentence` holds in `s`.
pub fn holds(sentence: &Formula, s: &Structure, limits: Limits) -> Result<bool, EvalError> {
    let tables = Tables::new(s);
    Compiled::new(sentence, &tables, &[], limits)?.eval(&tables, &[], limits)
}

/// Whether `f` holds in `s` under the assignment `params[i] ↦ values[i]`.
pub fn satisfies(f: &Formula, s: &Structure, params: &[&str], values: &[usize], limits: Limits) -> Result<bool, EvalError> {
    let tables = Tables::new(s);
    Compiled::new(f, &tables, params, limits)?.eval(&tables, values, limits)
}
