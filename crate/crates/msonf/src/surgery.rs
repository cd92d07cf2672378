//! Syntactic transformations of formulas used by the rewrite rules.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{and, eq, exists, forall, mem, not, or, rel, Formula};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SurgeryError {
    #[error("relation {name} is defined with {expected} parameters but used with {found} arguments")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("free variable {0} has no layer")]
    UnlayeredVariable(String),
}

/// Deterministic supply of names that avoid every name seen so far.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    used: BTreeSet<String>,
}

impl NameSupply {
    pub fn new() -> Self {
        NameSupply::default()
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn reserve_formula(&mut self, f: &Formula) {
        let mut names = BTreeSet::new();
        f.variable_names(&mut names);
        let mut rels = BTreeMap::new();
        f.relations(&mut rels);
        self.used.extend(names);
        self.used.extend(rels.into_keys());
    }

    pub fn is_used(&self, name: &str) -> bool {
        self.used.contains(name)
    }

    /// `base` itself if unused, otherwise `base_1`, `base_2`, … Reserves the result.
    pub fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut i = 1;
        while self.used.contains(&name) {
            name = format!("{base}_{i}");
            i += 1;
        }
        self.used.insert(name.clone());
        name
    }
}

/// A formula with named parameters, such as `φ_R(x_1, …, x_r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub params: Vec<String>,
    pub body: Formula,
}

impl Definition {
    pub fn new(params: &[&str], body: Formula) -> Self {
        Definition { params: params.iter().map(|p| p.to_string()).collect(), body }
    }

    /// The body with parameters replaced by `args`, renaming bound variables that
    /// would capture an argument.
    pub fn instantiate(&self, args: &[String], names: &mut NameSupply) -> Formula {
        let map: BTreeMap<String, String> = self.params.iter().cloned().zip(args.iter().cloned()).collect();
        rename_variables(&self.body, &map, &BTreeMap::new(), names)
    }
}

/// Capture-avoiding renaming of free first-order and set variables.
pub fn rename_variables(
    f: &Formula,
    fo: &BTreeMap<String, String>,
    sets: &BTreeMap<String, String>,
    names: &mut NameSupply,
) -> Formula {
    names.reserve_formula(f);
    fo.values().chain(sets.values()).for_each(|v| names.reserve(v));
    rename_in(f, fo, sets, names)
}

fn rename_in(f: &Formula, fo: &BTreeMap<String, String>, sets: &BTreeMap<String, String>, names: &mut NameSupply) -> Formula {
    let v = |x: &String| fo.get(x).cloned().unwrap_or_else(|| x.clone());
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(v).collect()),
        Formula::Eq(x, y) => Formula::Eq(v(x), v(y)),
        Formula::Mem(x, s) => Formula::Mem(v(x), sets.get(s).cloned().unwrap_or_else(|| s.clone())),
        Formula::Not(g) => not(rename_in(g, fo, sets, names)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename_in(g, fo, sets, names)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename_in(g, fo, sets, names)).collect()),
        Formula::Exists(x, g) | Formula::Forall(x, g) => {
            let mut inner = fo.clone();
            inner.remove(x);
            let binder = if inner.values().any(|w| w == x) {
                let fresh = names.fresh(x);
                inner.insert(x.clone(), fresh.clone());
                fresh
            } else {
                x.clone()
            };
            let body = Box::new(rename_in(g, &inner, sets, names));
            match f {
                Formula::Exists(..) => Formula::Exists(binder, body),
                _ => Formula::Forall(binder, body),
            }
        }
        Formula::ExistsSet(x, g) | Formula::ForallSet(x, g) => {
            let mut inner = sets.clone();
            inner.remove(x);
            let binder = if inner.values().any(|w| w == x) {
                let fresh = names.fresh(x);
                inner.insert(x.clone(), fresh.clone());
                fresh
            } else {
                x.clone()
            };
            let body = Box::new(rename_in(g, fo, &inner, names));
            match f {
                Formula::ExistsSet(..) => Formula::ExistsSet(binder, body),
                _ => Formula::ForallSet(binder, body),
            }
        }
    }
}

/// Replaces every atom `R(y_1, …, y_r)` with `R` in `defs` by `φ_R(y_1, …, y_r)`.
pub fn substitute_atoms(
    f: &Formula,
    defs: &BTreeMap<String, Definition>,
    names: &mut NameSupply,
) -> Result<Formula, SurgeryError> {
    names.reserve_formula(f);
    substitute_in(f, defs, names)
}

fn substitute_in(f: &Formula, defs: &BTreeMap<String, Definition>, names: &mut NameSupply) -> Result<Formula, SurgeryError> {
    Ok(match f {
        Formula::Rel(r, args) => match defs.get(r) {
            Some(d) => {
                if d.params.len() != args.len() {
                    return Err(SurgeryError::ArityMismatch {
                        name: r.clone(),
                        expected: d.params.len(),
                        found: args.len(),
                    });
                }
                d.instantiate(args, names)
            }
            None => f.clone(),
        },
        Formula::Not(g) => not(substitute_in(g, defs, names)?),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| substitute_in(g, defs, names)).collect::<Result<_, _>>()?),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| substitute_in(g, defs, names)).collect::<Result<_, _>>()?),
        Formula::Exists(x, g) => Formula::Exists(x.clone(), Box::new(substitute_in(g, defs, names)?)),
        Formula::Forall(x, g) => Formula::Forall(x.clone(), Box::new(substitute_in(g, defs, names)?)),
        Formula::ExistsSet(x, g) => Formula::ExistsSet(x.clone(), Box::new(substitute_in(g, defs, names)?)),
        Formula::ForallSet(x, g) => Formula::ForallSet(x.clone(), Box::new(substitute_in(g, defs, names)?)),
        _ => f.clone(),
    })
}

/// Renames relation symbols; symbols outside `map` are kept.
pub fn rename_relations(f: &Formula, map: &BTreeMap<String, String>) -> Formula {
    match f {
        Formula::Rel(r, args) => Formula::Rel(map.get(r).cloned().unwrap_or_else(|| r.clone()), args.clone()),
        Formula::Not(g) => not(rename_relations(g, map)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename_relations(g, map)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename_relations(g, map)).collect()),
        Formula::Exists(x, g) => exists(x, rename_relations(g, map)),
        Formula::Forall(x, g) => forall(x, rename_relations(g, map)),
        Formula::ExistsSet(x, g) => crate::formula::exists_set(x, rename_relations(g, map)),
        Formula::ForallSet(x, g) => crate::formula::forall_set(x, rename_relations(g, map)),
        _ => f.clone(),
    }
}

/// `∀y (y ∈ X → G(y))`, the shape the evaluator recognizes as a guarded range.
fn subset_of_guard(set: &str, guard: &Definition, names: &mut NameSupply) -> Formula {
    let y = names.fresh("y");
    forall(&y, or(vec![not(mem(&y, set)), guard.instantiate(std::slice::from_ref(&y), names)]))
}

/// Restricts the range of every quantifier of `f` to (subsets of) elements
/// satisfying the one-parameter `guard`. Free variables are left alone.
pub fn relativize(f: &Formula, guard: &Definition, names: &mut NameSupply) -> Formula {
    assert_eq!(guard.params.len(), 1, "a guard has one parameter");
    names.reserve_formula(f);
    names.reserve_formula(&guard.body);
    relativize_in(f, guard, names)
}

fn relativize_in(f: &Formula, guard: &Definition, names: &mut NameSupply) -> Formula {
    match f {
        Formula::Not(g) => not(relativize_in(g, guard, names)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| relativize_in(g, guard, names)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| relativize_in(g, guard, names)).collect()),
        Formula::Exists(x, g) => exists(x, and(vec![guard.instantiate(std::slice::from_ref(x), names), relativize_in(g, guard, names)])),
        Formula::Forall(x, g) => forall(
            x,
            or(vec![not(guard.instantiate(std::slice::from_ref(x), names)), relativize_in(g, guard, names)]),
        ),
        Formula::ExistsSet(x, g) => crate::formula::exists_set(
            x,
            and(vec![subset_of_guard(x, guard, names), relativize_in(g, guard, names)]),
        ),
        Formula::ForallSet(x, g) => crate::formula::forall_set(
            x,
            or(vec![not(subset_of_guard(x, guard, names)), relativize_in(g, guard, names)]),
        ),
        _ => f.clone(),
    }
}

/// Relativizes `f` to `guard` and additionally requires each of `free` to satisfy it.
pub fn relativize_with_free(f: &Formula, free: &[String], guard: &Definition, names: &mut NameSupply) -> Formula {
    let mut parts: Vec<Formula> = free.iter().map(|x| guard.instantiate(std::slice::from_ref(x), names)).collect();
    parts.push(relativize(f, guard, names));
    and(parts)
}

/// Restricts every quantifier of `f` to the elements of the unary relation `layer`.
pub fn layer_restrict(f: &Formula, layer: &str, names: &mut NameSupply) -> Formula {
    let guard = Definition::new(&["u"], rel(layer, &["u"]));
    relativize(f, &guard, names)
}

/// Relation names introduced by a copying step.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CopyNames {
    pub copy: String,
    pub layers: Vec<String>,
}

impl CopyNames {
    /// The names `copy` and `layer_1`, …, `layer_k`.
    pub fn standard(k: usize) -> Self {
        CopyNames {
            copy: "copy".to_string(),
            layers: (1..=k).map(|i| format!("layer_{i}")).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.layers.len()
    }

    pub fn all(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.copy.as_str()).chain(self.layers.iter().map(String::as_str))
    }
}

/// Translates a sentence about the `k`-fold copy of a structure into a sentence
/// about the structure itself. Each first-order variable is tracked together with
/// the layer it ranges over and each set variable is split into one set per layer.
pub fn copy_backwards(f: &Formula, copy: &CopyNames, names: &mut NameSupply) -> Result<Formula, SurgeryError> {
    names.reserve_formula(f);
    copy_back_in(f, copy, &mut BTreeMap::new(), &mut BTreeMap::new(), names)
}

fn copy_back_in(
    f: &Formula,
    copy: &CopyNames,
    layer: &mut BTreeMap<String, usize>,
    sets: &mut BTreeMap<String, Vec<String>>,
    names: &mut NameSupply,
) -> Result<Formula, SurgeryError> {
    let layer_of = |x: &String, layer: &BTreeMap<String, usize>| {
        layer.get(x).copied().ok_or_else(|| SurgeryError::UnlayeredVariable(x.clone()))
    };
    let k = copy.k();
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Rel(r, args) if *r == copy.copy => {
            args.iter().try_for_each(|a| layer_of(a, layer).map(|_| ()))?;
            eq(&args[0], &args[1])
        }
        Formula::Rel(r, args) if copy.layers.contains(r) => {
            let i = copy.layers.iter().position(|l| l == r).unwrap();
            if layer_of(&args[0], layer)? == i {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Rel(..) => f.clone(),
        Formula::Eq(x, y) => {
            if layer_of(x, layer)? == layer_of(y, layer)? {
                f.clone()
            } else {
                Formula::False
            }
        }
        Formula::Mem(x, s) => {
            let i = layer_of(x, layer)?;
            match sets.get(s) {
                Some(parts) => mem(x, &parts[i]),
                None => return Err(SurgeryError::UnlayeredVariable(s.clone())),
            }
        }
        Formula::Not(g) => not(copy_back_in(g, copy, layer, sets, names)?),
        Formula::And(gs) => Formula::And(
            gs.iter()
                .map(|g| copy_back_in(g, copy, layer, sets, names))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Or(gs) => Formula::Or(
            gs.iter()
                .map(|g| copy_back_in(g, copy, layer, sets, names))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Exists(x, g) | Formula::Forall(x, g) => {
            let saved = layer.get(x).copied();
            let mut branches = Vec::with_capacity(k);
            for i in 0..k {
                layer.insert(x.clone(), i);
                let body = copy_back_in(g, copy, layer, sets, names)?;
                branches.push(match f {
                    Formula::Exists(..) => exists(x, body),
                    _ => forall(x, body),
                });
            }
            match saved {
                Some(i) => layer.insert(x.clone(), i),
                None => layer.remove(x),
            };
            match f {
                Formula::Exists(..) => or(branches),
                _ => and(branches),
            }
        }
        Formula::ExistsSet(x, g) | Formula::ForallSet(x, g) => {
            let parts: Vec<String> = (1..=k).map(|i| names.fresh(&format!("{x}_{i}"))).collect();
            let saved = sets.insert(x.clone(), parts.clone());
            let mut body = copy_back_in(g, copy, layer, sets, names)?;
            match saved {
                Some(p) => sets.insert(x.clone(), p),
                None => sets.remove(x),
            };
            for p in parts.iter().rev() {
                body = match f {
                    Formula::ExistsSet(..) => crate::formula::exists_set(p, body),
                    _ => crate::formula::forall_set(p, body),
                };
            }
            body
        }
    })
}
