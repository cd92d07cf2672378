//! Forest and context factors, and maximal factorizations of node sets.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::forest::{Node, RootedForest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorKind {
    Forest,
    Context,
}

/// The boundary data of a factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    /// A nonempty union of tree factors rooted at pairwise siblings.
    Forest { roots: Vec<Node> },
    /// A tree factor minus a forest factor strictly below its root.
    Context { root: Node, appendices: Vec<Node> },
}

/// A factor of a rooted forest: its node set together with its shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factor {
    nodes: BTreeSet<Node>,
    shape: Shape,
}

impl Factor {
    /// Pairs a node set with a shape without checking that they agree.
    pub(crate) fn from_parts(nodes: BTreeSet<Node>, shape: Shape) -> Self {
        Factor { nodes, shape }
    }

    pub fn nodes(&self) -> &BTreeSet<Node> {
        &self.nodes
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn kind(&self) -> FactorKind {
        match self.shape {
            Shape::Forest { .. } => FactorKind::Forest,
            Shape::Context { .. } => FactorKind::Context,
        }
    }

    pub fn is_context(&self) -> bool {
        self.kind() == FactorKind::Context
    }

    /// A forest factor with a single root.
    pub fn is_tree(&self) -> bool {
        matches!(&self.shape, Shape::Forest { roots } if roots.len() == 1)
    }

    /// Roots of a forest factor, or the single root of a context factor.
    pub fn roots(&self) -> Vec<Node> {
        match &self.shape {
            Shape::Forest { roots } => roots.clone(),
            Shape::Context { root, .. } => vec![*root],
        }
    }

    /// Appendices of a context factor; empty for forest factors.
    pub fn appendices(&self) -> &[Node] {
        match &self.shape {
            Shape::Forest { .. } => &[],
            Shape::Context { appendices, .. } => appendices,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn list(out: &mut fmt::Formatter<'_>, xs: impl IntoIterator<Item = Node>) -> fmt::Result {
    let items: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    write!(out, "[{}]", items.join(","))
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            FactorKind::Forest => write!(f, "forest roots=")?,
            FactorKind::Context => write!(f, "context roots=")?,
        }
        list(f, self.roots())?;
        write!(f, " appendices=")?;
        list(f, self.appendices().iter().copied())?;
        write!(f, " nodes=")?;
        list(f, self.nodes.iter().copied())
    }
}

/// Classifies `nodes` as a factor of `forest`, or returns `None` if it is not one.
/// Tree factors come back as forest factors with one root.
pub fn is_factor(forest: &RootedForest, nodes: &BTreeSet<Node>) -> Option<Factor> {
    if nodes.is_empty() || nodes.iter().any(|&x| !forest.contains(x)) {
        return None;
    }
    let tops = forest.tops(nodes);
    let missing: Vec<Node> = nodes
        .iter()
        .flat_map(|&x| forest.children(x).iter().copied())
        .filter(|c| !nodes.contains(c))
        .collect();
    if missing.is_empty() {
        let p = forest.parent(tops[0]);
        if tops.iter().all(|&r| forest.parent(r) == p) {
            return Some(Factor {
                nodes: nodes.clone(),
                shape: Shape::Forest { roots: tops },
            });
        }
        return None;
    }
    if tops.len() != 1 {
        return None;
    }
    let p = forest.parent(missing[0]);
    if missing.iter().any(|&m| forest.parent(m) != p) {
        return None;
    }
    let mut appendices = missing;
    appendices.sort_unstable();
    Some(Factor {
        nodes: nodes.clone(),
        shape: Shape::Context {
            root: tops[0],
            appendices,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactorError {
    #[error("factors are disjoint")]
    Disjoint,
    #[error("union of the factors is not a factor")]
    NotAFactor,
    #[error("{0} is not a subset of {1}")]
    NotASubset(String, String),
}

/// The union of two intersecting factors, classified.
pub fn union_factors(forest: &RootedForest, f1: &Factor, f2: &Factor) -> Result<Factor, FactorError> {
    if f1.nodes.is_disjoint(&f2.nodes) {
        return Err(FactorError::Disjoint);
    }
    let union: BTreeSet<Node> = f1.nodes.union(&f2.nodes).copied().collect();
    is_factor(forest, &union).ok_or(FactorError::NotAFactor)
}

/// A partition of a node set into factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    subject: BTreeSet<Node>,
    factors: Vec<Factor>,
}

impl Factorization {
    pub fn subject(&self) -> &BTreeSet<Node> {
        &self.subject
    }

    /// Factors ordered by their smallest node.
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn forest_count(&self) -> usize {
        self.factors.iter().filter(|f| !f.is_context()).count()
    }

    pub fn context_count(&self) -> usize {
        self.factors.iter().filter(|f| f.is_context()).count()
    }

    pub fn has_context(&self) -> bool {
        self.factors.iter().any(Factor::is_context)
    }

    pub fn factor_of(&self, x: Node) -> Option<&Factor> {
        self.factors.iter().find(|f| f.nodes.contains(&x))
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for factor in &self.factors {
            writeln!(f, "{factor}")?;
        }
        Ok(())
    }
}

/// fact(U): the partition of `u` into its maximal U-factors.
///
/// Starts from singletons and merges any two parts whose union is a factor
/// until no merge applies.
pub fn maximal_factorization(forest: &RootedForest, u: &BTreeSet<Node>) -> Factorization {
    let mut parts: Vec<Factor> = u
        .iter()
        .map(|&x| is_factor(forest, &BTreeSet::from([x])).expect("singletons are factors"))
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        let mut i = 0;
        while i < parts.len() {
            let mut j = i + 1;
            while j < parts.len() {
                let union: BTreeSet<Node> = parts[i].nodes.union(&parts[j].nodes).copied().collect();
                if let Some(merged) = is_factor(forest, &union) {
                    parts[i] = merged;
                    parts.swap_remove(j);
                    changed = true;
                    j = i + 1;
                } else {
                    j += 1;
                }
            }
            i += 1;
        }
    }
    parts.sort_by_key(|f| *f.nodes.iter().next().unwrap());
    Factorization {
        subject: u.clone(),
        factors: parts,
    }
}

/// Outcome of checking the complement bounds for a set U with complement X.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplementReport {
    pub forest_factor_count: usize,
    pub context_factor_count: usize,
    /// |X| for the complement X.
    pub complement_size: usize,
    /// |fact(X)|.
    pub complement_factor_count: usize,
    /// At most |X|+1 forest and 2|X|-1 context factors.
    pub size_bounds_hold: bool,
    /// At most k+1 forest and 2k-1 context factors, with k = |fact(X)|.
    pub factor_bounds_hold: bool,
    pub bounds_hold: bool,
}

/// Checks both complement bounds on fact(U). Context bounds `2m-1` are read as
/// `max(2m-1, 0)`, so an empty complement allows no context factor.
pub fn complement_bounds_check(forest: &RootedForest, u: &BTreeSet<Node>) -> ComplementReport {
    let fact = maximal_factorization(forest, u);
    let complement: BTreeSet<Node> = forest.nodes().filter(|x| !u.contains(x)).collect();
    let k = maximal_factorization(forest, &complement).len();
    let x = complement.len();
    let (fc, cc) = (fact.forest_count(), fact.context_count());
    let size_ok = fc <= x + 1 && cc <= (2 * x).saturating_sub(1);
    let factor_ok = fc <= k + 1 && cc <= (2 * k).saturating_sub(1);
    ComplementReport {
        forest_factor_count: fc,
        context_factor_count: cc,
        complement_size: x,
        complement_factor_count: k,
        size_bounds_hold: size_ok,
        factor_bounds_hold: factor_ok,
        bounds_hold: size_ok && factor_ok,
    }
}

/// Outcome of the removal bound |fact(U')| <= 9|fact(U)| + 3l with l = |U \ U'|.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalReport {
    pub fact_u: usize,
    pub fact_u_prime: usize,
    pub removed: usize,
    pub bound: usize,
    pub holds: bool,
}

pub fn removal_bound_check(
    forest: &RootedForest,
    u: &BTreeSet<Node>,
    u_prime: &BTreeSet<Node>,
) -> Result<RemovalReport, FactorError> {
    if !u_prime.is_subset(u) {
        return Err(FactorError::NotASubset(format!("{u_prime:?}"), format!("{u:?}")));
    }
    let a = maximal_factorization(forest, u).len();
    let b = maximal_factorization(forest, u_prime).len();
    let removed = u.len() - u_prime.len();
    let bound = 9 * a + 3 * removed;
    Ok(RemovalReport {
        fact_u: a,
        fact_u_prime: b,
        removed,
        bound,
        holds: b <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f_ex() -> RootedForest {
        RootedForest::new(vec![None, Some(1), Some(2), Some(2), Some(1)]).unwrap()
    }

    fn set(xs: &[Node]) -> BTreeSet<Node> {
        xs.iter().copied().collect()
    }

    #[test]
    fn classification_examples() {
        let f = f_ex();
        let a = is_factor(&f, &set(&[3, 4])).unwrap();
        assert_eq!(a.shape(), &Shape::Forest { roots: vec![3, 4] });
        let b = is_factor(&f, &set(&[1])).unwrap();
        assert_eq!(
            b.shape(),
            &Shape::Context {
                root: 1,
                appendices: vec![2, 5]
            }
        );
        assert!(is_factor(&f, &set(&[1, 3])).is_none());
        assert!(is_factor(&f, &set(&[3, 5])).is_none());
        assert!(is_factor(&f, &set(&[1, 2, 3])).is_none());
        assert_eq!(
            is_factor(&f, &set(&[1, 2, 5])).unwrap().shape(),
            &Shape::Context {
                root: 1,
                appendices: vec![3, 4]
            }
        );
    }

    #[test]
    fn factorization_examples() {
        let f = f_ex();
        let all = maximal_factorization(&f, &set(&[1, 2, 3, 4, 5]));
        assert_eq!(all.len(), 1);
        assert!(all.factors()[0].is_tree());

        let leaves = maximal_factorization(&f, &set(&[3, 4, 5]));
        assert_eq!(leaves.len(), 2);
        assert_eq!(leaves.factors()[0].nodes(), &set(&[3, 4]));
        assert_eq!(leaves.factors()[1].nodes(), &set(&[5]));

        let top = maximal_factorization(&f, &set(&[1, 2]));
        assert_eq!(top.context_count(), 2);
        assert_eq!(top.factors()[0].appendices(), &[2, 5]);
        assert_eq!(top.factors()[1].appendices(), &[3, 4]);
        assert!(maximal_factorization(&f, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn union_examples() {
        let f = f_ex();
        let c2 = is_factor(&f, &set(&[2])).unwrap();
        let f34 = is_factor(&f, &set(&[3, 4])).unwrap();
        assert_eq!(union_factors(&f, &c2, &c2).unwrap(), c2);
        assert_eq!(union_factors(&f, &c2, &f34), Err(FactorError::Disjoint));
        let tree = is_factor(&f, &set(&[2, 3, 4])).unwrap();
        assert_eq!(union_factors(&f, &c2, &tree).unwrap(), tree);
        let c1 = is_factor(&f, &set(&[1])).unwrap();
        let c15 = is_factor(&f, &set(&[1, 5])).unwrap();
        let merged = union_factors(&f, &c1, &c15).unwrap();
        assert_eq!(
            merged.shape(),
            &Shape::Context {
                root: 1,
                appendices: vec![2]
            }
        );
    }

    #[test]
    fn bound_examples() {
        let f = f_ex();
        let whole = complement_bounds_check(&f, &set(&[1, 2, 3, 4, 5]));
        assert_eq!((whole.forest_factor_count, whole.context_factor_count), (1, 0));
        assert!(whole.bounds_hold);
        let top = complement_bounds_check(&f, &set(&[1, 2]));
        assert_eq!(top.complement_factor_count, 2);
        assert_eq!((top.forest_factor_count, top.context_factor_count), (0, 2));
        assert!(top.bounds_hold);
        let r = removal_bound_check(&f, &set(&[2, 3, 4]), &set(&[3, 4])).unwrap();
        assert_eq!((r.fact_u, r.fact_u_prime, r.bound), (1, 1, 12));
        assert!(r.holds);
    }

    #[test]
    fn display_format() {
        let f = f_ex();
        let b = is_factor(&f, &set(&[1])).unwrap();
        assert_eq!(b.to_string(), "context roots=[1] appendices=[2,5] nodes=[1]");
    }
}
