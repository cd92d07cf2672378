//! Local dealternation of context factors and the bottom-up global driver.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::decomposition::TreeDecomposition;
use crate::factorization::{maximal_factorization, Factor, Shape};
use crate::forest::{Node, RootedForest};
use crate::graph::{Graph, Vertex};
use crate::sepforest::SeparationForest;
use crate::words::{dealternate_word, ColoredWord, Letter};

/// Color of vertices in `U`.
pub const RED: char = 'r';
/// Color of vertices in `W`.
pub const BLUE: char = 'b';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DealternationError {
    #[error("separation forest is not reduced: vertex {0} sees nothing below its child {1}")]
    NotReduced(Vertex, Vertex),
    #[error("invalid tripartition: {0}")]
    BadPartition(String),
    #[error("factor is not a context factor of the maximal factorization of U and W")]
    NotAContext,
    #[error("separation forest width {forest} exceeds decomposition width {decomposition}")]
    WidthTooLarge { forest: usize, decomposition: usize },
    #[error("decomposition and forest are over different graphs")]
    GraphMismatch,
    #[error("decomposition is invalid: {0}")]
    InvalidDecomposition(String),
    #[error("reorganisation produced an invalid forest: {0}")]
    Broken(String),
}

/// The bound functions f, g and h for width `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub k: usize,
}

impl Bounds {
    pub fn new(k: usize) -> Self {
        Bounds { k }
    }

    /// Twice the exact value of `(k+2) + (2k+1)(5k+5)/2`.
    pub fn f_doubled(&self) -> usize {
        let k = self.k;
        2 * (k + 2) + (2 * k + 1) * (5 * k + 5)
    }

    /// `(k+2) + (2k+1)·⌈(5k+5)/2⌉`.
    pub fn f(&self) -> usize {
        let k = self.k;
        (k + 2) + (2 * k + 1) * (5 * k + 5).div_ceil(2)
    }

    /// `(9 f(k) + 3(k+1))·(k+1)`.
    pub fn g(&self) -> usize {
        let k = self.k;
        (9 * self.f() + 3 * (k + 1)) * (k + 1)
    }

    /// `g(k)·f(k) + 2f(k) + 2k + 1`.
    pub fn h(&self) -> usize {
        let (f, g) = (self.f(), self.g());
        g * f + 2 * f + 2 * self.k + 1
    }

    /// The exact value of f as a decimal string, e.g. `41.5`.
    pub fn f_rational(&self) -> String {
        let d = self.f_doubled();
        if d.is_multiple_of(2) {
            format!("{}", d / 2)
        } else {
            format!("{}.5", d / 2)
        }
    }
}

/// A partition `(U, X, W)` of the vertex set with no edge between `U` and `W`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tripartition {
    pub u: BTreeSet<Vertex>,
    pub x: BTreeSet<Vertex>,
    pub w: BTreeSet<Vertex>,
}

impl Tripartition {
    pub fn new(
        g: &Graph,
        u: BTreeSet<Vertex>,
        x: BTreeSet<Vertex>,
        w: BTreeSet<Vertex>,
    ) -> Result<Self, DealternationError> {
        let bad = |m: String| Err(DealternationError::BadPartition(m));
        if !u.is_disjoint(&x) || !u.is_disjoint(&w) || !x.is_disjoint(&w) {
            return bad("parts overlap".into());
        }
        if u.len() + x.len() + w.len() != g.vertex_count()
            || u.iter().chain(&x).chain(&w).any(|&v| !g.contains_vertex(v))
        {
            return bad("parts do not cover the vertex set".into());
        }
        for &a in &u {
            if let Some(b) = g.neighbors(a).iter().find(|b| w.contains(b)) {
                return bad(format!("edge {a}-{b} joins U and W"));
            }
        }
        Ok(Tripartition { u, x, w })
    }

    /// `(α(x), σ(x), rest)` for a node of a valid decomposition.
    pub fn at_node(t: &TreeDecomposition<'_>, x: Node) -> Result<Self, DealternationError> {
        let inv = |e: crate::decomposition::DecompositionError| {
            DealternationError::InvalidDecomposition(e.to_string())
        };
        let u = t.component(x).map_err(inv)?;
        let sep: BTreeSet<Vertex> = t.adhesion(x).map_err(inv)?.into_iter().collect();
        let w = t
            .graph()
            .vertices()
            .filter(|v| !u.contains(v) && !sep.contains(v))
            .collect();
        Self::new(t.graph(), u, sep, w)
    }

    pub fn color(&self, v: Vertex) -> Option<char> {
        if self.u.contains(&v) {
            Some(RED)
        } else if self.w.contains(&v) {
            Some(BLUE)
        } else {
            None
        }
    }

    pub fn colored(&self) -> BTreeSet<Vertex> {
        self.u.union(&self.w).copied().collect()
    }
}

/// Outcomes of the checks made while analysing one context factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpineClaims {
    /// Every vertex hanging off a spine vertex has that vertex's color.
    pub hang_sets_monochromatic: bool,
    /// `sum(x_i) = |σ(v_{i+1})| - |σ(v_i)|` in the induced decomposition.
    pub telescope: bool,
    /// `pmax(h) <= ℓ + 1 - |σ(v_1)|`.
    pub pmax_bound: bool,
    /// Both single-color restrictions of `h` have `pmin >= -ℓ`.
    pub pmin_bound: bool,
}

impl SpineClaims {
    pub fn all(&self) -> bool {
        self.hang_sets_monochromatic && self.telescope && self.pmax_bound && self.pmin_bound
    }
}

/// The structure of one context factor `B` of fact(U ∪ W).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpineAnalysis {
    pub context: Factor,
    /// `v_1 .. v_{m+1}`: from the root of `B` down to the parent of its appendices.
    pub spine: Vec<Vertex>,
    /// `R_i`: vertices of `B` whose lowest spine ancestor is `v_i`, excluding `v_i`.
    pub hang_sets: Vec<BTreeSet<Vertex>>,
    /// `C_i = {v_i} ∪ R_i`.
    pub contexts: Vec<BTreeSet<Vertex>>,
    /// `Q_i` for `i <= m`: ancestors in the bag of `v_i` but not in the bag of `v_{i+1}`.
    pub escape_sets: Vec<BTreeSet<Vertex>>,
    /// `h = x_1 … x_m` with `x_i = +(-)^{|Q_i|}` colored like `v_i`.
    pub word: ColoredWord,
    /// The dealternated word `h'`; its last block is the last block of `h` whenever
    /// `v_m` and `v_{m+1}` share a color.
    pub shuffled: ColoredWord,
    /// 1-based `π` with `h' = x_{π(1)} … x_{π(m)}`.
    pub permutation: Vec<usize>,
    pub claims: SpineClaims,
}

impl SpineAnalysis {
    /// Number of spine vertices that take part in the reordering.
    pub fn m(&self) -> usize {
        self.spine.len() - 1
    }

    /// Spine vertices in their new top-down order.
    pub fn new_spine(&self) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self.permutation.iter().map(|&i| self.spine[i - 1]).collect();
        out.push(*self.spine.last().unwrap());
        out
    }

    /// Groups of `C_i` that form monochromatic blocks of `h'`, plus `C_{m+1}`, each as
    /// (color, vertex set). After reorganisation each group is a factor.
    pub fn color_groups(&self, part: &Tripartition) -> Vec<(char, BTreeSet<Vertex>)> {
        let mut out: Vec<(char, BTreeSet<Vertex>)> = Vec::new();
        let mut last: Option<char> = None;
        for &i in &self.permutation {
            let c = part.color(self.spine[i - 1]).unwrap();
            if last == Some(c) {
                out.last_mut().unwrap().1.extend(self.contexts[i - 1].iter().copied());
            } else {
                out.push((c, self.contexts[i - 1].clone()));
            }
            last = Some(c);
        }
        let tail = *self.spine.last().unwrap();
        out.push((part.color(tail).unwrap(), self.contexts.last().unwrap().clone()));
        out
    }
}

fn ensure_reduced(f: &SeparationForest<'_>) -> Result<(), DealternationError> {
    match f.reduction_violations().first() {
        Some(&(u, v)) => Err(DealternationError::NotReduced(u, v)),
        None => Ok(()),
    }
}

/// Analyses a context factor `b` of fact(U ∪ W) in a reduced separation forest.
pub fn analyze_context(
    f: &SeparationForest<'_>,
    part: &Tripartition,
    b: &Factor,
) -> Result<SpineAnalysis, DealternationError> {
    ensure_reduced(f)?;
    let fact = maximal_factorization(f.forest(), &part.colored());
    if !b.is_context() || !fact.factors().contains(b) {
        return Err(DealternationError::NotAContext);
    }
    let bags = f.induced_bags();
    Ok(analyze_with_bags(f, part, b, &bags))
}

fn analyze_with_bags(
    f: &SeparationForest<'_>,
    part: &Tripartition,
    b: &Factor,
    bags: &[Vec<Vertex>],
) -> SpineAnalysis {
    let forest = f.forest();
    let g = f.graph();
    let Shape::Context { root, appendices } = b.shape() else {
        unreachable!("checked by caller")
    };
    let bottom = forest.parent(appendices[0]).unwrap();
    let mut spine = vec![bottom];
    let mut cur = bottom;
    while cur != *root {
        cur = forest.parent(cur).unwrap();
        spine.push(cur);
    }
    spine.reverse();
    let on_spine: BTreeSet<Vertex> = spine.iter().copied().collect();
    let m = spine.len() - 1;

    let mut hang_sets = Vec::with_capacity(m + 1);
    let mut contexts = Vec::with_capacity(m + 1);
    for &v in &spine {
        let r: BTreeSet<Vertex> = forest
            .children(v)
            .iter()
            .filter(|c| b.nodes().contains(c) && !on_spine.contains(c))
            .flat_map(|&c| forest.descendants(c).iter().copied())
            .filter(|x| b.nodes().contains(x))
            .collect();
        let mut c = r.clone();
        c.insert(v);
        hang_sets.push(r);
        contexts.push(c);
    }

    let mut escape_sets = Vec::with_capacity(m);
    for i in 0..m {
        let v = spine[i];
        let q: BTreeSet<Vertex> = forest
            .strict_ancestors(v)
            .into_iter()
            .filter(|&w| {
                let seen: Vec<Vertex> = forest
                    .descendants(v)
                    .iter()
                    .copied()
                    .filter(|&d| g.has_edge(w, d))
                    .collect();
                !seen.is_empty() && seen.iter().all(|d| contexts[i].contains(d))
            })
            .collect();
        escape_sets.push(q);
    }

    let mut letters = Vec::new();
    let mut colors = Vec::new();
    let mut owner = Vec::new();
    for i in 0..m {
        let c = part.color(spine[i]).unwrap();
        letters.push(Letter::Plus);
        colors.push(c);
        owner.push(i + 1);
        for _ in 0..escape_sets[i].len() {
            letters.push(Letter::Minus);
            colors.push(c);
            owner.push(i + 1);
        }
    }
    let word = ColoredWord::new(letters, colors).unwrap();
    // When v_m and v_{m+1} share a color, the block holding x_m stays last so that
    // v_{m+1} keeps its parent.
    let pinned = m > 0 && part.color(spine[m - 1]) == part.color(spine[m]);
    let (shuffled, positions) = if pinned {
        let last = word.blocks().pop().expect("m > 0");
        let head = ColoredWord::new(
            word.letters()[..last.start].to_vec(),
            word.colors()[..last.start].to_vec(),
        )
        .unwrap();
        let mut positions = dealternate_word(&head).expect("two colors").permutation;
        positions.extend(last);
        (word.permuted(&positions), positions)
    } else {
        let dealt = dealternate_word(&word).expect("two colors");
        (dealt.word, dealt.permutation)
    };
    let permutation: Vec<usize> = positions
        .iter()
        .filter(|&&p| word.letters()[p] == Letter::Plus)
        .map(|&p| owner[p])
        .collect();

    let adhesion = |v: Vertex| bags[v - 1].len() - 1;
    let width = bags.iter().map(Vec::len).max().unwrap_or(1) - 1;
    let hang_sets_monochromatic = spine
        .iter()
        .zip(&hang_sets)
        .all(|(&v, r)| r.iter().all(|&x| part.color(x) == part.color(v)));
    let mut telescope = true;
    let mut pos = 0;
    for i in 0..m {
        let len = 1 + escape_sets[i].len();
        let sum: i64 = word.letters()[pos..pos + len].iter().map(|l| l.value()).sum();
        pos += len;
        telescope &= sum == adhesion(spine[i + 1]) as i64 - adhesion(spine[i]) as i64;
    }
    let pmax_bound = word.pmax() <= (width + 1) as i64 - adhesion(spine[0]) as i64;
    let pmin_bound = [RED, BLUE]
        .iter()
        .all(|&c| word.restriction(c).pmin() >= -(width as i64));

    SpineAnalysis {
        context: b.clone(),
        spine,
        hang_sets,
        contexts,
        escape_sets,
        word,
        shuffled,
        permutation,
        claims: SpineClaims {
            hang_sets_monochromatic,
            telescope,
            pmax_bound,
            pmin_bound,
        },
    }
}

/// Result of one local dealternation step.
#[derive(Debug, Clone)]
pub struct LocalOutcome<'g> {
    pub forest: SeparationForest<'g>,
    /// One analysis per context factor of fact(U ∪ W), in factorization order.
    pub analyses: Vec<SpineAnalysis>,
    /// |fact(U)| in the output forest.
    pub u_factor_count: usize,
}

/// Reorders the spine of every context factor of fact(U ∪ W) by the dealternated word.
/// Forest factors and the last spine vertex of each context stay in place.
pub fn local_dealternate<'g>(
    f: &SeparationForest<'g>,
    part: &Tripartition,
) -> Result<LocalOutcome<'g>, DealternationError> {
    ensure_reduced(f)?;
    let g = f.graph();
    if part.u.len() + part.x.len() + part.w.len() != g.vertex_count() {
        return Err(DealternationError::BadPartition("parts do not cover the vertex set".into()));
    }
    let forest = f.forest();
    let fact = maximal_factorization(forest, &part.colored());
    let bags = f.induced_bags();
    let analyses: Vec<SpineAnalysis> = fact
        .factors()
        .iter()
        .filter(|b| b.is_context())
        .map(|b| analyze_with_bags(f, part, b, &bags))
        .collect();
    let mut parents = forest.parents().to_vec();
    for a in &analyses {
        if a.m() == 0 {
            continue;
        }
        let order = a.new_spine();
        parents[order[0] - 1] = forest.parent(a.spine[0]);
        for pair in order.windows(2) {
            parents[pair[1] - 1] = Some(pair[0]);
        }
    }
    let new_forest =
        RootedForest::new(parents).map_err(|e| DealternationError::Broken(e.to_string()))?;
    let out = SeparationForest::new(g, new_forest)
        .map_err(|e| DealternationError::Broken(e.to_string()))?;
    let u_factor_count = maximal_factorization(out.forest(), &part.u).len();
    Ok(LocalOutcome {
        forest: out,
        analyses,
        u_factor_count,
    })
}

/// max over nodes x of |fact_F(α_t(x))|.
pub fn t_alternation(t: &TreeDecomposition<'_>, f: &SeparationForest<'_>) -> usize {
    t.all_components()
        .iter()
        .map(|a| maximal_factorization(f.forest(), a).len())
        .max()
        .unwrap_or(0)
}

/// Per-node measurements of a decomposition against a separation forest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeReport {
    pub node: Node,
    /// |fact_F(α_t(x))|.
    pub factors: usize,
    /// Children y of x whose fact_F(α_t(y)) has a context factor.
    pub context_children: usize,
    pub bound_f: usize,
    pub bound_g: usize,
}

impl NodeReport {
    pub fn ok(&self) -> bool {
        self.factors <= self.bound_f && self.context_children <= self.bound_g
    }
}

impl fmt::Display for NodeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node {} factors={} context_children={} bound_f={} bound_g={} ok={}",
            self.node,
            self.factors,
            self.context_children,
            self.bound_f,
            self.bound_g,
            self.ok()
        )
    }
}

/// Measures both dealternation conditions at every node of `t`, with bounds for width `k`.
pub fn dealternation_report(
    t: &TreeDecomposition<'_>,
    f: &SeparationForest<'_>,
    k: usize,
) -> Vec<NodeReport> {
    let bounds = Bounds::new(k);
    let comps = t.all_components();
    let facts: Vec<_> = comps
        .iter()
        .map(|a| maximal_factorization(f.forest(), a))
        .collect();
    t.forest()
        .nodes()
        .map(|x| NodeReport {
            node: x,
            factors: facts[x - 1].len(),
            context_children: t
                .forest()
                .children(x)
                .iter()
                .filter(|&&y| facts[y - 1].has_context())
                .count(),
            bound_f: bounds.f(),
            bound_g: bounds.g(),
        })
        .collect()
}

/// State after processing one node in the global driver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepTrace {
    pub node: Node,
    pub reduced: bool,
    pub width: usize,
    /// max |fact(α_t(y))| over nodes y processed so far, including this one.
    pub max_processed_factors: usize,
    pub u_factor_count: usize,
}

#[derive(Debug, Clone)]
pub struct GlobalOutcome<'g> {
    pub forest: SeparationForest<'g>,
    pub steps: Vec<StepTrace>,
}

/// Applies local dealternation at every node of `t` in post-order (ascending-id
/// tie-breaks) with `(U, X, W) = (α(x), σ(x), rest)`.
///
/// `f0` must be reduced and no wider than `t`; its optimality is the caller's contract.
pub fn global_dealternate<'g>(
    t: &TreeDecomposition<'g>,
    f0: &SeparationForest<'g>,
) -> Result<GlobalOutcome<'g>, DealternationError> {
    if t.graph() != f0.graph() {
        return Err(DealternationError::GraphMismatch);
    }
    if let Some(v) = t.validate().first() {
        return Err(DealternationError::InvalidDecomposition(v.to_string()));
    }
    ensure_reduced(f0)?;
    let k = t.width();
    if f0.width() > k {
        return Err(DealternationError::WidthTooLarge {
            forest: f0.width(),
            decomposition: k,
        });
    }
    let comps = t.all_components();
    let mut current = f0.clone();
    let mut steps = Vec::new();
    let mut processed: Vec<Node> = Vec::new();
    for x in t.forest().postorder() {
        let part = Tripartition::at_node(t, x)?;
        let out = local_dealternate(&current, &part)?;
        current = out.forest;
        processed.push(x);
        let max_processed_factors = processed
            .iter()
            .map(|&y| maximal_factorization(current.forest(), &comps[y - 1]).len())
            .max()
            .unwrap_or(0);
        steps.push(StepTrace {
            node: x,
            reduced: current.is_reduced(),
            width: current.width(),
            max_processed_factors,
            u_factor_count: out.u_factor_count,
        });
    }
    Ok(GlobalOutcome {
        forest: current,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        let f: Vec<usize> = (0..4).map(|k| Bounds::new(k).f()).collect();
        assert_eq!(f, vec![5, 18, 44, 75]);
        assert_eq!(Bounds::new(1).g(), 336);
        assert_eq!(Bounds::new(1).h(), 6087);
        assert_eq!(Bounds::new(2).f_rational(), "41.5");
        assert_eq!(Bounds::new(1).f_rational(), "18");
    }

    #[test]
    fn shortest_spine_gives_single_plus() {
        let g = Graph::path(3);
        let f = SeparationForest::from_parents(&g, vec![None, Some(1), Some(2)]).unwrap();
        let part = Tripartition::new(
            &g,
            BTreeSet::from([1]),
            BTreeSet::from([3]),
            BTreeSet::from([2]),
        );
        assert!(part.is_err());
        let part =
            Tripartition::new(&g, BTreeSet::from([1, 2]), BTreeSet::from([3]), BTreeSet::new()).unwrap();
        let fact = maximal_factorization(f.forest(), &part.colored());
        let b = fact.factors()[0].clone();
        let a = analyze_context(&f, &part, &b).unwrap();
        assert_eq!(a.spine, vec![1, 2]);
        assert_eq!(a.word, ColoredWord::parse("+", "r").unwrap());
        assert_eq!(a.permutation, vec![1]);
        assert!(a.claims.all());
    }

    #[test]
    fn rejects_unreduced_input() {
        let g = Graph::new(3, &[(1, 2)]).unwrap();
        let f = SeparationForest::from_parents(&g, vec![None, Some(1), Some(2)]).unwrap();
        let part = Tripartition::new(&g, BTreeSet::from([1, 2, 3]), BTreeSet::new(), BTreeSet::new())
            .unwrap();
        assert_eq!(
            local_dealternate(&f, &part).unwrap_err(),
            DealternationError::NotReduced(2, 3)
        );
    }

    #[test]
    fn report_line_format() {
        let r = NodeReport {
            node: 3,
            factors: 2,
            context_children: 0,
            bound_f: 18,
            bound_g: 336,
        };
        assert_eq!(
            r.to_string(),
            "node 3 factors=2 context_children=0 bound_f=18 bound_g=336 ok=true"
        );
    }
}
