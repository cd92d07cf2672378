//! Rooted forests stored parent-up, with precomputed traversal data.

use std::collections::BTreeSet;

use thiserror::Error;

/// A forest node, numbered from 1.
pub type Node = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("node {0} has parent {1} outside 1..={2}")]
    ParentOutOfRange(Node, Node, usize),
    #[error("parent relation has a cycle through node {0}")]
    Cycle(Node),
    #[error("unknown node {0}")]
    UnknownNode(Node),
}

/// An immutable rooted forest over nodes `1..=node_count`.
///
/// Children lists and roots are kept in ascending order. Pre-order entry and
/// exit times make ancestor queries constant time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RootedForest {
    parent: Vec<Option<Node>>,
    children: Vec<Vec<Node>>,
    roots: Vec<Node>,
    depth: Vec<usize>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    preorder: Vec<Node>,
}

impl RootedForest {
    /// Builds a forest from `parents[i]`, the parent of node `i + 1` (`None` for roots).
    pub fn new(parents: Vec<Option<Node>>) -> Result<Self, ForestError> {
        let n = parents.len();
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (i, p) in parents.iter().enumerate() {
            match *p {
                None => roots.push(i + 1),
                Some(p) if p == 0 || p > n => {
                    return Err(ForestError::ParentOutOfRange(i + 1, p, n))
                }
                Some(p) => children[p - 1].push(i + 1),
            }
        }
        let mut depth = vec![usize::MAX; n];
        let mut tin = vec![0; n];
        let mut tout = vec![0; n];
        let mut preorder = Vec::with_capacity(n);
        let mut stack: Vec<(Node, usize)> = Vec::new();
        for &r in &roots {
            depth[r - 1] = 0;
            stack.push((r, 0));
            tin[r - 1] = preorder.len();
            preorder.push(r);
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if let Some(&c) = children[u - 1].get(*next) {
                    *next += 1;
                    depth[c - 1] = depth[u - 1] + 1;
                    tin[c - 1] = preorder.len();
                    preorder.push(c);
                    stack.push((c, 0));
                } else {
                    tout[u - 1] = preorder.len();
                    stack.pop();
                }
            }
        }
        if preorder.len() != n {
            let stuck = (1..=n).find(|&v| depth[v - 1] == usize::MAX).unwrap();
            return Err(ForestError::Cycle(stuck));
        }
        Ok(RootedForest {
            parent: parents,
            children,
            roots,
            depth,
            tin,
            tout,
            preorder,
        })
    }

    pub fn empty() -> Self {
        RootedForest::new(Vec::new()).unwrap()
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> {
        1..=self.parent.len()
    }

    pub fn contains(&self, x: Node) -> bool {
        x >= 1 && x <= self.parent.len()
    }

    pub fn parent(&self, x: Node) -> Option<Node> {
        self.parent[x - 1]
    }

    /// The parent array, indexed by `node - 1`.
    pub fn parents(&self) -> &[Option<Node>] {
        &self.parent
    }

    pub fn children(&self, x: Node) -> &[Node] {
        &self.children[x - 1]
    }

    pub fn roots(&self) -> &[Node] {
        &self.roots
    }

    pub fn is_root(&self, x: Node) -> bool {
        self.parent[x - 1].is_none()
    }

    pub fn is_leaf(&self, x: Node) -> bool {
        self.children[x - 1].is_empty()
    }

    pub fn depth(&self, x: Node) -> usize {
        self.depth[x - 1]
    }

    /// Nodes sharing `x`'s parent (or all roots, for a root), excluding `x`.
    pub fn siblings(&self, x: Node) -> Vec<Node> {
        let group = match self.parent(x) {
            Some(p) => self.children(p),
            None => &self.roots[..],
        };
        group.iter().copied().filter(|&y| y != x).collect()
    }

    /// Whether `a` and `b` are distinct with a common parent, or both roots.
    pub fn are_siblings(&self, a: Node, b: Node) -> bool {
        a != b && self.parent(a) == self.parent(b)
    }

    /// Reflexive ancestor test.
    pub fn is_ancestor(&self, a: Node, d: Node) -> bool {
        self.tin[a - 1] <= self.tin[d - 1] && self.tout[d - 1] <= self.tout[a - 1]
    }

    pub fn is_strict_ancestor(&self, a: Node, d: Node) -> bool {
        a != d && self.is_ancestor(a, d)
    }

    /// Whether one of the two nodes is an ancestor of the other.
    pub fn comparable(&self, a: Node, b: Node) -> bool {
        self.is_ancestor(a, b) || self.is_ancestor(b, a)
    }

    /// Descendants of `x` including `x`, in pre-order.
    pub fn descendants(&self, x: Node) -> &[Node] {
        &self.preorder[self.tin[x - 1]..self.tout[x - 1]]
    }

    pub fn subtree_size(&self, x: Node) -> usize {
        self.tout[x - 1] - self.tin[x - 1]
    }

    /// Strict ancestors of `x`, nearest first.
    pub fn strict_ancestors(&self, x: Node) -> Vec<Node> {
        let mut out = Vec::with_capacity(self.depth(x));
        let mut cur = self.parent(x);
        while let Some(p) = cur {
            out.push(p);
            cur = self.parent(p);
        }
        out
    }

    pub fn root_of(&self, x: Node) -> Node {
        let mut cur = x;
        while let Some(p) = self.parent(cur) {
            cur = p;
        }
        cur
    }

    /// Lowest common ancestor, or `None` when the nodes lie in different trees.
    pub fn lca(&self, a: Node, b: Node) -> Option<Node> {
        let (mut a, mut b) = (a, b);
        while self.depth(a) > self.depth(b) {
            a = self.parent(a)?;
        }
        while self.depth(b) > self.depth(a) {
            b = self.parent(b)?;
        }
        while a != b {
            a = self.parent(a)?;
            b = self.parent(b)?;
        }
        Some(a)
    }

    /// Nodes on the path between `a` and `b`, in order from `a` to `b`.
    pub fn path(&self, a: Node, b: Node) -> Option<Vec<Node>> {
        let top = self.lca(a, b)?;
        let mut up = vec![a];
        let mut cur = a;
        while cur != top {
            cur = self.parent(cur).unwrap();
            up.push(cur);
        }
        let mut down = Vec::new();
        cur = b;
        while cur != top {
            down.push(cur);
            cur = self.parent(cur).unwrap();
        }
        up.extend(down.into_iter().rev());
        Some(up)
    }

    /// All nodes in pre-order: roots ascending, children ascending.
    pub fn preorder(&self) -> &[Node] {
        &self.preorder
    }

    /// All nodes in post-order with ascending-id tie-breaks.
    pub fn postorder(&self) -> Vec<Node> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut stack: Vec<(Node, usize)> = self.roots.iter().rev().map(|&r| (r, 0)).collect();
        while let Some((u, next)) = stack.pop() {
            if let Some(&c) = self.children(u).get(next) {
                stack.push((u, next + 1));
                stack.push((c, 0));
            } else {
                out.push(u);
            }
        }
        out
    }

    /// Nodes of `set` whose parent lies outside `set`.
    pub fn tops(&self, set: &BTreeSet<Node>) -> Vec<Node> {
        set.iter()
            .copied()
            .filter(|&x| self.parent(x).is_none_or(|p| !set.contains(&p)))
            .collect()
    }

    /// Union of the descendant sets of the given nodes.
    pub fn descendant_closure(&self, tops: &[Node]) -> BTreeSet<Node> {
        tops.iter()
            .flat_map(|&x| self.descendants(x).iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f_ex() -> RootedForest {
        RootedForest::new(vec![None, Some(1), Some(2), Some(2), Some(1)]).unwrap()
    }

    #[test]
    fn derived_queries() {
        let f = f_ex();
        assert_eq!(f.roots(), &[1]);
        assert_eq!(f.children(2), &[3, 4]);
        assert_eq!(f.depth(4), 2);
        assert_eq!(f.siblings(3), vec![4]);
        assert!(f.is_ancestor(1, 4) && f.is_ancestor(4, 4));
        assert!(!f.is_ancestor(5, 4));
        assert_eq!(f.descendants(2), &[2, 3, 4]);
        assert_eq!(f.preorder(), &[1, 2, 3, 4, 5]);
        assert_eq!(f.postorder(), vec![3, 4, 2, 5, 1]);
        assert_eq!(f.lca(3, 5), Some(1));
        assert_eq!(f.path(3, 5), Some(vec![3, 2, 1, 5]));
        assert_eq!(f.strict_ancestors(4), vec![2, 1]);
    }

    #[test]
    fn roots_are_siblings() {
        let f = RootedForest::new(vec![None, None, Some(1)]).unwrap();
        assert!(f.are_siblings(1, 2));
        assert_eq!(f.siblings(2), vec![1]);
        assert_eq!(f.lca(2, 3), None);
    }

    #[test]
    fn rejects_cycles_and_bad_parents() {
        assert_eq!(
            RootedForest::new(vec![Some(2), Some(1)]),
            Err(ForestError::Cycle(1))
        );
        assert_eq!(
            RootedForest::new(vec![Some(3)]),
            Err(ForestError::ParentOutOfRange(1, 3, 1))
        );
        assert_eq!(RootedForest::new(vec![Some(1)]), Err(ForestError::Cycle(1)));
    }
}
