//! Readers and writers for the PACE `.gr` / `.td` formats and the `.sf` forest format.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::decomposition::{DecompositionError, TreeDecomposition};
use crate::forest::{Node, RootedForest};
use crate::graph::{Graph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

fn numbers(line_no: usize, fields: &[&str]) -> Result<Vec<usize>, ParseError> {
    fields
        .iter()
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| ParseError::new(line_no, format!("expected a nonnegative integer, found {s:?}")))
        })
        .collect()
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, f)| !f.is_empty())
}

pub fn parse_gr(text: &str) -> Result<Graph, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (no, fields) in content_lines(text) {
        last_line = no;
        match fields[0] {
            "c" => continue,
            "p" => {
                if header.is_some() {
                    return Err(ParseError::new(no, "duplicate header"));
                }
                if fields.len() != 4 || fields[1] != "tw" {
                    return Err(ParseError::new(no, "header must be \"p tw <n> <m>\""));
                }
                let v = numbers(no, &fields[2..])?;
                header = Some((v[0], v[1]));
            }
            _ => {
                let Some((n, _)) = header else {
                    return Err(ParseError::new(no, "edge before header"));
                };
                if fields.len() != 2 {
                    return Err(ParseError::new(no, "edge line must be \"<u> <v>\""));
                }
                let v = numbers(no, &fields)?;
                if v[0] == 0 || v[1] == 0 || v[0] > n || v[1] > n {
                    return Err(ParseError::new(no, format!("vertex outside 1..={n}")));
                }
                if v[0] == v[1] {
                    return Err(ParseError::new(no, "self-loop"));
                }
                edges.push((no, v[0], v[1]));
            }
        }
    }
    let Some((n, m)) = header else {
        return Err(ParseError::new(last_line.max(1), "missing header \"p tw <n> <m>\""));
    };
    if edges.len() != m {
        return Err(ParseError::new(
            last_line,
            format!("header announces {m} edges, found {}", edges.len()),
        ));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(no, u, v) in &edges {
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(ParseError::new(no, format!("duplicate edge {u}-{v}")));
        }
    }
    let pairs: Vec<_> = edges.iter().map(|&(_, u, v)| (u, v)).collect();
    Graph::new(n, &pairs).map_err(|e| ParseError::new(last_line, e.to_string()))
}

pub fn write_gr(g: &Graph) -> String {
    let mut out = format!("p tw {} {}\n", g.vertex_count(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// A parsed `.td` file before it is attached to a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdFile {
    pub vertex_count: usize,
    pub bags: Vec<Vec<Vertex>>,
    pub edges: Vec<(Node, Node)>,
    /// Roots named by `c root <id>` lines, in file order.
    pub roots: Vec<Node>,
    /// The decomposition forest after rooting.
    pub forest: RootedForest,
}

impl TdFile {
    pub fn into_decomposition(self, g: &Graph) -> Result<TreeDecomposition<'_>, DecompositionError> {
        TreeDecomposition::new(g, self.forest, self.bags)
    }
}

/// Parses a `.td` file. Each component of the bag tree is rooted at the bag named by a
/// `c root <id>` line when present, otherwise at its lowest-numbered bag.
pub fn parse_td(text: &str) -> Result<TdFile, ParseError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut bags: Vec<Option<Vec<Vertex>>> = Vec::new();
    let mut edges = Vec::new();
    let mut roots = Vec::new();
    let mut last_line = 0;
    for (no, fields) in content_lines(text) {
        last_line = no;
        match fields[0] {
            "c" => {
                if fields.len() == 3 && fields[1] == "root" {
                    roots.push((no, numbers(no, &fields[2..])?[0]));
                }
            }
            "s" => {
                if header.is_some() {
                    return Err(ParseError::new(no, "duplicate header"));
                }
                if fields.len() != 5 || fields[1] != "td" {
                    return Err(ParseError::new(
                        no,
                        "header must be \"s td <bags> <max_bag_size> <n>\"",
                    ));
                }
                let v = numbers(no, &fields[2..])?;
                header = Some((v[0], v[1], v[2]));
                bags = vec![None; v[0]];
            }
            "b" => {
                let Some((count, max_bag, n)) = header else {
                    return Err(ParseError::new(no, "bag before header"));
                };
                if fields.len() < 2 {
                    return Err(ParseError::new(no, "bag line must be \"b <id> <vertices>\""));
                }
                let v = numbers(no, &fields[1..])?;
                let id = v[0];
                if id == 0 || id > count {
                    return Err(ParseError::new(no, format!("bag id {id} outside 1..={count}")));
                }
                if bags[id - 1].is_some() {
                    return Err(ParseError::new(no, format!("bag {id} defined twice")));
                }
                let mut bag = v[1..].to_vec();
                if let Some(&bad) = bag.iter().find(|&&x| x == 0 || x > n) {
                    return Err(ParseError::new(no, format!("vertex {bad} outside 1..={n}")));
                }
                bag.sort_unstable();
                bag.dedup();
                if bag.len() > max_bag {
                    return Err(ParseError::new(
                        no,
                        format!("bag {id} has {} vertices, header allows {max_bag}", bag.len()),
                    ));
                }
                bags[id - 1] = Some(bag);
            }
            _ => {
                let Some((count, _, _)) = header else {
                    return Err(ParseError::new(no, "edge before header"));
                };
                if fields.len() != 2 {
                    return Err(ParseError::new(no, "tree edge line must be \"<x> <y>\""));
                }
                let v = numbers(no, &fields)?;
                if v[0] == 0 || v[1] == 0 || v[0] > count || v[1] > count || v[0] == v[1] {
                    return Err(ParseError::new(no, format!("invalid tree edge {} {}", v[0], v[1])));
                }
                edges.push((no, v[0], v[1]));
            }
        }
    }
    let Some((count, _, n)) = header else {
        return Err(ParseError::new(last_line.max(1), "missing header \"s td ...\""));
    };
    let bags: Vec<Vec<Vertex>> = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| ParseError::new(last_line, format!("bag {} missing", i + 1))))
        .collect::<Result<_, _>>()?;

    let mut adj = vec![Vec::new(); count];
    for &(_, x, y) in &edges {
        adj[x - 1].push(y);
        adj[y - 1].push(x);
    }
    let mut parent: Vec<Option<Node>> = vec![None; count];
    let mut visited = vec![false; count];
    let mut root_order: Vec<Node> = Vec::new();
    for &(no, r) in &roots {
        if r == 0 || r > count {
            return Err(ParseError::new(no, format!("root {r} outside 1..={count}")));
        }
        root_order.push(r);
    }
    root_order.extend(1..=count);
    let mut used_edges = 0;
    for r in root_order {
        if visited[r - 1] {
            continue;
        }
        visited[r - 1] = true;
        let mut queue = VecDeque::from([r]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x - 1] {
                if Some(y) == parent[x - 1] {
                    continue;
                }
                if visited[y - 1] {
                    let line = edges.iter().find(|e| (e.1 == x && e.2 == y) || (e.1 == y && e.2 == x));
                    return Err(ParseError::new(
                        line.map_or(last_line, |e| e.0),
                        "bag edges do not form a forest",
                    ));
                }
                visited[y - 1] = true;
                parent[y - 1] = Some(x);
                used_edges += 1;
                queue.push_back(y);
            }
        }
    }
    if used_edges != edges.len() {
        return Err(ParseError::new(last_line, "bag edges do not form a forest"));
    }
    for &(no, r) in &roots {
        if parent[r - 1].is_some() {
            return Err(ParseError::new(no, format!("two roots given for the component of bag {r}")));
        }
    }
    let forest = RootedForest::new(parent).map_err(|e| ParseError::new(last_line, e.to_string()))?;
    Ok(TdFile {
        vertex_count: n,
        bags,
        edges: edges.iter().map(|&(_, x, y)| (x, y)).collect(),
        roots: roots.iter().map(|&(_, r)| r).collect(),
        forest,
    })
}

/// Writes a decomposition with one `c root` line per tree and edges as `<parent> <child>`.
pub fn write_td(t: &TreeDecomposition<'_>) -> String {
    let f = t.forest();
    let max_bag = t.bags().iter().map(Vec::len).max().unwrap_or(0);
    let mut out = format!(
        "s td {} {} {}\n",
        t.node_count(),
        max_bag,
        t.graph().vertex_count()
    );
    for &r in f.roots() {
        let _ = writeln!(out, "c root {r}");
    }
    for x in f.nodes() {
        out.push_str(&format!("b {x}"));
        for v in t.bag(x) {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for x in f.nodes() {
        if let Some(p) = f.parent(x) {
            let _ = writeln!(out, "{p} {x}");
        }
    }
    out
}

/// Parses a `.sf` file into a parent array (`None` for roots).
pub fn parse_sf(text: &str) -> Result<Vec<Option<Node>>, ParseError> {
    let mut n: Option<usize> = None;
    let mut parents: Vec<Option<Option<Node>>> = Vec::new();
    let mut last_line = 0;
    for (no, fields) in content_lines(text) {
        last_line = no;
        if fields[0] == "c" {
            continue;
        }
        if fields[0] == "sf" {
            if n.is_some() || fields.len() != 2 {
                return Err(ParseError::new(no, "header must be a single \"sf <n>\" line"));
            }
            let count = numbers(no, &fields[1..])?[0];
            n = Some(count);
            parents = vec![None; count];
            continue;
        }
        let Some(count) = n else {
            return Err(ParseError::new(no, "vertex line before header"));
        };
        if fields.len() != 2 {
            return Err(ParseError::new(no, "line must be \"<v> <parent-or-0>\""));
        }
        let v = numbers(no, &fields)?;
        if v[0] == 0 || v[0] > count || v[1] > count {
            return Err(ParseError::new(no, format!("vertex outside 1..={count}")));
        }
        if parents[v[0] - 1].is_some() {
            return Err(ParseError::new(no, format!("vertex {} listed twice", v[0])));
        }
        parents[v[0] - 1] = Some(if v[1] == 0 { None } else { Some(v[1]) });
    }
    if n.is_none() {
        return Err(ParseError::new(last_line.max(1), "missing header \"sf <n>\""));
    }
    parents
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| ParseError::new(last_line, format!("vertex {} missing", i + 1))))
        .collect()
}

pub fn write_sf(f: &RootedForest) -> String {
    let mut out = format!("sf {}\n", f.node_count());
    for v in f.nodes() {
        let _ = writeln!(out, "{v} {}", f.parent(v).unwrap_or(0));
    }
    out
}
