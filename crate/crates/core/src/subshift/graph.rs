//! Edge-labeled directed graphs, their DOT form, entropy and languages.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::automaton::WordAutomaton;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabeledGraph {
    pub name: String,
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
    /// Set for finite-volume graphs whose words are paths from these vertices.
    pub start_vertices: Option<Vec<usize>>,
}

impl LabeledGraph {
    pub fn new(name: &str, vertices: &[&str]) -> Self {
        LabeledGraph {
            name: name.to_string(),
            vertices: vertices.iter().map(|v| v.to_string()).collect(),
            edges: Vec::new(),
            start_vertices: None,
        }
    }

    fn vertex(&self, name: &str) -> usize {
        self.vertices.iter().position(|v| v == name).unwrap_or_else(|| panic!("unknown vertex {name}"))
    }

    /// Adds one edge per label.
    pub fn edges_from(mut self, source: &str, target: &str, labels: &[u8]) -> Self {
        let (s, t) = (self.vertex(source), self.vertex(target));
        self.edges.extend(labels.iter().map(|&label| Edge { source: s, target: t, label }));
        self
    }

    pub fn with_start(mut self, starts: &[&str]) -> Self {
        self.start_vertices = Some(starts.iter().map(|s| self.vertex(s)).collect());
        self
    }

    pub fn alphabet(&self) -> u8 {
        self.edges.iter().map(|e| e.label + 1).max().unwrap_or(0)
    }

    /// Edge counts, parallel edges included.
    pub fn adjacency(&self) -> Vec<Vec<u64>> {
        let n = self.vertices.len();
        let mut a = vec![vec![0u64; n]; n];
        for e in &self.edges {
            a[e.source][e.target] += 1;
        }
        a
    }

    pub fn to_dot(&self) -> String {
        let mut s = format!("digraph \"{}\" {{\n", self.name);
        let starts = self.start_vertices.clone().unwrap_or_default();
        for (k, v) in self.vertices.iter().enumerate() {
            if starts.contains(&k) {
                s.push_str(&format!("  \"{v}\" [start=true];\n"));
            } else {
                s.push_str(&format!("  \"{v}\";\n"));
            }
        }
        for e in &self.edges {
            s.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
                self.vertices[e.source], self.vertices[e.target], e.label
            ));
        }
        s.push_str("}\n");
        s
    }

    /// Reads back the output of [`LabeledGraph::to_dot`].
    pub fn from_dot(src: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse { pos: line, msg: msg.to_string() };
        let mut lines = src.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| bad(0, "empty input"))?;
        let name = quoted(head).first().cloned().ok_or_else(|| bad(0, "missing graph name"))?;
        let mut g = LabeledGraph { name, vertices: Vec::new(), edges: Vec::new(), start_vertices: None };
        let mut starts = Vec::new();
        for (ln, line) in lines {
            let line = line.trim();
            if line == "}" || line.is_empty() {
                continue;
            }
            let q = quoted(line);
            if line.contains("->") {
                let [s, t, label] = q.as_slice() else {
                    return Err(bad(ln, "expected source, target and label"));
                };
                let label = label.parse::<u8>().map_err(|_| bad(ln, "label is not a symbol"))?;
                let (s, t) = (g.index_or_err(s, ln)?, g.index_or_err(t, ln)?);
                g.edges.push(Edge { source: s, target: t, label });
            } else {
                let v = q.first().ok_or_else(|| bad(ln, "expected a vertex"))?;
                g.vertices.push(v.clone());
                if line.contains("start=true") {
                    starts.push(g.vertices.len() - 1);
                }
            }
        }
        if !starts.is_empty() {
            g.start_vertices = Some(starts);
        }
        Ok(g)
    }

    fn index_or_err(&self, name: &str, line: usize) -> Result<usize> {
        self.vertices
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Parse { pos: line, msg: format!("undeclared vertex {name}") })
    }

    /// Strongly connected components carrying at least one cycle.
    pub fn essential_components(&self) -> Vec<Vec<usize>> {
        let mut pg = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = self.vertices.iter().map(|_| pg.add_node(())).collect();
        for e in &self.edges {
            pg.add_edge(nodes[e.source], nodes[e.target], ());
        }
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&pg)
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                c.sort_unstable();
                c
            })
            .filter(|c| c.len() > 1 || self.edges.iter().any(|e| e.source == c[0] && e.target == c[0]))
            .collect();
        comps.sort();
        comps
    }

    /// Vertices lying on some bi-infinite path.
    fn bi_infinite_vertices(&self) -> (u64, u64) {
        let on_cycle: u64 = self.essential_components().iter().flatten().fold(0, |m, &v| m | 1 << v);
        let closure = |mut set: u64, forward: bool| loop {
            let mut next = set;
            for e in &self.edges {
                let (a, b) = if forward { (e.source, e.target) } else { (e.target, e.source) };
                if set >> a & 1 == 1 {
                    next |= 1 << b;
                }
            }
            if next == set {
                return set;
            }
            set = next;
        };
        // reachable from a cycle, and reaching a cycle
        (closure(on_cycle, true), closure(on_cycle, false))
    }
}

fn quoted(s: &str) -> Vec<String> {
    s.split('"').skip(1).step_by(2).map(|x| x.to_string()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphEntropy {
    /// log of the spectral radius (−∞ without cycles).
    pub value: f64,
    pub spectral_radius: f64,
    /// Collatz–Wielandt bracket on the spectral radius.
    pub lower: f64,
    pub upper: f64,
    pub components: Vec<Vec<String>>,
}

/// log ρ(A) over the essential components, by power iteration on A + I.
pub fn graph_entropy(g: &LabeledGraph) -> GraphEntropy {
    let a = g.adjacency();
    let comps = g.essential_components();
    let mut best = (0.0, 0.0, 0.0);
    for c in &comps {
        let n = c.len();
        let m: Vec<Vec<f64>> = c
            .iter()
            .map(|&i| c.iter().map(|&j| a[i][j] as f64 + if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut x = vec![1.0; n];
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        for _ in 0..200_000 {
            let y: Vec<f64> = m.iter().map(|row| row.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
            let ratios = y.iter().zip(&x).map(|(p, q)| p / q);
            lo = ratios.clone().fold(f64::INFINITY, f64::min);
            hi = ratios.fold(0.0, f64::max);
            let norm = y.iter().cloned().fold(0.0, f64::max);
            x = y.into_iter().map(|v| v / norm).collect();
            if hi - lo < 1e-13 * hi {
                break;
            }
        }
        let rho = 0.5 * (lo + hi) - 1.0;
        if rho > best.0 {
            best = (rho, lo - 1.0, hi - 1.0);
        }
    }
    GraphEntropy {
        value: best.0.ln(),
        spectral_radius: best.0,
        lower: best.1,
        upper: best.2,
        components: comps.iter().map(|c| c.iter().map(|&v| g.vertices[v].clone()).collect()).collect(),
    }
}

/// Words read along paths of a graph: bi-infinite paths, or paths from the
/// start vertices when those are set.
pub struct GraphLanguage<'a> {
    graph: &'a LabeledGraph,
    start: u64,
    accept: u64,
}

impl<'a> GraphLanguage<'a> {
    pub fn new(graph: &'a LabeledGraph) -> Self {
        assert!(graph.vertices.len() <= 64, "graph languages support at most 64 vertices");
        match &graph.start_vertices {
            Some(s) => GraphLanguage { graph, start: s.iter().fold(0, |m, &v| m | 1 << v), accept: u64::MAX },
            None => {
                let (from, to) = graph.bi_infinite_vertices();
                GraphLanguage { graph, start: from & to, accept: from & to }
            }
        }
    }
}

impl WordAutomaton for GraphLanguage<'_> {
    type State = u64;

    fn alphabet(&self) -> u8 {
        self.graph.alphabet()
    }

    fn start(&self) -> u64 {
        self.start
    }

    fn successors(&self, s: &u64) -> Vec<(u8, u64)> {
        let mut out: std::collections::BTreeMap<u8, u64> = std::collections::BTreeMap::new();
        for e in &self.graph.edges {
            if s >> e.source & 1 == 1 {
                *out.entry(e.label).or_insert(0) |= 1 << e.target;
            }
        }
        out.into_iter().collect()
    }

    fn accepts(&self, s: &u64) -> bool {
        s & self.accept != 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_two_shift() {
        let g = LabeledGraph::new("full", &["a", "b"])
            .edges_from("a", "a", &[0])
            .edges_from("a", "b", &[1])
            .edges_from("b", "a", &[0])
            .edges_from("b", "b", &[1]);
        let e = graph_entropy(&g);
        assert!((e.value - 2f64.ln()).abs() < 1e-12);
        assert!(e.lower <= 2.0 + 1e-12 && e.upper >= 2.0 - 1e-12);
    }

    #[test]
    fn dot_round_trip() {
        let g = LabeledGraph::new("t", &["s", "x"]).edges_from("s", "x", &[0, 1]).edges_from("x", "x", &[2]).with_start(&["s"]);
        assert_eq!(LabeledGraph::from_dot(&g.to_dot()).unwrap(), g);
        assert!(LabeledGraph::from_dot("digraph \"x\" {\n  \"a\" -> \"b\" [label=\"1\"];\n}\n").is_err());
    }

    #[test]
    fn acyclic_graph_has_no_entropy() {
        let g = LabeledGraph::new("line", &["a", "b"]).edges_from("a", "b", &[0]);
        assert_eq!(graph_entropy(&g).value, f64::NEG_INFINITY);
    }
}
