//! Hand transcriptions of the worked-example graphs for f = 2 − u⁻¹,
//! g = 2 − u, h = 5 − 2u − 2u⁻¹, kept apart from everything else and
//! checked against enumeration.

use std::collections::BTreeSet;

use serde::Serialize;

use super::automaton::{compare_languages, enumerate_words, LanguageComparison};
use super::graph::{graph_entropy, GraphLanguage, LabeledGraph};
use super::{PatternModel, DEFAULT_COLLAR};
use crate::error::Result;
use crate::exec::Exec;
use crate::laurent::{parse, LaurentPoly};
use crate::product::{build_product_model, WStrategy};
use crate::window::Window;

/// Longest word length compared.
pub const FIGURE_MAX_LENGTH: usize = 10;

fn example() -> (LaurentPoly, LaurentPoly, LaurentPoly) {
    let f = parse("-u^-1+2").unwrap();
    let g = parse("2-u").unwrap();
    let h = f.mul(&g).unwrap();
    (f, g, h)
}

/// Graphs for R_h, V, W, V_F and W_F, in that order.
pub fn figure_graphs() -> Vec<LabeledGraph> {
    let r = LabeledGraph::new("R_h", &["X1", "X2", "X3"])
        .edges_from("X1", "X1", &[2, 3, 4])
        .edges_from("X1", "X2", &[0, 1])
        .edges_from("X2", "X1", &[4])
        .edges_from("X2", "X3", &[2, 3])
        .edges_from("X3", "X3", &[2, 3])
        .edges_from("X3", "X1", &[4]);
    let v = LabeledGraph::new("V", &["A", "B", "C", "D"])
        .edges_from("A", "A", &[2])
        .edges_from("C", "C", &[2])
        .edges_from("B", "B", &[3])
        .edges_from("D", "D", &[4])
        .edges_from("A", "C", &[1])
        .edges_from("B", "C", &[3])
        .edges_from("C", "B", &[2])
        .edges_from("D", "C", &[2])
        .edges_from("D", "B", &[3]);
    let w = LabeledGraph::new("W", &["A", "B", "C", "D", "E"])
        .edges_from("E", "E", &[2])
        .edges_from("C", "C", &[2])
        .edges_from("B", "B", &[3])
        .edges_from("D", "D", &[4])
        .edges_from("A", "C", &[3])
        .edges_from("B", "C", &[1])
        .edges_from("C", "B", &[4])
        .edges_from("E", "A", &[0])
        .edges_from("D", "C", &[0])
        .edges_from("D", "B", &[2]);
    let vf = LabeledGraph::new("V_F", &["star", "C", "B"])
        .edges_from("star", "C", &[0, 1])
        .edges_from("C", "C", &[2])
        .edges_from("C", "B", &[2])
        .edges_from("B", "B", &[3])
        .edges_from("B", "C", &[3])
        .with_start(&["star"]);
    let wf = LabeledGraph::new("W_F", &["star", "F", "G", "H", "I"])
        .edges_from("star", "H", &[0])
        .edges_from("star", "I", &[2])
        .edges_from("I", "F", &[3])
        .edges_from("H", "F", &[4])
        .edges_from("F", "F", &[2])
        .edges_from("F", "G", &[4])
        .edges_from("G", "G", &[3])
        .edges_from("G", "F", &[1])
        .with_start(&["star"]);
    vec![r, v, w, vf, wf]
}

#[derive(Clone, Debug, Serialize)]
pub struct FigureCheck {
    pub figure: String,
    /// What the graph is compared with.
    pub reference: String,
    pub entropy: Option<f64>,
    pub lengths: Vec<LanguageComparison>,
    pub matches: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FigureReport {
    pub max_length: usize,
    pub collar: usize,
    pub checks: Vec<FigureCheck>,
    pub all_match: bool,
}

fn set_comparison(n: usize, left: &BTreeSet<Vec<u8>>, right: &BTreeSet<Vec<u8>>) -> LanguageComparison {
    LanguageComparison {
        length: n,
        left: left.len() as u128,
        right: right.len() as u128,
        common: left.intersection(right).count() as u128,
        only_left: left.difference(right).next().cloned(),
        only_right: right.difference(left).next().cloned(),
    }
}

/// Compares each transcribed graph with the language it should present,
/// for word lengths 1..=max_length.
pub fn verify_figure_graphs(max_length: usize, exec: Exec) -> Result<FigureReport> {
    let (f, g, h) = example();
    let graphs = figure_graphs();
    let models = [
        PatternModel::recurrent(&h)?,
        PatternModel::cofactors(&f, &g)?,
        PatternModel::products(&f, &g)?,
    ];
    let mut checks = Vec::new();
    for (graph, model) in graphs.iter().zip(&models) {
        let a = model.automaton(DEFAULT_COLLAR, false)?;
        let lang = GraphLanguage::new(graph);
        let lengths = (1..=max_length).map(|n| compare_languages(&lang, &a, n)).collect::<Result<Vec<_>>>()?;
        checks.push(FigureCheck {
            figure: graph.name.clone(),
            reference: format!("{:?} language, collar {}", model.kind, DEFAULT_COLLAR),
            entropy: Some(graph_entropy(graph).value),
            matches: lengths.iter().all(LanguageComparison::equal),
            lengths,
        });
    }
    // finite volume: F = {1..N}
    let mut finite: [Vec<LanguageComparison>; 2] = [Vec::new(), Vec::new()];
    for n in 1..=max_length {
        let pm = build_product_model(&f, &g, &Window::interval(1, n as i64))?;
        let wg = pm.enumerate_w(WStrategy::Auto, exec)?;
        let as_words = |xs: &[Vec<i64>]| -> BTreeSet<Vec<u8>> {
            xs.iter().map(|x| x.iter().map(|&c| c as u8).collect()).collect()
        };
        let enumerated = [as_words(&wg.elements_v), as_words(&wg.elements_w)];
        for (k, graph) in graphs[3..].iter().enumerate() {
            let words: BTreeSet<Vec<u8>> = enumerate_words(&GraphLanguage::new(graph), n, 1 << 24)?.into_iter().collect();
            finite[k].push(set_comparison(n, &words, &enumerated[k]));
        }
    }
    for (graph, lengths) in graphs[3..].iter().zip(finite) {
        checks.push(FigureCheck {
            figure: graph.name.clone(),
            reference: format!("{} on F = {{1..N}}", if graph.name == "V_F" { "cofactors of W_F" } else { "W_F" }),
            entropy: None,
            matches: lengths.iter().all(LanguageComparison::equal),
            lengths,
        });
    }
    let all_match = checks.iter().all(|c| c.matches);
    Ok(FigureReport { max_length, collar: DEFAULT_COLLAR, checks, all_match })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_of_recurrent_graph() {
        let g = &figure_graphs()[0];
        assert_eq!(g.adjacency(), vec![vec![3, 2, 0], vec![1, 0, 2], vec![1, 0, 2]]);
        assert!((graph_entropy(g).value - 4f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn recurrent_graph_words_of_length_two() {
        let (_, _, h) = example();
        let a = PatternModel::recurrent(&h).unwrap().automaton(0, false).unwrap();
        let c = compare_languages(&GraphLanguage::new(&figure_graphs()[0]), &a, 2).unwrap();
        assert!(c.equal());
        assert_eq!(c.common, 21);
    }
}
