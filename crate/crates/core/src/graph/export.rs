use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{MixedGraph, NodeId};

/// JSON form; edges refer to positions in `nodes`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<NodeId>,
    pub directed: Vec<[usize; 2]>,
    pub bidirected: Vec<[usize; 2]>,
}

impl MixedGraph {
    pub fn to_json_value(&self) -> GraphJson {
        GraphJson {
            nodes: self.nodes.clone(),
            directed: self.directed_edges().into_iter().map(|(a, b)| [a, b]).collect(),
            bidirected: self.bidirected_edges().into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("graphs always serialize")
    }

    /// Graphviz text; bidirected edges are dashed with arrowheads at both ends.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph G {\n  rankdir=LR;\n");
        for (k, l) in self.labels.iter().enumerate() {
            let _ = writeln!(s, "  n{k} [label=\"{}\"];", l.replace('"', "\\\""));
        }
        for (a, b) in self.directed_edges() {
            let _ = writeln!(s, "  n{a} -> n{b};");
        }
        for (a, b) in self.bidirected_edges() {
            let _ = writeln!(s, "  n{a} -> n{b} [dir=both, style=dashed];");
        }
        s.push_str("}\n");
        s
    }
}
