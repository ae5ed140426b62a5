//! Full time graphs, their latent projections (ADMGs) and separation queries.

mod export;
mod separation;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::var_model::{BlockLayout, VarParameters};

pub use export::GraphJson;
pub use separation::{check_conditions, d_separated, ConditionReport, ConditionVariant, EdgeRemoval, SeparationQuery};

/// A state coordinate at one time point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub component: usize,
    pub t: i64,
}

impl NodeId {
    pub const fn new(component: usize, t: i64) -> Self {
        Self { component, t }
    }
}

/// Graph with directed and bidirected edges over a fixed node list.
///
/// Adjacency sets are ordered, so every traversal is deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedGraph {
    nodes: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    labels: Vec<String>,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
    siblings: Vec<BTreeSet<usize>>,
}

impl MixedGraph {
    /// Edgeless graph; `labels` default to `S{component}[t]`.
    pub fn new(nodes: Vec<NodeId>, labels: Option<Vec<String>>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, &n) in nodes.iter().enumerate() {
            if index.insert(n, k).is_some() {
                return Err(Error::Graph(format!("duplicate node {n:?}")));
            }
        }
        let labels = match labels {
            Some(l) if l.len() == nodes.len() => l,
            Some(_) => return Err(Error::Graph("label count differs from node count".into())),
            None => nodes.iter().map(|n| format!("S{}[{}]", n.component, n.t)).collect(),
        };
        let n = nodes.len();
        Ok(Self {
            nodes,
            index,
            labels,
            parents: vec![BTreeSet::new(); n],
            children: vec![BTreeSet::new(); n],
            siblings: vec![BTreeSet::new(); n],
        })
    }

    /// Graph over named nodes at `t = 0`, component = position.
    pub fn with_names(names: &[&str]) -> Self {
        let nodes = (0..names.len()).map(|k| NodeId::new(k, 0)).collect();
        Self::new(nodes, Some(names.iter().map(|s| s.to_string()).collect())).expect("distinct components")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn index_of(&self, n: NodeId) -> Option<usize> {
        self.index.get(&n).copied()
    }

    /// Position of the node with the given label.
    pub fn by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn require(&self, n: NodeId) -> Result<usize> {
        self.index_of(n).ok_or_else(|| Error::Graph(format!("node {n:?} is not in the graph")))
    }

    pub fn add_directed(&mut self, from: usize, to: usize) {
        assert!(from != to, "self loops are not allowed");
        self.children[from].insert(to);
        self.parents[to].insert(from);
    }

    pub fn add_bidirected(&mut self, a: usize, b: usize) {
        assert!(a != b, "self loops are not allowed");
        self.siblings[a].insert(b);
        self.siblings[b].insert(a);
    }

    pub fn remove_directed(&mut self, from: usize, to: usize) {
        self.children[from].remove(&to);
        self.parents[to].remove(&from);
    }

    /// Add `a → b` edges by label.
    pub fn add_edges_by_label(&mut self, edges: &[(&str, &str)]) -> Result<()> {
        for (a, b) in edges {
            let (u, v) = (self.label_index(a)?, self.label_index(b)?);
            self.add_directed(u, v);
        }
        Ok(())
    }

    fn label_index(&self, l: &str) -> Result<usize> {
        self.by_label(l).ok_or_else(|| Error::Graph(format!("unknown node label {l}")))
    }

    pub fn parents(&self, v: usize) -> &BTreeSet<usize> {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &BTreeSet<usize> {
        &self.children[v]
    }

    pub fn siblings(&self, v: usize) -> &BTreeSet<usize> {
        &self.siblings[v]
    }

    pub fn has_directed(&self, from: usize, to: usize) -> bool {
        self.children[from].contains(&to)
    }

    pub fn has_bidirected(&self, a: usize, b: usize) -> bool {
        self.siblings[a].contains(&b)
    }

    /// Directed edges as ordered `(from, to)` pairs.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        (0..self.len()).flat_map(|u| self.children[u].iter().map(move |&v| (u, v))).collect()
    }

    /// Bidirected edges with `a < b`.
    pub fn bidirected_edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|u| self.siblings[u].iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect()
    }

    /// Nodes reachable from `start` along directed edges, including `start`.
    pub fn descendants(&self, start: &[usize]) -> BTreeSet<usize> {
        self.closure(start, |v| &self.children[v])
    }

    /// Nodes with a directed path into `start`, including `start`.
    pub fn ancestors(&self, start: &[usize]) -> BTreeSet<usize> {
        self.closure(start, |v| &self.parents[v])
    }

    fn closure<'a>(&'a self, start: &[usize], next: impl Fn(usize) -> &'a BTreeSet<usize>) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = start.iter().copied().collect();
        let mut stack: Vec<usize> = start.to_vec();
        while let Some(v) = stack.pop() {
            for &w in next(v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// True iff the directed part has no cycle.
    pub fn is_acyclic(&self) -> bool {
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut queue: Vec<usize> = (0..self.len()).filter(|&v| indeg[v] == 0).collect();
        let mut done = 0;
        while let Some(v) = queue.pop() {
            done += 1;
            for &w in &self.children[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        done == self.len()
    }

    /// Same edges, compared by node identity rather than position.
    pub fn edge_set(&self) -> EdgeSet {
        EdgeSet {
            directed: self.directed_edges().into_iter().map(|(a, b)| (self.nodes[a], self.nodes[b])).collect(),
            bidirected: self
                .bidirected_edges()
                .into_iter()
                .map(|(a, b)| {
                    let (x, y) = (self.nodes[a], self.nodes[b]);
                    if x <= y { (x, y) } else { (y, x) }
                })
                .collect(),
        }
    }
}

/// Position-independent edge description.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EdgeSet {
    pub directed: BTreeSet<(NodeId, NodeId)>,
    /// Stored with the smaller endpoint first.
    pub bidirected: BTreeSet<(NodeId, NodeId)>,
}

impl EdgeSet {
    pub fn add_directed(&mut self, a: NodeId, b: NodeId) {
        self.directed.insert((a, b));
    }

    pub fn add_bidirected(&mut self, a: NodeId, b: NodeId) {
        self.bidirected.insert(if a <= b { (a, b) } else { (b, a) });
    }

    /// Shift every time index by `dt`.
    pub fn shifted(&self, dt: i64) -> Self {
        let s = |n: NodeId| NodeId::new(n.component, n.t + dt);
        Self {
            directed: self.directed.iter().map(|&(a, b)| (s(a), s(b))).collect(),
            bidirected: self.bidirected.iter().map(|&(a, b)| (s(a), s(b))).collect(),
        }
    }
}

/// Full time graph of a VAR(p) on `t_min..=t_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeGraph {
    graph: MixedGraph,
    layout: BlockLayout,
    window: (i64, i64),
}

impl TimeGraph {
    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn node(&self, component: usize, t: i64) -> Result<usize> {
        self.graph.require(NodeId::new(component, t))
    }
}

/// Latent projection onto `M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalGraph {
    graph: MixedGraph,
    is_admg: bool,
}

impl MarginalGraph {
    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn into_graph(self) -> MixedGraph {
        self.graph
    }

    /// Directed part acyclic (always true for projections of a DAG).
    pub fn is_admg(&self) -> bool {
        self.is_admg
    }

    pub fn node(&self, component: usize, t: i64) -> Result<usize> {
        self.graph.require(NodeId::new(component, t))
    }
}

/// Nodes for every coordinate and every `t` in the window; an edge
/// `(j, t) → (i, t + k)` for every nonzero `A_k[i, j]` with both ends inside.
pub fn build_full_time_graph<T: Real>(params: &VarParameters<T>, t_min: i64, t_max: i64) -> Result<TimeGraph> {
    if t_min > t_max {
        return Err(Error::Graph(format!("empty window [{t_min}, {t_max}]")));
    }
    let d = params.dim();
    let layout = params.layout_or_default();
    let names = layout.labels();
    let mut nodes = Vec::new();
    let mut labels = Vec::new();
    for t in t_min..=t_max {
        for (c, name) in names.iter().enumerate() {
            nodes.push(NodeId::new(c, t));
            labels.push(format!("{name}[{t}]"));
        }
    }
    let mut graph = MixedGraph::new(nodes, Some(labels))?;
    let at = |c: usize, t: i64| ((t - t_min) as usize) * d + c;
    for (k, a) in params.coeffs().iter().enumerate() {
        let lag = k as i64 + 1;
        for t in t_min..=(t_max - lag) {
            for i in 0..d {
                for j in 0..d {
                    if a[(i, j)] != T::zero() {
                        graph.add_directed(at(j, t), at(i, t + lag));
                    }
                }
            }
        }
    }
    Ok(TimeGraph { graph, layout, window: (t_min, t_max) })
}

/// Latent projection of `g` onto `keep`.
///
/// `u → v` iff a directed path from `u` to `v` has all interior nodes outside
/// `keep`. `u ↔ v` iff some node outside `keep` reaches both through such
/// paths, or a bidirected edge joins two such sources (a source may be the
/// endpoint itself). Interior nodes of the two paths may coincide.
pub fn marginalize(g: &MixedGraph, keep: &[NodeId]) -> Result<MarginalGraph> {
    let mut kept = Vec::with_capacity(keep.len());
    for &n in keep {
        kept.push(g.require(n)?);
    }
    let in_m: BTreeSet<usize> = kept.iter().copied().collect();
    if in_m.len() != kept.len() {
        return Err(Error::Graph("node set contains duplicates".into()));
    }
    let mut order = kept.clone();
    order.sort_unstable();
    let nodes: Vec<NodeId> = order.iter().map(|&v| g.nodes[v]).collect();
    let labels: Vec<String> = order.iter().map(|&v| g.labels[v].clone()).collect();
    let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut out = MixedGraph::new(nodes, Some(labels))?;

    for &u in &order {
        let mut seen = BTreeSet::new();
        let mut stack = vec![u];
        while let Some(v) = stack.pop() {
            for &w in g.children(v) {
                if in_m.contains(&w) {
                    if w != u {
                        out.add_directed(pos[&u], pos[&w]);
                    }
                } else if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
    }

    // latent ancestors reached through latent nodes only
    let latent_anc: Vec<BTreeSet<usize>> = order
        .iter()
        .map(|&m| {
            let mut seen = BTreeSet::new();
            let mut stack = vec![m];
            while let Some(v) = stack.pop() {
                for &p in g.parents(v) {
                    if !in_m.contains(&p) && seen.insert(p) {
                        stack.push(p);
                    }
                }
            }
            seen
        })
        .collect();
    let has_bidirected = (0..g.len()).any(|v| !g.siblings(v).is_empty());
    for a in 0..order.len() {
        for b in (a + 1)..order.len() {
            let common = !latent_anc[a].is_disjoint(&latent_anc[b]);
            let joined = has_bidirected && {
                let src_a: Vec<usize> = latent_anc[a].iter().copied().chain([order[a]]).collect();
                let src_b: BTreeSet<usize> = latent_anc[b].iter().copied().chain([order[b]]).collect();
                src_a.iter().any(|&x| g.siblings(x).iter().any(|y| src_b.contains(y)))
            };
            if common || joined {
                out.add_bidirected(a, b);
            }
        }
    }
    let is_admg = out.is_acyclic();
    Ok(MarginalGraph { graph: out, is_admg })
}

/// Node set given as `(component, lag)` pairs, placed at `t = -lag`.
pub fn lagged_nodes(spec: &[(usize, i64)]) -> Vec<NodeId> {
    spec.iter().map(|&(c, lag)| NodeId::new(c, -lag)).collect()
}

/// Project the full time graph on `[-history, 0]` and on `[-history-5, 0]`
/// onto `keep`, returning the first projection if both agree.
pub fn marginalize_stable<T: Real>(params: &VarParameters<T>, keep: &[NodeId], history: usize) -> Result<MarginalGraph> {
    let h = history as i64;
    let short = marginalize(build_full_time_graph(params, -h, 0)?.graph(), keep)?;
    let long = marginalize(build_full_time_graph(params, -h - 5, 0)?.graph(), keep)?;
    if short.graph().edge_set() == long.graph().edge_set() {
        Ok(short)
    } else {
        Err(Error::NotStabilized(history, history + 5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dmat;
    use nalgebra::{DMatrix, DVector};

    fn var2_single() -> VarParameters<f64> {
        let mut a2 = DMatrix::zeros(2, 2);
        a2[(1, 0)] = 0.4;
        VarParameters::new(vec![DMatrix::zeros(2, 2), a2], DVector::repeat(2, 1.0), Some(BlockLayout::new(0, 0, 1, 1))).unwrap()
    }

    #[test]
    fn zero_matrix_gives_edgeless_graph() {
        let p = VarParameters::<f64>::var1(DMatrix::zeros(3, 3), None).unwrap();
        let g = build_full_time_graph(&p, 0, 4).unwrap();
        assert_eq!(g.graph().len(), 15);
        assert!(g.graph().directed_edges().is_empty());
    }

    #[test]
    fn lag_two_coefficient_gives_lag_two_edges() {
        let g = build_full_time_graph(&var2_single(), 0, 5).unwrap();
        let edges = g.graph().edge_set();
        assert_eq!(edges.directed.len(), 4);
        assert!(edges.directed.iter().all(|(a, b)| a.component == 0 && b.component == 1 && b.t - a.t == 2));
    }

    #[test]
    fn empty_window_is_an_error() {
        assert!(build_full_time_graph(&var2_single(), 3, 2).is_err());
    }

    #[test]
    fn keeping_everything_is_the_identity() {
        let p = VarParameters::<f64>::var1(dmat(2, 2, &[0.5, 0.0, 0.3, 0.2]), None).unwrap();
        let g = build_full_time_graph(&p, 0, 3).unwrap();
        let m = marginalize(g.graph(), g.graph().nodes()).unwrap();
        assert_eq!(m.graph().edge_set(), g.graph().edge_set());
        assert!(m.is_admg());
    }

    #[test]
    fn latent_fork_becomes_bidirected() {
        let mut g = MixedGraph::with_names(&["H", "A", "B", "C"]);
        g.add_edges_by_label(&[("H", "A"), ("H", "B"), ("A", "C")]).unwrap();
        let keep = [1, 2, 3].map(|c| NodeId::new(c, 0));
        let m = marginalize(&g, &keep).unwrap();
        let mg = m.graph();
        let (a, b, c) = (mg.by_label("A").unwrap(), mg.by_label("B").unwrap(), mg.by_label("C").unwrap());
        assert!(mg.has_bidirected(a, b));
        assert!(mg.has_directed(a, c));
        assert!(!mg.has_bidirected(b, c));
    }

    #[test]
    fn latent_chain_becomes_directed() {
        let mut g = MixedGraph::with_names(&["A", "L", "B"]);
        g.add_edges_by_label(&[("A", "L"), ("L", "B")]).unwrap();
        let m = marginalize(&g, &[NodeId::new(0, 0), NodeId::new(2, 0)]).unwrap();
        assert_eq!(m.graph().directed_edges(), vec![(0, 1)]);
        assert!(m.graph().bidirected_edges().is_empty());
    }

    #[test]
    fn unknown_nodes_are_rejected() {
        let g = MixedGraph::with_names(&["A"]);
        assert!(marginalize(&g, &[NodeId::new(5, 0)]).is_err());
    }
}
