use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MixedGraph;
use crate::error::{Error, Result};

/// Edges deleted before a separation query.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum EdgeRemoval {
    #[default]
    None,
    /// Delete every `x → y` with `x ∈ from`, `y ∈ to`.
    Direct { from: Vec<usize>, to: Vec<usize> },
    /// Delete every `x → w` with `x ∈ from` and `w ∈ to` or `w` an ancestor of `to`.
    DirectedPaths { from: Vec<usize>, to: Vec<usize> },
}

/// Is `a` separated from `c` given `b`? Node sets are graph positions.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SeparationQuery {
    pub a: Vec<usize>,
    pub c: Vec<usize>,
    pub b: Vec<usize>,
    pub removal: EdgeRemoval,
}

impl SeparationQuery {
    pub fn new(a: Vec<usize>, c: Vec<usize>, b: Vec<usize>) -> Self {
        Self { a, c, b, removal: EdgeRemoval::None }
    }

    pub fn with_removal(mut self, removal: EdgeRemoval) -> Self {
        self.removal = removal;
        self
    }
}

fn disjoint(sets: &[&[usize]]) -> bool {
    let mut seen = BTreeSet::new();
    sets.iter().all(|s| {
        let own: BTreeSet<usize> = s.iter().copied().collect();
        own.iter().all(|&v| seen.insert(v))
    })
}

/// `g` with the requested edges deleted.
pub(crate) fn apply_removal(g: &MixedGraph, removal: &EdgeRemoval) -> MixedGraph {
    let mut h = g.clone();
    match removal {
        EdgeRemoval::None => {}
        EdgeRemoval::Direct { from, to } => {
            for &x in from {
                for &y in to {
                    h.remove_directed(x, y);
                }
            }
        }
        EdgeRemoval::DirectedPaths { from, to } => {
            let targets = g.ancestors(to);
            for &x in from {
                for &w in g.children(x) {
                    if targets.contains(&w) {
                        h.remove_directed(x, w);
                    }
                }
            }
        }
    }
    h
}

/// Exact d-separation (m-separation when bidirected edges are present).
///
/// Searches walks over states `(node, arrowhead at node)`. A walk is open iff
/// every collider is in `b` and every other interior node is not; such a walk
/// exists iff an open path exists.
pub fn d_separated(g: &MixedGraph, q: &SeparationQuery) -> Result<bool> {
    let n = g.len();
    if q.a.iter().chain(&q.b).chain(&q.c).any(|&v| v >= n) {
        return Err(Error::Graph("query node outside the graph".into()));
    }
    if !disjoint(&[&q.a, &q.b, &q.c]) {
        return Err(Error::Graph("query sets must be pairwise disjoint".into()));
    }
    let h;
    let g = if q.removal == EdgeRemoval::None {
        g
    } else {
        h = apply_removal(g, &q.removal);
        &h
    };
    let mut in_b = vec![false; n];
    q.b.iter().for_each(|&v| in_b[v] = true);
    let mut in_c = vec![false; n];
    q.c.iter().for_each(|&v| in_c[v] = true);

    let mut seen = vec![[false; 2]; n];
    let mut stack: Vec<(usize, bool)> = q.a.iter().map(|&v| (v, false)).collect();
    while let Some((v, head)) = stack.pop() {
        if seen[v][head as usize] {
            continue;
        }
        seen[v][head as usize] = true;
        if in_c[v] {
            return Ok(false);
        }
        // leaving with a tail at v: v is a non-collider
        if !in_b[v] {
            stack.extend(g.children(v).iter().map(|&w| (w, true)));
        }
        // leaving with an arrowhead at v: collider iff we also arrived with one
        let open = if head { in_b[v] } else { !in_b[v] };
        if open {
            stack.extend(g.parents(v).iter().map(|&w| (w, false)));
            stack.extend(g.siblings(v).iter().map(|&w| (w, true)));
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionVariant {
    /// Remove direct `X̃ → Y` edges.
    C1,
    /// Remove `X̃`-outgoing edges that start a directed path to `Y`.
    C1Prime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Separation of instruments and response given `B` after the removal.
    pub c1: bool,
    /// No element of `B` descends from `X̃` or `Y`.
    pub c2: bool,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.c1 && self.c2
    }
}

/// Graphical conditions for `(I, X̃, B, Y)`.
pub fn check_conditions(
    g: &MixedGraph,
    instruments: &[usize],
    regressors: &[usize],
    conditioning: &[usize],
    response: &[usize],
    variant: ConditionVariant,
) -> Result<ConditionReport> {
    if !disjoint(&[instruments, regressors, conditioning, response]) {
        return Err(Error::Graph("condition sets must be pairwise disjoint".into()));
    }
    let removal = match variant {
        ConditionVariant::C1 => EdgeRemoval::Direct { from: regressors.to_vec(), to: response.to_vec() },
        ConditionVariant::C1Prime => EdgeRemoval::DirectedPaths { from: regressors.to_vec(), to: response.to_vec() },
    };
    let q = SeparationQuery::new(instruments.to_vec(), response.to_vec(), conditioning.to_vec()).with_removal(removal);
    let c1 = d_separated(g, &q)?;
    let sources: Vec<usize> = regressors.iter().chain(response).copied().collect();
    let de = g.descendants(&sources);
    let c2 = conditioning.iter().all(|b| !de.contains(b));
    Ok(ConditionReport { c1, c2 })
}
