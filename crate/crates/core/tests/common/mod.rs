//! Independent oracles and fixed models shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tsiv::graph::{lagged_nodes, marginalize_stable, EdgeSet, MixedGraph, NodeId};
use tsiv::linalg::dmat;
use tsiv::scm_iid::{LinearScm, Roles};
use tsiv::rng::stream_rng;
use tsiv::var_model::{A2Blocks, BlockLayout, InstrumentalVar1, VarParameters};

pub const I: usize = 0;
pub const H: usize = 1;
pub const X: usize = 2;
pub const Y: usize = 3;

fn s(v: f64) -> DMatrix<f64> {
    dmat(1, 1, &[v])
}

/// Scalar-block process with every admissible coefficient nonzero.
pub fn scalar_a2(alpha_xy: f64) -> InstrumentalVar1<f64> {
    let blocks = A2Blocks {
        alpha_ii: s(0.5),
        alpha_hh: s(0.6),
        alpha_xi: s(0.7),
        alpha_xh: s(0.5),
        alpha_xx: s(0.3),
        alpha_xy: s(alpha_xy),
        alpha_yh: s(-0.6),
        beta: s(0.8),
        alpha_yy: s(0.4),
    };
    InstrumentalVar1::from_blocks(BlockLayout::new(1, 1, 1, 1), &blocks, DVector::repeat(4, 1.0)).unwrap()
}

/// The two observationally equivalent matrices over `(H1, H2, X, Y)`.
pub fn obs_equiv(a: f64, b: f64, c: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let a1 = dmat(4, 4, &[a, 0., 0., 0., c, 0., 0., 0., c, 0., 0., 0., 0., b, 0., 0.]);
    let a2 = dmat(4, 4, &[a, 0., 0., 0., 0., a, 0., 0., 0., c, 0., 0., 0., 0., b, 0.]);
    (a1, a2)
}

/// Variables `[H, I, X, Y, Z, B]`.
pub fn b3_model(first: bool) -> LinearScm<f64> {
    let (h, i, x, y, z, b) = (0, 1, 2, 3, 4, 5);
    let mut a = DMatrix::zeros(6, 6);
    let gamma = if first {
        a[(i, b)] = 1.185;
        a[(x, h)] = 21.095;
        a[(x, i)] = 6.885;
        a[(x, b)] = -5.969;
        a[(y, h)] = -7.244;
        a[(y, x)] = 16.499;
        a[(y, z)] = -1.892;
        a[(z, h)] = 1.921;
        a[(z, b)] = 2.62;
        [0.2, 1.2, 2.2, 1.2, 2.2, 0.2]
    } else {
        a[(i, b)] = -2.918;
        a[(x, h)] = -22.439;
        a[(x, i)] = 3.519;
        a[(x, b)] = 4.282;
        a[(y, h)] = 19.964;
        a[(y, x)] = 4.737;
        a[(y, z)] = 4.011;
        a[(z, h)] = 0.884;
        a[(z, b)] = -7.97;
        [3.2, 1.2, 3.2, 2.2, 1.2, 2.2]
    };
    let roles = Roles { i: vec![i], x: vec![x], z: vec![z], b: vec![b], y, h: vec![h] };
    LinearScm::new(a, DVector::from_row_slice(&gamma), roles).unwrap()
}

/// The i.i.d. example graphs: left, middle, right.
pub fn example_graph(which: usize) -> MixedGraph {
    let edges: &[(&str, &str)] = match which {
        0 => &[("I", "X"), ("X", "Y"), ("H", "X"), ("H", "Y"), ("B", "I"), ("B", "Y"), ("H", "B")],
        1 => &[("I", "X"), ("X", "Y"), ("H", "X"), ("H", "Y"), ("I", "Z"), ("Z", "Y"), ("H", "Z")],
        _ => &[("I", "X"), ("X", "Y"), ("H", "X"), ("H", "Y"), ("B", "I"), ("B", "Z"), ("B", "X"), ("H", "Z"), ("Z", "Y")],
    };
    let mut g = MixedGraph::with_names(&["I", "X", "Y", "H", "B", "Z"]);
    g.add_edges_by_label(edges).unwrap();
    g
}

pub fn idx(g: &MixedGraph, names: &[&str]) -> Vec<usize> {
    names.iter().map(|n| g.by_label(n).unwrap_or_else(|| panic!("no node {n}"))).collect()
}

/// Separation by enumerating every simple path; colliders are open iff they
/// are ancestors of (or in) the conditioning set.
pub fn brute_force_separated(g: &MixedGraph, a: &[usize], c: &[usize], b: &[usize]) -> bool {
    let n = g.len();
    let an_b = g.ancestors(b);
    let in_b: BTreeSet<usize> = b.iter().copied().collect();
    let targets: BTreeSet<usize> = c.iter().copied().collect();
    // adjacency entries: (neighbour, arrowhead at self, arrowhead at neighbour)
    let adj: Vec<Vec<(usize, bool, bool)>> = (0..n)
        .map(|v| {
            let mut e = Vec::new();
            e.extend(g.children(v).iter().map(|&w| (w, false, true)));
            e.extend(g.parents(v).iter().map(|&w| (w, true, false)));
            e.extend(g.siblings(v).iter().map(|&w| (w, true, true)));
            e
        })
        .collect();
    fn walk(
        v: usize,
        head_in: bool,
        on_path: &mut Vec<bool>,
        adj: &[Vec<(usize, bool, bool)>],
        in_b: &BTreeSet<usize>,
        an_b: &BTreeSet<usize>,
        targets: &BTreeSet<usize>,
        first: bool,
    ) -> bool {
        if !first && targets.contains(&v) {
            return true;
        }
        for &(w, head_here, head_there) in &adj[v] {
            if on_path[w] {
                continue;
            }
            if !first {
                let collider = head_in && head_here;
                let open = if collider { an_b.contains(&v) } else { !in_b.contains(&v) };
                if !open {
                    continue;
                }
            }
            on_path[w] = true;
            let found = walk(w, head_there, on_path, adj, in_b, an_b, targets, false);
            on_path[w] = false;
            if found {
                return true;
            }
        }
        false
    }
    for &start in a {
        let mut on_path = vec![false; n];
        on_path[start] = true;
        if walk(start, false, &mut on_path, &adj, &in_b, &an_b, &targets, true) {
            return false;
        }
    }
    true
}

/// Random graph: directed edges forward in a random order, plus bidirected edges.
pub fn random_mixed_graph<R: Rng>(rng: &mut R, n: usize, p_dir: f64, p_bi: f64) -> MixedGraph {
    let names: Vec<String> = (0..n).map(|k| format!("V{k}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut g = MixedGraph::with_names(&refs);
    let mut order: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        order.swap(k, rng.random_range(0..=k));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p_dir {
                g.add_directed(order[i], order[j]);
            }
            if rng.random::<f64>() < p_bi {
                g.add_bidirected(order[i], order[j]);
            }
        }
    }
    g
}

/// Sum over directed paths of total lag `lag` from `source` to `target` of
/// the products of their edge coefficients.
pub fn tce_by_paths(coeffs: &[DMatrix<f64>], source: usize, target: usize, lag: usize) -> f64 {
    fn go(coeffs: &[DMatrix<f64>], node: usize, remaining: usize, target: usize) -> f64 {
        if remaining == 0 {
            return if node == target { 1.0 } else { 0.0 };
        }
        let d = coeffs[0].nrows();
        let mut total = 0.0;
        for (k, a) in coeffs.iter().enumerate() {
            let step = k + 1;
            if step > remaining {
                break;
            }
            for next in 0..d {
                let w = a[(next, node)];
                if w != 0.0 {
                    total += w * go(coeffs, next, remaining - step, target);
                }
            }
        }
        total
    }
    go(coeffs, source, lag, target)
}

/// `Σ_{k<terms} A^k Γ A^kᵀ` for a VAR(1).
pub fn truncated_series(a: &DMatrix<f64>, gamma: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(a.nrows(), a.nrows());
    let mut ak = DMatrix::identity(a.nrows(), a.nrows());
    for _ in 0..terms {
        s += &ak * gamma * ak.transpose();
        ak = a * ak;
    }
    s
}

/// Lag horizon for stable projections of the scalar process.
pub const HISTORY: usize = 30;

pub fn n(c: usize, lag: i64) -> NodeId {
    NodeId::new(c, -lag)
}

/// `((component, lag), (component, lag))`.
type Edge = ((usize, i64), (usize, i64));

pub fn expected(directed: &[Edge], bidirected: &[Edge]) -> EdgeSet {
    let mut e = EdgeSet::default();
    for &((a, la), (b, lb)) in directed {
        e.add_directed(n(a, la), n(b, lb));
    }
    for &((a, la), (b, lb)) in bidirected {
        e.add_bidirected(n(a, la), n(b, lb));
    }
    e
}

/// Projection of the scalar process onto `keep`.
pub fn project(alpha_xy: f64, keep: &[(usize, i64)]) -> EdgeSet {
    let m = scalar_a2(alpha_xy);
    marginalize_stable(m.params(), &lagged_nodes(keep), HISTORY).unwrap().graph().edge_set()
}

/// Reference edge set over `WIDE_WINDOW` for the process without feedback.
pub fn wide_window_reference() -> EdgeSet {
    expected(
        &[
            ((I, 2), (X, 1)),
            ((X, 1), (Y, 0)),
            ((I, 3), (I, 2)),
            ((I, 3), (X, 2)),
            ((X, 2), (Y, 1)),
            ((Y, 1), (Y, 0)),
            ((X, 2), (X, 1)),
        ],
        &[
            ((I, 3), (Y, 1)),
            ((I, 3), (X, 2)),
            ((Y, 1), (Y, 0)),
            ((X, 2), (Y, 1)),
            ((X, 1), (Y, 0)),
            ((X, 2), (X, 1)),
            ((X, 2), (Y, 0)),
            ((Y, 1), (X, 1)),
        ],
    )
}

pub const WIDE_WINDOW: [(usize, i64); 6] = [(I, 3), (I, 2), (X, 2), (X, 1), (Y, 1), (Y, 0)];

/// `I_{t-m-1}, …, I_{t-2}, X_{t-1}, Y_{t-1}, Y_t`.
pub fn history_nodes(m: i64) -> Vec<(usize, i64)> {
    let mut keep: Vec<(usize, i64)> = (2..=m + 1).map(|k| (I, k)).collect();
    keep.extend([(X, 1), (Y, 1), (Y, 0)]);
    keep
}

pub fn history_reference(m: i64) -> EdgeSet {
    let mut directed = vec![((I, 2), (X, 1)), ((X, 1), (Y, 0)), ((Y, 1), (Y, 0))];
    for k in 2..=m {
        directed.push(((I, k + 1), (I, k)));
    }
    for k in 3..=m + 1 {
        directed.push(((I, k), (X, 1)));
        directed.push(((I, k), (Y, 1)));
    }
    let bidirected = [((Y, 1), (Y, 0)), ((X, 1), (Y, 0)), ((Y, 1), (X, 1)), ((I, m + 1), (X, 1)), ((I, m + 1), (Y, 1))];
    expected(&directed, &bidirected)
}

pub const NARROW_WINDOW: [(usize, i64); 4] = [(I, 2), (X, 1), (Y, 1), (Y, 0)];

pub fn narrow_window_reference() -> EdgeSet {
    expected(
        &[((I, 2), (X, 1)), ((X, 1), (Y, 0)), ((Y, 1), (Y, 0))],
        &[((I, 2), (X, 1)), ((I, 2), (Y, 1)), ((Y, 1), (Y, 0)), ((X, 1), (Y, 0)), ((Y, 1), (X, 1))],
    )
}

/// Random disjoint `(A, B, C)` with `A` and `C` non-empty.
pub fn random_query(rng: &mut impl rand::Rng, n: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let (mut a, mut b, mut c) = (vec![], vec![], vec![]);
    for v in 0..n {
        match rng.random_range(0..6) {
            0 => a.push(v),
            1 => c.push(v),
            2 => b.push(v),
            _ => {}
        }
    }
    if a.is_empty() {
        a.push(n - 1);
        c.retain(|&v| v != n - 1);
        b.retain(|&v| v != n - 1);
    }
    if a.len() == n {
        a.pop();
    }
    if c.is_empty() {
        let v = (0..n).find(|v| !a.contains(v)).unwrap();
        b.retain(|&w| w != v);
        c.push(v);
    }
    (a, b, c)
}

pub fn coef(rng: &mut impl Rng) -> f64 {
    let v = rng.random_range(0.3..1.5);
    if rng.random_bool(0.5) { v } else { -v }
}

/// Variables `[H, B, I.., X.., Z.., Y]`: `B → I`, `{I, B, H} → X`,
/// `{B, H} → Z`, `{X, Z, H} → Y`. Both the conditional and the nuisance
/// formulation are valid by construction.
pub fn random_valid_scm(seed: u64) -> LinearScm<f64> {
    let mut rng = stream_rng(seed, 11);
    let d_x = rng.random_range(1..=2);
    let d_z = rng.random_range(0..=1);
    let d_i = d_x + d_z + rng.random_range(0..=1);
    let (h, b) = (0, 1);
    let i: Vec<usize> = (2..2 + d_i).collect();
    let x: Vec<usize> = (2 + d_i..2 + d_i + d_x).collect();
    let z: Vec<usize> = (2 + d_i + d_x..2 + d_i + d_x + d_z).collect();
    let y = 2 + d_i + d_x + d_z;
    let n = y + 1;
    let mut a = DMatrix::zeros(n, n);
    for &v in &i {
        a[(v, b)] = coef(&mut rng);
    }
    for &v in &x {
        for &p in i.iter().chain([b, h].iter()) {
            a[(v, p)] = coef(&mut rng);
        }
    }
    for &v in &z {
        a[(v, b)] = coef(&mut rng);
        a[(v, h)] = coef(&mut rng);
    }
    for &p in x.iter().chain(&z).chain([h].iter()) {
        a[(y, p)] = coef(&mut rng);
    }
    let noise = DVector::from_fn(n, |_, _| rng.random_range(0.2..3.0));
    LinearScm::new(a, noise, Roles { i, x, z, b: vec![b], y, h: vec![h] }).unwrap()
}

/// Relative residual of the companion Lyapunov equation.
pub fn lyapunov_residual(p: &VarParameters<f64>) -> f64 {
    let s = p.stationary_covariance().unwrap().companion;
    let a = p.companion();
    let r = &s - &a * &s * a.transpose() - p.companion_noise();
    tsiv::linalg::norm_inf(&r) / tsiv::linalg::norm_inf(&s)
}

/// Stable VAR(p) with dense random coefficients scaled below unit radius.
pub fn random_var(rng: &mut impl Rng, d: usize, p: usize) -> VarParameters<f64> {
    let coeffs: Vec<DMatrix<f64>> = (0..p).map(|_| DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))).collect();
    let noise = DVector::from_fn(d, |_, _| rng.random_range(0.2..2.0));
    let raw = VarParameters::new(coeffs.clone(), noise.clone(), None).unwrap();
    let target = rng.random_range(0.1..0.95);
    let radius = raw.spectral_radius();
    // scaling A_k by c^k scales the companion spectrum by c
    let scaled = coeffs.iter().enumerate().map(|(k, a)| a * (target / radius).powi(k as i32 + 1)).collect();
    VarParameters::new(scaled, noise, None).unwrap()
}

/// Scalar-block process without feedback and with `β = 0.9`.
pub fn naive_process(a_ii: f64, a_yy: f64) -> InstrumentalVar1<f64> {
    let s = |v: f64| dmat(1, 1, &[v]);
    let blocks = A2Blocks {
        alpha_ii: s(a_ii),
        alpha_hh: s(0.5),
        alpha_xi: s(0.8),
        alpha_xh: s(0.6),
        alpha_xx: s(0.3),
        alpha_xy: s(0.0),
        alpha_yh: s(0.7),
        beta: s(0.9),
        alpha_yy: s(a_yy),
    };
    InstrumentalVar1::from_blocks(BlockLayout::new(1, 1, 1, 1), &blocks, DVector::repeat(4, 1.0)).unwrap()
}

/// The nuisance formulation uses `[I, B]` as instruments and no conditioning.
pub fn as_nuisance(m: &LinearScm<f64>) -> LinearScm<f64> {
    let r = m.roles();
    let i = r.i.iter().chain(&r.b).copied().collect();
    m.with_roles(Roles { i, b: vec![], ..r.clone() }).unwrap()
}
