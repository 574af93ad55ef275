//! Lower-bound sequence constructions.
//!
//! * Event-level reductions: [`gen_event_level`] maps a bit string `sigma` to
//!   a graph sequence whose statistic equals a known prefix-count formula, so
//!   a private release of the statistic answers running-sum queries on
//!   `sigma`. Flipping one bit yields an adjacent sequence.
//! * Sensitivity witnesses: [`witness_pair`] builds pairs of adjacent
//!   sequences whose difference sequences differ by at least `T` in total,
//!   showing that no constant bound exists, and the pair attaining `2W - 2`
//!   for minimum spanning trees.
//! * User-level reduction: [`gen_user_level`] alternates between two graphs
//!   far apart in value, encoding one bit per phase.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::Adjacency;
use crate::funcs::{binomial, FuncError, GraphFunction};
use crate::graph::{
    check_adjacency, AdjacencyKind, AdjacencyWitness, EdgeKey, Graph, GraphError, GraphSequence, NodeId, Regime,
    Update, Weight,
};

/// Largest horizon accepted by the hypercube construction.
pub const HYPERCUBE_MAX_T: usize = 14;

/// Errors raised by the constructions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdvError {
    /// A parameter lies outside the range a construction supports.
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    /// The spread construction needs more nodes.
    #[error("spread constructions need at least 4 nodes, got {0}")]
    TooSmall(usize),
    /// A generated pair failed the adjacency check.
    #[error("generated sequences are not adjacent")]
    NotAdjacent,
    /// The two graphs of a user-level construction have different node sets.
    #[error("graphs have different node sets")]
    NodeSetMismatch,
    /// The spared edge is missing from one of the graphs.
    #[error("spared edge {0} must be present with equal weight in both graphs")]
    SparedEdgeMissing(EdgeKey),
    /// The horizon is not a multiple of the phase length.
    #[error("horizon {horizon} is not a multiple of the phase length {phase}")]
    LengthNotMultiple { horizon: usize, phase: usize },
    /// The transformation length must be even.
    #[error("transformation length {0} must be even")]
    OddTransformation(usize),
    /// Both graphs have the same value, so phases cannot be told apart.
    #[error("the two graphs have equal value")]
    ZeroSpread,
    /// The requested construction is not available.
    #[error("unsupported construction: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

fn out_of_range(msg: impl Into<String>) -> AdvError {
    AdvError::ParameterOutOfRange(msg.into())
}

/// Event-level reduction targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    MstEdge,
    MstNode,
    CutEdge,
    CutNode,
    MatchingEdge,
    MatchingNode,
    EdgesEdge,
    EdgesNode,
    HighDegreeEdge,
    HighDegreeNode,
    HistogramEdge,
    HistogramNode,
    TrianglesEdge,
    TrianglesNode,
    KStarEdge,
    KStarNode,
}

impl Target {
    /// Every target, in a fixed order.
    pub const ALL: [Target; 16] = [
        Target::MstEdge,
        Target::MstNode,
        Target::CutEdge,
        Target::CutNode,
        Target::MatchingEdge,
        Target::MatchingNode,
        Target::EdgesEdge,
        Target::EdgesNode,
        Target::HighDegreeEdge,
        Target::HighDegreeNode,
        Target::HistogramEdge,
        Target::HistogramNode,
        Target::TrianglesEdge,
        Target::TrianglesNode,
        Target::KStarEdge,
        Target::KStarNode,
    ];

    /// Command-line name.
    pub fn name(&self) -> &'static str {
        match self {
            Target::MstEdge => "mst-edge",
            Target::MstNode => "mst-node",
            Target::CutEdge => "cut-edge",
            Target::CutNode => "cut-node",
            Target::MatchingEdge => "matching-edge",
            Target::MatchingNode => "matching-node",
            Target::EdgesEdge => "edges-edge",
            Target::EdgesNode => "edges-node",
            Target::HighDegreeEdge => "high-degree-edge",
            Target::HighDegreeNode => "high-degree-node",
            Target::HistogramEdge => "histogram-edge",
            Target::HistogramNode => "histogram-node",
            Target::TrianglesEdge => "triangles-edge",
            Target::TrianglesNode => "triangles-node",
            Target::KStarEdge => "kstar-edge",
            Target::KStarNode => "kstar-node",
        }
    }

    /// Neighbouring relation under which flipping one bit gives a neighbour.
    pub fn adjacency(&self) -> Adjacency {
        match self {
            Target::MstEdge
            | Target::CutEdge
            | Target::MatchingEdge
            | Target::EdgesEdge
            | Target::HighDegreeEdge
            | Target::HistogramEdge
            | Target::TrianglesEdge
            | Target::KStarEdge => Adjacency::Edge,
            _ => Adjacency::Node,
        }
    }
}

impl std::str::FromStr for Target {
    type Err = AdvError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Target::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| AdvError::Unsupported(format!("unknown target '{s}'")))
    }
}

/// Parameters of the event-level constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    /// Weight bound `W` (weighted targets).
    pub weight: Weight,
    /// Maximum degree `D` (node-level counting targets).
    pub max_degree: usize,
    /// Degree threshold `tau` (high-degree targets).
    pub tau: usize,
    /// Star size `k` (k-star targets).
    pub k: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            weight: 1,
            max_degree: 4,
            tau: 2,
            k: 2,
        }
    }
}

/// A generated sequence with the statistic it targets and the value of that
/// statistic at every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    /// Target construction.
    pub target: Target,
    /// Bit string encoded by the sequence.
    pub sigma: Vec<bool>,
    /// The sequence.
    pub sequence: GraphSequence,
    /// Statistic whose values encode `sigma`. For the histogram targets the
    /// encoded value is the number of nodes of degree 2.
    pub function: GraphFunction,
    /// Closed-form value of the statistic at steps `1..=T`.
    pub expected: Vec<f64>,
}

fn prefix_sums(sigma: &[bool], per_bit: f64, offset: f64) -> Vec<f64> {
    let mut acc = 0.0;
    sigma
        .iter()
        .map(|&b| {
            if b {
                acc += per_bit;
            }
            acc + offset
        })
        .collect()
}

/// Parses a bit string such as `"1011"`.
pub fn parse_sigma(s: &str) -> Result<Vec<bool>, AdvError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(out_of_range(format!("bit string contains '{other}'"))),
        })
        .collect()
}

/// Copy of `sigma` with bit `t` (1-based) flipped.
pub fn flip(sigma: &[bool], t: usize) -> Vec<bool> {
    let mut s = sigma.to_vec();
    s[t - 1] = !s[t - 1];
    s
}

fn graph(w: Weight, nodes: impl IntoIterator<Item = NodeId>) -> Graph {
    let mut g = Graph::new(w);
    for v in nodes {
        g.add_node(v);
    }
    g
}

fn ins_edge(g: &mut Graph, a: NodeId, b: NodeId, w: Weight) {
    g.insert_edge(a, b, w).expect("construction edge is valid");
}

/// Inserts node `v` with the given weighted edges.
fn node_update(v: NodeId, edges: impl IntoIterator<Item = (NodeId, Weight)>) -> Update {
    let mut u = Update::default();
    u.v_ins.insert(v);
    for (x, w) in edges {
        u.e_ins.insert(EdgeKey::of(v, x), w);
    }
    u
}

fn merge(a: &mut Update, b: Update) {
    a.v_ins.extend(b.v_ins);
    a.v_del.extend(b.v_del);
    a.e_ins.extend(b.e_ins);
    a.e_del.extend(b.e_del);
}

/// Builds the event-level reduction sequence for `target` and `sigma`.
///
/// Closed forms, with `S(t)` the number of ones among the first `t` bits:
///
/// * `mst-edge`: `W S(t) + T`; `mst-node`, `cut-edge`, `cut-node`,
///   `matching-node`: `W S(t)`; `matching-edge`: `W S(t) + W T`.
/// * edge-level counting targets: `S(t)`.
/// * node-level counting targets: `D S(t)`, except that `high-degree-node`
///   gains only `D - 1` per bit when `tau = D`, and `kstar-node` gains
///   `D - 1 + C(D - 1, k)` per bit (equal to `D` exactly when `k = D - 1`).
pub fn gen_event_level(target: Target, sigma: &[bool], p: &GenParams) -> Result<Generated, AdvError> {
    let t_len = sigma.len();
    if t_len == 0 {
        return Err(out_of_range("bit string must be non-empty"));
    }
    let w = p.weight;
    if w == 0 {
        return Err(out_of_range("weight bound must be at least 1"));
    }
    let wf = f64::from(w);
    let d = p.max_degree;
    let node_counting = matches!(
        target,
        Target::EdgesNode
            | Target::HighDegreeNode
            | Target::HistogramNode
            | Target::TrianglesNode
            | Target::KStarNode
    );
    if node_counting && d <= 3 {
        return Err(out_of_range(format!("maximum degree must exceed 3, got {d}")));
    }
    let (seq, function, expected) = match target {
        Target::MstEdge => mst_edge(sigma, w, wf),
        Target::MstNode => mst_node(sigma, w, wf),
        Target::CutEdge => {
            if t_len > HYPERCUBE_MAX_T {
                return Err(out_of_range(format!(
                    "hypercube construction supports T <= {HYPERCUBE_MAX_T}, got {t_len}"
                )));
            }
            cut_edge(sigma, w, wf)
        }
        Target::CutNode => cut_node(sigma, w, wf),
        Target::MatchingEdge => matching_edge(sigma, w, wf),
        Target::MatchingNode => matching_node(sigma, w, wf),
        Target::EdgesEdge => {
            let g = graph(1, 0..2 * t_len as u64);
            let ups = sigma
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let i = i as u64;
                    if b {
                        Update::insert_edge(2 * i, 2 * i + 1, 1)
                    } else {
                        Update::empty()
                    }
                })
                .collect();
            (GraphSequence::new(g, ups), GraphFunction::EdgeCount, prefix_sums(sigma, 1.0, 0.0))
        }
        Target::HighDegreeEdge => {
            if p.tau < 2 {
                return Err(out_of_range(format!("tau must be at least 2, got {}", p.tau)));
            }
            let (seq, _) = missing_star_blocks(sigma, p.tau);
            (
                seq,
                GraphFunction::HighDegree { tau: p.tau },
                prefix_sums(sigma, 1.0, 0.0),
            )
        }
        Target::KStarEdge => {
            if p.k < 2 {
                return Err(out_of_range(format!("k must be at least 2, got {}", p.k)));
            }
            let (seq, _) = missing_star_blocks(sigma, p.k);
            (seq, GraphFunction::KStarCount { k: p.k }, prefix_sums(sigma, 1.0, 0.0))
        }
        Target::HistogramEdge => {
            let mut g = graph(1, 0..3 * t_len as u64);
            for i in 0..t_len as u64 {
                ins_edge(&mut g, 3 * i + 1, 3 * i + 2, 1);
            }
            let ups = sigma
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let i = i as u64;
                    if b {
                        Update::insert_edge(3 * i, 3 * i + 1, 1)
                    } else {
                        Update::empty()
                    }
                })
                .collect();
            (
                GraphSequence::new(g, ups),
                GraphFunction::DegreeHistogram,
                prefix_sums(sigma, 1.0, 0.0),
            )
        }
        Target::TrianglesEdge => {
            let mut g = graph(1, 0..3 * t_len as u64);
            for i in 0..t_len as u64 {
                ins_edge(&mut g, 3 * i, 3 * i + 1, 1);
                ins_edge(&mut g, 3 * i + 1, 3 * i + 2, 1);
            }
            let ups = sigma
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let i = i as u64;
                    if b {
                        Update::insert_edge(3 * i, 3 * i + 2, 1)
                    } else {
                        Update::empty()
                    }
                })
                .collect();
            (
                GraphSequence::new(g, ups),
                GraphFunction::TriangleCount,
                prefix_sums(sigma, 1.0, 0.0),
            )
        }
        Target::EdgesNode => {
            let block = d as u64;
            (node_blocks(sigma, |g, base| {
                for j in 0..block {
                    g.add_node(base + j);
                }
                (block, (0..block).map(|j| base + j).collect())
            }), GraphFunction::EdgeCount, prefix_sums(sigma, d as f64, 0.0))
        }
        Target::HighDegreeNode | Target::KStarNode => {
            let (s, f, per_bit) = if target == Target::HighDegreeNode {
                if p.tau < 1 || p.tau > d {
                    return Err(out_of_range(format!("tau must lie in 1..={d}, got {}", p.tau)));
                }
                let extra = if p.tau < d { 1.0 } else { 0.0 };
                (p.tau, GraphFunction::HighDegree { tau: p.tau }, (d - 1) as f64 + extra)
            } else {
                if p.k < 2 || p.k > d {
                    return Err(out_of_range(format!("k must lie in 2..={d}, got {}", p.k)));
                }
                let per = (d - 1) as f64 + binomial((d - 1) as u64, p.k as u64) as f64;
                (p.k, GraphFunction::KStarCount { k: p.k }, per)
            };
            let leaves = (s - 1) as u64;
            let stars = (d - 1) as u64;
            (node_blocks(sigma, |g, base| {
                let mut centers = Vec::new();
                let mut next = base;
                for _ in 0..stars {
                    let c = next;
                    g.add_node(c);
                    for l in 1..=leaves {
                        g.add_node(c + l);
                        ins_edge(g, c, c + l, 1);
                    }
                    centers.push(c);
                    next += leaves + 1;
                }
                (next - base, centers)
            }), f, prefix_sums(sigma, per_bit, 0.0))
        }
        Target::HistogramNode => {
            let pairs = d as u64;
            (node_blocks(sigma, |g, base| {
                let mut attach = Vec::new();
                for j in 0..pairs {
                    let a = base + 2 * j;
                    g.add_node(a);
                    g.add_node(a + 1);
                    ins_edge(g, a, a + 1, 1);
                    attach.push(a);
                }
                (2 * pairs, attach)
            }), GraphFunction::DegreeHistogram, prefix_sums(sigma, d as f64, 0.0))
        }
        Target::TrianglesNode => {
            let len = d as u64;
            (node_blocks(sigma, |g, base| {
                for j in 0..len {
                    g.add_node(base + j);
                }
                for j in 0..len {
                    ins_edge(g, base + j, base + (j + 1) % len, 1);
                }
                (len, (0..len).map(|j| base + j).collect())
            }), GraphFunction::TriangleCount, prefix_sums(sigma, d as f64, 0.0))
        }
    };
    Ok(Generated {
        target,
        sigma: sigma.to_vec(),
        sequence: seq,
        function,
        expected,
    })
}

/// Sequences for `sigma` and for `sigma` with bit `flip_index` flipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialPair {
    /// Construction for `sigma`.
    pub a: Generated,
    /// Construction for the flipped bit string.
    pub b: Generated,
    /// Adjacency certificate of the pair.
    pub witness: AdjacencyWitness,
}

/// Builds the constructions for `sigma` and its flip at `flip_index`
/// (1-based) and certifies that they are adjacent.
pub fn adjacent_pair(
    target: Target,
    sigma: &[bool],
    flip_index: usize,
    p: &GenParams,
) -> Result<AdversarialPair, AdvError> {
    if flip_index == 0 || flip_index > sigma.len() {
        return Err(out_of_range(format!(
            "flip index {flip_index} outside 1..={}",
            sigma.len()
        )));
    }
    let a = gen_event_level(target, sigma, p)?;
    let b = gen_event_level(target, &flip(sigma, flip_index), p)?;
    let kind = match target.adjacency() {
        Adjacency::Edge => AdjacencyKind::EdgeEvent,
        Adjacency::Node => AdjacencyKind::NodeEvent,
    };
    let witness = check_adjacency(&a.sequence, &b.sequence, kind)?.ok_or(AdvError::NotAdjacent)?;
    Ok(AdversarialPair { a, b, witness })
}

/// One gadget block per step; at a 1-bit a fresh node joins every attach
/// point of that step's block. `build` adds a block at node offset `base`
/// and returns its node count and attach points.
fn node_blocks(
    sigma: &[bool],
    mut build: impl FnMut(&mut Graph, NodeId) -> (u64, Vec<NodeId>),
) -> GraphSequence {
    let mut g = Graph::new(1);
    let mut base = 0;
    let mut attach = Vec::new();
    for _ in sigma {
        let (size, pts) = build(&mut g, base);
        attach.push(pts);
        base += size;
    }
    let ups = sigma
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if b {
                node_update(base + i as u64, attach[i].iter().map(|&x| (x, 1)))
            } else {
                Update::empty()
            }
        })
        .collect();
    GraphSequence::new(g, ups)
}

/// `T` copies of an `s`-star missing one edge; a 1-bit completes its star.
fn missing_star_blocks(sigma: &[bool], s: usize) -> (GraphSequence, u64) {
    let size = s as u64 + 1;
    let mut g = graph(1, 0..size * sigma.len() as u64);
    for i in 0..sigma.len() as u64 {
        let c = i * size;
        for l in 1..s as u64 {
            ins_edge(&mut g, c, c + l, 1);
        }
    }
    let ups = sigma
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let c = i as u64 * size;
            if b {
                Update::insert_edge(c, c + s as u64, 1)
            } else {
                Update::empty()
            }
        })
        .collect();
    (GraphSequence::new(g, ups), size)
}

type Built = (GraphSequence, GraphFunction, Vec<f64>);

/// Path `0 - 1 - ... - T` of unit weight plus isolated nodes `T+1..=2T+1`.
/// Step `t` inserts `{t, (t+2) mod T}` with weight `W` when that pair is a
/// valid new edge, and `{T+t, T+t+1}` with weight `W` when bit `t` is 1.
fn mst_edge(sigma: &[bool], w: Weight, wf: f64) -> Built {
    let t_len = sigma.len() as u64;
    let mut g = graph(w, 0..=2 * t_len + 1);
    for i in 1..=t_len {
        ins_edge(&mut g, i - 1, i, 1);
    }
    let mut present: BTreeSet<EdgeKey> = g.edges().keys().copied().collect();
    let mut ups = Vec::new();
    for (i, &b) in sigma.iter().enumerate() {
        let t = i as u64 + 1;
        let mut u = Update::default();
        if let Some(e0) = EdgeKey::new(t, (t + 2) % t_len) {
            if present.insert(e0) {
                u.e_ins.insert(e0, w);
            }
        }
        if b {
            u.e_ins.insert(EdgeKey::of(t_len + t, t_len + t + 1), w);
        }
        ups.push(u);
    }
    (
        GraphSequence::new(g, ups),
        GraphFunction::MstWeight,
        prefix_sums(sigma, wf, t_len as f64),
    )
}

/// Start with node `v0 = 0`. Step `t` inserts an isolated node and, at a
/// 1-bit, a node joined to `v0` by an edge of weight `W`.
fn mst_node(sigma: &[bool], w: Weight, wf: f64) -> Built {
    let g = graph(w, [0]);
    let ups = sigma
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let t = i as u64 + 1;
            let mut u = node_update(2 * t - 1, []);
            if b {
                merge(&mut u, node_update(2 * t, [(0, w)]));
            }
            u
        })
        .collect();
    (GraphSequence::new(g, ups), GraphFunction::MstWeight, prefix_sums(sigma, wf, 0.0))
}

/// Hypercube of dimension `T + 1` with weight-`W` edges plus an isolated
/// node `v*`. Step `t` joins the corner `b_t` (the bits of `t` followed by 0)
/// to its antipode, and at a 1-bit joins `v*` to `b_t`.
fn cut_edge(sigma: &[bool], w: Weight, wf: f64) -> Built {
    let t_len = sigma.len();
    let dim = t_len + 1;
    let corners = 1u64 << dim;
    let star = corners;
    let mut g = graph(w, 0..=star);
    for x in 0..corners {
        for bit in 0..dim {
            let y = x ^ (1 << bit);
            if x < y {
                ins_edge(&mut g, x, y, w);
            }
        }
    }
    let mask = (1u64 << t_len) - 1;
    let ups = sigma
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let t = i as u64 + 1;
            let corner = t << 1;
            let antipode = ((!t & mask) << 1) | 1;
            let mut u = Update::insert_edge(corner, antipode, w);
            if b {
                u.e_ins.insert(EdgeKey::of(star, corner), w);
            }
            u
        })
        .collect();
    (GraphSequence::new(g, ups), GraphFunction::MinCut, prefix_sums(sigma, wf, 0.0))
}

/// Two growing cliques. Nodes `u_j = 2j` and `v_j = 2j + 1`, starting with
/// `u_0, v_0`. Step `t` inserts `u_t` joined to every earlier `u_j`; at a
/// 1-bit it also inserts `v_t` joined to every present `v_j` and to `u_0`.
fn cut_node(sigma: &[bool], w: Weight, wf: f64) -> Built {
    let g = graph(w, [0, 1]);
    let mut vs: Vec<NodeId> = vec![1];
    let mut ups = Vec::new();
    for (i, &b) in sigma.iter().enumerate() {
        let t = i as u64 + 1;
        let mut u = node_update(2 * t, (0..t).map(|j| (2 * j, w)));
        if b {
            let v = 2 * t + 1;
            merge(
                &mut u,
                node_update(v, vs.iter().map(|&x| (x, w)).chain(std::iter::once((0, w)))),
            );
            vs.push(v);
        }
        ups.push(u);
    }
    (GraphSequence::new(g, ups), GraphFunction::MinCut, prefix_sums(sigma, wf, 0.0))
}

/// Nodes `u_1..u_2T` (ids `0..2T`) and `v_1..v_2T` (ids `2T..4T`). The
/// initial edges `{u_i, v_(i mod T)+1}`, `i = 1..=T`, form a perfect
/// matching of weight `W T` on the first halves. Step `t` inserts
/// `{u_t, v_t}` with weight 1 unless already present, and at a 1-bit
/// `{u_(T+t), v_(T+t)}` with weight `W`.
fn matching_edge(sigma: &[bool], w: Weight, wf: f64) -> Built {
    let t_len = sigma.len() as u64;
    let u = |i: u64| i - 1;
    let v = |i: u64| 2 * t_len + i - 1;
    let mut g = graph(w, 0..4 * t_len);
    for i in 1..=t_len {
        ins_edge(&mut g, u(i), v(i % t_len + 1), w);
    }
    let initial: BTreeSet<EdgeKey> = g.edges().keys().copied().collect();
    let ups = sigma
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let t = i as u64 + 1;
            let mut up = Update::default();
            let e0 = EdgeKey::of(u(t), v(t));
            if !initial.contains(&e0) {
                up.e_ins.insert(e0, 1);
            }
            if b {
                up.e_ins.insert(EdgeKey::of(u(t_len + t), v(t_len + t)), w);
            }
            up
        })
        .collect();
    (
        GraphSequence::new(g, ups),
        GraphFunction::MaxWeightMatching,
        prefix_sums(sigma, wf, wf * t_len as f64),
    )
}

/// Nodes `v_1..v_T` (ids `0..T`). Step `t` inserts an isolated node and, at
/// a 1-bit, a node joined to `v_t` with weight `W`.
fn matching_node(sigma: &[bool], w: Weight, wf: f64) -> Built {
    let t_len = sigma.len() as u64;
    let g = graph(w, 0..t_len);
    let ups = sigma
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let t = i as u64 + 1;
            let mut u = node_update(t_len + t - 1, []);
            if b {
                merge(&mut u, node_update(2 * t_len + t - 1, [(t - 1, w)]));
            }
            u
        })
        .collect();
    (
        GraphSequence::new(g, ups),
        GraphFunction::MaxWeightMatching,
        prefix_sums(sigma, wf, 0.0),
    )
}

/// Constructions of adjacent pairs with large difference-sequence
/// sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// Fully dynamic high-degree count; also used for the histogram.
    HighDegreeFullyDynamic,
    /// Fully dynamic triangle count.
    TrianglesFullyDynamic,
    /// Fully dynamic k-star count.
    KStarFullyDynamic,
    /// Fully dynamic edge count under node adjacency.
    EdgesFullyDynamic,
    /// Fully dynamic minimum spanning tree weight.
    MstFullyDynamic,
    /// Incremental maximum matching.
    MatchingIncremental,
    /// Incremental minimum cut.
    MinCutIncremental,
    /// Incremental minimum spanning tree pair attaining `2W - 2`.
    MstTight,
}

/// A pair of adjacent sequences and the statistic it targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPair {
    /// Construction used.
    pub kind: WitnessKind,
    /// Neighbouring relation between the two sequences.
    pub adjacency: Adjacency,
    /// Sequence with the extra update.
    pub a: GraphSequence,
    /// Sequence without it.
    pub b: GraphSequence,
    /// Statistic.
    pub function: GraphFunction,
    /// Regime of both sequences.
    pub regime: Regime,
}

/// Builds the witness pair of `kind` with `T = horizon` steps.
///
/// `param` is `tau` for the high-degree construction, `k` for k-stars and
/// `W` for the spanning-tree and cut constructions.
pub fn witness_pair(
    kind: WitnessKind,
    adjacency: Adjacency,
    horizon: usize,
    param: usize,
) -> Result<WitnessPair, AdvError> {
    if horizon < 2 && kind != WitnessKind::MstTight {
        return Err(out_of_range("witness pairs need at least two steps"));
    }
    let (a, b, function) = match kind {
        WitnessKind::HighDegreeFullyDynamic => {
            if param < 3 {
                return Err(out_of_range(format!("tau must be at least 3, got {param}")));
            }
            let tau = param as u64;
            let h = Graph::from_parts(1, 0..=tau, (1..=tau).map(|l| (0, l, 1)))?;
            let (a, b) = toggle_pair(&h, adjacency, (0, 1), (0, 2), horizon)?;
            (a, b, GraphFunction::HighDegree { tau: param })
        }
        WitnessKind::TrianglesFullyDynamic => {
            let h = Graph::from_parts(1, 0..3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])?;
            let (a, b) = toggle_pair(&h, adjacency, (0, 1), (1, 2), horizon)?;
            (a, b, GraphFunction::TriangleCount)
        }
        WitnessKind::KStarFullyDynamic => {
            if param < 2 {
                return Err(out_of_range(format!("k must be at least 2, got {param}")));
            }
            let k = param as u64;
            let h = Graph::from_parts(1, 0..=k, (1..=k).map(|l| (0, l, 1)))?;
            let (a, b) = toggle_pair(&h, adjacency, (0, 1), (0, 2), horizon)?;
            (a, b, GraphFunction::KStarCount { k: param })
        }
        WitnessKind::EdgesFullyDynamic => {
            if adjacency != Adjacency::Node {
                return Err(AdvError::Unsupported(
                    "edge count is bounded under edge adjacency".into(),
                ));
            }
            let h = Graph::from_parts(1, 0..3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])?;
            let (a, b) = toggle_pair(&h, adjacency, (0, 1), (0, 2), horizon)?;
            (a, b, GraphFunction::EdgeCount)
        }
        WitnessKind::MstFullyDynamic => {
            let (a, b) = mst_fully_dynamic(adjacency, horizon, param)?;
            (a, b, GraphFunction::MstWeight)
        }
        WitnessKind::MatchingIncremental => {
            let (a, b) = matching_incremental(adjacency, horizon);
            (a, b, GraphFunction::MaxCardinalityMatching)
        }
        WitnessKind::MinCutIncremental => {
            let (a, b) = min_cut_incremental(adjacency, horizon, param)?;
            (a, b, GraphFunction::MinCut)
        }
        WitnessKind::MstTight => {
            if adjacency != Adjacency::Edge {
                return Err(AdvError::Unsupported("tight pair is edge-level".into()));
            }
            let (a, b) = mst_tight(param)?;
            (a, b, GraphFunction::MstWeight)
        }
    };
    let regime = if a.regime() == Regime::FullyDynamic || b.regime() == Regime::FullyDynamic {
        Regime::FullyDynamic
    } else {
        Regime::Incremental
    };
    Ok(WitnessPair {
        kind,
        adjacency,
        a,
        b,
        function,
        regime,
    })
}

/// Starts from `h` without the edges `first` and `toggled` (edge level) or
/// without the nodes `first.1` and `toggled.1` (node level). At step 1 only
/// `a` also gets `first`; from then on both sequences alternately carry and
/// drop `toggled`.
fn toggle_pair(
    h: &Graph,
    adjacency: Adjacency,
    first: (NodeId, NodeId),
    toggled: (NodeId, NodeId),
    horizon: usize,
) -> Result<(GraphSequence, GraphSequence), AdvError> {
    let (fk, tk) = (EdgeKey::of(first.0, first.1), EdgeKey::of(toggled.0, toggled.1));
    match adjacency {
        Adjacency::Edge => {
            let mut g0 = h.clone();
            g0.remove_edge(&fk);
            g0.remove_edge(&tk);
            let on = Update::insert_edge(toggled.0, toggled.1, 1);
            let off = Update::delete_edge(toggled.0, toggled.1);
            let mut a_first = on.clone();
            a_first.e_ins.insert(fk, 1);
            let rest = |t: usize| if t.is_multiple_of(2) { off.clone() } else { on.clone() };
            let a = std::iter::once(a_first).chain((2..=horizon).map(rest)).collect();
            let b = std::iter::once(on.clone()).chain((2..=horizon).map(rest)).collect();
            Ok((GraphSequence::new(g0.clone(), a), GraphSequence::new(g0, b)))
        }
        Adjacency::Node => {
            let (star, tog) = (first.1, toggled.1);
            let mut g0 = Graph::new(h.max_weight());
            for &v in h.nodes() {
                if v != star && v != tog {
                    g0.add_node(v);
                }
            }
            for (k, &w) in h.edges() {
                if !k.touches(star) && !k.touches(tog) {
                    g0.insert_edge(k.u(), k.v(), w).map_err(|r| GraphError::InvalidUpdate {
                        step: 0,
                        reason: r,
                    })?;
                }
            }
            let with_star = |include_star: bool| -> Update {
                let mut u = Update::default();
                u.v_ins.insert(tog);
                if include_star {
                    u.v_ins.insert(star);
                }
                for (k, &w) in h.edges() {
                    let present = |x: NodeId| g0.has_node(x) || x == tog || (include_star && x == star);
                    if (k.touches(tog) || (include_star && k.touches(star)))
                        && present(k.u())
                        && present(k.v())
                    {
                        u.e_ins.insert(*k, w);
                    }
                }
                u
            };
            let toggle_on = |a_side: bool| -> Update {
                let mut u = Update::default();
                u.v_ins.insert(tog);
                for (k, &w) in h.edges() {
                    if k.touches(tog) {
                        let other = k.other(tog).expect("endpoint");
                        if g0.has_node(other) || (a_side && other == star) {
                            u.e_ins.insert(*k, w);
                        }
                    }
                }
                u
            };
            let toggle_off = |a_side: bool| -> Update {
                let on = toggle_on(a_side);
                Update {
                    v_del: on.v_ins,
                    e_del: on.e_ins.keys().copied().collect(),
                    ..Update::default()
                }
            };
            let seq = |a_side: bool| -> GraphSequence {
                let mut ups = vec![with_star(a_side)];
                for t in 2..=horizon {
                    ups.push(if t % 2 == 0 {
                        toggle_off(a_side)
                    } else {
                        toggle_on(a_side)
                    });
                }
                GraphSequence::new(g0.clone(), ups)
            };
            Ok((seq(true), seq(false)))
        }
    }
}

fn path_edges(nodes: &[NodeId]) -> Vec<(NodeId, NodeId, Weight)> {
    nodes.windows(2).map(|p| (p[0], p[1], 1)).collect()
}

/// Paths `A = 0-1-2` and `B = 3-4-5` of unit weight joined by `{0, 3}` of
/// weight `W`. Step 1 gives `a` a unit shortcut between the halves; later
/// steps alternately add and remove a second bridge of weight `W - 1`.
fn mst_fully_dynamic(
    adjacency: Adjacency,
    horizon: usize,
    w_param: usize,
) -> Result<(GraphSequence, GraphSequence), AdvError> {
    if w_param < 3 {
        return Err(out_of_range(format!("W must be at least 3, got {w_param}")));
    }
    let w = w_param as Weight;
    let (a0, a1, a2, b0, b1, b2) = (0, 1, 2, 3, 4, 5);
    let mut edges = path_edges(&[a0, a1, a2]);
    edges.extend(path_edges(&[b0, b1, b2]));
    edges.push((a0, b0, w));
    let g0 = Graph::from_parts(w, 0..6, edges)?;
    let (star, extra) = (6, 7);
    let (first, on, off) = match adjacency {
        Adjacency::Edge => (
            Update::insert_edge(a1, b1, 1),
            Update::insert_edge(a2, b2, w - 1),
            Update::delete_edge(a2, b2),
        ),
        Adjacency::Node => {
            let on = node_update(extra, [(a2, 1), (b1, w - 1)]);
            let off = Update {
                v_del: on.v_ins.clone(),
                e_del: on.e_ins.keys().copied().collect(),
                ..Update::default()
            };
            (node_update(star, [(a1, 1), (b1, 1)]), on, off)
        }
    };
    let rest: Vec<Update> = (2..=horizon)
        .map(|t| if t % 2 == 0 { on.clone() } else { off.clone() })
        .collect();
    let a = std::iter::once(first).chain(rest.iter().cloned()).collect();
    let b = std::iter::once(Update::empty()).chain(rest).collect();
    Ok((GraphSequence::new(g0.clone(), a), GraphSequence::new(g0, b)))
}

/// Path growth: `a` gets `{0, 1}` at step 1 and both then extend the path
/// by `{t-1, t}`, so their maximum matchings differ at alternate steps.
fn matching_incremental(adjacency: Adjacency, horizon: usize) -> (GraphSequence, GraphSequence) {
    let t_len = horizon as u64;
    match adjacency {
        Adjacency::Edge => {
            let g0 = graph(1, 0..=t_len);
            let rest: Vec<Update> = (2..=t_len).map(|t| Update::insert_edge(t - 1, t, 1)).collect();
            let a = std::iter::once(Update::insert_edge(0, 1, 1))
                .chain(rest.iter().cloned())
                .collect();
            let b = std::iter::once(Update::empty()).chain(rest).collect();
            (GraphSequence::new(g0.clone(), a), GraphSequence::new(g0, b))
        }
        Adjacency::Node => {
            let g0 = graph(1, [1]);
            let rest: Vec<Update> = (2..=t_len).map(|t| node_update(t, [(t - 1, 1)])).collect();
            let a = std::iter::once(node_update(0, [(1, 1)]))
                .chain(rest.iter().cloned())
                .collect();
            let b = std::iter::once(Update::empty()).chain(rest).collect();
            (GraphSequence::new(g0.clone(), a), GraphSequence::new(g0, b))
        }
    }
}

/// Three cliques `A`, `B`, `C` on `T + 2` nodes with weight `W`, joined by
/// `{a_(T+1), b_(T+1)}` of weight 1 and `{b_(T+1), c_(T+1)}` of weight 2.
/// Step 1 adds an `A`-`B` link of weight `W` to `a` only; even steps add
/// `A`-`B` links and odd steps add `B`-`C` links to both. At node level each
/// link is a new node joined to the far endpoint and to its whole clique.
fn min_cut_incremental(
    adjacency: Adjacency,
    horizon: usize,
    w_param: usize,
) -> Result<(GraphSequence, GraphSequence), AdvError> {
    if w_param < 3 {
        return Err(out_of_range(format!("W must be at least 3, got {w_param}")));
    }
    let w = w_param as Weight;
    let size = horizon as u64 + 2;
    let a = |i: u64| i;
    let b = |i: u64| size + i;
    let c = |i: u64| 2 * size + i;
    let mut g0 = graph(w, 0..3 * size);
    for base in [0, size, 2 * size] {
        for i in 0..size {
            for j in i + 1..size {
                ins_edge(&mut g0, base + i, base + j, w);
            }
        }
    }
    ins_edge(&mut g0, a(size - 1), b(size - 1), 1);
    ins_edge(&mut g0, b(size - 1), c(size - 1), 2);
    let fresh = 3 * size;
    let link = |t: u64, ab: bool| -> Update {
        match adjacency {
            Adjacency::Edge => {
                if ab {
                    Update::insert_edge(a(t), b(t), w)
                } else {
                    Update::insert_edge(b(t), c(t), w)
                }
            }
            Adjacency::Node => {
                let (far, clique): (NodeId, Box<dyn Fn(u64) -> u64>) = if ab {
                    (b(t), Box::new(a))
                } else {
                    (b(t), Box::new(c))
                };
                node_update(
                    fresh + t,
                    std::iter::once((far, w)).chain((0..size).map(|j| (clique(j), w))),
                )
            }
        }
    };
    let rest: Vec<Update> = (2..=horizon as u64).map(|t| link(t, t % 2 == 0)).collect();
    let a_seq = std::iter::once(link(0, true)).chain(rest.iter().cloned()).collect();
    let b_seq = std::iter::once(Update::empty()).chain(rest).collect();
    Ok((GraphSequence::new(g0.clone(), a_seq), GraphSequence::new(g0, b_seq)))
}

/// Paths `A = 0-1-2` and `B = 3-4-5` of unit weight joined by `{0, 3}` of
/// weight `W`. Step 1 changes nothing, step 2 adds the unit edge `{1, 4}` to
/// `a` only and step 3 adds the unit edge `{2, 5}` to both.
fn mst_tight(w_param: usize) -> Result<(GraphSequence, GraphSequence), AdvError> {
    if w_param < 1 {
        return Err(out_of_range("W must be at least 1"));
    }
    let w = w_param as Weight;
    let mut edges = path_edges(&[0, 1, 2]);
    edges.extend(path_edges(&[3, 4, 5]));
    edges.push((0, 3, w));
    let g0 = Graph::from_parts(w, 0..6, edges)?;
    let a = vec![Update::empty(), Update::insert_edge(1, 4, 1), Update::insert_edge(2, 5, 1)];
    let b = vec![Update::empty(), Update::empty(), Update::insert_edge(2, 5, 1)];
    Ok((GraphSequence::new(g0.clone(), a), GraphSequence::new(g0, b)))
}

/// Two graphs on the same nodes, a shared spared edge and the value gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadSpec {
    /// Statistic.
    pub function: GraphFunction,
    /// Graph with the larger value.
    pub g1: Graph,
    /// Graph with the smaller value.
    pub g2: Graph,
    /// Edge present with equal weight in both graphs.
    pub spared: EdgeKey,
    /// Number of single-edge updates turning `g1` into `g2`.
    pub ell: usize,
    /// `|f(g1) - f(g2)|`.
    pub gap: f64,
}

/// Single-edge updates turning `g1` into `g2`: deletions of edges only in
/// `g1` first, then insertions of edges only in `g2`, each in key order.
pub fn transformation(g1: &Graph, g2: &Graph) -> Result<Vec<Update>, AdvError> {
    if g1.nodes() != g2.nodes() {
        return Err(AdvError::NodeSetMismatch);
    }
    let mut out = Vec::new();
    for (k, w) in g1.edges() {
        if g2.weight(k) != Some(*w) {
            out.push(Update::delete_edge(k.u(), k.v()));
        }
    }
    for (k, w) in g2.edges() {
        if g1.weight(k) != Some(*w) {
            out.push(Update::insert_edge(k.u(), k.v(), *w));
        }
    }
    Ok(out)
}

/// Builds the pair of graphs used by the user-level reduction for `f` on
/// `n` nodes with weight bound `w`.
///
/// * matchings: a perfect matching against a star sharing one edge;
/// * MST weight: a weight-`W` star against a unit star, sharing one unit edge;
/// * every other statistic: the complete graph against one or two edges.
pub fn spread_of(f: &GraphFunction, n: usize, w: Weight) -> Result<SpreadSpec, AdvError> {
    if n < 4 {
        return Err(AdvError::TooSmall(n));
    }
    let nn = n as u64;
    let (g1, g2, spared) = match f {
        GraphFunction::MaxWeightMatching | GraphFunction::MaxCardinalityMatching => {
            let pairs = nn / 2;
            let wt = if *f == GraphFunction::MaxWeightMatching { w } else { 1 };
            let g1 = Graph::from_parts(w, 0..nn, (0..pairs).map(|i| (2 * i, 2 * i + 1, wt)))?;
            let g2 = Graph::from_parts(w, 0..nn, (0..pairs).map(|i| (0, 2 * i + 1, wt)))?;
            (g1, g2, EdgeKey::of(0, 1))
        }
        GraphFunction::MstWeight => {
            let mut e1 = vec![(0, 1, 1)];
            e1.extend((2..nn).map(|i| (0, i, w)));
            let mut e2 = vec![(0, 1, 1)];
            e2.extend((2..nn).map(|i| (1, i, 1)));
            (
                Graph::from_parts(w, 0..nn, e1)?,
                Graph::from_parts(w, 0..nn, e2)?,
                EdgeKey::of(0, 1),
            )
        }
        _ => {
            let all: Vec<(NodeId, NodeId, Weight)> = (0..nn)
                .flat_map(|i| (i + 1..nn).map(move |j| (i, j, 1)))
                .collect();
            let g1 = Graph::from_parts(1, 0..nn, all.clone())?;
            let keep = if (all.len() - 1).is_multiple_of(2) { 1 } else { 2 };
            let g2 = Graph::from_parts(1, 0..nn, all.into_iter().take(keep))?;
            (g1, g2, EdgeKey::of(0, 1))
        }
    };
    let ell = transformation(&g1, &g2)?.len();
    let gap = (f.eval_scalar(&g1)? - f.eval_scalar(&g2)?).abs();
    if gap == 0.0 {
        return Err(AdvError::ZeroSpread);
    }
    Ok(SpreadSpec {
        function: *f,
        g1,
        g2,
        spared,
        ell,
        gap,
    })
}

/// Builds the user-level sequence for `bits` with `horizon` steps.
///
/// Phase `i` has length `2 ell` and alternates direction, forward
/// (`g1` to `g2`) first. With bit 0 the phase applies the transformation
/// and then toggles the spared edge `ell` times; with bit 1 it toggles first
/// and transforms second. Two bit strings that differ at bit `i` therefore
/// sit at `g1` and `g2` respectively at step `(2i + 1) ell`.
pub fn gen_user_level(spec: &SpreadSpec, bits: &[bool], horizon: usize) -> Result<GraphSequence, AdvError> {
    let ell = spec.ell;
    if ell == 0 || !ell.is_multiple_of(2) {
        return Err(AdvError::OddTransformation(ell));
    }
    let phase = 2 * ell;
    if !horizon.is_multiple_of(phase) {
        return Err(AdvError::LengthNotMultiple { horizon, phase });
    }
    if bits.len() != horizon / phase {
        return Err(out_of_range(format!(
            "{} bits do not fit {} phases",
            bits.len(),
            horizon / phase
        )));
    }
    let sw = spec.g1.weight(&spec.spared);
    if sw.is_none() || sw != spec.g2.weight(&spec.spared) {
        return Err(AdvError::SparedEdgeMissing(spec.spared));
    }
    let forward = transformation(&spec.g1, &spec.g2)?;
    let backward = transformation(&spec.g2, &spec.g1)?;
    let (s, w) = (spec.spared, sw.expect("checked"));
    let toggles: Vec<Update> = (0..ell)
        .map(|j| {
            if j % 2 == 0 {
                Update::delete_edge(s.u(), s.v())
            } else {
                Update::insert_edge(s.u(), s.v(), w)
            }
        })
        .collect();
    let mut ups = Vec::with_capacity(horizon);
    for (i, &bit) in bits.iter().enumerate() {
        let trans = if i % 2 == 0 { &forward } else { &backward };
        if bit {
            ups.extend(toggles.iter().cloned());
            ups.extend(trans.iter().cloned());
        } else {
            ups.extend(trans.iter().cloned());
            ups.extend(toggles.iter().cloned());
        }
    }
    Ok(GraphSequence::new(spec.g1.clone(), ups))
}
