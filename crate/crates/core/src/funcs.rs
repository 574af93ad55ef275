//! Exact evaluators for the graph statistics that can be released.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowNetwork;
use crate::graph::{Graph, IndexedGraph, NodeId, Weight};

/// Node limit of the exhaustive densest-subgraph search.
pub const DENSEST_EXHAUSTIVE_LIMIT: usize = 20;
/// Component-size limit of the subset dynamic program for matchings.
pub const MATCHING_SUBSET_LIMIT: usize = 22;
/// Frontier-size limit of the path-ordered matching dynamic program.
pub const MATCHING_FRONTIER_LIMIT: usize = 22;

/// Errors raised by the evaluators.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FuncError {
    /// The input is too large for an exact method.
    #[error("{method} supports at most {limit} nodes, got {size}")]
    SizeLimitExceeded {
        method: &'static str,
        size: usize,
        limit: usize,
    },
    /// An s-t cut terminal is not a node of the graph.
    #[error("terminal node {0} is not in the graph")]
    MissingTerminal(NodeId),
    /// The function name or parameters are not recognised.
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
}

/// A graph statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum GraphFunction {
    /// Number of edges.
    EdgeCount,
    /// Number of nodes of degree at least `tau`.
    HighDegree { tau: usize },
    /// Number of nodes of each degree `0..n`.
    DegreeHistogram,
    /// Number of triangles.
    TriangleCount,
    /// Number of `k`-stars, `sum_v C(deg v, k)`.
    KStarCount { k: usize },
    /// Weight of a minimum spanning forest.
    MstWeight,
    /// Weight of a global minimum cut; 0 when disconnected.
    MinCut,
    /// Weight of a minimum cut separating `s` from `t`.
    StMinCut { s: NodeId, t: NodeId },
    /// Weight of a maximum-weight matching.
    MaxWeightMatching,
    /// Size of a maximum-cardinality matching.
    MaxCardinalityMatching,
    /// Largest `|E(S)| / |S|` over non-empty node sets `S`.
    DensestSubgraph,
}

impl GraphFunction {
    /// Canonical name used on the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            GraphFunction::EdgeCount => "edge_count",
            GraphFunction::HighDegree { .. } => "high_degree",
            GraphFunction::DegreeHistogram => "degree_histogram",
            GraphFunction::TriangleCount => "triangle_count",
            GraphFunction::KStarCount { .. } => "kstar_count",
            GraphFunction::MstWeight => "mst_weight",
            GraphFunction::MinCut => "min_cut",
            GraphFunction::StMinCut { .. } => "st_min_cut",
            GraphFunction::MaxWeightMatching => "max_weight_matching",
            GraphFunction::MaxCardinalityMatching => "max_cardinality_matching",
            GraphFunction::DensestSubgraph => "densest_subgraph",
        }
    }

    /// Looks up a function by name. `tau`, `k` and `terminals` supply the
    /// parameters of the functions that need them.
    pub fn parse(
        name: &str,
        tau: Option<usize>,
        k: Option<usize>,
        terminals: Option<(NodeId, NodeId)>,
    ) -> Result<Self, FuncError> {
        let unknown = || FuncError::UnknownFunction(name.to_string());
        Ok(match name {
            "edge_count" | "edges" => GraphFunction::EdgeCount,
            "high_degree" => GraphFunction::HighDegree {
                tau: tau.ok_or_else(unknown)?,
            },
            "degree_histogram" | "histogram" => GraphFunction::DegreeHistogram,
            "triangle_count" | "triangles" => GraphFunction::TriangleCount,
            "kstar_count" | "kstar" => GraphFunction::KStarCount {
                k: k.ok_or_else(unknown)?,
            },
            "mst_weight" | "mst" => GraphFunction::MstWeight,
            "min_cut" => GraphFunction::MinCut,
            "st_min_cut" => {
                let (s, t) = terminals.ok_or_else(unknown)?;
                GraphFunction::StMinCut { s, t }
            }
            "max_weight_matching" | "matching" => GraphFunction::MaxWeightMatching,
            "max_cardinality_matching" => GraphFunction::MaxCardinalityMatching,
            "densest_subgraph" | "densest" => GraphFunction::DensestSubgraph,
            _ => return Err(unknown()),
        })
    }

    /// Whether the value is a vector (the degree histogram).
    pub fn is_vector(&self) -> bool {
        matches!(self, GraphFunction::DegreeHistogram)
    }

    /// Evaluates the function on `g`.
    pub fn eval(&self, g: &Graph) -> Result<Value, FuncError> {
        let s = |x: f64| Ok(Value::Scalar(x));
        match *self {
            GraphFunction::EdgeCount => s(g.edge_count() as f64),
            GraphFunction::HighDegree { tau } => s(high_degree(g, tau) as f64),
            GraphFunction::DegreeHistogram => Ok(Value::Vector(degree_histogram(g))),
            GraphFunction::TriangleCount => s(triangle_count(g) as f64),
            GraphFunction::KStarCount { k } => s(kstar_count(g, k) as f64),
            GraphFunction::MstWeight => s(mst_weight(g) as f64),
            GraphFunction::MinCut => s(min_cut(g) as f64),
            GraphFunction::StMinCut { s: a, t: b } => s(st_min_cut(g, a, b)? as f64),
            GraphFunction::MaxWeightMatching => s(max_weight_matching(g)? as f64),
            GraphFunction::MaxCardinalityMatching => s(max_cardinality_matching(g)? as f64),
            GraphFunction::DensestSubgraph => s(densest_subgraph(g)?),
        }
    }

    /// Scalar value of the function on `g`; for the histogram this is the
    /// number of nodes of degree 2, the statistic used by the lower-bound
    /// constructions.
    pub fn eval_scalar(&self, g: &Graph) -> Result<f64, FuncError> {
        Ok(match self.eval(g)? {
            Value::Scalar(x) => x,
            Value::Vector(v) => v.get(2).copied().unwrap_or(0.0),
        })
    }
}

impl fmt::Display for GraphFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFunction::HighDegree { tau } => write!(f, "high_degree(tau={tau})"),
            GraphFunction::KStarCount { k } => write!(f, "kstar_count(k={k})"),
            GraphFunction::StMinCut { s, t } => write!(f, "st_min_cut({s},{t})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Value of a statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Value {
    /// Coordinates of the value, padded with zeros to at least `len`.
    pub fn coords(&self, len: usize) -> Vec<f64> {
        let mut v = match self {
            Value::Scalar(x) => vec![*x],
            Value::Vector(v) => v.clone(),
        };
        if v.len() < len {
            v.resize(len, 0.0);
        }
        v
    }

    /// Number of coordinates.
    pub fn len(&self) -> usize {
        match self {
            Value::Scalar(_) => 1,
            Value::Vector(v) => v.len(),
        }
    }

    /// Whether the value has no coordinates.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sensitivity of a single evaluation to one edge change, used as the noise
/// parameter of the monotone mechanism: `W` for cuts and weighted matchings,
/// 1 for densest subgraph and cardinality matching.
pub fn static_sensitivity(f: &GraphFunction, max_weight: Weight) -> Result<f64, FuncError> {
    match f {
        GraphFunction::MinCut | GraphFunction::StMinCut { .. } | GraphFunction::MaxWeightMatching => {
            Ok(f64::from(max_weight))
        }
        GraphFunction::DensestSubgraph | GraphFunction::MaxCardinalityMatching => Ok(1.0),
        other => Err(FuncError::UnknownFunction(format!(
            "{other} has no single-graph sensitivity"
        ))),
    }
}

/// Number of nodes with degree at least `tau`.
pub fn high_degree(g: &Graph, tau: usize) -> usize {
    g.degrees().values().filter(|&&d| d >= tau).count()
}

/// Counts of nodes per degree `0..n`. The entries sum to the node count.
pub fn degree_histogram(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut h = vec![0.0; n];
    for d in g.degrees().values() {
        h[*d] += 1.0;
    }
    h
}

/// Number of triangles.
pub fn triangle_count(g: &Graph) -> u64 {
    let idx = g.index();
    let nb: Vec<Vec<usize>> = idx
        .adj
        .iter()
        .map(|a| {
            let mut v: Vec<usize> = a.iter().map(|&(y, _)| y).collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut count = 0;
    for &(a, b, _) in &idx.edges {
        let (x, y) = (&nb[a], &nb[b]);
        let (mut i, mut j) = (0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if x[i] > b {
                        count += 1;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    count
}

/// Binomial coefficient `C(n, k)`, 0 when `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * u128::from(n - i) / u128::from(i + 1);
    }
    r as u64
}

/// Number of `k`-stars, `sum_v C(deg v, k)`.
pub fn kstar_count(g: &Graph, k: usize) -> u64 {
    g.degrees()
        .values()
        .map(|&d| binomial(d as u64, k as u64))
        .sum()
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Weight of a minimum spanning forest (Kruskal, edges sorted once).
pub fn mst_weight(g: &Graph) -> u64 {
    let idx = g.index();
    let mut edges = idx.edges.clone();
    edges.sort_by_key(|&(a, b, w)| (w, a, b));
    let mut dsu = Dsu::new(idx.n);
    edges
        .into_iter()
        .filter(|&(a, b, _)| dsu.union(a, b))
        .map(|(_, _, w)| u64::from(w))
        .sum()
}

/// Weight of a global minimum cut (Stoer-Wagner). Disconnected graphs and
/// graphs with fewer than two nodes have minimum cut 0.
pub fn min_cut(g: &Graph) -> u64 {
    let idx = g.index();
    if idx.n < 2 || !g.is_connected() {
        return 0;
    }
    let n = idx.n;
    let mut w = vec![vec![0u64; n]; n];
    for &(a, b, c) in &idx.edges {
        w[a][b] += u64::from(c);
        w[b][a] += u64::from(c);
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut best = u64::MAX;
    let mut key = vec![0u64; n];
    let mut added = vec![false; n];
    while active.len() > 1 {
        for &v in &active {
            key[v] = 0;
            added[v] = false;
        }
        let mut prev = active[0];
        added[prev] = true;
        for &v in &active {
            key[v] = w[prev][v];
        }
        for round in 1..active.len() {
            let mut sel = usize::MAX;
            for &v in &active {
                if !added[v] && (sel == usize::MAX || key[v] > key[sel]) {
                    sel = v;
                }
            }
            added[sel] = true;
            if round == active.len() - 1 {
                best = best.min(key[sel]);
                for &v in &active {
                    w[prev][v] += w[sel][v];
                    w[v][prev] = w[prev][v];
                }
                w[prev][prev] = 0;
                active.retain(|&v| v != sel);
                break;
            }
            for &v in &active {
                if !added[v] {
                    key[v] += w[sel][v];
                }
            }
            prev = sel;
        }
    }
    best
}

/// Weight of a minimum cut separating `s` and `t`, by maximum flow.
/// Returns 0 when `s == t`.
pub fn st_min_cut(g: &Graph, s: NodeId, t: NodeId) -> Result<u64, FuncError> {
    for x in [s, t] {
        if !g.has_node(x) {
            return Err(FuncError::MissingTerminal(x));
        }
    }
    if s == t {
        return Ok(0);
    }
    let idx = g.index();
    let pos = |v: NodeId| idx.ids.binary_search(&v).expect("terminal present");
    let mut net = FlowNetwork::new(idx.n);
    for &(a, b, w) in &idx.edges {
        net.add_edge(a, b, i64::from(w));
    }
    Ok(net.max_flow(pos(s), pos(t)) as u64)
}

/// Global minimum cut computed as the smallest `s`-`t` cut from a fixed
/// node to every other node. Used to cross-check [`min_cut`].
pub fn min_cut_by_flows(g: &Graph) -> u64 {
    let ids: Vec<NodeId> = g.nodes().iter().copied().collect();
    if ids.len() < 2 {
        return 0;
    }
    ids[1..]
        .iter()
        .map(|&t| st_min_cut(g, ids[0], t).expect("nodes present"))
        .min()
        .unwrap_or(0)
}

fn components(idx: &IndexedGraph) -> Vec<Vec<usize>> {
    let mut seen = vec![false; idx.n];
    let mut out = Vec::new();
    for s in 0..idx.n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &(y, _) in &idx.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                    q.push_back(y);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Local view of one component: nodes `0..n` in BFS order with weighted
/// adjacency.
fn local_component(idx: &IndexedGraph, comp: &[usize], unit: bool) -> Vec<Vec<(usize, u64)>> {
    let pos: HashMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    comp.iter()
        .map(|&v| {
            idx.adj[v]
                .iter()
                .map(|&(y, w)| (pos[&y], if unit { 1 } else { u64::from(w) }))
                .collect()
        })
        .collect()
}

/// Maximum-weight matching by dynamic programming over node subsets.
/// `adj` lists `(neighbour, weight)` for nodes `0..n`, `n <= 22`.
pub fn matching_subset_dp(adj: &[Vec<(usize, u64)>]) -> Result<u64, FuncError> {
    let n = adj.len();
    if n > MATCHING_SUBSET_LIMIT {
        return Err(FuncError::SizeLimitExceeded {
            method: "subset matching",
            size: n,
            limit: MATCHING_SUBSET_LIMIT,
        });
    }
    let mut dp = vec![0u64; 1usize << n];
    for mask in 1usize..(1 << n) {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut best = dp[rest];
        for &(j, w) in &adj[i] {
            if rest >> j & 1 == 1 {
                best = best.max(w + dp[rest & !(1 << j)]);
            }
        }
        dp[mask] = best;
    }
    Ok(dp[(1usize << n) - 1])
}

/// Maximum-weight matching by dynamic programming along a node order,
/// keeping for each processed node that still has unprocessed neighbours
/// whether it is matched. Exact whenever that frontier stays within
/// [`MATCHING_FRONTIER_LIMIT`] nodes.
pub fn matching_frontier_dp(adj: &[Vec<(usize, u64)>], order: &[usize]) -> Result<u64, FuncError> {
    let n = adj.len();
    let mut rank = vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    let last_nb: Vec<usize> = (0..n)
        .map(|v| adj[v].iter().map(|&(y, _)| rank[y]).max().unwrap_or(0))
        .collect();
    let mut frontier: Vec<usize> = Vec::new();
    let mut states: HashMap<u64, u64> = HashMap::from([(0, 0)]);
    for (step, &v) in order.iter().enumerate() {
        let slot = frontier.len();
        if slot >= MATCHING_FRONTIER_LIMIT {
            return Err(FuncError::SizeLimitExceeded {
                method: "frontier matching",
                size: slot + 1,
                limit: MATCHING_FRONTIER_LIMIT,
            });
        }
        frontier.push(v);
        let earlier: Vec<(usize, u64)> = adj[v]
            .iter()
            .filter(|&&(y, _)| rank[y] < step)
            .map(|&(y, w)| (frontier.iter().position(|&f| f == y).expect("on frontier"), w))
            .collect();
        let mut next: HashMap<u64, u64> = HashMap::with_capacity(states.len() * 2);
        let mut put = |m: u64, val: u64| {
            let e = next.entry(m).or_insert(0);
            *e = (*e).max(val);
        };
        for (&mask, &val) in &states {
            put(mask, val);
            for &(p, w) in &earlier {
                if mask >> p & 1 == 0 {
                    put(mask | 1 << p | 1 << slot, val + w);
                }
            }
        }
        let keep: Vec<bool> = frontier.iter().map(|&f| last_nb[f] > step).collect();
        if keep.iter().all(|&k| k) {
            states = next;
            continue;
        }
        let mut reduced: HashMap<u64, u64> = HashMap::with_capacity(next.len());
        for (mask, val) in next {
            let mut m = 0u64;
            let mut bit = 0;
            for (i, &k) in keep.iter().enumerate() {
                if k {
                    m |= (mask >> i & 1) << bit;
                    bit += 1;
                }
            }
            let e = reduced.entry(m).or_insert(0);
            *e = (*e).max(val);
        }
        frontier = frontier
            .into_iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(f, _)| f)
            .collect();
        states = reduced;
    }
    Ok(states.values().copied().max().unwrap_or(0))
}

fn matching(g: &Graph, unit: bool) -> Result<u64, FuncError> {
    let idx = g.index();
    let mut total = 0;
    for comp in components(&idx) {
        if comp.len() < 2 {
            continue;
        }
        let adj = local_component(&idx, &comp, unit);
        total += if comp.len() <= MATCHING_SUBSET_LIMIT {
            matching_subset_dp(&adj)?
        } else {
            let order: Vec<usize> = (0..comp.len()).collect();
            matching_frontier_dp(&adj, &order)?
        };
    }
    Ok(total)
}

/// Weight of a maximum-weight matching. Each component is solved exactly,
/// by subset dynamic programming up to 22 nodes and by the frontier
/// dynamic program in BFS order beyond that.
pub fn max_weight_matching(g: &Graph) -> Result<u64, FuncError> {
    matching(g, false)
}

/// Size of a maximum-cardinality matching.
pub fn max_cardinality_matching(g: &Graph) -> Result<u64, FuncError> {
    matching(g, true)
}

/// Densest subgraph: exhaustive search up to 20 nodes, the flow-based
/// method beyond.
pub fn densest_subgraph(g: &Graph) -> Result<f64, FuncError> {
    if g.node_count() <= DENSEST_EXHAUSTIVE_LIMIT {
        densest_subgraph_exhaustive(g)
    } else {
        Ok(densest_subgraph_flow(g))
    }
}

/// Densest subgraph by enumerating every non-empty node subset.
pub fn densest_subgraph_exhaustive(g: &Graph) -> Result<f64, FuncError> {
    let idx = g.index();
    let n = idx.n;
    if n > DENSEST_EXHAUSTIVE_LIMIT {
        return Err(FuncError::SizeLimitExceeded {
            method: "exhaustive densest subgraph",
            size: n,
            limit: DENSEST_EXHAUSTIVE_LIMIT,
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let nb: Vec<u32> = idx
        .adj
        .iter()
        .map(|a| a.iter().fold(0u32, |m, &(y, _)| m | 1 << y))
        .collect();
    let mut e = vec![0u32; 1 << n];
    let (mut best_e, mut best_s) = (0u32, 1u32);
    for mask in 1usize..(1 << n) {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        e[mask] = e[rest] + (nb[i] & rest as u32).count_ones();
        let s = mask.count_ones();
        if u64::from(e[mask]) * u64::from(best_s) > u64::from(best_e) * u64::from(s) {
            best_e = e[mask];
            best_s = s;
        }
    }
    Ok(f64::from(best_e) / f64::from(best_s))
}

/// Densest subgraph by parametric minimum cuts: starting from density 0,
/// repeatedly find the set maximising `q |E(S)| - p |S|` for the current
/// density `p / q` and move to that set's density, until no set beats it.
/// All arithmetic is on integers, so the result is exact.
pub fn densest_subgraph_flow(g: &Graph) -> f64 {
    let idx = g.index();
    let n = idx.n;
    let m = idx.edges.len() as i64;
    if n == 0 || m == 0 {
        return 0.0;
    }
    let deg: Vec<i64> = idx.adj.iter().map(|a| a.len() as i64).collect();
    let (mut p, mut q) = (0i64, 1i64);
    loop {
        let (s, t) = (n, n + 1);
        let mut net = FlowNetwork::new(n + 2);
        for (v, &d) in deg.iter().enumerate() {
            net.add_arc(s, v, m * q);
            net.add_arc(v, t, m * q + 2 * p - q * d);
        }
        for &(a, b, _) in &idx.edges {
            net.add_edge(a, b, q);
        }
        net.max_flow(s, t);
        let side = net.source_side(s);
        let set: Vec<usize> = (0..n).filter(|&v| side[v]).collect();
        if set.is_empty() {
            return p as f64 / q as f64;
        }
        let inside = idx
            .edges
            .iter()
            .filter(|&&(a, b, _)| side[a] && side[b])
            .count() as i64;
        let size = set.len() as i64;
        if inside * q <= p * size {
            return p as f64 / q as f64;
        }
        p = inside;
        q = size;
    }
}

/// Value of `f` at every graph of a materialised sequence.
pub fn eval_all(f: &GraphFunction, graphs: &[Graph]) -> Result<Vec<Value>, FuncError> {
    graphs.iter().map(|g| f.eval(g)).collect()
}

/// Scalar values of `f` at every graph of a materialised sequence, see
/// [`GraphFunction::eval_scalar`].
pub fn eval_all_scalar(f: &GraphFunction, graphs: &[Graph]) -> Result<Vec<f64>, FuncError> {
    graphs.iter().map(|g| f.eval_scalar(g)).collect()
}
