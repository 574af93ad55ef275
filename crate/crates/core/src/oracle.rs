//! Exhaustive search for the difference-sequence sensitivity on small
//! graphs.
//!
//! For a pair of adjacent sequences `a`, `b` and a statistic `f` the pair
//! sensitivity is `sum_t |Df_a(t) - Df_b(t)|_1` with
//! `Df(t) = f(G_t) - f(G_(t-1))` and `f(G_0) := 0`. The oracle maximises it over every pair in
//! a bounded scope.
//!
//! The search is a dynamic program over pair states. Before the differing
//! step both sequences coincide and contribute nothing, so the differing
//! step can be taken as step 1 with an arbitrary initial graph. Afterwards
//! the two current graphs differ only by the differing element, so the pair
//! is described by the smaller graph alone (plus the neighbourhood of the
//! extra node under node adjacency). With `g(state) = f(larger) - f(smaller)`
//! a step from state `s` to `s'` contributes `|g(s') - g(s)|_1`, and the
//! first step contributes `|g(s)|_1`.
//!
//! Edge adjacency uses a fixed set of `n` nodes and encodes the edge set
//! with one base-`(W + 1)` digit per node pair; the differing edge is
//! `{0, 1}` without loss of generality. Every inserted edge is absent
//! beforehand in both sequences unless [`OracleScope::redundant_insertions`]
//! is set. With that flag the smaller sequence may later insert the
//! differing edge, a no-op for the larger one; this merges the two
//! sequences, contributing `|g(s)|_1` once and nothing after that.
//!
//! Node adjacency grows the smaller graph by fresh nodes. Every step inserts
//! a (possibly empty) set of new nodes together with edges incident to them,
//! some of which may go to the extra node in the larger sequence only.
//!
//! Scope restrictions: every graph of both sequences has maximum degree at
//! most `D` when a degree bound is given, and for MST weight every graph is
//! connected.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{Adjacency, Sensitivity};
use crate::funcs::{FuncError, GraphFunction};
use crate::graph::{
    check_adjacency, AdjacencyKind, Graph, GraphError, GraphSequence, NodeId, Regime, Update, Weight,
};

/// Default cap on the number of state transitions examined.
pub const DEFAULT_BUDGET: u64 = 4_000_000_000;

/// Node id of the extra node under node adjacency.
const EXTRA: NodeId = 1_000;

/// Errors raised by the oracle.
#[derive(Debug, Error)]
pub enum OracleError {
    /// The exhaustive search would exceed the transition budget.
    #[error("search needs {needed} transitions, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    /// The requested setting is outside what the oracle explores.
    #[error("unsupported oracle setting: {0}")]
    Unsupported(String),
    /// A scope parameter is invalid.
    #[error("invalid scope: {0}")]
    BadScope(String),
    /// The two sequences passed to [`pair_sensitivity`] are not adjacent.
    #[error("sequences are not adjacent under {0:?}")]
    NotAdjacent(AdjacencyKind),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

/// Random-walk fallback used when the exhaustive search exceeds its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    /// Seed of the walk generator.
    pub seed: u64,
    /// Number of random pairs examined.
    pub walks: usize,
}

/// Bounds of the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleScope {
    /// Number of nodes `n`. Under node adjacency this counts the extra node.
    pub nodes: usize,
    /// Horizon `T`.
    pub horizon: usize,
    /// Weight bound `W`.
    pub max_weight: Weight,
    /// Degree bound `D`, if any.
    pub max_degree: Option<usize>,
    /// Regime of the sequences.
    pub regime: Regime,
    /// Cap on examined transitions.
    pub budget: u64,
    /// Fallback used when the budget is exceeded.
    pub sampling: Option<Sampling>,
    /// Allow re-inserting an edge that is already present (a no-op), which
    /// lets the smaller sequence catch up with the larger one.
    pub redundant_insertions: bool,
}

impl OracleScope {
    /// Scope with the default budget and no sampling fallback.
    pub fn new(nodes: usize, horizon: usize, max_weight: Weight, max_degree: Option<usize>, regime: Regime) -> Self {
        OracleScope {
            nodes,
            horizon,
            max_weight,
            max_degree,
            regime,
            budget: DEFAULT_BUDGET,
            sampling: None,
            redundant_insertions: false,
        }
    }
}

/// Outcome of a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Statistic.
    pub function: GraphFunction,
    /// Neighbouring relation.
    pub adjacency: Adjacency,
    /// Search bounds.
    pub scope: OracleScope,
    /// Largest pair sensitivity found.
    pub value: f64,
    /// A pair attaining `value` (larger sequence first), if any pair exists.
    pub witness: Option<(GraphSequence, GraphSequence)>,
    /// Whether every pair in scope was examined.
    pub exhaustive: bool,
    /// Transitions examined.
    pub transitions: u64,
}

/// Comparison of an oracle value with a tabulated bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The largest value found is below the bound.
    Sound,
    /// The bound is attained.
    Tight,
    /// A pair exceeds the bound.
    Violation,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Sound => "sound",
            Verdict::Tight => "tight",
            Verdict::Violation => "violation",
        })
    }
}

/// Compares `value` with `bound` using an absolute tolerance of `1e-9`.
/// Any finite value is sound against an unbounded entry.
pub fn compare_with_table(value: f64, bound: Sensitivity) -> Verdict {
    match bound {
        Sensitivity::Unbounded => Verdict::Sound,
        Sensitivity::Finite(b) if value > b + 1e-9 => Verdict::Violation,
        Sensitivity::Finite(b) if (value - b).abs() <= 1e-9 => Verdict::Tight,
        Sensitivity::Finite(_) => Verdict::Sound,
    }
}

fn coords(f: &GraphFunction, g: &Graph, width: usize) -> Result<Vec<f64>, FuncError> {
    Ok(f.eval(g)?.coords(width))
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Pair sensitivity of two sequences of equal length.
///
/// Vector statistics are padded with zeros to a common length. The
/// sequences are not required to be adjacent; see
/// [`checked_pair_sensitivity`].
pub fn pair_sensitivity(f: &GraphFunction, a: &GraphSequence, b: &GraphSequence) -> Result<f64, OracleError> {
    if a.len() != b.len() {
        return Err(GraphError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        }
        .into());
    }
    let ga = a.materialize()?;
    let gb = b.materialize()?;
    let width = ga.iter().chain(&gb).map(Graph::node_count).max().unwrap_or(0).max(1);
    let values = |gs: &[Graph]| -> Result<Vec<Vec<f64>>, FuncError> {
        let mut out = vec![vec![0.0; width]];
        for g in gs {
            out.push(coords(f, g, width)?);
        }
        Ok(out)
    };
    let (va, vb) = (values(&ga)?, values(&gb)?);
    let mut total = 0.0;
    for t in 1..va.len() {
        for j in 0..width {
            let da = va[t][j] - va[t - 1][j];
            let db = vb[t][j] - vb[t - 1][j];
            total += (da - db).abs();
        }
    }
    Ok(total)
}

/// [`pair_sensitivity`] after checking that the sequences are adjacent.
pub fn checked_pair_sensitivity(
    f: &GraphFunction,
    a: &GraphSequence,
    b: &GraphSequence,
    kind: AdjacencyKind,
) -> Result<f64, OracleError> {
    if check_adjacency(a, b, kind)?.is_none() {
        return Err(OracleError::NotAdjacent(kind));
    }
    pair_sensitivity(f, a, b)
}

/// Largest pair sensitivity of `f` over adjacent pairs in `scope`.
pub fn max_sensitivity(
    f: &GraphFunction,
    adjacency: Adjacency,
    scope: &OracleScope,
) -> Result<OracleReport, OracleError> {
    if scope.horizon == 0 {
        return Err(OracleError::BadScope("horizon must be positive".into()));
    }
    if scope.max_weight == 0 {
        return Err(OracleError::BadScope("weight bound must be positive".into()));
    }
    if matches!(f, GraphFunction::StMinCut { .. }) {
        return Err(OracleError::Unsupported("s-t cuts need fixed terminals".into()));
    }
    match adjacency {
        Adjacency::Edge => {
            if scope.nodes < 2 {
                return Err(OracleError::BadScope("edge adjacency needs two nodes".into()));
            }
            EdgeSearch::new(f, scope)?.run()
        }
        Adjacency::Node => {
            if scope.regime != Regime::Incremental {
                return Err(OracleError::Unsupported(
                    "node adjacency is explored for incremental sequences only".into(),
                ));
            }
            if scope.nodes < 1 {
                return Err(OracleError::BadScope("node adjacency needs one node".into()));
            }
            NodeSearch::new(f, scope)?.run()
        }
    }
}

const MERGE: u32 = u32::MAX;

/// Result of one dynamic-programming layer: the best value per state and the
/// chosen successor.
struct Layer {
    value: Vec<f64>,
    next: Vec<u32>,
}

fn pow(base: usize, e: usize) -> usize {
    base.checked_pow(e as u32).expect("state space fits in memory")
}

fn check_budget(needed: u64, scope: &OracleScope) -> Result<bool, OracleError> {
    if needed <= scope.budget {
        Ok(true)
    } else if scope.sampling.is_some() {
        Ok(false)
    } else {
        Err(OracleError::BudgetExceeded {
            needed,
            budget: scope.budget,
        })
    }
}

fn degree_ok(g: &Graph, d: Option<usize>) -> bool {
    d.is_none_or(|d| g.max_degree() <= d)
}

fn connected_ok(f: &GraphFunction, g: &Graph) -> bool {
    *f != GraphFunction::MstWeight || g.is_connected()
}

struct EdgeSearch<'a> {
    f: &'a GraphFunction,
    scope: &'a OracleScope,
    slots: Vec<(NodeId, NodeId)>,
    radix: usize,
    size: usize,
    width: usize,
}

impl<'a> EdgeSearch<'a> {
    fn new(f: &'a GraphFunction, scope: &'a OracleScope) -> Result<Self, OracleError> {
        let n = scope.nodes as NodeId;
        let slots: Vec<(NodeId, NodeId)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&p| p != (0, 1))
            .collect();
        let radix = scope.max_weight as usize + 1;
        let size = radix
            .checked_pow(slots.len() as u32)
            .filter(|s| *s <= u32::MAX as usize / 2)
            .ok_or_else(|| OracleError::BadScope("state space too large".into()))?;
        Ok(EdgeSearch {
            f,
            scope,
            slots,
            radix,
            size,
            width: scope.nodes,
        })
    }

    fn graph(&self, code: usize) -> Graph {
        let mut g = Graph::new(self.scope.max_weight);
        for v in 0..self.scope.nodes as NodeId {
            g.add_node(v);
        }
        let mut c = code;
        for &(u, v) in &self.slots {
            let d = c % self.radix;
            c /= self.radix;
            if d > 0 {
                g.insert_edge(u, v, d as Weight).expect("slot edge is valid");
            }
        }
        g
    }

    fn merge_allowed(&self) -> bool {
        self.scope.redundant_insertions && self.scope.regime != Regime::Decremental
    }

    /// Exhaustive transitions per layer per differing-edge weight.
    fn transitions_per_layer(&self) -> u64 {
        let m = self.slots.len() as u32;
        let w = self.scope.max_weight as u64;
        match self.scope.regime {
            Regime::Incremental | Regime::Decremental => (2 * w + 1).pow(m),
            Regime::FullyDynamic => (self.size as u64).pow(2),
        }
    }

    /// Calls `visit` for every successor code of `code`.
    fn successors(&self, code: usize, mut visit: impl FnMut(usize)) {
        match self.scope.regime {
            Regime::FullyDynamic => (0..self.size).for_each(visit),
            Regime::Incremental | Regime::Decremental => {
                let inc = self.scope.regime == Regime::Incremental;
                let mut free = Vec::new();
                let mut c = code;
                let mut place = 1;
                for _ in 0..self.slots.len() {
                    let d = c % self.radix;
                    c /= self.radix;
                    if inc && d == 0 {
                        free.push((place, self.radix - 1));
                    } else if !inc && d > 0 {
                        free.push((place * d, 1));
                    }
                    place *= self.radix;
                }
                let mut choice = vec![0usize; free.len()];
                loop {
                    let mut next = code;
                    for (i, &(p, _)) in free.iter().enumerate() {
                        if inc {
                            next += choice[i] * p;
                        } else {
                            next -= choice[i] * p;
                        }
                    }
                    visit(next);
                    let mut i = 0;
                    while i < free.len() && choice[i] == free[i].1 {
                        choice[i] = 0;
                        i += 1;
                    }
                    if i == free.len() {
                        break;
                    }
                    choice[i] += 1;
                }
            }
        }
    }

    /// `g` values for one weight of the differing edge; `None` marks states
    /// outside the scope.
    fn gains(&self, w_star: Weight) -> Result<Vec<Option<Vec<f64>>>, OracleError> {
        (0..self.size)
            .into_par_iter()
            .map(|code| {
                let small = self.graph(code);
                let mut big = small.clone();
                big.insert_edge(0, 1, w_star).expect("differing edge is free");
                if !degree_ok(&big, self.scope.max_degree) || !connected_ok(self.f, &small) {
                    return Ok(None);
                }
                let a = coords(self.f, &big, self.width)?;
                let b = coords(self.f, &small, self.width)?;
                Ok(Some(a.iter().zip(&b).map(|(x, y)| x - y).collect()))
            })
            .collect()
    }

    fn layer(&self, gains: &[Option<Vec<f64>>], prev: &[f64]) -> Layer {
        let zero = vec![0.0; self.width];
        let pairs: Vec<(f64, u32)> = (0..self.size)
            .into_par_iter()
            .map(|code| {
                let Some(g) = &gains[code] else {
                    return (f64::NEG_INFINITY, 0);
                };
                let mut best = (0.0, code as u32);
                if self.merge_allowed() {
                    best = (l1(g, &zero), MERGE);
                }
                self.successors(code, |next| {
                    if let Some(h) = &gains[next] {
                        let v = l1(h, g) + prev[next];
                        if v > best.0 {
                            best = (v, next as u32);
                        }
                    }
                });
                best
            })
            .collect();
        let (value, next) = pairs.into_iter().unzip();
        Layer { value, next }
    }

    fn run(&self) -> Result<OracleReport, OracleError> {
        let t = self.scope.horizon;
        let weights = self.scope.max_weight as u64;
        let needed = self.transitions_per_layer() * weights * (t as u64 - 1) + self.size as u64 * weights;
        if !check_budget(needed, self.scope)? {
            return self.sample();
        }
        let mut best: Option<(f64, Weight, usize, Vec<Vec<u32>>)> = None;
        for w_star in 1..=self.scope.max_weight {
            let gains = self.gains(w_star)?;
            let mut prev = vec![0.0; self.size];
            let mut choices = Vec::new();
            for _ in 1..t {
                let layer = self.layer(&gains, &prev);
                prev = layer.value;
                choices.push(layer.next);
            }
            let zero = vec![0.0; self.width];
            for (code, g) in gains.iter().enumerate() {
                if let Some(g) = g {
                    let v = l1(g, &zero) + prev[code];
                    if best.as_ref().is_none_or(|b| v > b.0) {
                        best = Some((v, w_star, code, choices.clone()));
                    }
                }
            }
        }
        let (value, witness) = match best {
            None => (0.0, None),
            Some((v, w_star, start, choices)) => {
                let mut path = vec![Some(start)];
                let mut cur = start;
                for layer in choices.iter().rev() {
                    let next = layer[cur];
                    if next == MERGE {
                        path.push(None);
                        break;
                    }
                    cur = next as usize;
                    path.push(Some(cur));
                }
                (v, Some(self.build(w_star, &path)))
            }
        };
        Ok(OracleReport {
            function: *self.f,
            adjacency: Adjacency::Edge,
            scope: *self.scope,
            value,
            witness,
            exhaustive: true,
            transitions: needed,
        })
    }

    /// Builds the pair for a state path; `None` marks a merge.
    fn build(&self, w_star: Weight, path: &[Option<usize>]) -> (GraphSequence, GraphSequence) {
        let start = path[0].expect("path starts at a state");
        let small0 = self.graph(start);
        let (initial, mut big, mut small) = if self.scope.regime == Regime::Decremental {
            let mut init = small0.clone();
            init.insert_edge(0, 1, w_star).expect("differing edge is free");
            (init, vec![Update::empty()], vec![Update::delete_edge(0, 1)])
        } else {
            (small0.clone(), vec![Update::insert_edge(0, 1, w_star)], vec![Update::empty()])
        };
        let mut cur = small0;
        for step in &path[1..] {
            let u = match step {
                Some(code) => {
                    let next = self.graph(*code);
                    let u = Update::between(&cur, &next);
                    cur = next;
                    u
                }
                None => Update::insert_edge(0, 1, w_star),
            };
            big.push(u.clone());
            small.push(u);
        }
        while big.len() < self.scope.horizon {
            big.push(Update::empty());
            small.push(Update::empty());
        }
        (GraphSequence::new(initial.clone(), big), GraphSequence::new(initial, small))
    }

    fn sample(&self) -> Result<OracleReport, OracleError> {
        let s = self.scope.sampling.expect("sampling configured");
        let mut rng = ChaCha12Rng::seed_from_u64(s.seed);
        let mut best: Option<(f64, Weight, Vec<Option<usize>>)> = None;
        let mut transitions = 0u64;
        for _ in 0..s.walks {
            let w_star = rng.gen_range(1..=self.scope.max_weight);
            let mut code = rng.gen_range(0..self.size);
            let mut path = vec![Some(code)];
            for _ in 1..self.scope.horizon {
                if self.merge_allowed() && rng.gen_bool(0.1) {
                    path.push(None);
                    break;
                }
                let mut options = Vec::new();
                self.successors(code, |n| options.push(n));
                transitions += options.len() as u64;
                code = options[rng.gen_range(0..options.len())];
                path.push(Some(code));
            }
            let (a, b) = self.build(w_star, &path);
            let in_scope = [&a, &b].iter().all(|s| {
                let mut gs = vec![s.initial.clone()];
                gs.extend(s.materialize().unwrap_or_default());
                gs.iter()
                    .all(|g| degree_ok(g, self.scope.max_degree) && connected_ok(self.f, g))
            });
            if !in_scope {
                continue;
            }
            let v = pair_sensitivity(self.f, &a, &b)?;
            if best.as_ref().is_none_or(|x| v > x.0) {
                best = Some((v, w_star, path));
            }
        }
        Ok(OracleReport {
            function: *self.f,
            adjacency: Adjacency::Edge,
            scope: *self.scope,
            value: best.as_ref().map_or(0.0, |b| b.0),
            witness: best.map(|(_, w, p)| self.build(w, &p)),
            exhaustive: false,
            transitions,
        })
    }
}

/// Node-adjacency pair state: the smaller graph on nodes `0..m` and the
/// weights of the extra node's edges to them. Edge digits are ordered by
/// `(j, i)` with `i < j`, so the digits for `m` nodes are a prefix of those
/// for `m + 1` nodes.
struct NodeSearch<'a> {
    f: &'a GraphFunction,
    scope: &'a OracleScope,
    radix: usize,
    /// Largest smaller-graph node count.
    cap: usize,
    width: usize,
}

fn pairs_below(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

impl<'a> NodeSearch<'a> {
    fn new(f: &'a GraphFunction, scope: &'a OracleScope) -> Result<Self, OracleError> {
        let radix = scope.max_weight as usize + 1;
        let cap = scope.nodes - 1;
        let digits = pairs_below(cap) + cap;
        radix
            .checked_pow(digits as u32)
            .filter(|s| *s <= u32::MAX as usize / 2)
            .ok_or_else(|| OracleError::BadScope("state space too large".into()))?;
        Ok(NodeSearch {
            f,
            scope,
            radix,
            cap,
            width: scope.nodes,
        })
    }

    fn size(&self, m: usize) -> usize {
        pow(self.radix, pairs_below(m) + m)
    }

    /// Splits a state code into edge digits and extra-node digits.
    fn decode(&self, m: usize, code: usize) -> (Vec<usize>, Vec<usize>) {
        let mut c = code;
        let mut take = |k: usize| -> Vec<usize> {
            (0..k)
                .map(|_| {
                    let d = c % self.radix;
                    c /= self.radix;
                    d
                })
                .collect()
        };
        let e = take(pairs_below(m));
        let x = take(m);
        (e, x)
    }

    fn encode(&self, e: &[usize], x: &[usize]) -> usize {
        e.iter().chain(x).rev().fold(0, |acc, &d| acc * self.radix + d)
    }

    fn graphs(&self, m: usize, code: usize) -> (Graph, Graph) {
        let (e, x) = self.decode(m, code);
        let mut small = Graph::new(self.scope.max_weight);
        for v in 0..m as NodeId {
            small.add_node(v);
        }
        let mut idx = 0;
        for j in 0..m as NodeId {
            for i in 0..j {
                if e[idx] > 0 {
                    small.insert_edge(i, j, e[idx] as Weight).expect("state edge is valid");
                }
                idx += 1;
            }
        }
        let mut big = small.clone();
        big.add_node(EXTRA);
        for (v, &d) in x.iter().enumerate() {
            if d > 0 {
                big.insert_edge(EXTRA, v as NodeId, d as Weight).expect("extra edge is valid");
            }
        }
        (big, small)
    }

    fn gains(&self) -> Result<Vec<Vec<Option<Vec<f64>>>>, OracleError> {
        (0..=self.cap)
            .map(|m| {
                (0..self.size(m))
                    .into_par_iter()
                    .map(|code| {
                        let (big, small) = self.graphs(m, code);
                        if !degree_ok(&big, self.scope.max_degree)
                            || !connected_ok(self.f, &small)
                            || !connected_ok(self.f, &big)
                        {
                            return Ok(None);
                        }
                        let a = coords(self.f, &big, self.width)?;
                        let b = coords(self.f, &small, self.width)?;
                        Ok(Some(a.iter().zip(&b).map(|(x, y)| x - y).collect()))
                    })
                    .collect()
            })
            .collect()
    }

    /// Calls `visit(m2, code2)` for every successor of state `(m, code)`.
    fn successors(&self, m: usize, code: usize, mut visit: impl FnMut(usize, usize)) {
        let (e, x) = self.decode(m, code);
        for m2 in m..=self.cap {
            let new_e = pairs_below(m2) - pairs_below(m);
            let new_x = m2 - m;
            let total = pow(self.radix, new_e + new_x);
            let mut e2 = e.clone();
            e2.resize(pairs_below(m2), 0);
            let mut x2 = x.clone();
            x2.resize(m2, 0);
            for combo in 0..total {
                let mut c = combo;
                for d in e2.iter_mut().skip(e.len()) {
                    *d = c % self.radix;
                    c /= self.radix;
                }
                for d in x2.iter_mut().skip(x.len()) {
                    *d = c % self.radix;
                    c /= self.radix;
                }
                visit(m2, self.encode(&e2, &x2));
            }
        }
    }

    fn transitions_per_layer(&self) -> u64 {
        (0..=self.cap)
            .map(|m| {
                let succ: u64 = (m..=self.cap)
                    .map(|m2| pow(self.radix, pairs_below(m2) - pairs_below(m) + m2 - m) as u64)
                    .sum();
                self.size(m) as u64 * succ
            })
            .sum()
    }

    fn run(&self) -> Result<OracleReport, OracleError> {
        let t = self.scope.horizon;
        let states: u64 = (0..=self.cap).map(|m| self.size(m) as u64).sum();
        let needed = self.transitions_per_layer() * (t as u64 - 1) + states;
        if !check_budget(needed, self.scope)? {
            return self.sample();
        }
        let gains = self.gains()?;
        let mut prev: Vec<Vec<f64>> = gains.iter().map(|l| vec![0.0; l.len()]).collect();
        let mut choices: Vec<Vec<Vec<(u32, u32)>>> = Vec::new();
        for _ in 1..t {
            let mut value = Vec::new();
            let mut next = Vec::new();
            for m in 0..=self.cap {
                let pairs: Vec<(f64, (u32, u32))> = (0..self.size(m))
                    .into_par_iter()
                    .map(|code| {
                        let Some(g) = &gains[m][code] else {
                            return (f64::NEG_INFINITY, (0, 0));
                        };
                        let mut best = (f64::NEG_INFINITY, (0, 0));
                        self.successors(m, code, |m2, c2| {
                            if let Some(h) = &gains[m2][c2] {
                                let v = l1(h, g) + prev[m2][c2];
                                if v > best.0 {
                                    best = (v, (m2 as u32, c2 as u32));
                                }
                            }
                        });
                        best
                    })
                    .collect();
                let (v, n): (Vec<f64>, Vec<(u32, u32)>) = pairs.into_iter().unzip();
                value.push(v);
                next.push(n);
            }
            prev = value;
            choices.push(next);
        }
        let zero = vec![0.0; self.width];
        let mut best: Option<(f64, usize, usize)> = None;
        for (m, layer) in gains.iter().enumerate() {
            for (code, g) in layer.iter().enumerate() {
                if let Some(g) = g {
                    let v = l1(g, &zero) + prev[m][code];
                    if best.is_none_or(|b| v > b.0) {
                        best = Some((v, m, code));
                    }
                }
            }
        }
        let (value, witness) = match best {
            None => (0.0, None),
            Some((v, m, code)) => {
                let mut path = vec![(m, code)];
                let mut cur = (m, code);
                for layer in choices.iter().rev() {
                    let (m2, c2) = layer[cur.0][cur.1];
                    cur = (m2 as usize, c2 as usize);
                    path.push(cur);
                }
                (v, Some(self.build(&path)))
            }
        };
        Ok(OracleReport {
            function: *self.f,
            adjacency: Adjacency::Node,
            scope: *self.scope,
            value,
            witness,
            exhaustive: true,
            transitions: needed,
        })
    }

    fn build(&self, path: &[(usize, usize)]) -> (GraphSequence, GraphSequence) {
        let (m0, c0) = path[0];
        let (big0, small0) = self.graphs(m0, c0);
        let mut big = vec![Update::between(&small0, &big0)];
        let mut small = vec![Update::empty()];
        let (mut cur_big, mut cur_small) = (big0, small0.clone());
        for &(m, code) in &path[1..] {
            let (nb, ns) = self.graphs(m, code);
            big.push(Update::between(&cur_big, &nb));
            small.push(Update::between(&cur_small, &ns));
            cur_big = nb;
            cur_small = ns;
        }
        (GraphSequence::new(small0.clone(), big), GraphSequence::new(small0, small))
    }

    fn sample(&self) -> Result<OracleReport, OracleError> {
        let s = self.scope.sampling.expect("sampling configured");
        let mut rng = ChaCha12Rng::seed_from_u64(s.seed);
        let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
        let mut transitions = 0u64;
        for _ in 0..s.walks {
            let m = rng.gen_range(0..=self.cap);
            let mut cur = (m, rng.gen_range(0..self.size(m)));
            let mut path = vec![cur];
            for _ in 1..self.scope.horizon {
                let mut options = Vec::new();
                self.successors(cur.0, cur.1, |m2, c2| options.push((m2, c2)));
                transitions += options.len() as u64;
                cur = options[rng.gen_range(0..options.len())];
                path.push(cur);
            }
            let in_scope = path.iter().all(|&(m, c)| {
                let (b, s) = self.graphs(m, c);
                degree_ok(&b, self.scope.max_degree) && connected_ok(self.f, &b) && connected_ok(self.f, &s)
            });
            if !in_scope {
                continue;
            }
            let (a, b) = self.build(&path);
            let v = pair_sensitivity(self.f, &a, &b)?;
            if best.as_ref().is_none_or(|x| v > x.0) {
                best = Some((v, path));
            }
        }
        Ok(OracleReport {
            function: *self.f,
            adjacency: Adjacency::Node,
            scope: *self.scope,
            value: best.as_ref().map_or(0.0, |b| b.0),
            witness: best.map(|(_, p)| self.build(&p)),
            exhaustive: false,
            transitions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope(n: usize, t: usize, w: Weight, d: Option<usize>, r: Regime) -> OracleScope {
        OracleScope::new(n, t, w, d, r)
    }

    #[test]
    fn edge_count_edge_incremental_is_one() {
        let r = max_sensitivity(&GraphFunction::EdgeCount, Adjacency::Edge, &scope(4, 3, 1, None, Regime::Incremental))
            .unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn redundant_insertion_merges_sequences() {
        let mut s = scope(3, 2, 1, None, Regime::Incremental);
        s.redundant_insertions = true;
        let r = max_sensitivity(&GraphFunction::EdgeCount, Adjacency::Edge, &s).unwrap();
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn edge_count_fully_dynamic_is_two() {
        let mut s = scope(3, 3, 1, None, Regime::FullyDynamic);
        s.redundant_insertions = true;
        let r = max_sensitivity(&GraphFunction::EdgeCount, Adjacency::Edge, &s).unwrap();
        assert_eq!(r.value, 2.0);
        let (a, b) = r.witness.unwrap();
        let v = checked_pair_sensitivity(&GraphFunction::EdgeCount, &a, &b, AdjacencyKind::EdgeEvent).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn mst_edge_tight_at_four_nodes() {
        for w in [2, 3] {
            let r = max_sensitivity(&GraphFunction::MstWeight, Adjacency::Edge, &scope(4, 2, w, None, Regime::Incremental))
                .unwrap();
            assert_eq!(r.value, f64::from(2 * w - 2));
        }
    }

    #[test]
    fn node_edge_count_is_degree() {
        for d in 1..=3 {
            let r = max_sensitivity(
                &GraphFunction::EdgeCount,
                Adjacency::Node,
                &scope(4, 2, 1, Some(d), Regime::Incremental),
            )
            .unwrap();
            assert_eq!(r.value, d as f64);
            let (a, b) = r.witness.unwrap();
            let v = checked_pair_sensitivity(&GraphFunction::EdgeCount, &a, &b, AdjacencyKind::NodeEvent).unwrap();
            assert_eq!(v, r.value);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let mut s = scope(4, 3, 1, None, Regime::Incremental);
        s.budget = 10;
        assert!(matches!(
            max_sensitivity(&GraphFunction::EdgeCount, Adjacency::Edge, &s),
            Err(OracleError::BudgetExceeded { .. })
        ));
        s.sampling = Some(Sampling { seed: 7, walks: 50 });
        let r = max_sensitivity(&GraphFunction::EdgeCount, Adjacency::Edge, &s).unwrap();
        assert!(!r.exhaustive);
        assert!(r.value <= 1.0);
    }

    #[test]
    fn verdicts() {
        assert_eq!(compare_with_table(2.0, Sensitivity::Finite(2.0)), Verdict::Tight);
        assert_eq!(compare_with_table(1.0, Sensitivity::Finite(2.0)), Verdict::Sound);
        assert_eq!(compare_with_table(3.0, Sensitivity::Finite(2.0)), Verdict::Violation);
        assert_eq!(compare_with_table(3.0, Sensitivity::Unbounded), Verdict::Sound);
    }
}
