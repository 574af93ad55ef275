//! Weighted undirected graphs, update steps and update sequences.
//!
//! A [`GraphSequence`] is an initial graph followed by `T` update steps. Each
//! step deletes nodes and edges first and then inserts nodes and edges.
//! Edge weights are integers in `1..=W`, where `W` is fixed per graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node identifier.
pub type NodeId = u64;
/// Edge weight, always in `1..=W`.
pub type Weight = u32;

/// Errors raised when building, updating or comparing graph sequences.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// An update step cannot be applied to the current graph.
    #[error("invalid update at step {step}: {reason}")]
    InvalidUpdate { step: usize, reason: String },
    /// Two sequences that must have equal length do not.
    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    /// A line of the update-log format could not be parsed.
    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl GraphError {
    fn invalid(step: usize, reason: impl Into<String>) -> Self {
        GraphError::InvalidUpdate {
            step,
            reason: reason.into(),
        }
    }
}

/// Canonical undirected edge key `(min, max)`. Self-loops are unrepresentable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    u: NodeId,
    v: NodeId,
}

impl EdgeKey {
    /// Builds the canonical key for `{a, b}`. Returns `None` for a self-loop.
    pub fn new(a: NodeId, b: NodeId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(EdgeKey { u: a, v: b }),
            std::cmp::Ordering::Greater => Some(EdgeKey { u: b, v: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    /// Builds the key for `{a, b}`, panicking on a self-loop.
    ///
    /// Intended for constructions whose endpoints are distinct by design.
    pub fn of(a: NodeId, b: NodeId) -> Self {
        Self::new(a, b).expect("self-loop edge key")
    }

    /// Smaller endpoint.
    pub fn u(&self) -> NodeId {
        self.u
    }

    /// Larger endpoint.
    pub fn v(&self) -> NodeId {
        self.v
    }

    /// Whether `x` is an endpoint.
    pub fn touches(&self, x: NodeId) -> bool {
        self.u == x || self.v == x
    }

    /// The endpoint opposite to `x`, if `x` is an endpoint.
    pub fn other(&self, x: NodeId) -> Option<NodeId> {
        if self.u == x {
            Some(self.v)
        } else if self.v == x {
            Some(self.u)
        } else {
            None
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.u, self.v)
    }
}

/// A weighted undirected simple graph with weights bounded by `max_weight`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Graph {
    nodes: BTreeSet<NodeId>,
    edges: BTreeMap<EdgeKey, Weight>,
    max_weight: Weight,
}

impl Graph {
    /// Empty graph whose edges may carry weights in `1..=max_weight`.
    pub fn new(max_weight: Weight) -> Self {
        Graph {
            nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
            max_weight: max_weight.max(1),
        }
    }

    /// Graph with the given nodes and weighted edges.
    ///
    /// Fails if an edge endpoint is missing or a weight is out of range.
    pub fn from_parts(
        max_weight: Weight,
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, Weight)>,
    ) -> Result<Self, GraphError> {
        let mut g = Graph::new(max_weight);
        for v in nodes {
            g.nodes.insert(v);
        }
        for (a, b, w) in edges {
            g.insert_edge(a, b, w).map_err(|r| GraphError::invalid(0, r))?;
        }
        Ok(g)
    }

    /// Upper bound `W` on edge weights.
    pub fn max_weight(&self) -> Weight {
        self.max_weight
    }

    /// Node set.
    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    /// Edge map from canonical key to weight.
    pub fn edges(&self) -> &BTreeMap<EdgeKey, Weight> {
        &self.edges
    }

    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Whether `v` is a node.
    pub fn has_node(&self, v: NodeId) -> bool {
        self.nodes.contains(&v)
    }

    /// Weight of the edge `key`, if present.
    pub fn weight(&self, key: &EdgeKey) -> Option<Weight> {
        self.edges.get(key).copied()
    }

    /// Adds an isolated node. Existing nodes are left untouched.
    pub fn add_node(&mut self, v: NodeId) {
        self.nodes.insert(v);
    }

    /// Inserts edge `{a, b}` with weight `w`.
    ///
    /// Re-inserting an edge with its current weight is a no-op. A different
    /// weight, a missing endpoint, a self-loop or a weight outside `1..=W`
    /// is rejected with a description of the problem.
    pub fn insert_edge(&mut self, a: NodeId, b: NodeId, w: Weight) -> Result<(), String> {
        let key = EdgeKey::new(a, b).ok_or_else(|| format!("self-loop on node {a}"))?;
        self.insert_key(key, w)
    }

    fn insert_key(&mut self, key: EdgeKey, w: Weight) -> Result<(), String> {
        if w == 0 || w > self.max_weight {
            return Err(format!(
                "weight {w} of edge {key} outside 1..={}",
                self.max_weight
            ));
        }
        if !self.nodes.contains(&key.u) || !self.nodes.contains(&key.v) {
            return Err(format!("edge {key} has a missing endpoint"));
        }
        match self.edges.get(&key) {
            Some(&old) if old != w => Err(format!(
                "edge {key} already present with weight {old}, cannot re-insert with weight {w}"
            )),
            _ => {
                self.edges.insert(key, w);
                Ok(())
            }
        }
    }

    /// Removes an edge, returning its weight if it was present.
    pub fn remove_edge(&mut self, key: &EdgeKey) -> Option<Weight> {
        self.edges.remove(key)
    }

    /// Degree of `v` (number of incident edges).
    pub fn degree(&self, v: NodeId) -> usize {
        self.edges.keys().filter(|k| k.touches(v)).count()
    }

    /// Degree of every node, including isolated ones.
    pub fn degrees(&self) -> BTreeMap<NodeId, usize> {
        let mut deg: BTreeMap<NodeId, usize> = self.nodes.iter().map(|&v| (v, 0)).collect();
        for k in self.edges.keys() {
            *deg.entry(k.u).or_default() += 1;
            *deg.entry(k.v).or_default() += 1;
        }
        deg
    }

    /// Maximum degree, or 0 for a graph without nodes.
    pub fn max_degree(&self) -> usize {
        self.degrees().values().copied().max().unwrap_or(0)
    }

    /// Largest edge weight present, or 0 without edges.
    pub fn heaviest_edge(&self) -> Weight {
        self.edges.values().copied().max().unwrap_or(0)
    }

    /// Edges incident to `v`.
    pub fn incident(&self, v: NodeId) -> impl Iterator<Item = (EdgeKey, Weight)> + '_ {
        self.edges
            .iter()
            .filter(move |(k, _)| k.touches(v))
            .map(|(k, w)| (*k, *w))
    }

    /// Whether the graph is connected. Graphs with at most one node are.
    pub fn is_connected(&self) -> bool {
        let idx = self.index();
        if idx.n <= 1 {
            return true;
        }
        let mut seen = vec![false; idx.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in &idx.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == idx.n
    }

    /// Dense index view: nodes renumbered `0..n` in ascending id order.
    pub fn index(&self) -> IndexedGraph {
        let ids: Vec<NodeId> = self.nodes.iter().copied().collect();
        let pos: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, &w) in &self.edges {
            let (a, b) = (pos[&k.u], pos[&k.v]);
            adj[a].push((b, w));
            adj[b].push((a, w));
            edges.push((a, b, w));
        }
        IndexedGraph {
            n: ids.len(),
            ids,
            adj,
            edges,
        }
    }
}

/// Graph with nodes renumbered densely, used by the evaluators.
#[derive(Debug, Clone)]
pub struct IndexedGraph {
    /// Number of nodes.
    pub n: usize,
    /// Original node id of each dense index.
    pub ids: Vec<NodeId>,
    /// Adjacency lists of `(neighbour, weight)`.
    pub adj: Vec<Vec<(usize, Weight)>>,
    /// Edge list `(a, b, weight)` with `a < b`.
    pub edges: Vec<(usize, usize, Weight)>,
}

/// One update step: node and edge deletions, then node and edge insertions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Update {
    /// Inserted nodes.
    pub v_ins: BTreeSet<NodeId>,
    /// Deleted nodes.
    pub v_del: BTreeSet<NodeId>,
    /// Inserted edges with their weights.
    pub e_ins: BTreeMap<EdgeKey, Weight>,
    /// Deleted edges.
    pub e_del: BTreeSet<EdgeKey>,
}

impl Update {
    /// The empty update.
    pub fn empty() -> Self {
        Update::default()
    }

    /// Update inserting a single edge.
    pub fn insert_edge(a: NodeId, b: NodeId, w: Weight) -> Self {
        let mut u = Update::default();
        u.e_ins.insert(EdgeKey::of(a, b), w);
        u
    }

    /// Update deleting a single edge.
    pub fn delete_edge(a: NodeId, b: NodeId) -> Self {
        let mut u = Update::default();
        u.e_del.insert(EdgeKey::of(a, b));
        u
    }

    /// Whether the update changes nothing syntactically.
    pub fn is_empty(&self) -> bool {
        self.v_ins.is_empty() && self.v_del.is_empty() && self.e_ins.is_empty() && self.e_del.is_empty()
    }

    /// Whether the update contains any deletion.
    pub fn has_deletions(&self) -> bool {
        !self.v_del.is_empty() || !self.e_del.is_empty()
    }

    /// Whether the update contains any insertion.
    pub fn has_insertions(&self) -> bool {
        !self.v_ins.is_empty() || !self.e_ins.is_empty()
    }

    /// The update turning `a` into `b`: everything in `a` but not `b` is
    /// deleted, everything in `b` but not `a` is inserted. An edge whose
    /// weight changes is deleted and re-inserted.
    pub fn between(a: &Graph, b: &Graph) -> Self {
        let mut u = Update::default();
        for v in a.nodes.difference(&b.nodes) {
            u.v_del.insert(*v);
        }
        for v in b.nodes.difference(&a.nodes) {
            u.v_ins.insert(*v);
        }
        for (k, w) in &a.edges {
            if b.edges.get(k) != Some(w) {
                u.e_del.insert(*k);
            }
        }
        for (k, w) in &b.edges {
            if a.edges.get(k) != Some(w) {
                u.e_ins.insert(*k, *w);
            }
        }
        u
    }

    /// Applies the update to `g` in place. `step` is only used in errors.
    pub fn apply_to(&self, g: &mut Graph, step: usize) -> Result<(), GraphError> {
        for k in &self.e_del {
            if !g.edges.contains_key(k) {
                return Err(GraphError::invalid(step, format!("deleted edge {k} is absent")));
            }
        }
        for v in &self.v_del {
            if !g.nodes.contains(v) {
                return Err(GraphError::invalid(step, format!("deleted node {v} is absent")));
            }
            if let Some((k, _)) = g.incident(*v).find(|(k, _)| !self.e_del.contains(k)) {
                return Err(GraphError::invalid(
                    step,
                    format!("deleted node {v} keeps edge {k}"),
                ));
            }
        }
        for k in &self.e_del {
            g.edges.remove(k);
        }
        for v in &self.v_del {
            g.nodes.remove(v);
        }
        for v in &self.v_ins {
            g.nodes.insert(*v);
        }
        for (k, w) in &self.e_ins {
            g.insert_key(*k, *w).map_err(|r| GraphError::invalid(step, r))?;
        }
        Ok(())
    }

    /// Returns the graph obtained by applying the update to `g`.
    pub fn apply(&self, g: &Graph, step: usize) -> Result<Graph, GraphError> {
        let mut out = g.clone();
        self.apply_to(&mut out, step)?;
        Ok(out)
    }
}

/// Update regime of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// No step deletes anything.
    Incremental,
    /// No step inserts anything.
    Decremental,
    /// Insertions and deletions both occur.
    FullyDynamic,
}

/// Initial graph plus `T` update steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSequence {
    /// The graph `G_0` before the first step.
    pub initial: Graph,
    /// Update steps `1..=T`.
    pub updates: Vec<Update>,
}

impl GraphSequence {
    /// Sequence from an initial graph and its steps.
    pub fn new(initial: Graph, updates: Vec<Update>) -> Self {
        GraphSequence { initial, updates }
    }

    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.updates.len()
    }

    /// Whether the sequence has no steps.
    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    /// Weight bound `W` of the sequence.
    pub fn max_weight(&self) -> Weight {
        self.initial.max_weight
    }

    /// The graphs `G_1, ..., G_T`.
    pub fn materialize(&self) -> Result<Vec<Graph>, GraphError> {
        let mut out = Vec::with_capacity(self.updates.len());
        let mut g = self.initial.clone();
        for (i, u) in self.updates.iter().enumerate() {
            u.apply_to(&mut g, i + 1)?;
            out.push(g.clone());
        }
        Ok(out)
    }

    /// Incremental, decremental or fully dynamic. A sequence without any
    /// deletions is reported as incremental.
    pub fn regime(&self) -> Regime {
        let dels = self.updates.iter().any(Update::has_deletions);
        let ins = self.updates.iter().any(Update::has_insertions);
        match (ins, dels) {
            (_, false) => Regime::Incremental,
            (false, true) => Regime::Decremental,
            (true, true) => Regime::FullyDynamic,
        }
    }

    /// The time-reversed sequence `G_T, ..., G_0`, with each step given as the
    /// minimal update between consecutive graphs.
    pub fn reversed(&self) -> Result<GraphSequence, GraphError> {
        let mut graphs = vec![self.initial.clone()];
        graphs.extend(self.materialize()?);
        let last = graphs.last().cloned().unwrap_or_default();
        let updates = graphs
            .windows(2)
            .rev()
            .map(|w| Update::between(&w[1], &w[0]))
            .collect();
        Ok(GraphSequence::new(last, updates))
    }

    /// Largest node count among `G_0, ..., G_T`.
    pub fn max_node_count(&self) -> Result<usize, GraphError> {
        Ok(self
            .materialize()?
            .iter()
            .map(Graph::node_count)
            .chain(std::iter::once(self.initial.node_count()))
            .max()
            .unwrap_or(0))
    }

    /// Largest degree among `G_0, ..., G_T`.
    pub fn max_degree(&self) -> Result<usize, GraphError> {
        Ok(self
            .materialize()?
            .iter()
            .map(Graph::max_degree)
            .chain(std::iter::once(self.initial.max_degree()))
            .max()
            .unwrap_or(0))
    }
}

/// Kind of neighbouring relation between two sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjacencyKind {
    /// One extra edge insertion or deletion at one step.
    EdgeEvent,
    /// One extra node insertion or deletion at one step, together with its
    /// incident edge updates.
    NodeEvent,
    /// Any number of differing updates, all on one edge.
    EdgeUser,
}

impl FromStr for AdjacencyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge" | "edge-event" => Ok(AdjacencyKind::EdgeEvent),
            "node" | "node-event" => Ok(AdjacencyKind::NodeEvent),
            "edge-user" | "user" => Ok(AdjacencyKind::EdgeUser),
            other => Err(format!("unknown adjacency '{other}'")),
        }
    }
}

/// The element on which two adjacent sequences differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DifferingElement {
    Edge(EdgeKey),
    Node(NodeId),
}

/// Which side of a compared pair carries the extra update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

/// Evidence that two sequences are adjacent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyWitness {
    /// Relation that holds.
    pub kind: AdjacencyKind,
    /// First step (1-based) at which the sequences differ.
    pub step: usize,
    /// The differing edge or node.
    pub element: DifferingElement,
    /// Side carrying the extra update (for event relations).
    pub larger: Side,
}

/// Tests whether `a` and `b` are adjacent under `kind`.
///
/// Returns `Ok(None)` when they are not (identical sequences never are) and
/// an error when the lengths differ or either sequence is invalid.
pub fn check_adjacency(
    a: &GraphSequence,
    b: &GraphSequence,
    kind: AdjacencyKind,
) -> Result<Option<AdjacencyWitness>, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    a.materialize()?;
    b.materialize()?;
    if a.initial != b.initial {
        return Ok(None);
    }
    let oriented = |big: &GraphSequence, small: &GraphSequence, side: Side| match kind {
        AdjacencyKind::EdgeEvent => edge_event(big, small, side),
        AdjacencyKind::NodeEvent => node_event(big, small, side),
        AdjacencyKind::EdgeUser => edge_user(big, small),
    };
    Ok(oriented(a, b, Side::Left).or_else(|| oriented(b, a, Side::Right)))
}

/// `big` equals `small` plus exactly one extra element `x`.
fn one_extra<T: Ord + Clone>(big: &BTreeSet<T>, small: &BTreeSet<T>) -> Option<T> {
    if !small.is_subset(big) || big.len() != small.len() + 1 {
        return None;
    }
    big.difference(small).next().cloned()
}

fn edge_event(big: &GraphSequence, small: &GraphSequence, side: Side) -> Option<AdjacencyWitness> {
    let pairs: Vec<(&Update, &Update)> = big.updates.iter().zip(&small.updates).collect();
    if pairs.iter().any(|(x, y)| x.v_ins != y.v_ins || x.v_del != y.v_del) {
        return None;
    }
    let find = |ins: bool| -> Option<(usize, EdgeKey)> {
        let mut found = None;
        for (i, (x, y)) in pairs.iter().enumerate() {
            let (same_other, differs) = if ins {
                (x.e_del == y.e_del, x.e_ins != y.e_ins)
            } else {
                (x.e_ins == y.e_ins, x.e_del != y.e_del)
            };
            if !same_other {
                return None;
            }
            if differs {
                if found.is_some() {
                    return None;
                }
                let extra = if ins {
                    let bk: BTreeSet<EdgeKey> = x.e_ins.keys().copied().collect();
                    let sk: BTreeSet<EdgeKey> = y.e_ins.keys().copied().collect();
                    let e = one_extra(&bk, &sk)?;
                    if y.e_ins.iter().any(|(k, w)| x.e_ins.get(k) != Some(w)) {
                        return None;
                    }
                    e
                } else {
                    one_extra(&x.e_del, &y.e_del)?
                };
                found = Some((i + 1, extra));
            }
        }
        found
    };
    find(true).or_else(|| find(false)).map(|(step, e)| AdjacencyWitness {
        kind: AdjacencyKind::EdgeEvent,
        step,
        element: DifferingElement::Edge(e),
        larger: side,
    })
}

fn node_event(big: &GraphSequence, small: &GraphSequence, side: Side) -> Option<AdjacencyWitness> {
    let pairs: Vec<(&Update, &Update)> = big.updates.iter().zip(&small.updates).collect();
    let find = |ins: bool| -> Option<(usize, NodeId)> {
        let mut found = None;
        for (i, (x, y)) in pairs.iter().enumerate() {
            let (same, differs) = if ins {
                (x.v_del == y.v_del, x.v_ins != y.v_ins)
            } else {
                (x.v_ins == y.v_ins, x.v_del != y.v_del)
            };
            if !same {
                return None;
            }
            if differs {
                if found.is_some() {
                    return None;
                }
                let v = if ins {
                    one_extra(&x.v_ins, &y.v_ins)?
                } else {
                    one_extra(&x.v_del, &y.v_del)?
                };
                found = Some((i + 1, v));
            }
        }
        found
    };
    let (step, v) = find(true).or_else(|| find(false))?;
    let edges_follow_nodes = |u: &Update| {
        u.e_ins
            .keys()
            .all(|k| u.v_ins.contains(&k.u()) || u.v_ins.contains(&k.v()))
            && u.e_del
                .iter()
                .all(|k| u.v_del.contains(&k.u()) || u.v_del.contains(&k.v()))
    };
    for (x, y) in &pairs {
        let ins: BTreeMap<EdgeKey, Weight> = x
            .e_ins
            .iter()
            .filter(|(k, _)| !k.touches(v))
            .map(|(k, w)| (*k, *w))
            .collect();
        let del: BTreeSet<EdgeKey> = x.e_del.iter().filter(|k| !k.touches(v)).copied().collect();
        if ins != y.e_ins || del != y.e_del || !edges_follow_nodes(x) || !edges_follow_nodes(y) {
            return None;
        }
    }
    Some(AdjacencyWitness {
        kind: AdjacencyKind::NodeEvent,
        step,
        element: DifferingElement::Node(v),
        larger: side,
    })
}

fn edge_user(a: &GraphSequence, b: &GraphSequence) -> Option<AdjacencyWitness> {
    let mut edge: Option<EdgeKey> = None;
    let mut first = None;
    for (i, (x, y)) in a.updates.iter().zip(&b.updates).enumerate() {
        if x.v_ins != y.v_ins || x.v_del != y.v_del {
            return None;
        }
        let mut diff: BTreeSet<EdgeKey> = BTreeSet::new();
        for (k, w) in &x.e_ins {
            if y.e_ins.get(k) != Some(w) {
                diff.insert(*k);
            }
        }
        for (k, w) in &y.e_ins {
            if x.e_ins.get(k) != Some(w) {
                diff.insert(*k);
            }
        }
        diff.extend(x.e_del.symmetric_difference(&y.e_del).copied());
        for k in diff {
            match edge {
                None => edge = Some(k),
                Some(e) if e != k => return None,
                _ => {}
            }
            first.get_or_insert(i + 1);
        }
    }
    Some(AdjacencyWitness {
        kind: AdjacencyKind::EdgeUser,
        step: first?,
        element: DifferingElement::Edge(edge?),
        larger: Side::Left,
    })
}

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn format_line(t: usize, u: &Update) -> String {
    let mut parts = vec![format!("t={t}")];
    if !u.v_ins.is_empty() {
        parts.push(format!("+v:{}", join(&u.v_ins)));
    }
    if !u.v_del.is_empty() {
        parts.push(format!("-v:{}", join(&u.v_del)));
    }
    if !u.e_ins.is_empty() {
        parts.push(format!(
            "+e:{}",
            join(u.e_ins.iter().map(|(k, w)| format!("{k}:{w}")))
        ));
    }
    if !u.e_del.is_empty() {
        parts.push(format!("-e:{}", join(&u.e_del)));
    }
    parts.join(" ")
}

impl GraphSequence {
    /// Serializes to the line-oriented update-log format.
    ///
    /// The first line records `W`; the `t=0` line lists the initial graph as
    /// insertions; each following line is one step.
    pub fn to_log(&self) -> String {
        let init = Update {
            v_ins: self.initial.nodes.clone(),
            e_ins: self.initial.edges.clone(),
            ..Update::default()
        };
        let mut out = format!("# max_weight={}\n", self.initial.max_weight);
        out.push_str(&format_line(0, &init));
        out.push('\n');
        for (i, u) in self.updates.iter().enumerate() {
            out.push_str(&format_line(i + 1, u));
            out.push('\n');
        }
        out
    }

    /// Parses the update-log format produced by [`GraphSequence::to_log`].
    ///
    /// Lines starting with `#` are comments, except `# max_weight=W` which sets
    /// the weight bound. Without it `W` is the largest weight in the log.
    pub fn from_log(text: &str) -> Result<GraphSequence, GraphError> {
        let mut declared_w: Option<Weight> = None;
        let mut rows: Vec<(usize, usize, Update)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line_no = ln + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some(w) = c.trim().strip_prefix("max_weight=") {
                    declared_w = Some(w.trim().parse().map_err(|_| GraphError::Parse {
                        line: line_no,
                        reason: format!("bad max_weight '{w}'"),
                    })?);
                }
                continue;
            }
            let (t, u) = parse_line(line).map_err(|reason| GraphError::Parse {
                line: line_no,
                reason,
            })?;
            rows.push((line_no, t, u));
        }
        let mut rows = rows.into_iter();
        let (_, t0, init) = rows.next().ok_or(GraphError::Parse {
            line: 0,
            reason: "missing t=0 line".into(),
        })?;
        if t0 != 0 || init.has_deletions() {
            return Err(GraphError::Parse {
                line: 1,
                reason: "first step must be t=0 with insertions only".into(),
            });
        }
        let updates: Vec<(usize, usize, Update)> = rows.collect();
        for (i, (line, t, _)) in updates.iter().enumerate() {
            if *t != i + 1 {
                return Err(GraphError::Parse {
                    line: *line,
                    reason: format!("expected t={}, found t={t}", i + 1),
                });
            }
        }
        let w = declared_w.unwrap_or_else(|| {
            std::iter::once(&init)
                .chain(updates.iter().map(|(_, _, u)| u))
                .flat_map(|u| u.e_ins.values().copied())
                .max()
                .unwrap_or(1)
        });
        let mut g = Graph::new(w);
        init.apply_to(&mut g, 0)?;
        Ok(GraphSequence::new(
            g,
            updates.into_iter().map(|(_, _, u)| u).collect(),
        ))
    }
}

fn parse_ids(s: &str) -> Result<Vec<NodeId>, String> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad node id '{x}'")))
        .collect()
}

fn parse_key(s: &str) -> Result<EdgeKey, String> {
    let (a, b) = s.split_once('-').ok_or_else(|| format!("bad edge '{s}'"))?;
    let a: NodeId = a.trim().parse().map_err(|_| format!("bad edge '{s}'"))?;
    let b: NodeId = b.trim().parse().map_err(|_| format!("bad edge '{s}'"))?;
    EdgeKey::new(a, b).ok_or_else(|| format!("self-loop '{s}'"))
}

fn parse_line(line: &str) -> Result<(usize, Update), String> {
    let mut tokens = line.split_whitespace();
    let t = tokens
        .next()
        .and_then(|x| x.strip_prefix("t="))
        .ok_or("line must start with t=<int>")?
        .parse::<usize>()
        .map_err(|e| format!("bad step index: {e}"))?;
    let mut u = Update::default();
    for tok in tokens {
        if let Some(r) = tok.strip_prefix("+v:") {
            u.v_ins.extend(parse_ids(r)?);
        } else if let Some(r) = tok.strip_prefix("-v:") {
            u.v_del.extend(parse_ids(r)?);
        } else if let Some(r) = tok.strip_prefix("+e:") {
            for item in r.split(',') {
                let (k, w) = item
                    .rsplit_once(':')
                    .ok_or_else(|| format!("edge '{item}' lacks a weight"))?;
                let w: Weight = w.parse().map_err(|_| format!("bad weight in '{item}'"))?;
                u.e_ins.insert(parse_key(k)?, w);
            }
        } else if let Some(r) = tok.strip_prefix("-e:") {
            for item in r.split(',') {
                u.e_del.insert(parse_key(item)?);
            }
        } else {
            return Err(format!("unknown field '{tok}'"));
        }
    }
    Ok((t, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_parts(5, [1, 2, 3], [(1, 2, 2), (2, 3, 5)]).unwrap()
    }

    #[test]
    fn edge_key_is_canonical() {
        assert_eq!(EdgeKey::of(4, 1), EdgeKey::of(1, 4));
        assert!(EdgeKey::new(3, 3).is_none());
    }

    #[test]
    fn deleting_absent_edge_is_rejected() {
        let g = path3();
        let err = Update::delete_edge(1, 3).apply(&g, 1).unwrap_err();
        assert!(matches!(err, GraphError::InvalidUpdate { step: 1, .. }));
    }

    #[test]
    fn inserting_edge_to_missing_node_is_rejected() {
        let g = path3();
        assert!(Update::insert_edge(1, 9, 1).apply(&g, 1).is_err());
    }

    #[test]
    fn node_deletion_needs_its_edges_deleted() {
        let g = path3();
        let mut u = Update::default();
        u.v_del.insert(3);
        assert!(u.apply(&g, 1).is_err());
        u.e_del.insert(EdgeKey::of(2, 3));
        let h = u.apply(&g, 1).unwrap();
        assert_eq!(h.node_count(), 2);
        assert_eq!(h.edge_count(), 1);
    }

    #[test]
    fn deletions_happen_before_insertions() {
        let g = path3();
        let mut u = Update::delete_edge(1, 2);
        u.e_ins.insert(EdgeKey::of(1, 2), 4);
        let h = u.apply(&g, 1).unwrap();
        assert_eq!(h.weight(&EdgeKey::of(1, 2)), Some(4));
    }

    #[test]
    fn weight_change_without_deletion_is_rejected() {
        let g = path3();
        assert!(Update::insert_edge(1, 2, 3).apply(&g, 1).is_err());
        assert!(Update::insert_edge(1, 2, 2).apply(&g, 1).is_ok());
    }

    #[test]
    fn weight_out_of_range_is_rejected() {
        let g = path3();
        assert!(Update::insert_edge(1, 3, 6).apply(&g, 1).is_err());
    }

    #[test]
    fn regime_classification() {
        let g = path3();
        let inc = GraphSequence::new(g.clone(), vec![Update::insert_edge(1, 3, 1), Update::empty()]);
        assert_eq!(inc.regime(), Regime::Incremental);
        let dec = inc.reversed().unwrap();
        assert_eq!(dec.regime(), Regime::Decremental);
        let fd = GraphSequence::new(
            g,
            vec![Update::insert_edge(1, 3, 1), Update::delete_edge(1, 3)],
        );
        assert_eq!(fd.regime(), Regime::FullyDynamic);
    }

    #[test]
    fn log_line_format() {
        let mut u = Update::insert_edge(1, 2, 3);
        u.v_ins.insert(7);
        u.e_del.insert(EdgeKey::of(5, 4));
        assert_eq!(format_line(4, &u), "t=4 +v:7 +e:1-2:3 -e:4-5");
        assert_eq!(format_line(2, &Update::empty()), "t=2");
    }

    #[test]
    fn edge_event_witness() {
        let g = path3();
        let a = GraphSequence::new(g.clone(), vec![Update::empty(), Update::insert_edge(1, 3, 1)]);
        let b = GraphSequence::new(g, vec![Update::empty(), Update::empty()]);
        let w = check_adjacency(&b, &a, AdjacencyKind::EdgeEvent).unwrap().unwrap();
        assert_eq!(w.step, 2);
        assert_eq!(w.element, DifferingElement::Edge(EdgeKey::of(1, 3)));
        assert_eq!(w.larger, Side::Right);
        assert!(check_adjacency(&a, &a, AdjacencyKind::EdgeEvent).unwrap().is_none());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let g = path3();
        let a = GraphSequence::new(g.clone(), vec![Update::empty()]);
        let b = GraphSequence::new(g, vec![]);
        assert_eq!(
            check_adjacency(&a, &b, AdjacencyKind::EdgeEvent),
            Err(GraphError::LengthMismatch { left: 1, right: 0 })
        );
    }
}
