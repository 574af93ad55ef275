//! Dinic maximum flow on integer capacities, used for s-t cuts and the
//! parametric densest-subgraph test.

use std::collections::VecDeque;

/// Residual network with integer capacities.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl FlowNetwork {
    /// Network on `n` vertices without arcs.
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    /// Adds arc `a -> b` with capacity `c` and its residual twin.
    pub fn add_arc(&mut self, a: usize, b: usize, c: i64) {
        self.push(a, b, c, 0);
    }

    /// Adds an undirected edge: capacity `c` in both directions.
    pub fn add_edge(&mut self, a: usize, b: usize, c: i64) {
        self.push(a, b, c, c);
    }

    fn push(&mut self, a: usize, b: usize, ab: i64, ba: i64) {
        self.head[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(ab);
        self.head[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(ba);
    }

    fn levels(&self, s: usize) -> Vec<i64> {
        let mut level = vec![-1; self.head.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &e in &self.head[x] {
                let y = self.to[e];
                if self.cap[e] > 0 && level[y] < 0 {
                    level[y] = level[x] + 1;
                    q.push_back(y);
                }
            }
        }
        level
    }

    fn augment(&mut self, x: usize, t: usize, f: i64, level: &[i64], it: &mut [usize]) -> i64 {
        if x == t {
            return f;
        }
        while it[x] < self.head[x].len() {
            let e = self.head[x][it[x]];
            let y = self.to[e];
            if self.cap[e] > 0 && level[y] == level[x] + 1 {
                let d = self.augment(y, t, f.min(self.cap[e]), level, it);
                if d > 0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            it[x] += 1;
        }
        0
    }

    /// Value of a maximum `s`-`t` flow. The network keeps the residual
    /// capacities afterwards.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        loop {
            let level = self.levels(s);
            if level[t] < 0 {
                return total;
            }
            let mut it = vec![0; self.head.len()];
            loop {
                let f = self.augment(s, t, i64::MAX, &level, &mut it);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
    }

    /// Vertices reachable from `s` in the residual network (the source side
    /// of a minimum cut once [`FlowNetwork::max_flow`] has run).
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        self.levels(s).iter().map(|&l| l >= 0).collect()
    }
}
