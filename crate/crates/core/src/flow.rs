//! Max-flow with edge lower bounds and successive-shortest-path min-cost flow.
//!
//! The max-flow network is generic over the capacity type so that the same code
//! serves integral assignment problems (`i64`) and exact rational transport
//! problems ([`Rational`](crate::Rational)).

use std::collections::VecDeque;
use std::ops::{Add, Sub};

use num_traits::Zero;

/// Capacity domain for [`FlowNetwork`].
pub trait Capacity: Clone + Ord + Zero + Add<Output = Self> + Sub<Output = Self> {}

impl<T> Capacity for T where T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T> {}

#[derive(Clone, Debug)]
struct Arc<T> {
    to: usize,
    residual: T,
}

/// Handle of an edge added with [`FlowNetwork::add_edge`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeId(usize);

/// Directed network whose edges carry a `[lower, upper]` flow interval.
#[derive(Clone, Debug)]
pub struct FlowNetwork<T> {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc<T>>,
    lower: Vec<T>,
    upper: Vec<T>,
    tail: Vec<usize>,
}

impl<T: Capacity> FlowNetwork<T> {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); nodes],
            arcs: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            tail: Vec::new(),
        }
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, lower: T, upper: T) -> EdgeId {
        assert!(lower <= upper, "edge lower bound above upper bound");
        let id = self.lower.len();
        self.lower.push(lower);
        self.upper.push(upper);
        self.tail.push(from);
        self.push_pair(from, to, T::zero());
        EdgeId(id)
    }

    fn push_pair(&mut self, from: usize, to: usize, cap: T) -> usize {
        let a = self.arcs.len();
        self.arcs.push(Arc { to, residual: cap });
        self.arcs.push(Arc {
            to: from,
            residual: T::zero(),
        });
        self.adj[from].push(a);
        self.adj[to].push(a + 1);
        a
    }

    /// Maximises the `source -> sink` flow subject to every edge's bounds.
    ///
    /// Returns `None` when no flow meets all lower bounds. On success the
    /// per-edge flows are available through [`FlowNetwork::flow`].
    pub fn max_flow(&mut self, source: usize, sink: usize) -> Option<T> {
        let n = self.adj.len();
        let edges = self.lower.len();
        let mut excess = vec![T::zero(); n];
        let mut big = T::zero();
        for e in 0..edges {
            let a = 2 * e;
            self.arcs[a].residual = self.upper[e].clone() - self.lower[e].clone();
            self.arcs[a + 1].residual = T::zero();
            let to = self.arcs[a].to;
            let from = self.tail[e];
            excess[to] = excess[to].clone() + self.lower[e].clone();
            excess[from] = excess[from].clone() - self.lower[e].clone();
            big = big + self.upper[e].clone();
        }
        let base_arcs = self.arcs.len();
        let base_adj: Vec<usize> = self.adj.iter().map(Vec::len).collect();

        let back = self.push_pair(sink, source, big);
        let super_source = self.add_node();
        let super_sink = self.add_node();
        let mut required = T::zero();
        for (v, ex) in excess.iter().enumerate() {
            if *ex > T::zero() {
                required = required + ex.clone();
                self.push_pair(super_source, v, ex.clone());
            } else if *ex < T::zero() {
                self.push_pair(v, super_sink, T::zero() - ex.clone());
            }
        }
        let pushed = self.dinic(super_source, super_sink);
        let feasible = pushed == required;
        let base_flow = self.arcs[back + 1].residual.clone();

        // Drop the auxiliary arcs and nodes again.
        self.arcs.truncate(base_arcs);
        self.adj.truncate(n);
        for (list, len) in self.adj.iter_mut().zip(base_adj) {
            list.truncate(len);
        }
        if !feasible {
            return None;
        }
        let extra = if source == sink {
            T::zero()
        } else {
            self.dinic(source, sink)
        };
        Some(base_flow + extra)
    }

    /// Flow on an edge after a successful [`FlowNetwork::max_flow`].
    pub fn flow(&self, e: EdgeId) -> T {
        self.lower[e.0].clone() + self.arcs[2 * e.0 + 1].residual.clone()
    }

    fn dinic(&mut self, s: usize, t: usize) -> T {
        let n = self.adj.len();
        let mut total = T::zero();
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &a in &self.adj[v] {
                    let w = self.arcs[a].to;
                    if level[w] == usize::MAX && self.arcs[a].residual > T::zero() {
                        level[w] = level[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; n];
            while let Some(f) = self.augment(s, t, &level, &mut next) {
                total = total + f;
            }
        }
    }

    /// Finds one augmenting path in the level graph and pushes its bottleneck.
    fn augment(&mut self, s: usize, t: usize, level: &[usize], next: &mut [usize]) -> Option<T> {
        let mut path: Vec<usize> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                let bottleneck = path
                    .iter()
                    .map(|&a| self.arcs[a].residual.clone())
                    .min()
                    .expect("path to sink is nonempty");
                for &a in &path {
                    self.arcs[a].residual = self.arcs[a].residual.clone() - bottleneck.clone();
                    self.arcs[a ^ 1].residual = self.arcs[a ^ 1].residual.clone() + bottleneck.clone();
                }
                return Some(bottleneck);
            }
            let mut advanced = false;
            while next[v] < self.adj[v].len() {
                let a = self.adj[v][next[v]];
                let w = self.arcs[a].to;
                if self.arcs[a].residual > T::zero() && level[w] == level[v] + 1 {
                    path.push(a);
                    v = w;
                    advanced = true;
                    break;
                }
                next[v] += 1;
            }
            if !advanced {
                // Dead end: retreat and skip the arc that led here.
                let a = path.pop()?;
                v = self.arcs[a ^ 1].to;
                next[v] += 1;
            }
        }
    }
}

/// Min-cost flow by successive shortest paths (Bellman-Ford, so negative arc
/// costs are allowed as long as the initial network has no negative cycle).
#[derive(Clone, Debug)]
pub struct MinCostFlow {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        MinCostFlow {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> EdgeId {
        let a = self.to.len();
        self.to.extend([to, from]);
        self.cap.extend([cap, 0]);
        self.cost.extend([cost, -cost]);
        self.adj[from].push(a);
        self.adj[to].push(a + 1);
        EdgeId(a / 2)
    }

    pub fn flow(&self, e: EdgeId) -> i64 {
        self.cap[2 * e.0 + 1]
    }

    /// Sends as much flow as possible (up to `limit`) from `s` to `t`; among all
    /// flows of that value the result has minimum cost. Returns `(flow, cost)`.
    pub fn run(&mut self, s: usize, t: usize, limit: i64) -> (i64, i64) {
        let n = self.adj.len();
        let mut flow = 0;
        let mut total_cost = 0;
        while flow < limit {
            let mut dist = vec![i64::MAX; n];
            let mut via = vec![usize::MAX; n];
            let mut in_queue = vec![false; n];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            in_queue[s] = true;
            while let Some(v) = queue.pop_front() {
                in_queue[v] = false;
                for &a in &self.adj[v] {
                    let w = self.to[a];
                    if self.cap[a] > 0 && dist[v] + self.cost[a] < dist[w] {
                        dist[w] = dist[v] + self.cost[a];
                        via[w] = a;
                        if !in_queue[w] {
                            in_queue[w] = true;
                            queue.push_back(w);
                        }
                    }
                }
            }
            if dist[t] == i64::MAX {
                break;
            }
            let mut push = limit - flow;
            let mut v = t;
            while v != s {
                let a = via[v];
                push = push.min(self.cap[a]);
                v = self.to[a ^ 1];
            }
            let mut v = t;
            while v != s {
                let a = via[v];
                self.cap[a] -= push;
                self.cap[a ^ 1] += push;
                v = self.to[a ^ 1];
            }
            flow += push;
            total_cost += push * dist[t];
        }
        (flow, total_cost)
    }
}
