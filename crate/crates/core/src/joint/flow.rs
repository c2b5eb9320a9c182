//! Explicit min-cost flow network and a successive-shortest-path solver.
//!
//! Layout: `source -> row_i` (capacity 1), `row_i -> class_y` (capacity 1,
//! cost `-weight(i, y)`), and for every class one unit arc per admissible row
//! count `class_y -> sink` with the convex unit cost. Parallel unit arcs are
//! explored in index order, so the cheapest ones fill first.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::objective::ScaledObjective;

const INF: i64 = i64::MAX / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cap: i64,
    pub cost: i64,
}

/// Directed network with integer capacities and costs.
#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    n_nodes: usize,
    // Residual arcs in pairs: 2k forward, 2k+1 backward.
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(n_nodes: usize) -> Self {
        Self { n_nodes, adj: vec![Vec::new(); n_nodes], ..Default::default() }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_arcs(&self) -> usize {
        self.to.len() / 2
    }

    /// Adds an arc and returns its id.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let id = self.to.len();
        self.to.extend([to, from]);
        self.cap.extend([cap, 0]);
        self.cost.extend([cost, -cost]);
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id / 2
    }

    pub fn flow(&self, arc: usize) -> i64 {
        self.cap[2 * arc + 1]
    }

    pub fn arc(&self, arc: usize) -> Arc {
        Arc {
            from: self.to[2 * arc + 1],
            to: self.to[2 * arc],
            cap: self.cap[2 * arc] + self.cap[2 * arc + 1],
            cost: self.cost[2 * arc],
        }
    }

    /// Pushes up to `limit` units from `s` to `t` at minimum cost. Returns
    /// `(flow, cost)`. The network must have no negative cycles.
    pub fn min_cost_flow(&mut self, s: usize, t: usize, limit: i64) -> (i64, i64) {
        let n = self.n_nodes;
        let mut potential = self.bellman_ford(s);
        let mut dist = vec![INF; n];
        let mut prev = vec![usize::MAX; n];
        let (mut flow, mut cost) = (0i64, 0i64);
        while flow < limit {
            dist.fill(INF);
            prev.fill(usize::MAX);
            dist[s] = 0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0i64, s)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &e in &self.adj[u] {
                    if self.cap[e] <= 0 {
                        continue;
                    }
                    let v = self.to[e];
                    let nd = d + self.cost[e] + potential[u] - potential[v];
                    if nd < dist[v] {
                        dist[v] = nd;
                        prev[v] = e;
                        heap.push(Reverse((nd, v)));
                    }
                }
            }
            if dist[t] >= INF {
                break;
            }
            for v in 0..n {
                if dist[v] < INF {
                    potential[v] += dist[v];
                }
            }
            let mut push = limit - flow;
            let mut v = t;
            while v != s {
                let e = prev[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                cost += push * self.cost[e];
                v = self.to[e ^ 1];
            }
            flow += push;
        }
        (flow, cost)
    }

    fn bellman_ford(&self, s: usize) -> Vec<i64> {
        let mut dist = vec![INF; self.n_nodes];
        dist[s] = 0;
        for _ in 0..self.n_nodes {
            let mut changed = false;
            for u in 0..self.n_nodes {
                if dist[u] >= INF {
                    continue;
                }
                for &e in &self.adj[u] {
                    if self.cap[e] > 0 && dist[u] + self.cost[e] < dist[self.to[e]] {
                        dist[self.to[e]] = dist[u] + self.cost[e];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // Unreachable nodes keep a zero potential; they never carry flow.
        dist.into_iter().map(|d| if d >= INF { 0 } else { d }).collect()
    }
}

/// Builds the explicit assignment network for `obj` and solves it. Returns
/// each row's class, or `None` if not every row can be placed.
pub fn solve_dense(obj: &ScaledObjective) -> Option<Vec<usize>> {
    let (n, k) = (obj.n_rows(), obj.n_classes());
    let source = 0;
    let row_node = |i: usize| 1 + i;
    let class_node = |y: usize| 1 + n + y;
    let sink = 1 + n + k;
    let mut net = FlowNetwork::new(sink + 1);
    for i in 0..n {
        net.add_arc(source, row_node(i), 1, 0);
    }
    let mut assign_arcs = Vec::with_capacity(n * k);
    for i in 0..n {
        for y in 0..k {
            assign_arcs.push(net.add_arc(row_node(i), class_node(y), 1, -obj.weight(i, y)));
        }
    }
    for y in 0..k {
        for j in 1..=obj.capacity(y) {
            match obj.unit_cost(y, j) {
                Some(c) => net.add_arc(class_node(y), sink, 1, c),
                None => break,
            };
        }
    }
    let (flow, _) = net.min_cost_flow(source, sink, n as i64);
    if flow != n as i64 {
        return None;
    }
    let mut out = vec![usize::MAX; n];
    for i in 0..n {
        for y in 0..k {
            if net.flow(assign_arcs[i * k + y]) > 0 {
                out[i] = y;
            }
        }
    }
    Some(out)
}
