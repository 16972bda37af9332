use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Start,
    Goal,
    /// Projection of the station with this 0-based index.
    BsProjection(usize),
    /// Common-border sample shared by the two stations (0-based indices).
    BorderPoint(usize, usize),
    /// Grid baseline lattice node.
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Node {
    pub id: usize,
    pub point: Point2,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Undirected graph whose edge weights are Euclidean node distances.
#[derive(Debug, Clone, Default)]
pub struct PlanGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PlanGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, point: Point2, kind: NodeKind) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node { id, point, kind });
        self.adjacency.push(Vec::new());
        id
    }

    /// Adds the edge `a`-`b` weighted by Euclidean length. Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let weight = self.nodes[a].point.dist(self.nodes[b].point);
        self.edges.push(Edge { a, b, weight });
        self.adjacency[a].push((b, weight));
        self.adjacency[b].push((a, weight));
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, id: usize) -> &[(usize, f64)] {
        &self.adjacency[id]
    }

    pub fn path_weight(&self, path: &[usize]) -> f64 {
        path.windows(2)
            .map(|w| self.nodes[w[0]].point.dist(self.nodes[w[1]].point))
            .sum()
    }
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then on node id
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `src` to `dst`. Returns the node sequence of a minimum-weight
/// path, or `None` when `dst` is unreachable. On equal tentative distances the
/// predecessor with the lower node id is kept.
pub fn shortest_path(g: &PlanGraph, src: usize, dst: usize) -> Option<Vec<usize>> {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(State {
        cost: 0.0,
        node: src,
    });
    while let Some(State { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == dst {
            break;
        }
        for &(next, w) in g.neighbors(node) {
            if done[next] {
                continue;
            }
            let cand = cost + w;
            if cand < dist[next] || (cand == dist[next] && node < prev[next]) {
                dist[next] = cand;
                prev[next] = node;
                heap.push(State {
                    cost: cand,
                    node: next,
                });
            }
        }
    }
    if !dist[dst].is_finite() {
        return None;
    }
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != src {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}
