//! Road network representation and shortest-path services.
//!
//! Travel costs are stored in hours of driving at the instance's constant
//! speed, which is the canonical distance unit throughout the crate.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a node inside a [`RoadNetwork`]. Stable for the lifetime of the
/// network; node name lookups go through [`RoadNetwork::node_index`].
pub type NodeIdx = usize;

/// Index of a directed arc inside a [`RoadNetwork`].
pub type ArcIdx = usize;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub has_charger: bool,
    /// Charging price in money per kWh, present iff the node has a charger
    /// or serves as some truck's destination.
    pub price_per_kwh: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub tail: NodeIdx,
    pub head: NodeIdx,
    /// Travel time in hours (strictly positive).
    pub travel_hours: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("arc {0:?} -> {1:?} has non-positive travel time")]
    NonPositiveTravelTime(String, String),
    #[error("self-loop arc at {0:?}")]
    SelfLoop(String),
    #[error("parallel arc {0:?} -> {1:?}")]
    ParallelArc(String, String),
    #[error("negative charging price at {0:?}")]
    NegativePrice(String),
}

/// Immutable directed road network with adjacency indexes in both directions.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    out_arcs: Vec<Vec<ArcIdx>>,
    in_arcs: Vec<Vec<ArcIdx>>,
    by_endpoints: HashMap<(NodeIdx, NodeIdx), ArcIdx>,
    by_id: HashMap<String, NodeIdx>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<Node>, arcs: Vec<Arc>) -> Result<Self, NetworkError> {
        let mut by_id = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if by_id.insert(n.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateNode(n.id.clone()));
            }
            if let Some(p) = n.price_per_kwh {
                if p < 0.0 {
                    return Err(NetworkError::NegativePrice(n.id.clone()));
                }
            }
        }
        let mut out_arcs = vec![Vec::new(); nodes.len()];
        let mut in_arcs = vec![Vec::new(); nodes.len()];
        let mut by_endpoints = HashMap::new();
        for (ai, a) in arcs.iter().enumerate() {
            if a.tail >= nodes.len() || a.head >= nodes.len() {
                return Err(NetworkError::UnknownNode(format!("arc index {ai}")));
            }
            if a.tail == a.head {
                return Err(NetworkError::SelfLoop(nodes[a.tail].id.clone()));
            }
            if a.travel_hours <= 0.0 || !a.travel_hours.is_finite() {
                return Err(NetworkError::NonPositiveTravelTime(
                    nodes[a.tail].id.clone(),
                    nodes[a.head].id.clone(),
                ));
            }
            if by_endpoints.insert((a.tail, a.head), ai).is_some() {
                return Err(NetworkError::ParallelArc(
                    nodes[a.tail].id.clone(),
                    nodes[a.head].id.clone(),
                ));
            }
            out_arcs[a.tail].push(ai);
            in_arcs[a.head].push(ai);
        }
        Ok(Self { nodes, arcs, out_arcs, in_arcs, by_endpoints, by_id })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn node(&self, i: NodeIdx) -> &Node {
        &self.nodes[i]
    }

    pub fn arc(&self, a: ArcIdx) -> &Arc {
        &self.arcs[a]
    }

    pub fn node_index(&self, id: &str) -> Option<NodeIdx> {
        self.by_id.get(id).copied()
    }

    pub fn arc_between(&self, tail: NodeIdx, head: NodeIdx) -> Option<ArcIdx> {
        self.by_endpoints.get(&(tail, head)).copied()
    }

    pub fn out_arcs(&self, n: NodeIdx) -> &[ArcIdx] {
        &self.out_arcs[n]
    }

    pub fn in_arcs(&self, n: NodeIdx) -> &[ArcIdx] {
        &self.in_arcs[n]
    }
}

/// Shortest-path labels from a single source.
#[derive(Debug, Clone)]
pub struct SpTree {
    pub source: NodeIdx,
    /// `dist[v]` is the shortest travel time in hours, `f64::INFINITY` when
    /// unreachable.
    pub dist: Vec<f64>,
    /// Predecessor on a shortest path, `None` for the source and for
    /// unreachable nodes.
    pub pred: Vec<Option<NodeIdx>>,
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: NodeIdx,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then on node index for determinism.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra labels from `source`. Equal-cost predecessors are tie-broken
/// toward the lexicographically smallest node id so reconstructed paths are
/// deterministic.
pub fn dijkstra(network: &RoadNetwork, source: NodeIdx) -> Result<SpTree, NetworkError> {
    if source >= network.node_count() {
        return Err(NetworkError::UnknownNode(format!("index {source}")));
    }
    let n = network.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<NodeIdx>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry { dist: 0.0, node: source });
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &ai in network.out_arcs(u) {
            let arc = network.arc(ai);
            let v = arc.head;
            if done[v] {
                continue;
            }
            let nd = d + arc.travel_hours;
            let better = nd < dist[v]
                || (nd == dist[v]
                    && pred[v].is_some_and(|p| network.node(u).id < network.node(p).id));
            if better {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(HeapEntry { dist: nd, node: v });
            }
        }
    }
    Ok(SpTree { source, dist, pred })
}

/// All-pairs shortest travel times via Floyd-Warshall.
#[derive(Debug, Clone)]
pub struct SpMatrix {
    n: usize,
    dist: Vec<f64>,
}

impl SpMatrix {
    pub fn get(&self, i: NodeIdx, j: NodeIdx) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Largest finite entry, 0.0 for a single-node network.
    pub fn max_finite(&self) -> f64 {
        self.dist.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max)
    }
}

pub fn all_pairs_shortest(network: &RoadNetwork) -> SpMatrix {
    let n = network.node_count();
    let mut dist = vec![f64::INFINITY; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
    }
    for a in network.arcs() {
        let cell = &mut dist[a.tail * n + a.head];
        if a.travel_hours < *cell {
            *cell = a.travel_hours;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let through = dik + dist[k * n + j];
                if through < dist[i * n + j] {
                    dist[i * n + j] = through;
                }
            }
        }
    }
    SpMatrix { n, dist }
}

/// A reconstructed shortest path: contiguous arc list plus its total hours.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub arcs: Vec<ArcIdx>,
    pub total_hours: f64,
}

/// Extracts the deterministic shortest o -> d path. Returns `None` when `d`
/// is unreachable from `o`.
pub fn shortest_path(
    network: &RoadNetwork,
    o: NodeIdx,
    d: NodeIdx,
) -> Result<Option<PathResult>, NetworkError> {
    if d >= network.node_count() {
        return Err(NetworkError::UnknownNode(format!("index {d}")));
    }
    let tree = dijkstra(network, o)?;
    Ok(path_from_tree(network, &tree, d))
}

/// Reconstructs the path to `d` from precomputed dijkstra labels.
pub fn path_from_tree(network: &RoadNetwork, tree: &SpTree, d: NodeIdx) -> Option<PathResult> {
    if !tree.dist[d].is_finite() {
        return None;
    }
    let mut arcs = Vec::new();
    let mut cur = d;
    while let Some(p) = tree.pred[cur] {
        let ai = network
            .arc_between(p, cur)
            .expect("predecessor edge must exist");
        arcs.push(ai);
        cur = p;
    }
    arcs.reverse();
    Some(PathResult { arcs, total_hours: tree.dist[d] })
}
