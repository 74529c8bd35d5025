//! Yen's loopless k-shortest paths on an undirected multigraph.
//!
//! Paths are totally ordered by `(cost, node sequence, edge sequence)`. Spur
//! paths are the least element of that order among shortest completions, so
//! the enumeration is deterministic under ties and agrees with a brute-force
//! sort of all loopless paths.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPath {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub cost: f64,
}

impl GraphPath {
    fn order(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.nodes.cmp(&other.nodes))
            .then_with(|| self.edges.cmp(&other.edges))
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    a: usize,
    b: usize,
    w: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
}

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl WeightedGraph {
    /// Edges are `(a, b, weight)` with strictly positive finite weights.
    /// Self-loops are kept but never appear on a loopless path.
    pub fn new(node_count: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); node_count];
        let mut out = Vec::with_capacity(edges.len());
        for (id, (a, b, w)) in edges.into_iter().enumerate() {
            if a >= node_count || b >= node_count {
                return Err(Error::invalid(format!("edge {id} references a missing node")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("edge {id} has weight {w}")));
            }
            if a != b {
                adj[a].push((id, b));
                adj[b].push((id, a));
            }
            out.push(Edge { a, b, w });
        }
        Ok(Self { edges: out, adj })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> (usize, usize, f64) {
        let e = self.edges[id];
        (e.a, e.b, e.w)
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.node_count(),
            self.edges.iter().map(|e| (e.a, e.b, e.w * factor)).collect(),
        )
    }

    /// Sum of edge weights accumulated from the source end.
    pub fn path_cost(&self, edges: &[usize]) -> f64 {
        edges.iter().fold(0.0, |acc, &e| acc + self.edges[e].w)
    }

    fn distances_to(&self, dst: usize, banned_nodes: &[bool], banned_edges: &[bool]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.node_count()];
        let mut heap = BinaryHeap::new();
        dist[dst] = 0.0;
        heap.push(Reverse((Dist(0.0), dst)));
        while let Some(Reverse((Dist(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(eid, v) in &self.adj[u] {
                if banned_edges[eid] || banned_nodes[v] {
                    continue;
                }
                let nd = d + self.edges[eid].w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((Dist(nd), v)));
                }
            }
        }
        dist
    }

    /// Least shortest path from `src` to `dst` under the path order, avoiding
    /// banned nodes and edges.
    fn least_shortest_path(
        &self,
        src: usize,
        dst: usize,
        banned_nodes: &[bool],
        banned_edges: &[bool],
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let dist = self.distances_to(dst, banned_nodes, banned_edges);
        if !dist[src].is_finite() {
            return None;
        }
        let mut nodes = vec![src];
        let mut edges = Vec::new();
        let mut u = src;
        while u != dst {
            let slack = 1e-12 * dist[u];
            let (eid, v) = self.adj[u]
                .iter()
                .filter(|&&(eid, v)| {
                    !banned_edges[eid]
                        && !banned_nodes[v]
                        && dist[v] < dist[u]
                        && (dist[v] + self.edges[eid].w - dist[u]).abs() <= slack
                })
                .min_by_key(|&&(eid, v)| (v, eid))
                .copied()?;
            nodes.push(v);
            edges.push(eid);
            u = v;
        }
        Some((nodes, edges))
    }

    /// Up to `k` loopless `src → dst` paths in increasing path order. A
    /// disconnected pair yields an empty list.
    pub fn k_shortest_paths(&self, src: usize, dst: usize, k: usize) -> Result<Vec<GraphPath>> {
        let n = self.node_count();
        if src >= n || dst >= n {
            return Err(Error::invalid("path endpoint out of range"));
        }
        if src == dst {
            return Err(Error::invalid("path endpoints must differ"));
        }
        let mut found: Vec<GraphPath> = Vec::new();
        if k == 0 {
            return Ok(found);
        }
        let mut banned_nodes = vec![false; n];
        let mut banned_edges = vec![false; self.edge_count()];
        let Some((nodes, edges)) = self.least_shortest_path(src, dst, &banned_nodes, &banned_edges)
        else {
            return Ok(found);
        };
        let cost = self.path_cost(&edges);
        found.push(GraphPath { nodes, edges, cost });

        let mut candidates: Vec<GraphPath> = Vec::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        seen.insert(found[0].edges.clone());

        while found.len() < k {
            let last = found.last().expect("non-empty").clone();
            for i in 0..last.edges.len() {
                let spur = last.nodes[i];
                let (root_nodes, root_edges) = (&last.nodes[..=i], &last.edges[..i]);
                banned_nodes.iter_mut().for_each(|b| *b = false);
                banned_edges.iter_mut().for_each(|b| *b = false);
                for p in &found {
                    if p.edges.len() > i && p.nodes[..=i] == *root_nodes && p.edges[..i] == *root_edges
                    {
                        banned_edges[p.edges[i]] = true;
                    }
                }
                for &r in &root_nodes[..i] {
                    banned_nodes[r] = true;
                }
                if let Some((spur_nodes, spur_edges)) =
                    self.least_shortest_path(spur, dst, &banned_nodes, &banned_edges)
                {
                    let mut nodes = root_nodes.to_vec();
                    nodes.extend_from_slice(&spur_nodes[1..]);
                    let mut edges = root_edges.to_vec();
                    edges.extend(spur_edges);
                    if seen.insert(edges.clone()) {
                        let cost = self.path_cost(&edges);
                        candidates.push(GraphPath { nodes, edges, cost });
                    }
                }
            }
            let Some(best) = (0..candidates.len()).min_by(|&a, &b| candidates[a].order(&candidates[b]))
            else {
                break;
            };
            found.push(candidates.swap_remove(best));
        }
        Ok(found)
    }
}
