//! Undirected graphs in adjacency-array form, file formats, generators and
//! the edge-balanced distribution onto processing elements.

mod distribute;
mod generate;
mod io;

pub use distribute::{build_subgraph, distribute_edge_balanced, DistributedGraph, Distribution};
pub use generate::{generate, Generator};
pub use io::{
    load_edge_list, load_graph, load_metis, read_edge_list, read_metis, write_edge_list,
    write_metis,
};

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("asymmetric adjacency: edge ({0}, {1}) has no reverse edge")]
    Asymmetric(usize, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("parallel edge ({0}, {1})")]
    ParallelEdge(usize, usize),
    #[error("invalid weight {weight} on {what}")]
    InvalidWeight { what: String, weight: f64 },
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("edge count mismatch: header declares {declared}, adjacency holds {found}")]
    EdgeCountMismatch { declared: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A simple undirected graph with `2m` directed edges stored in an offset
/// array. The directed edges of node `v` are `offsets[v]..offsets[v + 1]`,
/// and the ID of a directed edge is its position in that array.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    edge_weights: Option<Vec<f64>>,
    node_weights: Option<Vec<f64>>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Duplicates (in either
    /// orientation) collapse into one edge and adjacency lists come out sorted.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut pairs = Vec::new();
        for (u, v) in edges {
            if u >= n {
                return Err(GraphError::NodeOutOfRange { node: u, n });
            }
            if v >= n {
                return Err(GraphError::NodeOutOfRange { node: v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            pairs.push((u, v));
            pairs.push((v, u));
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut offsets = vec![0; n + 1];
        for &(u, _) in &pairs {
            offsets[u + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let targets = pairs.into_iter().map(|(_, v)| v).collect();
        Ok(Graph {
            offsets,
            targets,
            edge_weights: None,
            node_weights: None,
        })
    }

    /// Builds a graph from raw offset/target arrays, checking every graph
    /// invariant: symmetry with equal weights, no self-loops, no parallel
    /// edges, positive edge weights and non-negative node weights. The given
    /// adjacency order is kept.
    pub fn from_csr(
        offsets: Vec<usize>,
        targets: Vec<usize>,
        edge_weights: Option<Vec<f64>>,
        node_weights: Option<Vec<f64>>,
    ) -> Result<Graph, GraphError> {
        if offsets.is_empty() || offsets[0] != 0 {
            return Err(GraphError::InvalidParameter(
                "offset array must start with 0".into(),
            ));
        }
        let n = offsets.len() - 1;
        if offsets.windows(2).any(|w| w[0] > w[1]) || offsets[n] != targets.len() {
            return Err(GraphError::InvalidParameter(
                "offset array is not a valid prefix sum over the targets".into(),
            ));
        }
        if let Some(w) = &edge_weights {
            if w.len() != targets.len() {
                return Err(GraphError::InvalidParameter(
                    "edge weight count differs from directed edge count".into(),
                ));
            }
        }
        if let Some(c) = &node_weights {
            if c.len() != n {
                return Err(GraphError::InvalidParameter(
                    "node weight count differs from node count".into(),
                ));
            }
            if let Some((v, &weight)) = c
                .iter()
                .enumerate()
                .find(|(_, &w)| !(w >= 0.0 && w.is_finite()))
            {
                return Err(GraphError::InvalidWeight {
                    what: format!("node {v}"),
                    weight,
                });
            }
        }

        let graph = Graph {
            offsets,
            targets,
            edge_weights,
            node_weights,
        };

        let mut keyed: Vec<(usize, usize, usize)> = Vec::with_capacity(graph.targets.len());
        for u in 0..n {
            for e in graph.edge_range(u) {
                let v = graph.targets[e];
                if v >= n {
                    return Err(GraphError::NodeOutOfRange { node: v, n });
                }
                if v == u {
                    return Err(GraphError::SelfLoop(u));
                }
                let w = graph.edge_weight(e);
                if !(w > 0.0 && w.is_finite()) {
                    return Err(GraphError::InvalidWeight {
                        what: format!("edge ({u}, {v})"),
                        weight: w,
                    });
                }
                keyed.push((u, v, e));
            }
        }
        keyed.sort_unstable();
        if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(GraphError::ParallelEdge(w[0].0, w[0].1));
        }
        for &(u, v, e) in &keyed {
            let reverse = keyed
                .binary_search_by(|probe| (probe.0, probe.1).cmp(&(v, u)))
                .map(|i| keyed[i].2);
            match reverse {
                Ok(r) if graph.edge_weight(r) == graph.edge_weight(e) => {}
                _ => return Err(GraphError::Asymmetric(u, v)),
            }
        }
        Ok(graph)
    }

    /// Replaces the node weights.
    pub fn with_node_weights(mut self, weights: Vec<f64>) -> Result<Graph, GraphError> {
        if weights.len() != self.node_count() {
            return Err(GraphError::InvalidParameter(
                "node weight count differs from node count".into(),
            ));
        }
        if let Some((v, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| !(w >= 0.0 && w.is_finite()))
        {
            return Err(GraphError::InvalidWeight {
                what: format!("node {v}"),
                weight,
            });
        }
        self.node_weights = Some(weights);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges `m`.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Number of directed edges, `2m`.
    pub fn directed_edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    /// ID of the first directed edge leaving `v`.
    pub fn first_edge(&self, v: usize) -> usize {
        self.offsets[v]
    }

    pub fn edge_range(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.edge_range(v)]
    }

    pub fn edge_target(&self, e: usize) -> usize {
        self.targets[e]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn has_edge_weights(&self) -> bool {
        self.edge_weights.is_some()
    }

    pub fn has_node_weights(&self) -> bool {
        self.node_weights.is_some()
    }

    pub fn edge_weight(&self, e: usize) -> f64 {
        self.edge_weights.as_ref().map_or(1.0, |w| w[e])
    }

    pub fn node_weight(&self, v: usize) -> f64 {
        self.node_weights.as_ref().map_or(1.0, |c| c[v])
    }

    pub fn total_node_weight(&self) -> f64 {
        match &self.node_weights {
            Some(c) => c.iter().sum(),
            None => self.node_count() as f64,
        }
    }

    /// Sum of undirected edge weights `ω(E)`.
    pub fn total_edge_weight(&self) -> f64 {
        match &self.edge_weights {
            Some(w) => w.iter().sum::<f64>() / 2.0,
            None => self.edge_count() as f64,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max().unwrap_or(0)
    }

    pub fn has_isolated_nodes(&self) -> bool {
        self.degrees().any(|d| d == 0)
    }

    /// True when every adjacency list is strictly increasing.
    pub fn is_sorted(&self) -> bool {
        (0..self.node_count()).all(|v| self.neighbors(v).windows(2).all(|w| w[0] < w[1]))
    }

    /// Returns a copy whose adjacency lists are sorted by target ID.
    pub fn sort_adjacency(&self) -> Graph {
        let mut sorted = self.clone();
        for v in 0..self.node_count() {
            let range = self.edge_range(v);
            if self.neighbors(v).windows(2).all(|w| w[0] < w[1]) {
                continue;
            }
            let mut entries: Vec<(usize, f64)> = range
                .clone()
                .map(|e| (self.targets[e], self.edge_weight(e)))
                .collect();
            entries.sort_by_key(|&(t, _)| t);
            for (slot, (t, w)) in range.zip(entries) {
                sorted.targets[slot] = t;
                if let Some(weights) = sorted.edge_weights.as_mut() {
                    weights[slot] = w;
                }
            }
        }
        sorted
    }

    /// Undirected edges as `(min, max)` pairs in canonical (sorted) order.
    /// The position of a pair in this list is its canonical edge ID.
    pub fn canonical_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = (0..self.node_count())
            .flat_map(|u| {
                self.neighbors(u)
                    .iter()
                    .filter(move |&&v| v > u)
                    .map(move |&v| (u, v))
            })
            .collect();
        if !self.is_sorted() {
            edges.sort_unstable();
        }
        edges
    }

    /// Weight of every undirected edge in canonical order.
    pub fn canonical_edge_weights(&self) -> Vec<f64> {
        let ids = self.canonical_edge_ids();
        let mut weights = vec![0.0; self.edge_count()];
        for (e, &id) in ids.iter().enumerate() {
            weights[id] = self.edge_weight(e);
        }
        weights
    }

    /// Maps every directed edge to the canonical ID of its undirected edge.
    pub fn canonical_edge_ids(&self) -> Vec<usize> {
        let mut ids = vec![usize::MAX; self.directed_edge_count()];
        if self.is_sorted() {
            let reverse = self.reverse_edges();
            let mut next = 0;
            for u in 0..self.node_count() {
                for e in self.edge_range(u) {
                    if self.targets[e] > u {
                        ids[e] = next;
                        ids[reverse[e]] = next;
                        next += 1;
                    }
                }
            }
        } else {
            let index: HashMap<(usize, usize), usize> = self
                .canonical_edges()
                .into_iter()
                .enumerate()
                .map(|(i, pair)| (pair, i))
                .collect();
            for u in 0..self.node_count() {
                for e in self.edge_range(u) {
                    let v = self.targets[e];
                    ids[e] = index[&(u.min(v), u.max(v))];
                }
            }
        }
        ids
    }

    /// For every directed edge `(u, v)` the ID of `(v, u)`.
    pub fn reverse_edges(&self) -> Vec<usize> {
        let mut reverse = vec![usize::MAX; self.directed_edge_count()];
        if self.is_sorted() {
            // Scanning sources in ascending order visits the entries of each
            // sorted target list in order, so a per-node cursor suffices.
            let mut cursor = self.offsets[..self.node_count()].to_vec();
            for u in 0..self.node_count() {
                for e in self.edge_range(u) {
                    let v = self.targets[e];
                    reverse[e] = cursor[v];
                    cursor[v] += 1;
                }
            }
        } else {
            let index: HashMap<(usize, usize), usize> = (0..self.node_count())
                .flat_map(|u| self.edge_range(u).map(move |e| (u, e)))
                .map(|(u, e)| ((u, self.targets[e]), e))
                .collect();
            for u in 0..self.node_count() {
                for e in self.edge_range(u) {
                    reverse[e] = index[&(self.targets[e], u)];
                }
            }
        }
        reverse
    }
}

/// Returns `g` with sorted adjacency lists. Idempotent.
pub fn sort_adjacency(g: &Graph) -> Graph {
    g.sort_adjacency()
}

/// Bipartite SPMV locality graph of the adjacency matrix `M` of `g`: node
/// `i` stands for `x_i`, node `n + j` for `y_j`, and `{x_i, y_j}` is an edge
/// iff `M_ij != 0`.
pub fn build_spmv_graph(g: &Graph) -> Graph {
    let n = g.node_count();
    let edges = (0..n).flat_map(|i| g.neighbors(i).iter().map(move |&j| (i, n + j)));
    Graph::from_edges(2 * n, edges).expect("bipartite edges are simple and in range")
}
