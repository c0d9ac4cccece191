//! Edge partitions, the vertex-cut objective and related quality metrics.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::partition::{block_weight_limit, fits, write_blocks, NodePartition};
use crate::spac::{EdgeKind, SplitGraph};

/// Largest `k^m` the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum EdgePartitionError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("edge {edge} is in block {block}, but k = {k}")]
    BlockOutOfRange { edge: usize, block: usize, k: usize },
    #[error("partition has {found} entries for {expected} split nodes")]
    LengthMismatch { expected: usize, found: usize },
    #[error("dominant edge ({a}, {b}) is cut")]
    DominantCut { a: usize, b: usize },
    #[error("split node {0} does not have exactly one dominant edge")]
    MalformedSplitGraph(usize),
    #[error("graph has no edges")]
    NoEdges,
    #[error("{k}^{m} assignments exceed the brute-force limit of {BRUTE_FORCE_LIMIT}")]
    TooLarge { k: usize, m: usize },
    #[error("no balanced edge partition exists")]
    NoFeasiblePartition,
}

/// Block assignment of the undirected edges of a graph in canonical order
/// (sorted `(min, max)` pairs).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgePartition {
    blocks: Vec<usize>,
    k: usize,
}

impl EdgePartition {
    pub fn new(blocks: Vec<usize>, k: usize) -> Result<EdgePartition, EdgePartitionError> {
        if k == 0 {
            return Err(EdgePartitionError::InvalidK);
        }
        if let Some((edge, &block)) = blocks.iter().enumerate().find(|(_, &b)| b >= k) {
            return Err(EdgePartitionError::BlockOutOfRange { edge, block, k });
        }
        Ok(EdgePartition { blocks, k })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn block(&self, edge: usize) -> usize {
        self.blocks[edge]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.blocks.len()
    }

    /// Number of edges per block.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &b in &self.blocks {
            sizes[b] += 1;
        }
        sizes
    }

    /// `ω(E_i)` per block.
    pub fn block_weights(&self, g: &Graph) -> Vec<f64> {
        let weights = g.canonical_edge_weights();
        let mut loads = vec![0.0; self.k];
        for (&b, w) in self.blocks.iter().zip(weights) {
            loads[b] += w;
        }
        loads
    }

    /// One block ID per line in canonical edge order.
    pub fn write(&self, out: impl Write) -> std::io::Result<()> {
        write_blocks(&self.blocks, out)
    }
}

/// Gives every input edge the common block of its dominant edge's
/// endpoints. Fails if a dominant edge is cut.
pub fn project_split_partition(
    sg: &SplitGraph,
    np: &NodePartition,
) -> Result<EdgePartition, EdgePartitionError> {
    let (ep, cut) = project(sg, np, true)?;
    debug_assert_eq!(cut, 0);
    Ok(ep)
}

/// Like [`project_split_partition`], but a cut dominant edge takes the block
/// of its lower-ID endpoint. Also returns the number of cut dominant edges.
pub fn project_split_partition_lenient(
    sg: &SplitGraph,
    np: &NodePartition,
) -> Result<(EdgePartition, usize), EdgePartitionError> {
    project(sg, np, false)
}

fn project(
    sg: &SplitGraph,
    np: &NodePartition,
    strict: bool,
) -> Result<(EdgePartition, usize), EdgePartitionError> {
    let n = sg.node_count();
    if np.node_count() != n {
        return Err(EdgePartitionError::LengthMismatch {
            expected: n,
            found: np.node_count(),
        });
    }
    let mut dominant = Vec::with_capacity(n / 2);
    for s in 0..n {
        let mut partners = sg.neighbors(s).filter(|&(_, k)| k == EdgeKind::Dominant);
        let t = match (partners.next(), partners.next()) {
            (Some((t, _)), None) => t,
            _ => return Err(EdgePartitionError::MalformedSplitGraph(s)),
        };
        if s < t {
            dominant.push((sg.dominant_origin(s), s, t));
        }
    }
    dominant.sort_unstable();
    let mut cut = 0;
    let mut blocks = Vec::with_capacity(dominant.len());
    for &(_, a, b) in &dominant {
        if np.block(a) != np.block(b) {
            if strict {
                return Err(EdgePartitionError::DominantCut { a, b });
            }
            cut += 1;
        }
        blocks.push(np.block(a));
    }
    Ok((EdgePartition::new(blocks, np.k())?, cut))
}

/// `Σ_v (|I(v)| − 1)` over nodes with at least one edge.
pub fn vertex_cut(g: &Graph, ep: &EdgePartition) -> usize {
    let sets = block_set_sizes(g, ep);
    sets.iter().filter(|&&s| s > 0).map(|&s| s - 1).sum()
}

/// `|I(v)|` for every node; 0 for isolated nodes.
pub fn block_set_sizes(g: &Graph, ep: &EdgePartition) -> Vec<usize> {
    assert_eq!(ep.edge_count(), g.edge_count(), "edge partition does not match graph");
    let ids = g.canonical_edge_ids();
    let mut stamp = vec![usize::MAX; ep.k()];
    (0..g.node_count())
        .map(|v| {
            let mut count = 0;
            for e in g.edge_range(v) {
                let b = ep.block(ids[e]);
                if stamp[b] != v {
                    stamp[b] = v;
                    count += 1;
                }
            }
            count
        })
        .collect()
}

/// Mean `|I(v)|` over nodes with at least one edge.
pub fn replication_factor(g: &Graph, ep: &EdgePartition) -> Result<f64, EdgePartitionError> {
    if g.edge_count() == 0 {
        return Err(EdgePartitionError::NoEdges);
    }
    let sets = block_set_sizes(g, ep);
    let active = sets.iter().filter(|&&s| s > 0).count();
    Ok(sets.iter().sum::<usize>() as f64 / active as f64)
}

/// `max_i ω(E_i) / ceil(ω(E) / k)` and whether it is at most `1 + epsilon`.
pub fn edge_balance(g: &Graph, ep: &EdgePartition, epsilon: f64) -> (f64, bool) {
    let loads = ep.block_weights(g);
    let total: f64 = loads.iter().sum();
    let target = (total / ep.k() as f64).ceil();
    if target == 0.0 {
        return (1.0, true);
    }
    let max = loads.iter().cloned().fold(0.0, f64::max);
    let imbalance = max / target;
    (imbalance, fits(max, (1.0 + epsilon) * target))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub vertex_cut: usize,
    /// `None` for graphs without edges.
    pub replication_factor: Option<f64>,
    pub max_imbalance: f64,
    pub feasible: bool,
    pub runtime_ms: BTreeMap<String, f64>,
}

impl QualityReport {
    pub fn evaluate(g: &Graph, ep: &EdgePartition, epsilon: f64) -> QualityReport {
        let (max_imbalance, feasible) = edge_balance(g, ep, epsilon);
        QualityReport {
            vertex_cut: vertex_cut(g, ep),
            replication_factor: replication_factor(g, ep).ok(),
            max_imbalance,
            feasible,
            runtime_ms: BTreeMap::new(),
        }
    }

    pub fn with_phase(mut self, phase: &str, ms: f64) -> QualityReport {
        self.runtime_ms.insert(phase.to_string(), ms);
        self
    }
}

/// Smallest vertex cut over all balanced edge partitions, with a witness.
///
/// Assignments are enumerated in restricted-growth form (an edge opens at
/// most one new block beyond those already used), which visits each
/// partition once up to block relabeling. Branches exceeding the block
/// limit or the best cut so far are pruned.
pub fn brute_force_optimal(
    g: &Graph,
    k: usize,
    epsilon: f64,
) -> Result<(usize, EdgePartition), EdgePartitionError> {
    if k == 0 {
        return Err(EdgePartitionError::InvalidK);
    }
    let m = g.edge_count();
    let too_large = (k as u64)
        .checked_pow(m as u32)
        .is_none_or(|count| count > BRUTE_FORCE_LIMIT);
    if k > 1 && too_large {
        return Err(EdgePartitionError::TooLarge { k, m });
    }
    let edges = g.canonical_edges();
    let weights = g.canonical_edge_weights();
    let limit = block_weight_limit(weights.iter().sum(), k, epsilon);
    if weights.iter().any(|&w| !fits(w, limit)) {
        return Err(EdgePartitionError::NoFeasiblePartition);
    }

    let mut search = Search {
        edges: &edges,
        weights: &weights,
        k,
        limit,
        loads: vec![0.0; k],
        counts: vec![0; g.node_count() * k],
        sets: vec![0; g.node_count()],
        blocks: vec![0; m],
        best: usize::MAX,
        witness: None,
    };
    search.descend(0, 0, 0);
    match search.witness {
        Some(blocks) => Ok((search.best, EdgePartition::new(blocks, k)?)),
        None => Err(EdgePartitionError::NoFeasiblePartition),
    }
}

struct Search<'a> {
    edges: &'a [(usize, usize)],
    weights: &'a [f64],
    k: usize,
    limit: f64,
    loads: Vec<f64>,
    counts: Vec<u32>,
    sets: Vec<usize>,
    blocks: Vec<usize>,
    best: usize,
    witness: Option<Vec<usize>>,
}

impl Search<'_> {
    fn descend(&mut self, i: usize, used: usize, cut: usize) {
        if cut >= self.best {
            return;
        }
        if i == self.edges.len() {
            self.best = cut;
            self.witness = Some(self.blocks.clone());
            return;
        }
        let (u, v) = self.edges[i];
        let w = self.weights[i];
        for b in 0..self.k.min(used + 1) {
            if !fits(self.loads[b] + w, self.limit) {
                continue;
            }
            let added = self.add(u, b) + self.add(v, b);
            self.loads[b] += w;
            self.blocks[i] = b;
            self.descend(i + 1, used.max(b + 1), cut + added);
            self.loads[b] -= w;
            self.remove(u, b);
            self.remove(v, b);
        }
    }

    fn add(&mut self, v: usize, b: usize) -> usize {
        let c = &mut self.counts[v * self.k + b];
        *c += 1;
        if *c == 1 {
            self.sets[v] += 1;
            usize::from(self.sets[v] > 1)
        } else {
            0
        }
    }

    fn remove(&mut self, v: usize, b: usize) {
        let c = &mut self.counts[v * self.k + b];
        *c -= 1;
        if *c == 0 {
            self.sets[v] -= 1;
        }
    }
}
