//! Node partitioning of split graphs: dominant-edge contraction, a contiguous
//! initial partition and size-constrained label propagation.

mod multilevel;

pub use multilevel::multilevel_partition;

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::spac::{EdgeKind, SplitGraph};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("invalid partition config: {0}")]
    InvalidConfig(String),
    #[error("total node weight is zero")]
    ZeroWeight,
    #[error("node {node} has weight {weight}, above the block limit {limit}")]
    Infeasible { node: usize, weight: f64, limit: f64 },
    #[error("split node {split} has {count} dominant edges, expected exactly one")]
    Contraction { split: usize, count: usize },
    #[error("partition has {found} entries for {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },
    #[error("node {node} is in block {block}, but k = {k}")]
    BlockOutOfRange { node: usize, block: usize, k: usize },
    #[error("partition file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeOrder {
    Sequential,
    #[default]
    RandomShuffle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionConfig {
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub lp_rounds: usize,
    pub node_order: NodeOrder,
    /// Partition split graphs with [`multilevel_partition`] instead of a
    /// single initial partition and refinement.
    pub multilevel: bool,
    /// Multilevel cycles; each one after the first coarsens within the
    /// blocks of the best partition so far.
    pub cycles: usize,
    /// Clusters formed during coarsening weigh at most the block limit
    /// divided by this factor.
    pub cluster_factor: f64,
    /// Contiguous splits tried on the coarsest graph.
    pub initial_tries: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            k: 2,
            epsilon: 0.03,
            seed: 0,
            lp_rounds: 10,
            node_order: NodeOrder::RandomShuffle,
            multilevel: true,
            cycles: 20,
            cluster_factor: 100.0,
            initial_tries: 4,
        }
    }
}

impl PartitionConfig {
    pub fn new(k: usize) -> Self {
        PartitionConfig {
            k,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn single_level(mut self) -> Self {
        self.multilevel = false;
        self
    }

    pub fn validate(&self) -> Result<(), PartitionError> {
        if self.k == 0 {
            return Err(PartitionError::InvalidConfig("k must be at least 1".into()));
        }
        if self.cluster_factor.is_nan() || self.cluster_factor < 1.0 {
            return Err(PartitionError::InvalidConfig(format!(
                "cluster factor must be at least 1, got {}",
                self.cluster_factor
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(PartitionError::InvalidConfig(format!(
                "epsilon must be a non-negative number, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `(1 + epsilon) * ceil(total / k)`.
pub fn block_weight_limit(total: f64, k: usize, epsilon: f64) -> f64 {
    (1.0 + epsilon) * (total / k as f64).ceil()
}

// Guards the comparison against the rounding of (1 + eps) * x.
pub(crate) fn fits(weight: f64, limit: f64) -> bool {
    weight <= limit + 1e-9 * limit.abs().max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodePartition {
    blocks: Vec<usize>,
    k: usize,
    block_weights: Vec<f64>,
    max_block_weight: f64,
    feasible: bool,
}

impl NodePartition {
    /// Wraps a block assignment of the nodes of `g`; the balance limit is
    /// `(1 + epsilon) * ceil(c(V) / k)`.
    pub fn from_blocks(
        g: &Graph,
        blocks: Vec<usize>,
        k: usize,
        epsilon: f64,
    ) -> Result<NodePartition, PartitionError> {
        let limit = block_weight_limit(g.total_node_weight(), k, epsilon);
        let weights: Vec<f64> = (0..g.node_count()).map(|v| g.node_weight(v)).collect();
        NodePartition::with_limit(&weights, blocks, k, limit)
    }

    /// Wraps a block assignment of nodes with the given weights under an
    /// explicit block weight limit.
    pub fn with_limit(
        node_weights: &[f64],
        blocks: Vec<usize>,
        k: usize,
        max_block_weight: f64,
    ) -> Result<NodePartition, PartitionError> {
        if k == 0 {
            return Err(PartitionError::InvalidConfig("k must be at least 1".into()));
        }
        if blocks.len() != node_weights.len() {
            return Err(PartitionError::LengthMismatch {
                expected: node_weights.len(),
                found: blocks.len(),
            });
        }
        let mut block_weights = vec![0.0; k];
        for (node, (&b, &w)) in blocks.iter().zip(node_weights).enumerate() {
            if b >= k {
                return Err(PartitionError::BlockOutOfRange { node, block: b, k });
            }
            block_weights[b] += w;
        }
        let feasible = block_weights.iter().all(|&w| fits(w, max_block_weight));
        Ok(NodePartition {
            blocks,
            k,
            block_weights,
            max_block_weight,
            feasible,
        })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<usize> {
        self.blocks
    }

    pub fn block(&self, v: usize) -> usize {
        self.blocks[v]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_weights(&self) -> &[f64] {
        &self.block_weights
    }

    /// The balance limit `L_max` this partition was checked against.
    pub fn max_block_weight(&self) -> f64 {
        self.max_block_weight
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// Heaviest block relative to `ceil(c(V) / k)`.
    pub fn imbalance(&self) -> f64 {
        let total: f64 = self.block_weights.iter().sum();
        let target = (total / self.k as f64).ceil();
        if target == 0.0 {
            return 1.0;
        }
        self.block_weights.iter().cloned().fold(0.0, f64::max) / target
    }

    /// One block ID per line.
    pub fn write(&self, out: impl Write) -> std::io::Result<()> {
        write_blocks(&self.blocks, out)
    }
}

pub fn write_blocks(blocks: &[usize], out: impl Write) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    for b in blocks {
        writeln!(out, "{b}")?;
    }
    out.flush()
}

/// Reads one block ID per line; blank lines are skipped.
pub fn read_blocks(reader: impl BufRead) -> Result<Vec<usize>, PartitionError> {
    let mut blocks = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let b = text.parse().map_err(|_| PartitionError::Parse {
            line: i + 1,
            message: format!("expected a block ID, found {text:?}"),
        })?;
        blocks.push(b);
    }
    Ok(blocks)
}

/// Contracted split graph: one node per dominant edge.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub graph: Graph,
    /// Split node -> contracted node.
    pub mapping: Vec<usize>,
}

/// Merges the endpoints of every dominant edge into one node of weight 2.
/// Contracted node IDs follow the canonical order of the input edges, so
/// contracted node `i` is edge `i` of the input graph.
pub fn contract_dominant_edges(sg: &SplitGraph) -> Result<Contraction, PartitionError> {
    let n = sg.node_count();
    let mut partner = vec![usize::MAX; n];
    for (s, slot) in partner.iter_mut().enumerate() {
        let mut dominant = sg.neighbors(s).filter(|&(_, k)| k == EdgeKind::Dominant);
        match (dominant.next(), dominant.next()) {
            (Some((t, _)), None) if t < n => *slot = t,
            _ => {
                let count = sg.neighbors(s).filter(|&(_, k)| k == EdgeKind::Dominant).count();
                return Err(PartitionError::Contraction { split: s, count });
            }
        }
    }

    let mut pairs: Vec<((usize, usize), usize)> = (0..n)
        .filter(|&s| s < partner[s])
        .map(|s| (sg.dominant_origin(s), s))
        .collect();
    pairs.sort_unstable();
    let mut mapping = vec![usize::MAX; n];
    for (id, &(_, s)) in pairs.iter().enumerate() {
        mapping[s] = id;
        mapping[partner[s]] = id;
    }
    if let Some(s) = (0..n).find(|&s| mapping[s] == usize::MAX) {
        return Err(PartitionError::Contraction { split: s, count: 1 });
    }

    let c = pairs.len();
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); c];
    for s in 0..n {
        for (t, kind) in sg.neighbors(s) {
            if kind == EdgeKind::Auxiliary {
                let (a, b) = (mapping[s], mapping[t]);
                if a != b {
                    adjacency[a].push((b, 1.0));
                }
            }
        }
    }
    let mut offsets = Vec::with_capacity(c + 1);
    offsets.push(0);
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    for list in &mut adjacency {
        list.sort_unstable_by_key(|&(t, _)| t);
        let mut i = 0;
        while i < list.len() {
            let t = list[i].0;
            let mut w = 0.0;
            while i < list.len() && list[i].0 == t {
                w += list[i].1;
                i += 1;
            }
            targets.push(t);
            weights.push(w);
        }
        offsets.push(targets.len());
    }
    let graph = Graph::from_csr(offsets, targets, Some(weights), Some(vec![2.0; c]))
        .map_err(|e| PartitionError::InvalidConfig(format!("contracted graph: {e}")))?;
    Ok(Contraction { graph, mapping })
}

/// Splits the nodes `0..n` into `k` contiguous ranges by node-weight prefix
/// sums: a node goes to the block its weight midpoint falls into.
pub fn initial_partition(g: &Graph, cfg: &PartitionConfig) -> Result<NodePartition, PartitionError> {
    cfg.validate()?;
    let total = g.total_node_weight();
    let limit = block_weight_limit(total, cfg.k, cfg.epsilon);
    initial_partition_with_limit(g, cfg.k, limit)
}

fn initial_partition_with_limit(
    g: &Graph,
    k: usize,
    limit: f64,
) -> Result<NodePartition, PartitionError> {
    let total = g.total_node_weight();
    if total <= 0.0 {
        return Err(PartitionError::ZeroWeight);
    }
    let weights: Vec<f64> = (0..g.node_count()).map(|v| g.node_weight(v)).collect();
    if let Some((node, &weight)) = weights.iter().enumerate().find(|(_, &w)| !fits(w, limit)) {
        return Err(PartitionError::Infeasible { node, weight, limit });
    }
    let mut prefix = 0.0;
    let blocks = weights
        .iter()
        .map(|&w| {
            let mid = prefix + w / 2.0;
            prefix += w;
            ((mid * k as f64 / total) as usize).min(k - 1)
        })
        .collect();
    NodePartition::with_limit(&weights, blocks, k, limit)
}

/// Sum of the weights of edges whose endpoints lie in different blocks.
pub fn edge_cut(g: &Graph, part: &NodePartition) -> f64 {
    edge_cut_of(g, part.blocks())
}

pub fn edge_cut_of(g: &Graph, blocks: &[usize]) -> f64 {
    let mut cut = 0.0;
    for u in 0..g.node_count() {
        for e in g.edge_range(u) {
            let v = g.edge_target(e);
            if u < v && blocks[u] != blocks[v] {
                cut += g.edge_weight(e);
            }
        }
    }
    cut
}

/// Size-constrained label propagation. See [`label_propagation_traced`].
pub fn label_propagation_refine(
    g: &Graph,
    part: &NodePartition,
    cfg: &PartitionConfig,
) -> NodePartition {
    label_propagation_traced(g, part, cfg).0
}

/// Runs up to `cfg.lp_rounds` rounds. Each round visits the nodes (in ID
/// order or in a shuffle seeded by `cfg.seed` and the round number) and
/// moves a node to the block it is most strongly connected to when that
/// strictly increases its internal weight and the target block stays within
/// the partition's limit. Ties go to the lower block ID. Stops early after a
/// round without moves. Also returns the edge cut before the first round and
/// after every round.
pub fn label_propagation_traced(
    g: &Graph,
    part: &NodePartition,
    cfg: &PartitionConfig,
) -> (NodePartition, Vec<f64>) {
    let n = g.node_count();
    let k = part.k();
    let limit = part.max_block_weight();
    let mut lp = Propagator::new(g, part.blocks().to_vec(), k, limit, false);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cut = edge_cut_of(g, &lp.blocks);
    let mut trace = vec![cut];

    if k > 1 {
        for round in 0..cfg.lp_rounds {
            if cfg.node_order == NodeOrder::RandomShuffle {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(round as u64));
                order.sort_unstable();
                order.shuffle(&mut rng);
            }
            let (moves, gain) = lp.round(&order, None);
            cut -= gain;
            trace.push(cut);
            if moves == 0 {
                break;
            }
        }
    }
    let weights: Vec<f64> = (0..n).map(|v| g.node_weight(v)).collect();
    let refined = NodePartition::with_limit(&weights, lp.blocks, k, limit)
        .expect("refinement keeps blocks in range");
    (refined, trace)
}

/// Size-constrained label propagation state over arbitrary labels (blocks
/// or clusters).
pub(crate) struct Propagator<'a> {
    g: &'a Graph,
    pub(crate) blocks: Vec<usize>,
    pub(crate) loads: Vec<f64>,
    limit: f64,
    // also move on zero gain when the target ends up lighter than the source
    neutral: bool,
    conn: Vec<f64>,
    touched: Vec<usize>,
}

impl<'a> Propagator<'a> {
    pub(crate) fn new(g: &'a Graph, blocks: Vec<usize>, labels: usize, limit: f64, neutral: bool) -> Self {
        let mut loads = vec![0.0; labels];
        for (v, &b) in blocks.iter().enumerate() {
            loads[b] += g.node_weight(v);
        }
        Propagator {
            g,
            blocks,
            loads,
            limit,
            neutral,
            conn: vec![0.0; labels],
            touched: Vec::new(),
        }
    }

    /// One pass over `order`. With `restrict`, only neighbors `t` with
    /// `restrict[t] == restrict[v]` count. Returns the number of moves and
    /// the total weight they took out of the cut.
    pub(crate) fn round(&mut self, order: &[usize], restrict: Option<&[usize]>) -> (usize, f64) {
        let g = self.g;
        let mut moves = 0;
        let mut gain = 0.0;
        for &v in order {
            let current = self.blocks[v];
            for e in g.edge_range(v) {
                let t = g.edge_target(e);
                if restrict.is_some_and(|r| r[t] != r[v]) {
                    continue;
                }
                let b = self.blocks[t];
                if self.conn[b] == 0.0 {
                    self.touched.push(b);
                }
                self.conn[b] += g.edge_weight(e);
            }
            let own = self.conn[current];
            let weight = g.node_weight(v);
            let mut best: Option<usize> = None;
            for &b in &self.touched {
                if b == current || !fits(self.loads[b] + weight, self.limit) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(c) => {
                        let (wb, wc) = (self.conn[b], self.conn[c]);
                        if self.neutral {
                            wb > wc
                                || (wb == wc && (self.loads[b], b) < (self.loads[c], c))
                        } else {
                            wb > wc || (wb == wc && b < c)
                        }
                    }
                };
                if better {
                    best = Some(b);
                }
            }
            if let Some(b) = best {
                let w = self.conn[b];
                let lighter = self.loads[b] + weight < self.loads[current];
                if w > own || (self.neutral && w == own && lighter) {
                    self.blocks[v] = b;
                    self.loads[current] -= weight;
                    self.loads[b] += weight;
                    gain += w - own;
                    moves += 1;
                }
            }
            for &b in &self.touched {
                self.conn[b] = 0.0;
            }
            self.touched.clear();
        }
        (moves, gain)
    }
}

/// A split-node partition together with the contracted graph it came from.
#[derive(Clone, Debug)]
pub struct SplitPartition {
    pub split: NodePartition,
    pub contracted: NodePartition,
    pub contraction: Contraction,
    pub lp_trace: Vec<f64>,
}

/// Partitions the split nodes without cutting any dominant edge: contracts
/// dominant edges, partitions the contracted graph and lets both endpoints
/// of a dominant edge inherit the block of their contracted node.
///
/// Split nodes have unit weight, so a block of split nodes weighs twice the
/// number of input edges it induces. The block limit is
/// `2 (1 + epsilon) ceil(m / k)`, the edge balance bound counted in split
/// nodes.
pub fn partition_split_graph(
    sg: &SplitGraph,
    cfg: &PartitionConfig,
) -> Result<NodePartition, PartitionError> {
    Ok(partition_split_graph_detailed(sg, cfg)?.split)
}

pub fn partition_split_graph_detailed(
    sg: &SplitGraph,
    cfg: &PartitionConfig,
) -> Result<SplitPartition, PartitionError> {
    cfg.validate()?;
    let contraction = contract_dominant_edges(sg)?;
    let m = contraction.graph.node_count();
    let limit = 2.0 * block_weight_limit(m as f64, cfg.k, cfg.epsilon);
    let (contracted, lp_trace) = if m == 0 {
        let empty = NodePartition::with_limit(&[], Vec::new(), cfg.k, limit)?;
        (empty, vec![0.0])
    } else if cfg.multilevel {
        multilevel::multilevel_with_limit(&contraction.graph, cfg, limit)?
    } else {
        let initial = initial_partition_with_limit(&contraction.graph, cfg.k, limit)?;
        label_propagation_traced(&contraction.graph, &initial, cfg)
    };
    let blocks: Vec<usize> = contraction
        .mapping
        .iter()
        .map(|&c| contracted.block(c))
        .collect();
    let split = NodePartition::with_limit(&vec![1.0; blocks.len()], blocks, cfg.k, limit)?;
    Ok(SplitPartition {
        split,
        contracted,
        contraction,
        lp_trace,
    })
}
