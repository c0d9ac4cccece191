//! Contiguous node ranges per PE and the per-PE subgraph with ghost nodes.

use std::collections::HashMap;
use std::ops::Range;

use super::{Graph, GraphError};

/// Assignment of contiguous node ranges to `p` PEs. PE `q` owns the
/// half-open global range `boundaries[q]..boundaries[q + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    boundaries: Vec<usize>,
    edge_counts: Vec<usize>,
}

impl Distribution {
    /// Builds a distribution from explicit range boundaries
    /// `0 = b_0 <= b_1 <= ... <= b_p = n`.
    pub fn from_boundaries(g: &Graph, boundaries: Vec<usize>) -> Result<Distribution, GraphError> {
        let n = g.node_count();
        if boundaries.len() < 2
            || boundaries[0] != 0
            || *boundaries.last().unwrap() != n
            || boundaries.windows(2).any(|w| w[0] > w[1])
        {
            return Err(GraphError::InvalidParameter(format!(
                "boundaries {boundaries:?} do not partition 0..{n}"
            )));
        }
        let edge_counts = boundaries
            .windows(2)
            .map(|w| g.offsets()[w[1]] - g.offsets()[w[0]])
            .collect();
        Ok(Distribution {
            boundaries,
            edge_counts,
        })
    }

    pub fn pe_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn node_count(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    pub fn range(&self, pe: usize) -> Range<usize> {
        self.boundaries[pe]..self.boundaries[pe + 1]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.boundaries.windows(2).map(|w| w[0]..w[1])
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Directed edge count `m_p` of every PE.
    pub fn edge_counts(&self) -> &[usize] {
        &self.edge_counts
    }

    pub fn max_edge_count(&self) -> usize {
        self.edge_counts.iter().copied().max().unwrap_or(0)
    }

    /// Set when at least one PE received no nodes.
    pub fn has_empty_pes(&self) -> bool {
        self.boundaries.windows(2).any(|w| w[0] == w[1])
    }

    /// PE owning global node `v`.
    pub fn owner(&self, v: usize) -> usize {
        debug_assert!(v < self.node_count());
        self.boundaries.partition_point(|&b| b <= v) - 1
    }
}

/// Splits the nodes of `g` into `p` contiguous ranges holding roughly
/// `2m / p` directed edges each.
///
/// The q-th cut targets the running directed-edge count `⌈2m·q/p⌉`. A node
/// whose degree straddles the target goes to the side that lands closer to
/// it, and to the next PE on a tie. While there are at least as many nodes as
/// PEs every PE keeps at least one node.
pub fn distribute_edge_balanced(g: &Graph, p: usize) -> Result<Distribution, GraphError> {
    if p < 1 {
        return Err(GraphError::InvalidParameter("PE count must be at least 1".into()));
    }
    let n = g.node_count();
    let prefix = g.offsets();
    let total = g.directed_edge_count();

    let mut boundaries = Vec::with_capacity(p + 1);
    boundaries.push(0);
    for q in 1..p {
        let target = (total * q).div_ceil(p);
        // first i with prefix[i] >= target
        let i = prefix.partition_point(|&x| x < target).min(n);
        let mut cut = if i == 0 || prefix[i] == target {
            i
        } else {
            let before = target - prefix[i - 1];
            let after = prefix[i] - target;
            if after < before {
                i
            } else {
                i - 1
            }
        };
        let previous = *boundaries.last().unwrap();
        if n >= p {
            cut = cut.clamp(previous + 1, n - (p - q));
        } else {
            cut = cut.max(previous);
        }
        boundaries.push(cut);
    }
    boundaries.push(n);
    Distribution::from_boundaries(g, boundaries)
}

/// The subgraph stored on one PE: the local nodes of its range first
/// (local ID = global ID − a), then the ghost nodes in order of first
/// appearance. Directed edges keep the adjacency order of the global graph
/// and their targets are local IDs. Ghost nodes store no adjacency.
#[derive(Clone, Debug)]
pub struct DistributedGraph {
    pe: usize,
    pe_count: usize,
    range: Range<usize>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    edge_weights: Option<Vec<f64>>,
    ghost_global_ids: Vec<usize>,
    ghost_lookup: HashMap<usize, usize>,
    ghost_pe: Vec<usize>,
}

impl DistributedGraph {
    pub fn pe(&self) -> usize {
        self.pe
    }

    pub fn pe_count(&self) -> usize {
        self.pe_count
    }

    /// Global range `a..b+1` of local nodes.
    pub fn range(&self) -> Range<usize> {
        self.range.clone()
    }

    /// Number of local nodes `ℓ_p`.
    pub fn local_count(&self) -> usize {
        self.range.len()
    }

    pub fn ghost_count(&self) -> usize {
        self.ghost_global_ids.len()
    }

    /// `n_p = ℓ_p + ghosts`.
    pub fn total_count(&self) -> usize {
        self.local_count() + self.ghost_count()
    }

    /// Number of local directed edges `m_p`.
    pub fn local_edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Local IDs of the directed edges leaving local node `u`.
    pub fn edge_range(&self, u: usize) -> Range<usize> {
        self.offsets[u]..self.offsets[u + 1]
    }

    /// Local ID of the target of local edge `e`.
    pub fn edge_target(&self, e: usize) -> usize {
        self.targets[e]
    }

    pub fn edge_weight(&self, e: usize) -> f64 {
        self.edge_weights.as_ref().map_or(1.0, |w| w[e])
    }

    pub fn is_local(&self, local: usize) -> bool {
        local < self.local_count()
    }

    pub fn global_id(&self, local: usize) -> usize {
        if self.is_local(local) {
            self.range.start + local
        } else {
            self.ghost_global_ids[local - self.local_count()]
        }
    }

    pub fn local_id(&self, global: usize) -> Option<usize> {
        if self.range.contains(&global) {
            Some(global - self.range.start)
        } else {
            self.ghost_lookup.get(&global).copied()
        }
    }

    /// Owning PE of a local or ghost node, in O(1).
    pub fn owner(&self, local: usize) -> usize {
        if self.is_local(local) {
            self.pe
        } else {
            self.ghost_pe[local - self.local_count()]
        }
    }

    pub fn ghost_global_ids(&self) -> &[usize] {
        &self.ghost_global_ids
    }

    pub fn ghost_pes(&self) -> &[usize] {
        &self.ghost_pe
    }

    /// Local nodes adjacent to at least one ghost node.
    pub fn interface_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.local_count()).filter(|&u| {
            self.edge_range(u)
                .any(|e| !self.is_local(self.targets[e]))
        })
    }

    /// Directed edges as global `(source, target)` pairs in storage order.
    pub fn global_edges(&self) -> Vec<(usize, usize)> {
        (0..self.local_count())
            .flat_map(|u| {
                self.edge_range(u)
                    .map(move |e| (self.global_id(u), self.global_id(self.targets[e])))
            })
            .collect()
    }
}

/// Extracts the subgraph of PE `pe` under `dist`.
pub fn build_subgraph(
    g: &Graph,
    dist: &Distribution,
    pe: usize,
) -> Result<DistributedGraph, GraphError> {
    if pe >= dist.pe_count() {
        return Err(GraphError::InvalidParameter(format!(
            "PE {pe} out of range for {} PEs",
            dist.pe_count()
        )));
    }
    if dist.node_count() != g.node_count() {
        return Err(GraphError::InvalidParameter(
            "distribution does not match graph".into(),
        ));
    }
    let range = dist.range(pe);
    let local_count = range.len();
    let edge_span = g.first_edge(range.start)..g.first_edge(range.end);

    let mut ghost_global_ids = Vec::new();
    let mut ghost_lookup = HashMap::new();
    let mut ghost_pe = Vec::new();
    let mut targets = Vec::with_capacity(edge_span.len());
    for e in edge_span.clone() {
        let v = g.edge_target(e);
        let local = if range.contains(&v) {
            v - range.start
        } else {
            *ghost_lookup.entry(v).or_insert_with(|| {
                ghost_global_ids.push(v);
                ghost_pe.push(dist.owner(v));
                local_count + ghost_global_ids.len() - 1
            })
        };
        targets.push(local);
    }

    let base = edge_span.start;
    let mut offsets: Vec<usize> = range.clone().map(|v| g.first_edge(v) - base).collect();
    offsets.push(targets.len());
    offsets.resize(local_count + ghost_global_ids.len() + 1, targets.len());

    let edge_weights = g
        .has_edge_weights()
        .then(|| edge_span.clone().map(|e| g.edge_weight(e)).collect());

    Ok(DistributedGraph {
        pe,
        pe_count: dist.pe_count(),
        range,
        offsets,
        targets,
        edge_weights,
        ghost_global_ids,
        ghost_lookup,
        ghost_pe,
    })
}
