//! The split-and-connect transformation.
//!
//! Every node `v` of the input graph becomes a set `S_v` of `d(v)` split
//! nodes, one per directed edge leaving `v`; split node IDs coincide with
//! directed edge IDs of the input. The split nodes of one set are joined into
//! a cycle by auxiliary edges (a single edge when `d(v) = 2`), and every
//! undirected input edge `{u, v}` becomes one dominant edge between a split
//! node of `S_u` and one of `S_v`.

mod distributed;
mod sequential;
mod validate;

pub use distributed::{
    build_split_graph_distributed, DistributedSplit, DspacStats, FirstEdgeEntry, FirstEdgeTable,
    SplitSubgraph,
};
pub use sequential::build_split_graph_sequential;
pub use validate::{validate_split_graph, ValidationReport, Violation};

use std::io::{BufWriter, Write};

use serde::Serialize;
use thiserror::Error;

/// Weight written for dominant edges when a split graph is exported. Inside
/// the crate dominant edges carry no numeric weight at all.
pub const DOMINANT_EXPORT_WEIGHT: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EdgeKind {
    /// Weight-one edge inside a split set.
    Auxiliary,
    /// Infinite-weight edge standing for an input edge; never cut.
    Dominant,
}

impl EdgeKind {
    /// Finite edge weight, `None` for the infinite dominant weight.
    pub fn weight(self) -> Option<u64> {
        match self {
            EdgeKind::Auxiliary => Some(1),
            EdgeKind::Dominant => None,
        }
    }
}

/// Which input node a split node belongs to and its index within `S_v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SplitOrigin {
    pub node: usize,
    pub position: usize,
}

#[derive(Debug, Error)]
pub enum SpacError {
    #[error("PE {pe}: adjacency of node {node} is not sorted by global ID")]
    UnsortedAdjacency { pe: usize, node: usize },
    #[error("PE {pe}: no first-edge entry for node {node}")]
    MissingFirstEdge { pe: usize, node: usize },
    #[error("PE {pe}: received a first-edge entry for node {node}, which is not a ghost here")]
    UnexpectedFirstEdge { pe: usize, node: usize },
    #[error("runtime has {runtime} PEs but {parts} subgraphs were given")]
    PeCountMismatch { runtime: usize, parts: usize },
    #[error("runtime failure: {0}")]
    Runtime(String),
}

/// A split graph stored as directed adjacency over split nodes; each
/// undirected edge appears once in each direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    kinds: Vec<EdgeKind>,
    origin: Vec<SplitOrigin>,
    dominant_origin: Vec<(usize, usize)>,
}

impl SplitGraph {
    /// Assembles a split graph from per-node origin data and a list of
    /// directed edges. Edges are grouped by source, keeping their relative
    /// order. No structural check is made; see [`validate_split_graph`].
    pub fn from_parts(
        origin: Vec<SplitOrigin>,
        dominant_origin: Vec<(usize, usize)>,
        edges: &[(usize, usize, EdgeKind)],
    ) -> SplitGraph {
        let n = origin.len();
        assert_eq!(dominant_origin.len(), n, "one dominant origin per split node");
        let mut offsets = vec![0usize; n + 1];
        for &(s, _, _) in edges {
            offsets[s + 1] += 1;
        }
        for s in 0..n {
            offsets[s + 1] += offsets[s];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0; edges.len()];
        let mut kinds = vec![EdgeKind::Auxiliary; edges.len()];
        for &(s, t, kind) in edges {
            targets[cursor[s]] = t;
            kinds[cursor[s]] = kind;
            cursor[s] += 1;
        }
        SplitGraph {
            offsets,
            targets,
            kinds,
            origin,
            dominant_origin,
        }
    }

    pub(crate) fn from_sorted_parts(
        offsets: Vec<usize>,
        targets: Vec<usize>,
        kinds: Vec<EdgeKind>,
        origin: Vec<SplitOrigin>,
        dominant_origin: Vec<(usize, usize)>,
    ) -> SplitGraph {
        SplitGraph {
            offsets,
            targets,
            kinds,
            origin,
            dominant_origin,
        }
    }

    /// Number of split nodes `n' = 2m`.
    pub fn node_count(&self) -> usize {
        self.origin.len()
    }

    pub fn directed_edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Undirected edge count of the given kind.
    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count() / 2
    }

    /// `(target, kind)` pairs of split node `s` in insertion order.
    pub fn neighbors(&self, s: usize) -> impl Iterator<Item = (usize, EdgeKind)> + '_ {
        let range = self.offsets[s]..self.offsets[s + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.kinds[range].iter().copied())
    }

    /// The other endpoint of the first dominant edge of `s`.
    pub fn dominant_partner(&self, s: usize) -> Option<usize> {
        self.neighbors(s)
            .find(|&(_, k)| k == EdgeKind::Dominant)
            .map(|(t, _)| t)
    }

    pub fn origin(&self, s: usize) -> SplitOrigin {
        self.origin[s]
    }

    pub fn origins(&self) -> &[SplitOrigin] {
        &self.origin
    }

    /// The input edge `(min, max)` whose dominant edge touches `s`.
    pub fn dominant_origin(&self, s: usize) -> (usize, usize) {
        self.dominant_origin[s]
    }

    pub fn dominant_origins(&self) -> &[(usize, usize)] {
        &self.dominant_origin
    }

    /// All directed edges in storage order.
    pub fn directed_edges(&self) -> Vec<(usize, usize, EdgeKind)> {
        (0..self.node_count())
            .flat_map(|s| self.neighbors(s).map(move |(t, k)| (s, t, k)))
            .collect()
    }

    /// All directed edges, sorted.
    pub fn sorted_edge_list(&self) -> Vec<(usize, usize, EdgeKind)> {
        let mut edges = self.directed_edges();
        edges.sort_unstable();
        edges
    }

    /// Writes the split graph in weighted METIS format. Dominant edges are
    /// written with [`DOMINANT_EXPORT_WEIGHT`], flagged in a header comment.
    pub fn write_metis(&self, out: impl Write) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(
            out,
            "% split graph; dominant edges carry weight {DOMINANT_EXPORT_WEIGHT} standing in for infinity"
        )?;
        writeln!(out, "{} {} 1", self.node_count(), self.directed_edge_count() / 2)?;
        for s in 0..self.node_count() {
            let line: Vec<String> = self
                .neighbors(s)
                .map(|(t, k)| format!("{} {}", t + 1, k.weight().unwrap_or(DOMINANT_EXPORT_WEIGHT)))
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()
    }
}

/// Cut auxiliary and dominant edges of a split-node block assignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SplitCut {
    pub auxiliary: usize,
    pub dominant: usize,
}

pub fn split_cut(sg: &SplitGraph, blocks: &[usize]) -> SplitCut {
    let mut cut = SplitCut::default();
    for s in 0..sg.node_count() {
        for (t, kind) in sg.neighbors(s) {
            if s < t && blocks[s] != blocks[t] {
                match kind {
                    EdgeKind::Auxiliary => cut.auxiliary += 1,
                    EdgeKind::Dominant => cut.dominant += 1,
                }
            }
        }
    }
    cut
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{read_metis, Graph};

    #[test]
    fn metis_export_round_trips_through_reader() {
        let k3 = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let sg = build_split_graph_sequential(&k3);
        let mut buf = Vec::new();
        sg.write_metis(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("% split graph"));
        let exported = read_metis(text.as_bytes()).unwrap();
        assert_eq!(exported.node_count(), 6);
        assert_eq!(exported.edge_count(), 6);
        let heavy = (0..exported.directed_edge_count())
            .filter(|&e| exported.edge_weight(e) == DOMINANT_EXPORT_WEIGHT as f64)
            .count();
        assert_eq!(heavy, 6);
    }

    #[test]
    fn split_cut_counts_each_edge_once() {
        let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let sg = build_split_graph_sequential(&p3);
        // split nodes: 0 = (0→1), 1 = (1→0), 2 = (1→2), 3 = (2→1)
        assert_eq!(split_cut(&sg, &[0, 0, 1, 1]), SplitCut { auxiliary: 1, dominant: 0 });
        assert_eq!(split_cut(&sg, &[0, 1, 1, 1]), SplitCut { auxiliary: 0, dominant: 1 });
        assert_eq!(split_cut(&sg, &[0; 4]), SplitCut::default());
    }
}
