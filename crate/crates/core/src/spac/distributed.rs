//! Distributed split-graph construction on the bulk-synchronous runtime.
//!
//! Phases per PE `p` owning the node range `a..b`:
//! 1. `m_global_p` = exclusive prefix sum of the local directed edge counts;
//!    local split node `e` gets the global ID `m_global_p + e`.
//! 2. One scan over the sorted adjacency records, for every local node `u`
//!    and every PE `p'` owning a neighbor of `u`, the global split ID of the
//!    first edge of `u` toward `p'`. Neighbors of one PE form a single run, so
//!    a new entry starts whenever the owner changes.
//! 3. Entries for `p' != p` travel in one batch per adjacent PE.
//! 4. Edge `e = (u, v)` receives the dominant edge to the current entry of
//!    `v` toward `p`, which is then advanced by one; auxiliary edges go to the
//!    split nodes `e_u + (i ± 1 mod d(u))`.

use std::convert::Infallible;

use serde::Serialize;

use super::{EdgeKind, SpacError, SplitGraph, SplitOrigin};
use crate::graph::DistributedGraph;
use crate::runtime::{prefix_sum_collective, CommStats, PeContext, Runtime, RuntimeError, Status};

/// One first-edge value: `node` is a global node ID, `first_split` the
/// global split ID of the first edge of `node` toward the receiving PE.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FirstEdgeEntry {
    pub node: usize,
    pub first_split: usize,
}

/// First-edge values computed by one PE, grouped by the PE they face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstEdgeTable {
    pe: usize,
    per_pe: Vec<Vec<FirstEdgeEntry>>,
    scanned_edges: usize,
}

impl FirstEdgeTable {
    /// Scans the adjacency of `dg` once. Fails if some adjacency list is not
    /// strictly increasing by global target ID.
    pub fn scan(dg: &DistributedGraph, split_offset: usize) -> Result<FirstEdgeTable, SpacError> {
        let mut per_pe: Vec<Vec<FirstEdgeEntry>> = vec![Vec::new(); dg.pe_count()];
        for u in 0..dg.local_count() {
            let node = dg.global_id(u);
            let mut current_pe = usize::MAX;
            let mut previous_target = None;
            for e in dg.edge_range(u) {
                let v = dg.edge_target(e);
                let global_v = dg.global_id(v);
                if previous_target.is_some_and(|prev| prev >= global_v) {
                    return Err(SpacError::UnsortedAdjacency { pe: dg.pe(), node });
                }
                previous_target = Some(global_v);
                let owner = dg.owner(v);
                if owner != current_pe {
                    current_pe = owner;
                    per_pe[owner].push(FirstEdgeEntry {
                        node,
                        first_split: split_offset + e,
                    });
                }
            }
        }
        Ok(FirstEdgeTable {
            pe: dg.pe(),
            per_pe,
            scanned_edges: dg.local_edge_count(),
        })
    }

    /// Entries facing PE `target`, in scan order.
    pub fn entries_for(&self, target: usize) -> &[FirstEdgeEntry] {
        &self.per_pe[target]
    }

    /// Entries that leave this PE.
    pub fn outgoing_count(&self) -> usize {
        self.per_pe
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != self.pe)
            .map(|(_, v)| v.len())
            .sum()
    }

    /// PEs that receive a batch.
    pub fn adjacent_pes(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_pe
            .iter()
            .enumerate()
            .filter(move |&(q, v)| q != self.pe && !v.is_empty())
            .map(|(q, _)| q)
    }
}

/// The split nodes and directed split edges produced by one PE.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSubgraph {
    pub pe: usize,
    /// Global ID of the first local split node (`m_global_p`).
    pub split_offset: usize,
    pub origin: Vec<SplitOrigin>,
    pub dominant_origin: Vec<(usize, usize)>,
    /// Directed edges with global endpoint IDs, sources local to this PE.
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

/// Counters of a distributed construction. `work` counts elementary steps:
/// split nodes created, adjacency entries scanned, first-edge entries sent and
/// received, and split edges inserted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DspacStats {
    pub comm: CommStats,
    pub work_per_pe: Vec<u64>,
    /// First-edge entries sent by each PE.
    pub entries_sent: Vec<u64>,
}

impl DspacStats {
    pub fn total_work(&self) -> u64 {
        self.work_per_pe.iter().sum()
    }
}

#[derive(Debug)]
pub struct DistributedSplit {
    pub parts: Vec<SplitSubgraph>,
    pub stats: DspacStats,
}

impl DistributedSplit {
    /// Gathers the per-PE pieces into one split graph with global IDs.
    pub fn gather(&self) -> SplitGraph {
        let origin: Vec<SplitOrigin> = self.parts.iter().flat_map(|p| p.origin.iter().copied()).collect();
        let dominant_origin: Vec<(usize, usize)> = self
            .parts
            .iter()
            .flat_map(|p| p.dominant_origin.iter().copied())
            .collect();
        let edges: Vec<(usize, usize, EdgeKind)> =
            self.parts.iter().flat_map(|p| p.edges.iter().copied()).collect();
        SplitGraph::from_parts(origin, dominant_origin, &edges)
    }
}

struct PeState<'a> {
    dg: &'a DistributedGraph,
    split_offset: usize,
    /// Current first-edge value toward this PE of every local node.
    local_first: Vec<usize>,
    /// Current first-edge value toward this PE of every ghost node.
    ghost_first: Vec<usize>,
    work: u64,
    entries_sent: u64,
    output: Option<SplitSubgraph>,
}

impl PeState<'_> {
    fn compute_and_send(&mut self, ctx: &mut PeContext<FirstEdgeEntry>) -> Result<(), SpacError> {
        let dg = self.dg;
        let table = FirstEdgeTable::scan(dg, self.split_offset)?;
        self.work += (dg.local_edge_count() + table.scanned_edges) as u64;
        for entry in table.entries_for(dg.pe()) {
            self.local_first[entry.node - dg.range().start] = entry.first_split;
        }
        for target in table.adjacent_pes().collect::<Vec<_>>() {
            let batch = table.entries_for(target);
            self.entries_sent += batch.len() as u64;
            self.work += batch.len() as u64;
            ctx.send_batch(target, batch.iter().copied());
        }
        Ok(())
    }

    fn receive_and_insert(&mut self, ctx: &PeContext<FirstEdgeEntry>) -> Result<(), SpacError> {
        let dg = self.dg;
        let pe = dg.pe();
        for (_, batch) in ctx.batches() {
            for entry in batch {
                match dg.local_id(entry.node) {
                    Some(local) if !dg.is_local(local) => {
                        self.ghost_first[local - dg.local_count()] = entry.first_split;
                    }
                    _ => return Err(SpacError::UnexpectedFirstEdge { pe, node: entry.node }),
                }
                self.work += 1;
            }
        }

        let mut edges = Vec::with_capacity(3 * dg.local_edge_count());
        let mut origin = Vec::with_capacity(dg.local_edge_count());
        let mut dominant_origin = Vec::with_capacity(dg.local_edge_count());
        for u in 0..dg.local_count() {
            let first = dg.edge_range(u).start;
            let degree = dg.degree(u);
            let global_u = dg.global_id(u);
            for e in dg.edge_range(u) {
                let v = dg.edge_target(e);
                let global_v = dg.global_id(v);
                let split = e + self.split_offset;

                let slot = if dg.is_local(v) {
                    &mut self.local_first[v]
                } else {
                    &mut self.ghost_first[v - dg.local_count()]
                };
                if *slot == usize::MAX {
                    return Err(SpacError::MissingFirstEdge { pe, node: global_v });
                }
                edges.push((split, *slot, EdgeKind::Dominant));
                *slot += 1;

                if degree > 1 {
                    let i = e - first;
                    let next = (i + 1) % degree;
                    let prev = (i + degree - 1) % degree;
                    edges.push((split, first + self.split_offset + next, EdgeKind::Auxiliary));
                    if prev != next {
                        edges.push((split, first + self.split_offset + prev, EdgeKind::Auxiliary));
                    }
                }
                origin.push(SplitOrigin {
                    node: global_u,
                    position: e - first,
                });
                dominant_origin.push((global_u.min(global_v), global_u.max(global_v)));
            }
        }
        self.work += (dg.local_edge_count() + edges.len()) as u64;
        self.output = Some(SplitSubgraph {
            pe,
            split_offset: self.split_offset,
            origin,
            dominant_origin,
            edges,
        });
        Ok(())
    }
}

/// Runs the distributed construction with one subgraph per runtime PE.
pub fn build_split_graph_distributed(
    parts: &[DistributedGraph],
    runtime: &Runtime,
) -> Result<DistributedSplit, SpacError> {
    if parts.len() != runtime.pe_count() {
        return Err(SpacError::PeCountMismatch {
            runtime: runtime.pe_count(),
            parts: parts.len(),
        });
    }
    let edge_counts: Vec<u64> = parts.iter().map(|dg| dg.local_edge_count() as u64).collect();
    let scan = prefix_sum_collective(runtime, &edge_counts)
        .map_err(|e: RuntimeError<Infallible>| SpacError::Runtime(e.to_string()))?;

    let states: Vec<PeState> = parts
        .iter()
        .zip(&scan.values)
        .map(|(dg, &offset)| PeState {
            dg,
            split_offset: offset as usize,
            local_first: vec![usize::MAX; dg.local_count()],
            ghost_first: vec![usize::MAX; dg.ghost_count()],
            work: dg.local_edge_count() as u64,
            entries_sent: 0,
            output: None,
        })
        .collect();

    let run = runtime
        .run(states, 4, |state: &mut PeState, ctx: &mut PeContext<FirstEdgeEntry>| {
            match ctx.superstep() {
                0 => {
                    state.compute_and_send(ctx)?;
                    Ok(Status::Continue)
                }
                1 => {
                    state.receive_and_insert(ctx)?;
                    Ok(Status::Done)
                }
                _ => Ok(Status::Done),
            }
        })
        .map_err(|e| match e {
            RuntimeError::PeFailed { source, .. } => source,
            other => SpacError::Runtime(other.to_string()),
        })?;

    let mut comm = scan.stats;
    comm.absorb(&run.stats);
    let work_per_pe = run.states.iter().map(|s| s.work).collect();
    let entries_sent = run.states.iter().map(|s| s.entries_sent).collect();
    let parts = run
        .states
        .into_iter()
        .map(|s| s.output.expect("every PE finishes the insertion phase"))
        .collect();
    Ok(DistributedSplit {
        parts,
        stats: DspacStats {
            comm,
            work_per_pe,
            entries_sent,
        },
    })
}
