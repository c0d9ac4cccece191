//! Multilevel label propagation. Size-constrained label propagation first
//! clusters the graph level by level, the coarsest graph is split into
//! contiguous blocks, and label propagation refines the partition on the way
//! back up. Later cycles coarsen only within blocks of the best partition
//! so far, so they start from it and can only keep or improve its cut.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    block_weight_limit, edge_cut_of, fits, NodeOrder, NodePartition, PartitionConfig,
    PartitionError, Propagator,
};
use crate::graph::Graph;

const COARSEST_NODES_PER_BLOCK: usize = 30;
const CLUSTER_ROUNDS: usize = 3;
const MIN_SHRINK: f64 = 0.95;

/// Multilevel partition of `g` under the limit `(1 + epsilon) ceil(c(V) / k)`.
/// Returns the partition and the edge cut after each cycle.
pub fn multilevel_partition(
    g: &Graph,
    cfg: &PartitionConfig,
) -> Result<(NodePartition, Vec<f64>), PartitionError> {
    cfg.validate()?;
    let limit = block_weight_limit(g.total_node_weight(), cfg.k, cfg.epsilon);
    multilevel_with_limit(g, cfg, limit)
}

pub(crate) fn multilevel_with_limit(
    g: &Graph,
    cfg: &PartitionConfig,
    limit: f64,
) -> Result<(NodePartition, Vec<f64>), PartitionError> {
    let k = cfg.k;
    let weights: Vec<f64> = (0..g.node_count()).map(|v| g.node_weight(v)).collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(PartitionError::ZeroWeight);
    }
    if let Some((node, &weight)) = weights.iter().enumerate().find(|(_, &w)| !fits(w, limit)) {
        return Err(PartitionError::Infeasible { node, weight, limit });
    }
    if k == 1 {
        let part = NodePartition::with_limit(&weights, vec![0; g.node_count()], 1, limit)?;
        return Ok((part, vec![0.0]));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(bool, f64, Vec<usize>)> = None;
    let mut trace = Vec::new();
    for _ in 0..cfg.cycles.max(1) {
        let restrict = best.as_ref().map(|b| b.2.as_slice());
        let levels = coarsen(g, restrict, cfg, limit, &mut rng);
        let coarsest = levels.last().map_or(g, |l| &l.graph);
        let mut blocks = match restrict {
            Some(fine) => {
                let mut blocks = fine.to_vec();
                for level in &levels {
                    let mut coarse = vec![0; level.graph.node_count()];
                    for (v, &c) in level.map.iter().enumerate() {
                        coarse[c] = blocks[v];
                    }
                    blocks = coarse;
                }
                blocks
            }
            None => initial(coarsest, cfg, limit, &mut rng),
        };
        refine(coarsest, &mut blocks, cfg, limit, &mut rng);
        for i in (0..levels.len()).rev() {
            let finer = if i == 0 { g } else { &levels[i - 1].graph };
            blocks = levels[i].map.iter().map(|&c| blocks[c]).collect();
            refine(finer, &mut blocks, cfg, limit, &mut rng);
        }
        let feasible = rebalance(g, &mut blocks, k, limit);
        let cut = edge_cut_of(g, &blocks);
        let better = match &best {
            None => true,
            Some((f, c, _)) => (feasible, -cut) > (*f, -*c),
        };
        if better {
            best = Some((feasible, cut, blocks));
        }
        trace.push(best.as_ref().unwrap().1);
    }
    let blocks = best.expect("at least one cycle").2;
    Ok((NodePartition::with_limit(&weights, blocks, k, limit)?, trace))
}

struct Level {
    graph: Graph,
    // node of the next finer graph -> node of `graph`
    map: Vec<usize>,
}

fn coarsen(
    g: &Graph,
    restrict: Option<&[usize]>,
    cfg: &PartitionConfig,
    limit: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Level> {
    let threshold = COARSEST_NODES_PER_BLOCK * cfg.k;
    let heaviest = (0..g.node_count()).map(|v| g.node_weight(v)).fold(0.0, f64::max);
    let bound = (limit / cfg.cluster_factor).max(2.0 * heaviest).min(limit);
    let mut levels: Vec<Level> = Vec::new();
    let mut restrict = restrict.map(|r| r.to_vec());
    loop {
        let current = levels.last().map_or(g, |l| &l.graph);
        let n = current.node_count();
        if n <= threshold {
            break;
        }
        let mut clusters = Propagator::new(current, (0..n).collect(), n, bound, false);
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..CLUSTER_ROUNDS {
            order.shuffle(rng);
            if clusters.round(&order, restrict.as_deref()).0 == 0 {
                break;
            }
        }
        let (coarse, map) = contract_clusters(current, &clusters.blocks);
        if coarse.node_count() as f64 > MIN_SHRINK * n as f64 {
            break;
        }
        if let Some(r) = &restrict {
            let mut projected = vec![0; coarse.node_count()];
            for (v, &c) in map.iter().enumerate() {
                projected[c] = r[v];
            }
            restrict = Some(projected);
        }
        levels.push(Level { graph: coarse, map });
    }
    levels
}

/// Merges every cluster into one node; cluster IDs are renumbered in order
/// of their first node.
fn contract_clusters(g: &Graph, labels: &[usize]) -> (Graph, Vec<usize>) {
    let n = g.node_count();
    let mut rename = vec![usize::MAX; n];
    let mut map = Vec::with_capacity(n);
    let mut next = 0;
    for &l in labels {
        if rename[l] == usize::MAX {
            rename[l] = next;
            next += 1;
        }
        map.push(rename[l]);
    }
    let mut weights = vec![0.0; next];
    for v in 0..n {
        weights[map[v]] += g.node_weight(v);
    }
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for u in 0..n {
        for e in g.edge_range(u) {
            let (a, b) = (map[u], map[g.edge_target(e)]);
            if a != b {
                edges.push((a, b, g.edge_weight(e)));
            }
        }
    }
    edges.sort_unstable_by_key(|&(a, b, _)| (a, b));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
    for (a, b, w) in edges {
        match merged.last_mut() {
            Some(last) if (last.0, last.1) == (a, b) => last.2 += w,
            _ => merged.push((a, b, w)),
        }
    }
    let mut offsets = vec![0; next + 1];
    for &(a, _, _) in &merged {
        offsets[a + 1] += 1;
    }
    for a in 0..next {
        offsets[a + 1] += offsets[a];
    }
    let targets = merged.iter().map(|e| e.1).collect();
    let edge_weights = merged.iter().map(|e| e.2).collect();
    let coarse = Graph::from_csr(offsets, targets, Some(edge_weights), Some(weights))
        .expect("contracting a valid graph yields a valid graph");
    (coarse, map)
}

/// Best of several contiguous splits: node ID order first, then BFS orders
/// from random start nodes, each refined by label propagation.
fn initial(g: &Graph, cfg: &PartitionConfig, limit: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.node_count();
    let mut best: Option<(bool, f64, Vec<usize>)> = None;
    for attempt in 0..cfg.initial_tries.max(1) {
        let order: Vec<usize> = if attempt == 0 || n == 0 {
            (0..n).collect()
        } else {
            bfs_order(g, rng.gen_range(0..n))
        };
        let mut blocks = contiguous(g, &order, cfg.k);
        refine(g, &mut blocks, cfg, limit, rng);
        let feasible = loads(g, &blocks, cfg.k).iter().all(|&l| fits(l, limit));
        let cut = edge_cut_of(g, &blocks);
        if best.as_ref().is_none_or(|(f, c, _)| (feasible, -cut) > (*f, -*c)) {
            best = Some((feasible, cut, blocks));
        }
    }
    best.expect("at least one attempt").2
}

/// Node `order[i]` goes to the block its weight midpoint falls into.
pub(crate) fn contiguous(g: &Graph, order: &[usize], k: usize) -> Vec<usize> {
    let total = g.total_node_weight();
    let mut blocks = vec![0; g.node_count()];
    let mut prefix = 0.0;
    for &v in order {
        let w = g.node_weight(v);
        let mid = prefix + w / 2.0;
        prefix += w;
        blocks[v] = ((mid * k as f64 / total) as usize).min(k - 1);
    }
    blocks
}

fn bfs_order(g: &Graph, start: usize) -> Vec<usize> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for root in (start..n).chain(0..start) {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

fn loads(g: &Graph, blocks: &[usize], k: usize) -> Vec<f64> {
    let mut loads = vec![0.0; k];
    for (v, &b) in blocks.iter().enumerate() {
        loads[b] += g.node_weight(v);
    }
    loads
}

fn refine(
    g: &Graph,
    blocks: &mut Vec<usize>,
    cfg: &PartitionConfig,
    limit: f64,
    rng: &mut ChaCha8Rng,
) {
    let mut lp = Propagator::new(g, std::mem::take(blocks), cfg.k, limit, true);
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    for _ in 0..cfg.lp_rounds {
        if cfg.node_order == NodeOrder::RandomShuffle {
            order.shuffle(rng);
        }
        if lp.round(&order, None).0 == 0 {
            break;
        }
    }
    *blocks = lp.blocks;
}

/// Moves nodes out of overloaded blocks, each time picking the move that
/// loses the least internal weight. Returns whether every block fits.
fn rebalance(g: &Graph, blocks: &mut [usize], k: usize, limit: f64) -> bool {
    let mut loads = loads(g, blocks, k);
    let mut conn = vec![0.0; k];
    loop {
        let heavy = (0..k)
            .max_by(|&a, &b| loads[a].total_cmp(&loads[b]).then(b.cmp(&a)))
            .expect("k >= 1");
        if fits(loads[heavy], limit) {
            return true;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for v in (0..g.node_count()).filter(|&v| blocks[v] == heavy) {
            let w = g.node_weight(v);
            conn.iter_mut().for_each(|c| *c = 0.0);
            for e in g.edge_range(v) {
                conn[blocks[g.edge_target(e)]] += g.edge_weight(e);
            }
            for b in (0..k).filter(|&b| b != heavy && fits(loads[b] + w, limit)) {
                let loss = conn[heavy] - conn[b];
                if best.is_none_or(|(l, _, _)| loss < l) {
                    best = Some((loss, v, b));
                }
            }
        }
        match best {
            Some((_, v, b)) => {
                let w = g.node_weight(v);
                blocks[v] = b;
                loads[heavy] -= w;
                loads[b] += w;
            }
            None => return false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Generator};
    use crate::partition::{edge_cut, initial_partition, label_propagation_refine};

    #[test]
    fn cluster_contraction_keeps_weights() {
        let g = generate(&Generator::Grid { rows: 3, cols: 3 }, 0).unwrap();
        let labels = vec![0, 0, 2, 0, 4, 2, 6, 6, 2];
        let (coarse, map) = contract_clusters(&g, &labels);
        assert_eq!(map, vec![0, 0, 1, 0, 2, 1, 3, 3, 1]);
        assert_eq!(coarse.total_node_weight(), 9.0);
        assert_eq!(coarse.total_edge_weight(), edge_cut_of(&g, &map));
    }

    #[test]
    fn multilevel_is_balanced_and_deterministic() {
        for seed in 0..5 {
            let g = generate(&Generator::ErdosRenyi { n: 600, p: 0.01 }, seed).unwrap();
            let cfg = PartitionConfig::new(4).with_seed(seed);
            let (part, trace) = multilevel_partition(&g, &cfg).unwrap();
            assert!(part.is_feasible());
            assert!(trace.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*trace.last().unwrap(), edge_cut(&g, &part));
            assert_eq!(multilevel_partition(&g, &cfg).unwrap().0, part);
        }
    }

    #[test]
    fn multilevel_beats_single_level_on_a_random_graph() {
        let g = generate(&Generator::ErdosRenyi { n: 800, p: 0.006 }, 3).unwrap();
        let cfg = PartitionConfig::new(4);
        let single = label_propagation_refine(&g, &initial_partition(&g, &cfg).unwrap(), &cfg);
        let (multi, _) = multilevel_partition(&g, &cfg).unwrap();
        assert!(edge_cut(&g, &multi) < edge_cut(&g, &single));
        assert!(multi.is_feasible());
    }

    #[test]
    fn rebalance_restores_the_limit() {
        let g = generate(&Generator::Ring { n: 12 }, 0).unwrap();
        let mut blocks = vec![0; 12];
        blocks[11] = 1;
        assert!(rebalance(&g, &mut blocks, 2, 6.0));
        assert_eq!(loads(&g, &blocks, 2), vec![6.0, 6.0]);
        assert_eq!(edge_cut_of(&g, &blocks), 2.0);
    }

    #[test]
    fn bfs_order_covers_every_component() {
        let g = Graph::from_edges(5, [(0, 1), (3, 4)]).unwrap();
        assert_eq!(bfs_order(&g, 3), vec![3, 4, 0, 1, 2]);
    }
}
