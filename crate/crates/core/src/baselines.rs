//! Reference edge partitioners: random assignment, greedy streaming (plain
//! and degree-aware) and a swap-based local search.
//!
//! Balance is measured in edge weight for the streaming heuristics; random
//! assignment and the local search balance edge counts, which coincides for
//! unweighted graphs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::edge_partition::{vertex_cut, EdgePartition};
use crate::graph::Graph;
use crate::partition::{block_weight_limit, fits};

/// Shuffles the edges and deals them to the blocks round-robin, so block
/// sizes differ by at most one.
pub fn random_edge_partition(g: &Graph, k: usize, seed: u64) -> EdgePartition {
    assert!(k >= 1, "k must be at least 1");
    let m = g.edge_count();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut blocks = vec![0; m];
    for (i, &e) in order.iter().enumerate() {
        blocks[e] = i % k;
    }
    EdgePartition::new(blocks, k).expect("round-robin blocks are in range")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeOrder {
    /// Canonical edge order.
    Canonical,
    /// A seeded shuffle of the canonical order.
    #[default]
    Shuffled,
    /// Explicit canonical edge IDs, each exactly once.
    Given(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub order: EdgeOrder,
}

impl StreamConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        StreamConfig {
            k,
            epsilon: 0.03,
            seed,
            order: EdgeOrder::Shuffled,
        }
    }

    pub fn with_order(mut self, order: EdgeOrder) -> Self {
        self.order = order;
        self
    }
}

/// Online state of a streaming partitioner.
#[derive(Clone, Debug)]
pub struct StreamState {
    k: usize,
    pub loads: Vec<f64>,
    pub limit: f64,
    // I(v) as a bit per (node, block)
    present: Vec<bool>,
}

impl StreamState {
    fn new(n: usize, k: usize, limit: f64) -> Self {
        StreamState {
            k,
            loads: vec![0.0; k],
            limit,
            present: vec![false; n * k],
        }
    }

    pub fn contains(&self, v: usize, b: usize) -> bool {
        self.present[v * self.k + b]
    }

    pub fn blocks_of(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&b| self.contains(v, b))
    }

    fn assign(&mut self, u: usize, v: usize, b: usize, w: f64) {
        self.loads[b] += w;
        self.present[u * self.k + b] = true;
        self.present[v * self.k + b] = true;
    }

    fn capped(&self, b: usize, w: f64) -> bool {
        !fits(self.loads[b] + w, self.limit)
    }
}

fn stream_order(m: usize, cfg: &StreamConfig) -> Vec<usize> {
    match &cfg.order {
        EdgeOrder::Canonical => (0..m).collect(),
        EdgeOrder::Shuffled => {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
            order
        }
        EdgeOrder::Given(order) => {
            let mut seen = vec![false; m];
            assert!(
                order.len() == m && order.iter().all(|&e| e < m && !std::mem::replace(&mut seen[e], true)),
                "given order must be a permutation of the edge IDs"
            );
            order.clone()
        }
    }
}

/// Single pass in stream order. An edge `{u, v}` goes to the least-loaded
/// block of `I(u) ∩ I(v)` if nonempty, else of whichever of `I(u)`, `I(v)`
/// is nonempty (their union if both are), else of all blocks. Blocks that
/// would exceed the limit are skipped; if every candidate is full, the
/// globally least-loaded block with room is taken. Ties go to the lower ID.
pub fn greedy_streaming(g: &Graph, cfg: &StreamConfig) -> EdgePartition {
    stream(g, cfg, false)
}

/// Like [`greedy_streaming`], but the higher-degree endpoint is the one that
/// gets replicated: if `I(u)` and `I(v)` are both nonempty and disjoint, only
/// the blocks of the lower-degree endpoint are candidates, and among equally
/// loaded candidates a block already holding it is preferred.
pub fn degree_weighted_greedy(g: &Graph, cfg: &StreamConfig) -> EdgePartition {
    stream(g, cfg, true)
}

fn stream(g: &Graph, cfg: &StreamConfig, degree_aware: bool) -> EdgePartition {
    let k = cfg.k;
    assert!(k >= 1, "k must be at least 1");
    let edges = g.canonical_edges();
    let weights = g.canonical_edge_weights();
    let limit = block_weight_limit(weights.iter().sum(), k, cfg.epsilon);
    let mut state = StreamState::new(g.node_count(), k, limit);
    let mut blocks = vec![0; edges.len()];
    let mut candidates = Vec::with_capacity(k);

    for e in stream_order(edges.len(), cfg) {
        let (u, v) = edges[e];
        let w = weights[e];
        candidates.clear();
        candidates.extend((0..k).filter(|&b| state.contains(u, b) && state.contains(v, b)));
        let low = if g.degree(v) < g.degree(u) { v } else { u };
        if candidates.is_empty() && degree_aware && g.degree(u) != g.degree(v) {
            let high = u + v - low;
            if state.blocks_of(high).next().is_some() {
                candidates.extend(state.blocks_of(low));
            }
        }
        if candidates.is_empty() {
            candidates.extend((0..k).filter(|&b| state.contains(u, b) || state.contains(v, b)));
        }
        if candidates.is_empty() {
            candidates.extend(0..k);
        }
        let key = |b: usize| {
            let preferred = degree_aware && state.contains(low, b);
            (state.loads[b], !preferred, b)
        };
        let pick = candidates
            .iter()
            .copied()
            .filter(|&b| !state.capped(b, w))
            .min_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap())
            .or_else(|| {
                (0..k)
                    .filter(|&b| !state.capped(b, w))
                    .min_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap())
            })
            .unwrap_or_else(|| {
                (0..k)
                    .min_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap())
                    .unwrap()
            });
        state.assign(u, v, pick, w);
        blocks[e] = pick;
    }
    EdgePartition::new(blocks, k).expect("streaming blocks are in range")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JabejaConfig {
    pub k: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Starting temperature, decayed linearly to zero over the iterations.
    pub initial_temperature: f64,
}

impl JabejaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        JabejaConfig {
            k,
            seed,
            iterations: 100,
            initial_temperature: 2.0,
        }
    }
}

/// Vertex-cut bookkeeping under edge moves.
pub(crate) struct SwapState {
    k: usize,
    edges: Vec<(usize, usize)>,
    blocks: Vec<usize>,
    counts: Vec<u32>,
    sets: Vec<usize>,
    cut: isize,
}

impl SwapState {
    pub(crate) fn new(g: &Graph, ep: &EdgePartition) -> Self {
        let k = ep.k();
        let edges = g.canonical_edges();
        let mut state = SwapState {
            k,
            edges,
            blocks: ep.blocks().to_vec(),
            counts: vec![0; g.node_count() * k],
            sets: vec![0; g.node_count()],
            cut: 0,
        };
        for e in 0..state.edges.len() {
            let (u, v) = state.edges[e];
            let b = state.blocks[e];
            state.enter(u, b);
            state.enter(v, b);
        }
        state.cut = state.sets.iter().filter(|&&s| s > 0).map(|&s| s as isize - 1).sum();
        state
    }

    fn enter(&mut self, v: usize, b: usize) -> isize {
        let c = &mut self.counts[v * self.k + b];
        *c += 1;
        if *c == 1 {
            self.sets[v] += 1;
            1
        } else {
            0
        }
    }

    fn leave(&mut self, v: usize, b: usize) -> isize {
        let c = &mut self.counts[v * self.k + b];
        *c -= 1;
        if *c == 0 {
            self.sets[v] -= 1;
            -1
        } else {
            0
        }
    }

    fn relocate(&mut self, e: usize, to: usize) -> isize {
        let (u, v) = self.edges[e];
        let from = self.blocks[e];
        self.blocks[e] = to;
        self.leave(u, from) + self.leave(v, from) + self.enter(u, to) + self.enter(v, to)
    }

    /// Swaps the blocks of `a` and `b` and returns the change in vertex cut.
    pub(crate) fn swap(&mut self, a: usize, b: usize) -> isize {
        let (ba, bb) = (self.blocks[a], self.blocks[b]);
        let delta = self.relocate(a, bb) + self.relocate(b, ba);
        self.cut += delta;
        delta
    }

    pub(crate) fn cut(&self) -> usize {
        self.cut as usize
    }

    pub(crate) fn blocks(&self) -> &[usize] {
        &self.blocks
    }
}

/// Local search from a random partition. Each iteration samples `m` edge
/// pairs; a pair in different blocks swaps blocks when the vertex cut
/// change is negative or below the current temperature. Returns the best
/// partition seen.
pub fn jabeja_vc(g: &Graph, cfg: &JabejaConfig) -> EdgePartition {
    jabeja_vc_traced(g, cfg).0
}

/// [`jabeja_vc`] plus the best-seen vertex cut after every iteration.
pub fn jabeja_vc_traced(g: &Graph, cfg: &JabejaConfig) -> (EdgePartition, Vec<usize>) {
    let start = random_edge_partition(g, cfg.k, cfg.seed);
    let m = g.edge_count();
    let mut state = SwapState::new(g, &start);
    let mut best_cut = state.cut();
    let mut best_blocks = state.blocks().to_vec();
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6a62_6a76);

    if m >= 2 && cfg.k >= 2 {
        for it in 0..cfg.iterations {
            let temperature =
                cfg.initial_temperature * (1.0 - it as f64 / cfg.iterations as f64);
            for _ in 0..m {
                let a = rng.gen_range(0..m);
                let b = rng.gen_range(0..m);
                if state.blocks[a] == state.blocks[b] {
                    continue;
                }
                let delta = state.swap(a, b);
                if !(delta < 0 || (delta as f64) < temperature) {
                    state.swap(a, b);
                } else if state.cut() < best_cut {
                    best_cut = state.cut();
                    best_blocks.copy_from_slice(state.blocks());
                }
            }
            trace.push(best_cut);
        }
    }
    let ep = EdgePartition::new(best_blocks, cfg.k).expect("swaps keep blocks in range");
    debug_assert_eq!(vertex_cut(g, &ep), best_cut);
    (ep, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge_partition::{brute_force_optimal, edge_balance};
    use crate::graph::{generate, Generator};

    fn p3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn mean_cut(f: impl Fn(u64) -> EdgePartition, g: &Graph, seeds: u64) -> f64 {
        (0..seeds).map(|s| vertex_cut(g, &f(s)) as f64).sum::<f64>() / seeds as f64
    }

    #[test]
    fn random_partition_examples() {
        let g = generate(&Generator::Ring { n: 6 }, 0).unwrap();
        assert!(random_edge_partition(&g, 1, 3).blocks().iter().all(|&b| b == 0));
        assert_eq!(random_edge_partition(&g, 3, 3).block_sizes(), vec![2, 2, 2]);
        assert_eq!(random_edge_partition(&g, 3, 3), random_edge_partition(&g, 3, 3));
        assert_ne!(random_edge_partition(&g, 3, 3), random_edge_partition(&g, 3, 4));
    }

    #[test]
    fn greedy_on_star_in_leaf_order() {
        let star = generate(&Generator::Star { leaves: 4 }, 0).unwrap();
        let cfg = StreamConfig::new(2, 0).with_order(EdgeOrder::Canonical);
        let ep = greedy_streaming(&star, &cfg);
        assert_eq!(ep.blocks(), &[0, 0, 1, 1]);
        assert_eq!(vertex_cut(&star, &ep), 1);
    }

    #[test]
    fn p3_is_forced() {
        for order in [EdgeOrder::Given(vec![0, 1]), EdgeOrder::Given(vec![1, 0])] {
            let cfg = StreamConfig::new(2, 0).with_order(order);
            assert_eq!(vertex_cut(&p3(), &greedy_streaming(&p3(), &cfg)), 1);
            assert_eq!(vertex_cut(&p3(), &degree_weighted_greedy(&p3(), &cfg)), 1);
        }
    }

    #[test]
    fn streaming_respects_the_cap() {
        for seed in 0..20 {
            let g = generate(&Generator::ErdosRenyi { n: 80, p: 0.1 }, seed).unwrap();
            for k in [2, 3, 8] {
                let cfg = StreamConfig::new(k, seed);
                for ep in [greedy_streaming(&g, &cfg), degree_weighted_greedy(&g, &cfg)] {
                    assert!(edge_balance(&g, &ep, 0.03).1);
                }
            }
        }
    }

    #[test]
    fn greedy_beats_random_on_average() {
        let g = generate(&Generator::ErdosRenyi { n: 100, p: 0.08 }, 42).unwrap();
        let greedy = mean_cut(|s| greedy_streaming(&g, &StreamConfig::new(4, s)), &g, 50);
        let random = mean_cut(|s| random_edge_partition(&g, 4, s), &g, 50);
        assert!(greedy < random, "greedy {greedy} random {random}");
    }

    #[test]
    fn degree_aware_greedy_on_star_heavy_graph() {
        // every leaf hangs off two of a few hubs
        let hubs = 8;
        let leaves = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut edges = Vec::new();
        for l in 0..leaves {
            let a = rng.gen_range(0..hubs);
            let b = (a + rng.gen_range(1..hubs)) % hubs;
            edges.push((a, hubs + l));
            edges.push((b, hubs + l));
        }
        let g = Graph::from_edges(hubs + leaves, edges).unwrap();
        let plain = mean_cut(|s| greedy_streaming(&g, &StreamConfig::new(4, s)), &g, 50);
        let aware = mean_cut(|s| degree_weighted_greedy(&g, &StreamConfig::new(4, s)), &g, 50);
        assert!(aware <= plain, "aware {aware} plain {plain}");
    }

    #[test]
    fn incremental_delta_matches_recount() {
        let g = generate(&Generator::ErdosRenyi { n: 40, p: 0.15 }, 5).unwrap();
        let ep = random_edge_partition(&g, 4, 1);
        let mut state = SwapState::new(&g, &ep);
        assert_eq!(state.cut(), vertex_cut(&g, &ep));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = g.edge_count();
        for _ in 0..500 {
            let (a, b) = (rng.gen_range(0..m), rng.gen_range(0..m));
            let before = state.cut() as isize;
            let delta = state.swap(a, b);
            let recount = vertex_cut(&g, &EdgePartition::new(state.blocks().to_vec(), 4).unwrap());
            assert_eq!(recount as isize, before + delta);
            assert_eq!(state.cut(), recount);
        }
    }

    #[test]
    fn jabeja_examples() {
        let (ep, trace) = jabeja_vc_traced(&p3(), &JabejaConfig::new(2, 0));
        assert_eq!(vertex_cut(&p3(), &ep), 1);
        assert!(trace.iter().all(|&c| c == 1));

        let c4 = generate(&Generator::Ring { n: 4 }, 0).unwrap();
        assert_eq!(brute_force_optimal(&c4, 2, 0.03).unwrap().0, 2);
        let hits = (0..10)
            .filter(|&s| {
                let cfg = JabejaConfig {
                    iterations: 200,
                    ..JabejaConfig::new(2, s)
                };
                vertex_cut(&c4, &jabeja_vc(&c4, &cfg)) == 2
            })
            .count();
        assert!(hits >= 9, "{hits}/10");
    }

    #[test]
    fn jabeja_keeps_balance_and_best_seen_is_monotone() {
        for seed in 0..10 {
            let g = generate(&Generator::ErdosRenyi { n: 60, p: 0.1 }, seed).unwrap();
            let cfg = JabejaConfig {
                iterations: 30,
                ..JabejaConfig::new(4, seed)
            };
            let (ep, trace) = jabeja_vc_traced(&g, &cfg);
            assert_eq!(ep.block_sizes(), random_edge_partition(&g, 4, seed).block_sizes());
            assert!(trace.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*trace.last().unwrap(), vertex_cut(&g, &ep));
            assert!(vertex_cut(&g, &ep) <= vertex_cut(&g, &random_edge_partition(&g, 4, seed)));
            assert_eq!(jabeja_vc(&g, &cfg), ep);
        }
    }
}
