use super::{EdgeKind, SplitGraph, SplitOrigin};
use crate::graph::Graph;

/// Builds the split graph of `g` in one pass over its directed edges.
///
/// Split node `e` stands for directed edge `e = (u, v)`, the i-th edge of
/// `u`. Its dominant partner is the split node of the reverse edge `(v, u)`,
/// i.e. the j-th split node of `S_v` where `u` is the j-th neighbor of `v`.
/// Within `S_u` split node `i` is joined to `i ± 1 mod d(u)`.
pub fn build_split_graph_sequential(g: &Graph) -> SplitGraph {
    let split_count = g.directed_edge_count();
    let sorted = g.is_sorted();
    let reverse = if sorted { Vec::new() } else { g.reverse_edges() };

    let mut offsets = Vec::with_capacity(split_count + 1);
    offsets.push(0);
    let mut targets = Vec::with_capacity(3 * split_count);
    let mut kinds = Vec::with_capacity(3 * split_count);
    let mut origin = Vec::with_capacity(split_count);
    let mut dominant_origin = Vec::with_capacity(split_count);

    for u in 0..g.node_count() {
        let first = g.first_edge(u);
        let degree = g.degree(u);
        for i in 0..degree {
            let e = first + i;
            let v = g.edge_target(e);
            let partner = if sorted {
                let j = g
                    .neighbors(v)
                    .binary_search(&u)
                    .expect("symmetric adjacency");
                g.first_edge(v) + j
            } else {
                reverse[e]
            };
            targets.push(partner);
            kinds.push(EdgeKind::Dominant);

            if degree > 1 {
                let next = first + (i + 1) % degree;
                let prev = first + (i + degree - 1) % degree;
                targets.push(next);
                kinds.push(EdgeKind::Auxiliary);
                if prev != next {
                    targets.push(prev);
                    kinds.push(EdgeKind::Auxiliary);
                }
            }
            offsets.push(targets.len());
            origin.push(SplitOrigin { node: u, position: i });
            dominant_origin.push((u.min(v), u.max(v)));
        }
    }
    SplitGraph::from_sorted_parts(offsets, targets, kinds, origin, dominant_origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Generator};
    use EdgeKind::{Auxiliary as A, Dominant as D};

    #[test]
    fn path_becomes_a_four_node_path() {
        let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let sg = build_split_graph_sequential(&p3);
        assert_eq!(sg.node_count(), 4);
        assert_eq!(sg.edge_count(D), 2);
        assert_eq!(sg.edge_count(A), 1);
        // 0 -D- 1 -A- 2 -D- 3
        assert_eq!(
            sg.sorted_edge_list(),
            vec![(0, 1, D), (1, 0, D), (1, 2, A), (2, 1, A), (2, 3, D), (3, 2, D)]
        );
    }

    #[test]
    fn triangle_enumeration() {
        // directed edges: 0:(0,1) 1:(0,2) 2:(1,0) 3:(1,2) 4:(2,0) 5:(2,1)
        let k3 = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let sg = build_split_graph_sequential(&k3);
        assert_eq!(sg.node_count(), 6);
        let dominant: Vec<_> = sg
            .sorted_edge_list()
            .into_iter()
            .filter(|&(s, t, k)| k == D && s < t)
            .map(|(s, t, _)| (s, t))
            .collect();
        assert_eq!(dominant, vec![(0, 2), (1, 4), (3, 5)]);
        let auxiliary: Vec<_> = sg
            .sorted_edge_list()
            .into_iter()
            .filter(|&(s, t, k)| k == A && s < t)
            .map(|(s, t, _)| (s, t))
            .collect();
        assert_eq!(auxiliary, vec![(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn star_center_becomes_cycle() {
        let star = generate(&Generator::Star { leaves: 4 }, 0).unwrap();
        let sg = build_split_graph_sequential(&star);
        assert_eq!(sg.node_count(), 8);
        assert_eq!(sg.edge_count(D), 4);
        assert_eq!(sg.edge_count(A), 4);
        // S_center = {0, 1, 2, 3} forms the cycle 0-1-2-3-0
        for s in 0..4 {
            let mut aux: Vec<usize> = sg
                .neighbors(s)
                .filter(|&(_, k)| k == A)
                .map(|(t, _)| t)
                .collect();
            aux.sort_unstable();
            let mut expected = vec![(s + 1) % 4, (s + 3) % 4];
            expected.sort_unstable();
            assert_eq!(aux, expected);
            assert_eq!(sg.dominant_partner(s), Some(4 + s));
        }
        for leaf in 4..8 {
            assert_eq!(sg.neighbors(leaf).count(), 1);
        }
    }

    #[test]
    fn unsorted_input_gives_the_same_pairing_by_edge_identity() {
        let unsorted = Graph::from_csr(
            vec![0, 3, 5, 8, 10],
            vec![3, 1, 2, 2, 0, 3, 1, 0, 0, 2],
            None,
            None,
        )
        .unwrap();
        let sg = build_split_graph_sequential(&unsorted);
        for s in 0..sg.node_count() {
            let partner = sg.dominant_partner(s).unwrap();
            assert_eq!(sg.dominant_partner(partner), Some(s));
            let u = sg.origin(s).node;
            let v = sg.origin(partner).node;
            assert_eq!(unsorted.edge_target(s), v);
            assert_eq!(unsorted.edge_target(partner), u);
        }
    }

    #[test]
    fn isolated_nodes_produce_no_split_nodes() {
        let g = Graph::from_edges(4, [(1, 2)]).unwrap();
        let sg = build_split_graph_sequential(&g);
        assert_eq!(sg.node_count(), 2);
        assert_eq!(sg.origin(0), SplitOrigin { node: 1, position: 0 });
        assert_eq!(sg.origin(1), SplitOrigin { node: 2, position: 0 });
    }
}
