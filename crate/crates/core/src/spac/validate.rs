//! Structural checker for split graphs.

use std::collections::HashMap;
use std::fmt;

use super::{EdgeKind, SplitGraph};
use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NodeCount { expected: usize, found: usize },
    SplitSet { node: usize, expected: usize, found: usize },
    BadOrigin { split: usize },
    SelfLoop { split: usize },
    Undirected { from: usize, to: usize, kind: EdgeKind },
    DominantMultiplicity { split: usize, count: usize },
    DominantEndpoint { split: usize, partner: usize },
    DominantOrigin { split: usize },
    DominantCoverage { edge: (usize, usize), count: usize },
    AuxiliaryCrossing { from: usize, to: usize },
    CycleStructure { node: usize, detail: String },
    EdgeCount { kind: EdgeKind, expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NodeCount { expected, found } => {
                write!(f, "split node count {found}, expected {expected}")
            }
            Violation::SplitSet { node, expected, found } => {
                write!(f, "split set of node {node} has {found} members, expected {expected}")
            }
            Violation::BadOrigin { split } => {
                write!(f, "origin of split node {split} is outside the input graph")
            }
            Violation::SelfLoop { split } => write!(f, "self-loop at split node {split}"),
            Violation::Undirected { from, to, kind } => {
                write!(f, "undirectedness violated at edge ({from}, {to}) of kind {kind:?}")
            }
            Violation::DominantMultiplicity { split, count } => write!(
                f,
                "dominant multiplicity violated at split node {split}: {count} dominant edges"
            ),
            Violation::DominantEndpoint { split, partner } => write!(
                f,
                "dominant edge ({split}, {partner}) does not join the split nodes of one input edge"
            ),
            Violation::DominantOrigin { split } => {
                write!(f, "dominant origin of split node {split} disagrees with its input edge")
            }
            Violation::DominantCoverage { edge, count } => write!(
                f,
                "input edge {edge:?} is represented by {count} dominant edges"
            ),
            Violation::AuxiliaryCrossing { from, to } => {
                write!(f, "auxiliary edge ({from}, {to}) joins different split sets")
            }
            Violation::CycleStructure { node, detail } => {
                write!(f, "auxiliary structure of split set {node} is wrong: {detail}")
            }
            Violation::EdgeCount { kind, expected, found } => {
                write!(f, "{found} {kind:?} edges, expected {expected}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid split graph");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural property a split graph of `g` must have and
/// lists every violation found.
pub fn validate_split_graph(sg: &SplitGraph, g: &Graph) -> ValidationReport {
    let mut violations = Vec::new();
    let n = sg.node_count();
    let expected_nodes = g.directed_edge_count();
    if n != expected_nodes {
        violations.push(Violation::NodeCount {
            expected: expected_nodes,
            found: n,
        });
    }

    // split sets from the origin map
    let mut members: Vec<Vec<Option<usize>>> =
        (0..g.node_count()).map(|v| vec![None; g.degree(v)]).collect();
    let mut origin_ok = vec![true; n];
    for s in 0..n {
        let o = sg.origin(s);
        match members.get_mut(o.node).and_then(|m| m.get_mut(o.position)) {
            Some(slot @ None) => *slot = Some(s),
            _ => {
                origin_ok[s] = false;
                violations.push(Violation::BadOrigin { split: s });
            }
        }
    }
    for (v, set) in members.iter().enumerate() {
        let found = set.iter().filter(|m| m.is_some()).count();
        if found != set.len() {
            violations.push(Violation::SplitSet {
                node: v,
                expected: set.len(),
                found,
            });
        }
    }

    let edges = sg.directed_edges();
    let mut multiplicity: HashMap<(usize, usize, EdgeKind), usize> = HashMap::with_capacity(edges.len());
    for &(s, t, k) in &edges {
        *multiplicity.entry((s, t, k)).or_default() += 1;
    }
    for &(s, t, k) in &edges {
        if t >= n {
            violations.push(Violation::Undirected { from: s, to: t, kind: k });
            continue;
        }
        if s == t {
            violations.push(Violation::SelfLoop { split: s });
        }
        if multiplicity.get(&(t, s, k)) != multiplicity.get(&(s, t, k)) {
            violations.push(Violation::Undirected { from: s, to: t, kind: k });
        }
    }

    // dominant edges
    let reverse_neighbors = |v: usize, u: usize| -> Option<usize> {
        g.neighbors(v).iter().position(|&w| w == u)
    };
    let mut coverage: HashMap<(usize, usize), usize> = HashMap::new();
    for s in 0..n {
        let dominant: Vec<usize> = sg
            .neighbors(s)
            .filter(|&(_, k)| k == EdgeKind::Dominant)
            .map(|(t, _)| t)
            .collect();
        if dominant.len() != 1 {
            violations.push(Violation::DominantMultiplicity {
                split: s,
                count: dominant.len(),
            });
        }
        if !origin_ok[s] {
            continue;
        }
        let o = sg.origin(s);
        let u = o.node;
        let v = g.edge_target(g.first_edge(u) + o.position);
        if sg.dominant_origin(s) != (u.min(v), u.max(v)) {
            violations.push(Violation::DominantOrigin { split: s });
        }
        for &t in &dominant {
            if t >= n || !origin_ok[t] {
                continue;
            }
            let p = sg.origin(t);
            let points_back = p.node == v && reverse_neighbors(v, u) == Some(p.position);
            if !points_back {
                violations.push(Violation::DominantEndpoint { split: s, partner: t });
            }
            if s < t {
                *coverage.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
    }
    for edge in g.canonical_edges() {
        let count = coverage.get(&edge).copied().unwrap_or(0);
        if count != 1 {
            violations.push(Violation::DominantCoverage { edge, count });
        }
    }

    // auxiliary edges stay inside split sets and form the expected cycles
    for &(s, t, k) in &edges {
        if k == EdgeKind::Auxiliary
            && t < n
            && origin_ok[s]
            && origin_ok[t]
            && sg.origin(s).node != sg.origin(t).node
        {
            violations.push(Violation::AuxiliaryCrossing { from: s, to: t });
        }
    }
    for (v, set) in members.iter().enumerate() {
        if set.iter().any(|m| m.is_none()) {
            continue;
        }
        let nodes: Vec<usize> = set.iter().map(|m| m.unwrap()).collect();
        if let Some(detail) = check_cycle(sg, &nodes) {
            violations.push(Violation::CycleStructure { node: v, detail });
        }
    }

    let dominant_count = edges.iter().filter(|e| e.2 == EdgeKind::Dominant).count();
    let auxiliary_count = edges.len() - dominant_count;
    if dominant_count != 2 * g.edge_count() {
        violations.push(Violation::EdgeCount {
            kind: EdgeKind::Dominant,
            expected: g.edge_count(),
            found: dominant_count / 2,
        });
    }
    let expected_aux: usize = g
        .degrees()
        .map(|d| match d {
            0 | 1 => 0,
            2 => 1,
            d => d,
        })
        .sum();
    if auxiliary_count != 2 * expected_aux {
        violations.push(Violation::EdgeCount {
            kind: EdgeKind::Auxiliary,
            expected: expected_aux,
            found: auxiliary_count / 2,
        });
    }

    ValidationReport { violations }
}

/// `None` if the auxiliary edges among `nodes` form a simple cycle through
/// all of them (`|nodes| >= 3`), a single edge (`|nodes| = 2`) or nothing.
fn check_cycle(sg: &SplitGraph, nodes: &[usize]) -> Option<String> {
    let aux = |s: usize| -> Vec<usize> {
        let mut t: Vec<usize> = sg
            .neighbors(s)
            .filter(|&(_, k)| k == EdgeKind::Auxiliary)
            .map(|(t, _)| t)
            .collect();
        t.sort_unstable();
        t
    };
    let want = match nodes.len() {
        0 | 1 => 0,
        2 => 1,
        _ => 2,
    };
    for &s in nodes {
        let neighbors = aux(s);
        if neighbors.len() != want || neighbors.windows(2).any(|w| w[0] == w[1]) {
            return Some(format!(
                "split node {s} has {} auxiliary edges, expected {want} distinct",
                neighbors.len()
            ));
        }
    }
    if nodes.len() >= 3 {
        // walk the cycle from the first member
        let start = nodes[0];
        let mut previous = start;
        let mut current = aux(start)[0];
        let mut length = 1;
        while current != start {
            let next = aux(current).into_iter().find(|&t| t != previous)?;
            previous = current;
            current = next;
            length += 1;
            if length > nodes.len() {
                break;
            }
        }
        if length != nodes.len() {
            return Some(format!(
                "auxiliary cycle has length {length}, expected {}",
                nodes.len()
            ));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Generator};
    use crate::spac::{build_split_graph_sequential, SplitOrigin};

    fn k3() -> Graph {
        Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    fn rebuild(sg: &SplitGraph, edges: Vec<(usize, usize, EdgeKind)>) -> SplitGraph {
        SplitGraph::from_parts(sg.origins().to_vec(), sg.dominant_origins().to_vec(), &edges)
    }

    #[test]
    fn sequential_output_is_valid() {
        let g = k3();
        let report = validate_split_graph(&build_split_graph_sequential(&g), &g);
        assert!(report.is_valid(), "{report}");
        for kind in [
            Generator::Star { leaves: 4 },
            Generator::Ring { n: 7 },
            Generator::Grid { rows: 4, cols: 5 },
            Generator::ErdosRenyi { n: 30, p: 0.2 },
        ] {
            let g = generate(&kind, 2).unwrap();
            let report = validate_split_graph(&build_split_graph_sequential(&g), &g);
            assert!(report.is_valid(), "{kind}: {report}");
        }
    }

    #[test]
    fn missing_dominant_direction() {
        let g = k3();
        let sg = build_split_graph_sequential(&g);
        let mut edges = sg.directed_edges();
        let i = edges.iter().position(|&(s, t, k)| (s, t, k) == (0, 2, EdgeKind::Dominant)).unwrap();
        edges.remove(i);
        let report = validate_split_graph(&rebuild(&sg, edges), &g);
        let text = report.to_string();
        assert!(text.contains("undirectedness violated at edge (2, 0)"), "{text}");
        assert!(report
            .violations
            .contains(&Violation::DominantMultiplicity { split: 0, count: 0 }));
    }

    #[test]
    fn split_node_with_two_dominant_edges() {
        let g = k3();
        let sg = build_split_graph_sequential(&g);
        let mut edges = sg.directed_edges();
        edges.push((0, 5, EdgeKind::Dominant));
        edges.push((5, 0, EdgeKind::Dominant));
        let report = validate_split_graph(&rebuild(&sg, edges), &g);
        assert!(report.to_string().contains("dominant multiplicity violated"), "{report}");
        assert!(report
            .violations
            .contains(&Violation::DominantMultiplicity { split: 0, count: 2 }));
        assert!(report
            .violations
            .contains(&Violation::DominantMultiplicity { split: 5, count: 2 }));
    }

    #[test]
    fn swapped_dominant_partner() {
        // star: pairing center split 0 with leaf 2's split node breaks the
        // endpoint rule even though every count still holds
        let g = generate(&Generator::Star { leaves: 2 }, 0).unwrap();
        let sg = build_split_graph_sequential(&g);
        let edges: Vec<_> = sg
            .directed_edges()
            .into_iter()
            .map(|(s, t, k)| {
                let swap = |x: usize| match x {
                    2 => 3,
                    3 => 2,
                    x => x,
                };
                if k == EdgeKind::Dominant {
                    (swap(s), t, k)
                } else {
                    (s, t, k)
                }
            })
            .collect();
        let report = validate_split_graph(&rebuild(&sg, edges), &g);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DominantEndpoint { .. })));
    }

    #[test]
    fn broken_cycle() {
        // center cycle 0-1-2-3-0 reduced to the two edges {0,1} and {2,3}
        let g = generate(&Generator::Star { leaves: 4 }, 0).unwrap();
        let sg = build_split_graph_sequential(&g);
        let mut edges: Vec<_> = sg
            .directed_edges()
            .into_iter()
            .filter(|&(s, t, k)| !(k == EdgeKind::Auxiliary && (s, t) != (0, 1) && (s, t) != (1, 0)))
            .collect();
        edges.extend([
            (2, 3, EdgeKind::Auxiliary),
            (3, 2, EdgeKind::Auxiliary),
        ]);
        let report = validate_split_graph(&rebuild(&sg, edges), &g);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::CycleStructure { node: 0, .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::EdgeCount { kind: EdgeKind::Auxiliary, .. })));
    }

    #[test]
    fn auxiliary_edge_between_sets() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let sg = build_split_graph_sequential(&g);
        let mut edges = sg.directed_edges();
        edges.extend([(0, 3, EdgeKind::Auxiliary), (3, 0, EdgeKind::Auxiliary)]);
        let report = validate_split_graph(&rebuild(&sg, edges), &g);
        assert!(report
            .violations
            .contains(&Violation::AuxiliaryCrossing { from: 0, to: 3 }));
    }

    #[test]
    fn wrong_origin_and_node_count() {
        let g = k3();
        let sg = build_split_graph_sequential(&g);
        let mut origin = sg.origins().to_vec();
        origin[1] = SplitOrigin { node: 0, position: 0 };
        let bad = SplitGraph::from_parts(origin, sg.dominant_origins().to_vec(), &sg.directed_edges());
        let report = validate_split_graph(&bad, &g);
        assert!(report.violations.contains(&Violation::BadOrigin { split: 1 }));

        let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let report = validate_split_graph(&sg, &p3);
        assert!(report
            .violations
            .contains(&Violation::NodeCount { expected: 4, found: 6 }));
    }

    #[test]
    fn wrong_dominant_origin() {
        let g = k3();
        let sg = build_split_graph_sequential(&g);
        let mut dominant_origin = sg.dominant_origins().to_vec();
        dominant_origin[0] = (1, 2);
        let bad = SplitGraph::from_parts(sg.origins().to_vec(), dominant_origin, &sg.directed_edges());
        let report = validate_split_graph(&bad, &g);
        assert_eq!(report.violations, vec![Violation::DominantOrigin { split: 0 }]);
    }
}
