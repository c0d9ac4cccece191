//! Hypergraphs, their partition metrics and the hMETIS file format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum HypergraphError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("net {net} has no pins")]
    EmptyNet { net: usize },
    #[error("net {net} contains vertex {pin}, but there are only {vertices} vertices")]
    PinOutOfRange { net: usize, pin: usize, vertices: usize },
    #[error("net {net} contains vertex {pin} twice")]
    DuplicatePin { net: usize, pin: usize },
    #[error("{found} weights given for {expected} items")]
    WeightCount { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypergraph {
    vertex_count: usize,
    net_offsets: Vec<usize>,
    pins: Vec<usize>,
    vertex_weights: Vec<f64>,
    net_weights: Vec<f64>,
}

impl Hypergraph {
    /// Builds a unit-weight hypergraph; every net needs at least one pin and
    /// no repeated pins.
    pub fn new(vertex_count: usize, nets: Vec<Vec<usize>>) -> Result<Hypergraph, HypergraphError> {
        let net_count = nets.len();
        Hypergraph::with_weights(vertex_count, nets, vec![1.0; vertex_count], vec![1.0; net_count])
    }

    pub fn with_weights(
        vertex_count: usize,
        nets: Vec<Vec<usize>>,
        vertex_weights: Vec<f64>,
        net_weights: Vec<f64>,
    ) -> Result<Hypergraph, HypergraphError> {
        if vertex_weights.len() != vertex_count {
            return Err(HypergraphError::WeightCount {
                expected: vertex_count,
                found: vertex_weights.len(),
            });
        }
        if net_weights.len() != nets.len() {
            return Err(HypergraphError::WeightCount {
                expected: nets.len(),
                found: net_weights.len(),
            });
        }
        let mut net_offsets = Vec::with_capacity(nets.len() + 1);
        net_offsets.push(0);
        let mut pins = Vec::new();
        let mut seen = vec![usize::MAX; vertex_count];
        for (net, list) in nets.into_iter().enumerate() {
            if list.is_empty() {
                return Err(HypergraphError::EmptyNet { net });
            }
            for pin in list {
                if pin >= vertex_count {
                    return Err(HypergraphError::PinOutOfRange {
                        net,
                        pin,
                        vertices: vertex_count,
                    });
                }
                if seen[pin] == net {
                    return Err(HypergraphError::DuplicatePin { net, pin });
                }
                seen[pin] = net;
                pins.push(pin);
            }
            net_offsets.push(pins.len());
        }
        Ok(Hypergraph {
            vertex_count,
            net_offsets,
            pins,
            vertex_weights,
            net_weights,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn net_count(&self) -> usize {
        self.net_offsets.len() - 1
    }

    pub fn pin_count(&self) -> usize {
        self.pins.len()
    }

    pub fn net(&self, e: usize) -> &[usize] {
        &self.pins[self.net_offsets[e]..self.net_offsets[e + 1]]
    }

    pub fn nets(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.net_count()).map(move |e| self.net(e))
    }

    pub fn vertex_weight(&self, v: usize) -> f64 {
        self.vertex_weights[v]
    }

    pub fn net_weight(&self, e: usize) -> f64 {
        self.net_weights[e]
    }

    fn has_vertex_weights(&self) -> bool {
        self.vertex_weights.iter().any(|&w| w != 1.0)
    }

    fn has_net_weights(&self) -> bool {
        self.net_weights.iter().any(|&w| w != 1.0)
    }
}

/// One hypernode per undirected edge (canonical order) and one net per
/// non-isolated node holding the hypernodes of its edges.
pub fn graph_to_hypergraph(g: &Graph) -> Hypergraph {
    let ids = g.canonical_edge_ids();
    let nets: Vec<Vec<usize>> = (0..g.node_count())
        .filter(|&v| g.degree(v) > 0)
        .map(|v| {
            let mut pins: Vec<usize> = g.edge_range(v).map(|e| ids[e]).collect();
            pins.sort_unstable();
            pins
        })
        .collect();
    Hypergraph::new(g.edge_count(), nets).expect("a simple graph yields a valid hypergraph")
}

/// `λ(e)` for every net.
pub fn net_connectivities(h: &Hypergraph, blocks: &[usize]) -> Vec<usize> {
    assert_eq!(blocks.len(), h.vertex_count(), "partition does not match hypergraph");
    let k = blocks.iter().max().map_or(0, |&b| b + 1);
    let mut stamp = vec![usize::MAX; k];
    (0..h.net_count())
        .map(|e| {
            let mut lambda = 0;
            for &pin in h.net(e) {
                let b = blocks[pin];
                if stamp[b] != e {
                    stamp[b] = e;
                    lambda += 1;
                }
            }
            lambda
        })
        .collect()
}

/// `Σ_e (λ(e) − 1) ω(e)`.
pub fn connectivity_metric(h: &Hypergraph, blocks: &[usize]) -> f64 {
    net_connectivities(h, blocks)
        .into_iter()
        .enumerate()
        .map(|(e, lambda)| (lambda - 1) as f64 * h.net_weight(e))
        .sum()
}

/// Total weight of nets with `λ(e) > 1`.
pub fn cut_net_metric(h: &Hypergraph, blocks: &[usize]) -> f64 {
    net_connectivities(h, blocks)
        .into_iter()
        .enumerate()
        .filter(|&(_, lambda)| lambda > 1)
        .map(|(e, _)| h.net_weight(e))
        .sum()
}

/// Writes `h` in hMETIS format: header `nets vertices [fmt]`, one line of
/// 1-based pins per net (prefixed by its weight when fmt has net weights),
/// then one vertex weight per line when fmt has vertex weights.
pub fn write_hmetis(h: &Hypergraph, out: impl Write) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    let fmt = match (h.has_vertex_weights(), h.has_net_weights()) {
        (false, false) => "",
        (false, true) => " 1",
        (true, false) => " 10",
        (true, true) => " 11",
    };
    writeln!(out, "{} {}{fmt}", h.net_count(), h.vertex_count())?;
    for e in 0..h.net_count() {
        let mut fields: Vec<String> = Vec::with_capacity(h.net(e).len() + 1);
        if h.has_net_weights() {
            fields.push(format_weight(h.net_weight(e)));
        }
        fields.extend(h.net(e).iter().map(|p| (p + 1).to_string()));
        writeln!(out, "{}", fields.join(" "))?;
    }
    if h.has_vertex_weights() {
        for v in 0..h.vertex_count() {
            writeln!(out, "{}", format_weight(h.vertex_weight(v)))?;
        }
    }
    out.flush()
}

fn format_weight(w: f64) -> String {
    if w.fract() == 0.0 {
        format!("{}", w as i64)
    } else {
        w.to_string()
    }
}

pub fn export_hmetis(h: &Hypergraph, path: impl AsRef<Path>) -> std::io::Result<()> {
    write_hmetis(h, File::create(path)?)
}

pub fn import_hmetis(path: impl AsRef<Path>) -> Result<Hypergraph, HypergraphError> {
    read_hmetis(BufReader::new(File::open(path)?))
}

/// Parses hMETIS text; lines starting with `%` are comments.
pub fn read_hmetis(reader: impl BufRead) -> Result<Hypergraph, HypergraphError> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim_start().starts_with('%')));
    let parse_err = |line: usize, message: String| HypergraphError::Parse { line, message };

    let (line_no, header) = match lines.next() {
        Some(r) => r?,
        None => return Err(parse_err(1, "missing header".into())),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if !(2..=3).contains(&fields.len()) {
        return Err(parse_err(line_no, format!("expected `nets vertices [fmt]`, found {header:?}")));
    }
    let number = |s: &str| -> Result<usize, HypergraphError> {
        s.parse()
            .map_err(|_| parse_err(line_no, format!("not a non-negative integer: {s:?}")))
    };
    let net_count = number(fields[0])?;
    let vertex_count = number(fields[1])?;
    let fmt = fields.get(2).map(|s| number(s)).transpose()?.unwrap_or(0);
    let (vertex_weighted, net_weighted) = match fmt {
        0 => (false, false),
        1 => (false, true),
        10 => (true, false),
        11 => (true, true),
        other => return Err(parse_err(line_no, format!("unsupported fmt {other}"))),
    };

    let mut nets = Vec::with_capacity(net_count);
    let mut net_weights = Vec::with_capacity(net_count);
    for net in 0..net_count {
        let (line_no, line) = match lines.next() {
            Some(r) => r?,
            None => return Err(parse_err(line_no, format!("expected {net_count} nets, found {net}"))),
        };
        let mut tokens = line.split_whitespace();
        let weight = if net_weighted {
            let t = tokens
                .next()
                .ok_or_else(|| parse_err(line_no, "missing net weight".into()))?;
            parse_weight(t).ok_or_else(|| parse_err(line_no, format!("bad net weight {t:?}")))?
        } else {
            1.0
        };
        let mut pins = Vec::new();
        for t in tokens {
            let pin: usize = t
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad pin {t:?}")))?;
            if pin == 0 || pin > vertex_count {
                return Err(HypergraphError::PinOutOfRange {
                    net,
                    pin,
                    vertices: vertex_count,
                });
            }
            pins.push(pin - 1);
        }
        if pins.is_empty() {
            return Err(HypergraphError::EmptyNet { net });
        }
        nets.push(pins);
        net_weights.push(weight);
    }
    let mut vertex_weights = vec![1.0; vertex_count];
    if vertex_weighted {
        for (v, slot) in vertex_weights.iter_mut().enumerate() {
            let (line_no, line) = match lines.next() {
                Some(r) => r?,
                None => {
                    return Err(parse_err(
                        line_no,
                        format!("expected {vertex_count} vertex weights, found {v}"),
                    ))
                }
            };
            *slot = parse_weight(line.trim())
                .ok_or_else(|| parse_err(line_no, format!("bad vertex weight {line:?}")))?;
        }
    }
    for r in lines {
        let (line_no, line) = r?;
        if !line.trim().is_empty() {
            return Err(parse_err(line_no, "unexpected trailing content".into()));
        }
    }
    Hypergraph::with_weights(vertex_count, nets, vertex_weights, net_weights)
}

fn parse_weight(t: &str) -> Option<f64> {
    t.parse::<f64>().ok().filter(|w| *w >= 0.0 && w.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge_partition::{vertex_cut, EdgePartition};
    use crate::graph::{generate, Generator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn graphs_as_hypergraphs() {
        let k3 = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let h = graph_to_hypergraph(&k3);
        assert_eq!((h.vertex_count(), h.net_count()), (3, 3));
        assert!(h.nets().all(|n| n.len() == 2));

        let star = generate(&Generator::Star { leaves: 4 }, 0).unwrap();
        let h = graph_to_hypergraph(&star);
        assert_eq!(h.vertex_count(), 4);
        let sizes: Vec<usize> = h.nets().map(|n| n.len()).collect();
        assert_eq!(sizes, vec![4, 1, 1, 1, 1]);

        let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let h = graph_to_hypergraph(&p3);
        let nets: Vec<Vec<usize>> = h.nets().map(|n| n.to_vec()).collect();
        assert_eq!(nets, vec![vec![0], vec![0, 1], vec![1]]);

        let isolated = Graph::from_edges(4, [(1, 3)]).unwrap();
        let h = graph_to_hypergraph(&isolated);
        assert_eq!(h.net_count(), 2);
        assert_eq!(h.pin_count(), 2);
    }

    #[test]
    fn metrics_on_the_triangle() {
        let k3 = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let h = graph_to_hypergraph(&k3);
        let blocks = [0, 0, 1];
        assert_eq!(net_connectivities(&h, &blocks), vec![1, 2, 2]);
        assert_eq!(connectivity_metric(&h, &blocks), 2.0);
        assert_eq!(cut_net_metric(&h, &blocks), 2.0);
        assert_eq!(connectivity_metric(&h, &[0, 0, 0]), 0.0);
        assert_eq!(cut_net_metric(&h, &[0, 0, 0]), 0.0);
    }

    #[test]
    fn connectivity_equals_vertex_cut_and_bounds_cut_nets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..100 {
            let g = generate(&Generator::ErdosRenyi { n: 20, p: 0.25 }, seed).unwrap();
            let h = graph_to_hypergraph(&g);
            let k = rng.gen_range(1..6);
            let blocks: Vec<usize> = (0..g.edge_count()).map(|_| rng.gen_range(0..k)).collect();
            let ep = EdgePartition::new(blocks.clone(), k).unwrap();
            assert_eq!(connectivity_metric(&h, &blocks), vertex_cut(&g, &ep) as f64);
            assert!(cut_net_metric(&h, &blocks) <= connectivity_metric(&h, &blocks));
        }
    }

    #[test]
    fn hmetis_examples() {
        let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mut buf = Vec::new();
        write_hmetis(&graph_to_hypergraph(&p3), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "3 2\n1\n1 2\n2\n");
        assert_eq!(read_hmetis(&buf[..]).unwrap(), graph_to_hypergraph(&p3));

        assert!(matches!(
            read_hmetis("2 2\n1 2\n\n".as_bytes()),
            Err(HypergraphError::EmptyNet { net: 1 })
        ));
        assert!(matches!(
            read_hmetis("1 2\n3\n".as_bytes()),
            Err(HypergraphError::PinOutOfRange { pin: 3, .. })
        ));
        assert!(matches!(
            read_hmetis("1 2\n1 1\n".as_bytes()),
            Err(HypergraphError::DuplicatePin { net: 0, pin: 0 })
        ));
        assert!(matches!(
            read_hmetis("2 2\n1 2\n".as_bytes()),
            Err(HypergraphError::Parse { .. })
        ));
        assert!(read_hmetis("".as_bytes()).is_err());
    }

    #[test]
    fn weighted_round_trip() {
        let h = Hypergraph::with_weights(
            3,
            vec![vec![0, 2], vec![1], vec![2, 1, 0]],
            vec![1.0, 4.0, 2.0],
            vec![3.0, 1.0, 2.0],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.hgr");
        export_hmetis(&h, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("3 3 11\n3 1 3\n"));
        assert_eq!(import_hmetis(&path).unwrap(), h);
        let with_comment = format!("% comment\n{text}");
        assert_eq!(read_hmetis(with_comment.as_bytes()).unwrap(), h);
    }
}
