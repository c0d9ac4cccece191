//! METIS and plain edge-list graph files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Graph, GraphError};

/// Loads a METIS graph file (1-based node IDs, header `n m [fmt [ncon]]`).
pub fn load_metis(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    read_metis(BufReader::new(File::open(path)?))
}

/// Loads a whitespace-separated edge list with 0-based node IDs.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    read_edge_list(BufReader::new(File::open(path)?))
}

/// Picks the parser from the file extension: `.graph` and `.metis` are read
/// as METIS, everything else as an edge list.
pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("graph") | Some("metis") => load_metis(path),
        _ => load_edge_list(path),
    }
}

struct MetisFormat {
    edge_weights: bool,
    node_weights: bool,
}

fn parse_fmt(token: &str) -> Result<MetisFormat, GraphError> {
    if token.len() > 3 || !token.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(GraphError::Header(format!("unsupported fmt code {token:?}")));
    }
    let digits: Vec<u8> = token.bytes().rev().map(|b| b - b'0').collect();
    if digits.get(2) == Some(&1) {
        return Err(GraphError::Header("node sizes (fmt 1xx) are not supported".into()));
    }
    Ok(MetisFormat {
        edge_weights: digits.first() == Some(&1),
        node_weights: digits.get(1) == Some(&1),
    })
}

fn parse_usize(token: &str, line: usize, what: &str) -> Result<usize, GraphError> {
    token.parse().map_err(|_| GraphError::Parse {
        line,
        message: format!("expected {what}, found {token:?}"),
    })
}

fn parse_f64(token: &str, line: usize, what: &str) -> Result<f64, GraphError> {
    token.parse().map_err(|_| GraphError::Parse {
        line,
        message: format!("expected {what}, found {token:?}"),
    })
}

pub fn read_metis(reader: impl BufRead) -> Result<Graph, GraphError> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim_start().starts_with('%')));

    let header = loop {
        match lines.next() {
            Some(Ok((_, l))) if l.trim().is_empty() => continue,
            Some(l) => break l?.1,
            None => return Err(GraphError::Header("missing header line".into())),
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if !(2..=4).contains(&fields.len()) {
        return Err(GraphError::Header(format!("expected `n m [fmt [ncon]]`, found {header:?}")));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| GraphError::Header(format!("bad node count {:?}", fields[0])))?;
    let m: usize = fields[1]
        .parse()
        .map_err(|_| GraphError::Header(format!("bad edge count {:?}", fields[1])))?;
    let format = match fields.get(2) {
        Some(fmt) => parse_fmt(fmt)?,
        None => MetisFormat {
            edge_weights: false,
            node_weights: false,
        },
    };
    if let Some(ncon) = fields.get(3) {
        if *ncon != "1" {
            return Err(GraphError::Header(format!("ncon {ncon} is not supported")));
        }
    }

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut targets = Vec::with_capacity(2 * m);
    let mut edge_weights = format.edge_weights.then(|| Vec::with_capacity(2 * m));
    let mut node_weights = format.node_weights.then(|| Vec::with_capacity(n));

    for v in 0..n {
        let (no, line) = match lines.next() {
            Some(l) => l?,
            None => {
                return Err(GraphError::Parse {
                    line: 0,
                    message: format!("file ends after {v} of {n} adjacency lines"),
                })
            }
        };
        let mut tokens = line.split_whitespace();
        if let Some(c) = node_weights.as_mut() {
            let token = tokens.next().ok_or_else(|| GraphError::Parse {
                line: no,
                message: "missing node weight".into(),
            })?;
            let weight = parse_f64(token, no, "node weight")?;
            if weight < 0.0 {
                return Err(GraphError::InvalidWeight {
                    what: format!("node {}", v + 1),
                    weight,
                });
            }
            c.push(weight);
        }
        while let Some(token) = tokens.next() {
            let target = parse_usize(token, no, "neighbor ID")?;
            if target == 0 || target > n {
                return Err(GraphError::Parse {
                    line: no,
                    message: format!("neighbor {target} outside 1..={n}"),
                });
            }
            if target - 1 == v {
                return Err(GraphError::SelfLoop(v));
            }
            targets.push(target - 1);
            if let Some(w) = edge_weights.as_mut() {
                let token = tokens.next().ok_or_else(|| GraphError::Parse {
                    line: no,
                    message: format!("missing weight for edge to {target}"),
                })?;
                let weight = parse_f64(token, no, "edge weight")?;
                if weight <= 0.0 {
                    return Err(GraphError::InvalidWeight {
                        what: format!("edge ({}, {target})", v + 1),
                        weight,
                    });
                }
                w.push(weight);
            }
        }
        offsets.push(targets.len());
    }
    for rest in lines {
        let (no, line) = rest?;
        if !line.trim().is_empty() {
            return Err(GraphError::Parse {
                line: no,
                message: format!("more than {n} adjacency lines"),
            });
        }
    }

    let graph = Graph::from_csr(offsets, targets, edge_weights, node_weights)?;
    if graph.edge_count() != m {
        return Err(GraphError::EdgeCountMismatch {
            declared: m,
            found: graph.edge_count(),
        });
    }
    Ok(graph)
}

/// Writes `g` in METIS format. Weights are written only when present.
pub fn write_metis(g: &Graph, out: impl Write) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    let fmt = match (g.has_node_weights(), g.has_edge_weights()) {
        (false, false) => "",
        (false, true) => " 1",
        (true, false) => " 10",
        (true, true) => " 11",
    };
    writeln!(out, "{} {}{}", g.node_count(), g.edge_count(), fmt)?;
    for v in 0..g.node_count() {
        let mut first = true;
        let mut sep = |out: &mut BufWriter<_>| -> std::io::Result<()> {
            if !std::mem::take(&mut first) {
                write!(out, " ")?;
            }
            Ok(())
        };
        if g.has_node_weights() {
            sep(&mut out)?;
            write!(out, "{}", g.node_weight(v))?;
        }
        for e in g.edge_range(v) {
            sep(&mut out)?;
            write!(out, "{}", g.edge_target(e) + 1)?;
            if g.has_edge_weights() {
                write!(out, " {}", g.edge_weight(e))?;
            }
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn read_edge_list(reader: impl BufRead) -> Result<Graph, GraphError> {
    let mut edges = Vec::new();
    let mut n = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(GraphError::Parse {
                line: no,
                message: format!("expected `u v`, found {content:?}"),
            });
        };
        let u = parse_usize(a, no, "non-negative integer node ID")?;
        let v = parse_usize(b, no, "non-negative integer node ID")?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v));
    }
    Graph::from_edges(n, edges)
}

/// Writes every undirected edge once, in canonical order.
pub fn write_edge_list(g: &Graph, out: impl Write) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for (u, v) in g.canonical_edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metis(text: &str) -> Result<Graph, GraphError> {
        read_metis(text.as_bytes())
    }

    #[test]
    fn triangle() {
        let g = metis("3 3\n2 3\n1 3\n1 2\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 3));
        assert_eq!(g.neighbors(0), &[1, 2]);
    }

    #[test]
    fn path() {
        let g = metis("3 2\n2\n1 3\n2\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(g.canonical_edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn one_sided_edge_is_asymmetric() {
        let err = metis("2 1\n2\n\n").unwrap_err();
        assert!(err.to_string().contains("asymmetric adjacency"), "{err}");
    }

    #[test]
    fn comments_and_isolated_nodes() {
        let g = metis("% a comment\n4 1\n% another\n2\n1\n\n\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 1));
        assert_eq!(g.degree(3), 0);
    }

    #[test]
    fn weighted_formats() {
        let g = metis("2 1 11\n3 2 5\n4 1 5\n").unwrap();
        assert_eq!(g.node_weight(0), 3.0);
        assert_eq!(g.node_weight(1), 4.0);
        assert_eq!(g.edge_weight(0), 5.0);
        assert_eq!(g.total_edge_weight(), 5.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(metis("3\n"), Err(GraphError::Header(_))));
        assert!(matches!(metis("x 1\n"), Err(GraphError::Header(_))));
        assert!(matches!(metis("2 1 1\n2 0\n1 0\n"), Err(GraphError::InvalidWeight { .. })));
        assert!(matches!(metis("2 1 1\n2 -1\n1 -1\n"), Err(GraphError::InvalidWeight { .. })));
        assert!(matches!(metis("2 1\n1\n\n"), Err(GraphError::SelfLoop(0))));
        assert!(matches!(metis("2 2\n2\n1\n"), Err(GraphError::EdgeCountMismatch { .. })));
        assert!(matches!(metis("2 1\n3\n1\n"), Err(GraphError::Parse { .. })));
        assert!(matches!(metis("2 1 100\n"), Err(GraphError::Header(_))));
    }

    #[test]
    fn edge_list_examples() {
        let p3 = read_edge_list("0 1\n1 0\n1 2".as_bytes()).unwrap();
        assert_eq!(p3.canonical_edges(), vec![(0, 1), (1, 2)]);

        let err = read_edge_list("0 0".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("self-loop"));

        let star = read_edge_list("# star\n0 1\n0 2\n0 3\n0 4\n".as_bytes()).unwrap();
        assert_eq!(star.node_count(), 5);
        assert_eq!(star.degree(0), 4);

        assert!(matches!(
            read_edge_list("0 -1\n".as_bytes()),
            Err(GraphError::Parse { .. })
        ));
        assert!(matches!(
            read_edge_list("0 a\n".as_bytes()),
            Err(GraphError::Parse { .. })
        ));
    }

    #[test]
    fn metis_round_trip_with_weights() {
        let g = metis("3 2 11\n1 2 2.5\n0 1 2.5 3 4\n7 2 4\n").unwrap();
        let mut buf = Vec::new();
        write_metis(&g, &mut buf).unwrap();
        assert_eq!(metis(std::str::from_utf8(&buf).unwrap()).unwrap(), g);
    }

    #[test]
    fn load_graph_dispatches_on_extension() {
        let dir = tempfile::tempdir().unwrap();
        let metis_path = dir.path().join("k3.graph");
        std::fs::write(&metis_path, "3 3\n2 3\n1 3\n1 2\n").unwrap();
        let list_path = dir.path().join("k3.txt");
        std::fs::write(&list_path, "0 1\n0 2\n1 2\n").unwrap();
        assert_eq!(load_graph(&metis_path).unwrap(), load_graph(&list_path).unwrap());
    }
}
