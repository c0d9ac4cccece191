use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError};

/// Synthetic instance families. Textual form: `grid:RxC`, `er:N:P`,
/// `ring:N`, `star:LEAVES`.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Grid { rows: usize, cols: usize },
    ErdosRenyi { n: usize, p: f64 },
    Ring { n: usize },
    Star { leaves: usize },
}

/// Builds the graph described by `kind`. Deterministic for a fixed seed;
/// only the Erdős–Rényi family consumes randomness.
pub fn generate(kind: &Generator, seed: u64) -> Result<Graph, GraphError> {
    match *kind {
        Generator::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(GraphError::InvalidParameter(format!(
                    "grid dimensions must be positive, got {rows}x{cols}"
                )));
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::with_capacity(2 * rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Graph::from_edges(rows * cols, edges)
        }
        Generator::ErdosRenyi { n, p } => {
            if n == 0 || !(0.0..=1.0).contains(&p) {
                return Err(GraphError::InvalidParameter(format!(
                    "erdos-renyi needs n > 0 and 0 <= p <= 1, got n={n}, p={p}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, edges)
        }
        Generator::Ring { n } => {
            if n < 3 {
                return Err(GraphError::InvalidParameter(format!(
                    "a ring needs at least 3 nodes, got {n}"
                )));
            }
            Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
        }
        Generator::Star { leaves } => {
            if leaves == 0 {
                return Err(GraphError::InvalidParameter("a star needs at least one leaf".into()));
            }
            Graph::from_edges(leaves + 1, (1..=leaves).map(|leaf| (0, leaf)))
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Grid { rows, cols } => write!(f, "grid:{rows}x{cols}"),
            Generator::ErdosRenyi { n, p } => write!(f, "er:{n}:{p}"),
            Generator::Ring { n } => write!(f, "ring:{n}"),
            Generator::Star { leaves } => write!(f, "star:{leaves}"),
        }
    }
}

impl FromStr for Generator {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::InvalidParameter(format!("unrecognised generator spec {s:?}"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["grid", dims] => {
                let (r, c) = dims.split_once('x').ok_or_else(bad)?;
                Ok(Generator::Grid {
                    rows: num(r)?,
                    cols: num(c)?,
                })
            }
            ["er", n, p] => Ok(Generator::ErdosRenyi {
                n: num(n)?,
                p: p.parse().map_err(|_| bad())?,
            }),
            ["ring", n] => Ok(Generator::Ring { n: num(n)? }),
            ["star", l] => Ok(Generator::Star { leaves: num(l)? }),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_is_a_cycle() {
        let g = generate(&Generator::Ring { n: 5 }, 0).unwrap();
        assert_eq!(g.edge_count(), 5);
        assert!(g.degrees().all(|d| d == 2));
    }

    #[test]
    fn grid_edge_count() {
        let g = generate(&Generator::Grid { rows: 2, cols: 3 }, 0).unwrap();
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.edge_count(), 2 * (3 - 1) + 3 * (2 - 1));
    }

    #[test]
    fn erdos_renyi_is_deterministic() {
        let kind = Generator::ErdosRenyi { n: 50, p: 0.1 };
        assert_eq!(generate(&kind, 1).unwrap(), generate(&kind, 1).unwrap());
        assert_ne!(generate(&kind, 1).unwrap(), generate(&kind, 2).unwrap());
    }

    #[test]
    fn star_shape() {
        let g = generate(&Generator::Star { leaves: 4 }, 0).unwrap();
        assert_eq!(g.degree(0), 4);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn invalid_parameters() {
        for kind in [
            Generator::Grid { rows: 0, cols: 3 },
            Generator::ErdosRenyi { n: 10, p: 1.5 },
            Generator::ErdosRenyi { n: 0, p: 0.5 },
            Generator::Ring { n: 2 },
            Generator::Star { leaves: 0 },
        ] {
            assert!(matches!(generate(&kind, 0), Err(GraphError::InvalidParameter(_))));
        }
    }

    #[test]
    fn parse_and_display() {
        for text in ["grid:4x7", "er:100:0.05", "ring:9", "star:3"] {
            let kind: Generator = text.parse().unwrap();
            assert_eq!(kind.to_string(), text);
        }
        assert!("grid:4".parse::<Generator>().is_err());
        assert!("torus:3".parse::<Generator>().is_err());
    }
}
