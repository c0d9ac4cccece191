//! Edge partitioning through the split-and-connect transformation.
//!
//! A graph is distributed over virtual PEs, turned into its split graph by a
//! bulk-synchronous construction, node-partitioned and projected back into an
//! edge partition. Streaming and local-search baselines, a hypergraph model
//! and a brute-force oracle provide the reference points for evaluation.

pub mod baselines;
pub mod bench;
pub mod edge_partition;
pub mod graph;
pub mod hypergraph;
pub mod partition;
pub mod runtime;
pub mod spac;

pub use edge_partition::{EdgePartition, QualityReport};
pub use graph::{Distribution, DistributedGraph, Graph, GraphError};
pub use hypergraph::Hypergraph;
pub use partition::{NodePartition, PartitionConfig};
pub use runtime::Runtime;
pub use spac::SplitGraph;
