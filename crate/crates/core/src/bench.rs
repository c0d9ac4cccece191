//! Experiment harness: one pipeline per algorithm, repetitions over seeds,
//! CSV result rows, summaries and performance-plot ratios.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    degree_weighted_greedy, greedy_streaming, jabeja_vc, random_edge_partition, JabejaConfig,
    StreamConfig,
};
use crate::edge_partition::{project_split_partition, EdgePartition, QualityReport};
use crate::graph::{build_subgraph, distribute_edge_balanced, generate, load_graph, Generator, Graph};
use crate::partition::{partition_split_graph, PartitionConfig};
use crate::runtime::{default_threads, parallel_map, Runtime};
use crate::spac::{build_split_graph_distributed, SplitGraph};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown algorithm {0:?}; expected one of dspac-lp, random, greedy, greedy-degree, jabeja-vc")]
    UnknownAlgorithm(String),
    #[error("invalid instance {0:?}")]
    InvalidInstance(String),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Cell(String),
    #[error("no rows to aggregate")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    DspacLp,
    Random,
    Greedy,
    GreedyDegree,
    JabejaVc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::DspacLp,
        Algorithm::Random,
        Algorithm::Greedy,
        Algorithm::GreedyDegree,
        Algorithm::JabejaVc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DspacLp => "dspac-lp",
            Algorithm::Random => "random",
            Algorithm::Greedy => "greedy",
            Algorithm::GreedyDegree => "greedy-degree",
            Algorithm::JabejaVc => "jabeja-vc",
        }
    }

    /// Whether the algorithm runs on the simulated distributed runtime.
    pub fn is_distributed(self) -> bool {
        self == Algorithm::DspacLp
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| BenchError::UnknownAlgorithm(s.to_string()))
    }
}

/// Tunables of the individual algorithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmOptions {
    pub lp_rounds: usize,
    pub cycles: usize,
    pub single_level: bool,
    pub jabeja_iterations: usize,
    pub jabeja_temperature: f64,
}

impl Default for AlgorithmOptions {
    fn default() -> Self {
        let lp = PartitionConfig::default();
        AlgorithmOptions {
            lp_rounds: lp.lp_rounds,
            cycles: lp.cycles,
            single_level: false,
            jabeja_iterations: 100,
            jabeja_temperature: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub options: AlgorithmOptions,
}

impl From<Algorithm> for AlgorithmSpec {
    fn from(algorithm: Algorithm) -> Self {
        AlgorithmSpec {
            algorithm,
            options: AlgorithmOptions::default(),
        }
    }
}

// an algorithm is given either by name or as an object with options
#[derive(Deserialize)]
#[serde(untagged)]
enum AlgorithmEntry {
    Name(Algorithm),
    Full(AlgorithmSpec),
}

fn algorithms_from_entries<'de, D>(d: D) -> Result<Vec<AlgorithmSpec>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let entries = Vec::<AlgorithmEntry>::deserialize(d)?;
    Ok(entries
        .into_iter()
        .map(|e| match e {
            AlgorithmEntry::Name(a) => a.into(),
            AlgorithmEntry::Full(s) => s,
        })
        .collect())
}

/// A graph file or a generator spec such as `er:1000:0.01`, optionally
/// followed by `@seed` for the generator seed.
#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Generated { generator: Generator, seed: u64 },
}

impl InstanceSource {
    pub fn load(&self) -> Result<Graph, BenchError> {
        match self {
            InstanceSource::File(path) => {
                load_graph(path).map_err(|e| BenchError::Cell(format!("{}: {e}", path.display())))
            }
            InstanceSource::Generated { generator, seed } => {
                generate(generator, *seed).map_err(|e| BenchError::Cell(e.to_string()))
            }
        }
    }
}

impl FromStr for InstanceSource {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (body, seed) = match s.rsplit_once('@') {
            Some((body, seed)) => match seed.parse() {
                Ok(seed) => (body, Some(seed)),
                Err(_) => (s, None),
            },
            None => (s, None),
        };
        match body.parse::<Generator>() {
            Ok(generator) => Ok(InstanceSource::Generated {
                generator,
                seed: seed.unwrap_or(0),
            }),
            Err(_) if body.contains(':') && !std::path::Path::new(s).exists() => {
                Err(BenchError::InvalidInstance(s.to_string()))
            }
            Err(_) => Ok(InstanceSource::File(PathBuf::from(s))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub instances: Vec<String>,
    #[serde(deserialize_with = "algorithms_from_entries")]
    pub algorithms: Vec<AlgorithmSpec>,
    pub k_values: Vec<usize>,
    pub epsilon: f64,
    pub repetitions: usize,
    pub base_seed: u64,
    /// PE counts for the distributed pipeline; sequential baselines always
    /// run once with one PE.
    pub pe_counts: Vec<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            instances: Vec::new(),
            algorithms: vec![Algorithm::DspacLp.into()],
            k_values: vec![2, 4, 8, 16, 32, 64, 128],
            epsilon: 0.03,
            repetitions: 5,
            base_seed: 0,
            pe_counts: vec![1],
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(reader: impl Read) -> Result<ExperimentSpec, BenchError> {
        let spec: ExperimentSpec = serde_json::from_reader(reader)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.repetitions == 0 {
            return Err(BenchError::InvalidSpec("repetitions must be at least 1".into()));
        }
        if self.k_values.contains(&0) {
            return Err(BenchError::InvalidSpec("every k must be at least 1".into()));
        }
        if self.pe_counts.is_empty() || self.pe_counts.contains(&0) {
            return Err(BenchError::InvalidSpec("PE counts must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(BenchError::InvalidSpec("epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    Run,
    Mean,
}

/// One CSV row. `Run` rows hold a single seed; `Mean` rows hold the
/// arithmetic mean over the successful runs of a cell and no seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub kind: RowKind,
    pub instance: String,
    pub algorithm: Algorithm,
    pub k: usize,
    pub pes: usize,
    pub seed: Option<u64>,
    pub vertex_cut: Option<f64>,
    pub replication_factor: Option<f64>,
    pub max_imbalance: Option<f64>,
    pub feasible: Option<bool>,
    pub construction_ms: Option<f64>,
    pub partition_ms: Option<f64>,
    pub total_ms: Option<f64>,
    pub messages_sent: Option<f64>,
    pub message_bytes: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(instance: &str, algorithm: Algorithm, k: usize, pes: usize, seed: u64, error: String) -> Self {
        ResultRow {
            kind: RowKind::Run,
            instance: instance.to_string(),
            algorithm,
            k,
            pes,
            seed: Some(seed),
            vertex_cut: None,
            replication_factor: None,
            max_imbalance: None,
            feasible: None,
            construction_ms: None,
            partition_ms: None,
            total_ms: None,
            messages_sent: None,
            message_bytes: None,
            error: Some(error),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// The row without its wall-clock fields.
    pub fn without_timings(&self) -> ResultRow {
        ResultRow {
            construction_ms: None,
            partition_ms: None,
            total_ms: None,
            ..self.clone()
        }
    }
}

/// Outcome of one pipeline run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub partition: EdgePartition,
    pub report: QualityReport,
    pub messages_sent: u64,
    pub message_bytes: u64,
    pub split_graph: Option<SplitGraph>,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Builds the split graph of `g` on `pes` simulated PEs and gathers it.
/// Returns it with the message and byte totals.
pub fn construct_split_graph(
    g: &Graph,
    pes: usize,
    threads: usize,
) -> Result<(SplitGraph, u64, u64), BenchError> {
    if pes > g.node_count().max(1) {
        return Err(BenchError::Cell(format!(
            "{pes} PEs exceed the {} nodes of the graph",
            g.node_count()
        )));
    }
    let cell = |e: &dyn fmt::Display| BenchError::Cell(e.to_string());
    let sorted;
    let g = if g.is_sorted() {
        g
    } else {
        sorted = g.sort_adjacency();
        &sorted
    };
    let dist = distribute_edge_balanced(g, pes).map_err(|e| cell(&e))?;
    let parts = (0..pes)
        .map(|pe| build_subgraph(g, &dist, pe))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| cell(&e))?;
    let runtime = Runtime::new(pes).with_threads(threads);
    let out = build_split_graph_distributed(&parts, &runtime).map_err(|e| cell(&e))?;
    let traffic = out.stats.comm.total();
    Ok((out.gather(), traffic.messages, traffic.bytes))
}

/// Runs one algorithm on one graph. `threads` caps the worker threads of
/// the simulated runtime.
pub fn run_algorithm(
    g: &Graph,
    spec: &AlgorithmSpec,
    k: usize,
    pes: usize,
    seed: u64,
    epsilon: f64,
    threads: usize,
) -> Result<RunOutcome, BenchError> {
    if k == 0 {
        return Err(BenchError::Cell("k must be at least 1".into()));
    }
    let opts = &spec.options;
    let total = Instant::now();
    let mut construction_ms = 0.0;
    let mut messages = 0;
    let mut bytes = 0;
    let mut split_graph = None;
    let partition_start;
    let partition = match spec.algorithm {
        Algorithm::DspacLp => {
            let start = Instant::now();
            let (sg, m, b) = construct_split_graph(g, pes, threads)?;
            construction_ms = elapsed_ms(start);
            messages = m;
            bytes = b;
            partition_start = Instant::now();
            let cfg = PartitionConfig {
                k,
                epsilon,
                seed,
                lp_rounds: opts.lp_rounds,
                cycles: opts.cycles,
                multilevel: !opts.single_level,
                ..PartitionConfig::default()
            };
            let np = partition_split_graph(&sg, &cfg).map_err(|e| BenchError::Cell(e.to_string()))?;
            let ep = project_split_partition(&sg, &np).map_err(|e| BenchError::Cell(e.to_string()))?;
            split_graph = Some(sg);
            ep
        }
        Algorithm::Random => {
            partition_start = Instant::now();
            random_edge_partition(g, k, seed)
        }
        Algorithm::Greedy | Algorithm::GreedyDegree => {
            partition_start = Instant::now();
            let cfg = StreamConfig {
                epsilon,
                ..StreamConfig::new(k, seed)
            };
            if spec.algorithm == Algorithm::Greedy {
                greedy_streaming(g, &cfg)
            } else {
                degree_weighted_greedy(g, &cfg)
            }
        }
        Algorithm::JabejaVc => {
            partition_start = Instant::now();
            let cfg = JabejaConfig {
                k,
                seed,
                iterations: opts.jabeja_iterations,
                initial_temperature: opts.jabeja_temperature,
            };
            jabeja_vc(g, &cfg)
        }
    };
    let partition_ms = elapsed_ms(partition_start);
    let report = QualityReport::evaluate(g, &partition, epsilon)
        .with_phase("construction", construction_ms)
        .with_phase("partition", partition_ms)
        .with_phase("total", elapsed_ms(total));
    Ok(RunOutcome {
        partition,
        report,
        messages_sent: messages,
        message_bytes: bytes,
        split_graph,
    })
}

fn row_from_outcome(
    instance: &str,
    algorithm: Algorithm,
    k: usize,
    pes: usize,
    seed: u64,
    outcome: &RunOutcome,
) -> ResultRow {
    let report = &outcome.report;
    ResultRow {
        kind: RowKind::Run,
        instance: instance.to_string(),
        algorithm,
        k,
        pes,
        seed: Some(seed),
        vertex_cut: Some(report.vertex_cut as f64),
        replication_factor: report.replication_factor,
        max_imbalance: Some(report.max_imbalance),
        feasible: Some(report.feasible),
        construction_ms: report.runtime_ms.get("construction").copied(),
        partition_ms: report.runtime_ms.get("partition").copied(),
        total_ms: report.runtime_ms.get("total").copied(),
        messages_sent: Some(outcome.messages_sent as f64),
        message_bytes: Some(outcome.message_bytes as f64),
        error: None,
    }
}

/// Raw rows and per-cell means of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<ResultRow>,
}

impl ExperimentOutput {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| !r.is_ok())
    }

    /// Raw rows followed by summary rows.
    pub fn all_rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().chain(self.summary.iter())
    }
}

struct Cell {
    instance: usize,
    algorithm: usize,
    k: usize,
    pes: usize,
    seed: u64,
}

/// Runs every (instance, algorithm, k, PE count, repetition) cell on up to
/// `threads` workers; seeds are `base_seed + r`. Failures become rows with
/// an error and do not stop the run. Rows come out in a fixed order
/// independent of `threads`.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentOutput, BenchError> {
    spec.validate()?;
    let graphs: Vec<Result<Graph, String>> = spec
        .instances
        .iter()
        .map(|name| {
            name.parse::<InstanceSource>()
                .and_then(|s| s.load())
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut cells = Vec::new();
    for instance in 0..spec.instances.len() {
        for (algorithm, alg) in spec.algorithms.iter().enumerate() {
            let pe_counts: &[usize] = if alg.algorithm.is_distributed() {
                &spec.pe_counts
            } else {
                &[1]
            };
            for &k in &spec.k_values {
                for &pes in pe_counts {
                    for r in 0..spec.repetitions {
                        cells.push(Cell {
                            instance,
                            algorithm,
                            k,
                            pes,
                            seed: spec.base_seed + r as u64,
                        });
                    }
                }
            }
        }
    }

    let rows = parallel_map(cells, threads.max(1), |cell| {
        let name = &spec.instances[cell.instance];
        let alg = &spec.algorithms[cell.algorithm];
        let outcome = graphs[cell.instance].as_ref().map_err(|e| e.clone()).and_then(|g| {
            run_algorithm(g, alg, cell.k, cell.pes, cell.seed, spec.epsilon, 1).map_err(|e| e.to_string())
        });
        match outcome {
            Ok(o) => row_from_outcome(name, alg.algorithm, cell.k, cell.pes, cell.seed, &o),
            Err(e) => ResultRow::failed(name, alg.algorithm, cell.k, cell.pes, cell.seed, e),
        }
    });
    let summary = summarize(&rows);
    Ok(ExperimentOutput { rows, summary })
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let values: Vec<f64> = values.flatten().collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// One `Mean` row per (instance, algorithm, k, pes), in first-seen order.
pub fn summarize(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut order: Vec<(String, Algorithm, usize, usize)> = Vec::new();
    let mut groups: BTreeMap<(String, Algorithm, usize, usize), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.kind == RowKind::Run) {
        let key = (row.instance.clone(), row.algorithm, row.k, row.pes);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let ok: Vec<&ResultRow> = group.iter().copied().filter(|r| r.is_ok()).collect();
            let error = if ok.is_empty() {
                group.iter().find_map(|r| r.error.clone())
            } else {
                None
            };
            ResultRow {
                kind: RowKind::Mean,
                instance: key.0.clone(),
                algorithm: key.1,
                k: key.2,
                pes: key.3,
                seed: None,
                vertex_cut: mean(ok.iter().map(|r| r.vertex_cut)),
                replication_factor: mean(ok.iter().map(|r| r.replication_factor)),
                max_imbalance: mean(ok.iter().map(|r| r.max_imbalance)),
                feasible: if ok.is_empty() {
                    None
                } else {
                    Some(ok.iter().all(|r| r.feasible == Some(true)))
                },
                construction_ms: mean(ok.iter().map(|r| r.construction_ms)),
                partition_ms: mean(ok.iter().map(|r| r.partition_ms)),
                total_ms: mean(ok.iter().map(|r| r.total_ms)),
                messages_sent: mean(ok.iter().map(|r| r.messages_sent)),
                message_bytes: mean(ok.iter().map(|r| r.message_bytes)),
                error,
            }
        })
        .collect()
}

/// Geometric mean over instances of the per-instance mean vertex cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub instances: usize,
    pub geometric_mean: f64,
    /// Set when some instance mean was zero; `geometric_mean` is then the
    /// geometric mean of `1 + cut`.
    pub shifted: bool,
}

/// Per (algorithm, k): arithmetic mean over the successful seeds of each
/// instance, then the geometric mean across instances.
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<AggregateRow>, BenchError> {
    let mut per_instance: BTreeMap<(Algorithm, usize), BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.kind == RowKind::Run) {
        if let Some(cut) = row.vertex_cut {
            per_instance
                .entry((row.algorithm, row.k))
                .or_default()
                .entry(row.instance.clone())
                .or_default()
                .push(cut);
        }
    }
    if per_instance.is_empty() {
        return Err(BenchError::Empty);
    }
    Ok(per_instance
        .into_iter()
        .map(|((algorithm, k), instances)| {
            let means: Vec<f64> = instances
                .values()
                .map(|cuts| cuts.iter().sum::<f64>() / cuts.len() as f64)
                .collect();
            let shifted = means.contains(&0.0);
            let shift = if shifted { 1.0 } else { 0.0 };
            let log_mean = means.iter().map(|m| (m + shift).ln()).sum::<f64>() / means.len() as f64;
            AggregateRow {
                algorithm,
                k,
                instances: means.len(),
                geometric_mean: log_mean.exp(),
                shifted,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioBasis {
    /// Best vertex cut over the seeds.
    #[default]
    Best,
    /// Mean vertex cut over the seeds.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub algorithm: Algorithm,
    pub instance: String,
    pub k: usize,
    pub ratio: f64,
}

/// `1 − best / cut` per algorithm and (instance, k), where `best` is the
/// smallest cut among all algorithms. An algorithm without a successful run
/// gets 1; `0 / 0` counts as 0. Rows are sorted by algorithm, then ratio.
pub fn performance_ratios(rows: &[ResultRow], basis: RatioBasis) -> Vec<RatioRow> {
    let mut cuts: BTreeMap<(String, usize), BTreeMap<Algorithm, Vec<f64>>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.kind == RowKind::Run) {
        let entry = cuts
            .entry((row.instance.clone(), row.k))
            .or_default()
            .entry(row.algorithm)
            .or_default();
        if let Some(cut) = row.vertex_cut {
            entry.push(cut);
        }
    }
    let mut out = Vec::new();
    for ((instance, k), algs) in cuts {
        let value = |v: &[f64]| -> Option<f64> {
            if v.is_empty() {
                return None;
            }
            Some(match basis {
                RatioBasis::Best => v.iter().cloned().fold(f64::INFINITY, f64::min),
                RatioBasis::Mean => v.iter().sum::<f64>() / v.len() as f64,
            })
        };
        let values: Vec<(Algorithm, Option<f64>)> = algs.iter().map(|(a, v)| (*a, value(v))).collect();
        let best = values
            .iter()
            .filter_map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        for (algorithm, v) in values {
            let ratio = match v {
                None => 1.0,
                Some(0.0) => 0.0,
                Some(c) => 1.0 - best / c,
            };
            out.push(RatioRow {
                algorithm,
                instance: instance.clone(),
                k,
                ratio,
            });
        }
    }
    out.sort_by(|a, b| {
        a.algorithm
            .cmp(&b.algorithm)
            .then(a.ratio.total_cmp(&b.ratio))
            .then_with(|| (&a.instance, a.k).cmp(&(&b.instance, b.k)))
    });
    out
}

/// One run per PE count with the same seed.
#[allow(clippy::too_many_arguments)]
pub fn scaling_run(
    instance: &str,
    g: &Graph,
    algorithm: &AlgorithmSpec,
    k: usize,
    pe_counts: &[usize],
    seed: u64,
    epsilon: f64,
    threads: usize,
) -> Result<Vec<ResultRow>, BenchError> {
    if pe_counts.windows(2).any(|w| w[0] > w[1]) {
        return Err(BenchError::InvalidSpec("PE counts must be sorted ascending".into()));
    }
    if let Some(&p) = pe_counts.iter().find(|&&p| p == 0 || p > g.node_count()) {
        return Err(BenchError::InvalidSpec(format!(
            "PE count {p} is outside 1..={}",
            g.node_count()
        )));
    }
    pe_counts
        .iter()
        .map(|&pes| {
            let outcome = run_algorithm(g, algorithm, k, pes, seed, epsilon, threads)?;
            Ok(row_from_outcome(instance, algorithm.algorithm, k, pes, seed, &outcome))
        })
        .collect()
}

pub fn write_csv<'a, T: Serialize + 'a>(
    rows: impl IntoIterator<Item = &'a T>,
    out: impl Write,
) -> Result<(), BenchError> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_rows(input: impl Read) -> Result<Vec<ResultRow>, BenchError> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .collect::<Result<Vec<ResultRow>, _>>()
        .map_err(BenchError::from)
}

/// Worker count for experiments: `EDGEPART_THREADS` if set, else the
/// available parallelism.
pub fn experiment_threads() -> usize {
    default_threads()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(instances: &[&str], algorithms: &[Algorithm], k: &[usize], reps: usize) -> ExperimentSpec {
        ExperimentSpec {
            instances: instances.iter().map(|s| s.to_string()).collect(),
            algorithms: algorithms.iter().map(|&a| a.into()).collect(),
            k_values: k.to_vec(),
            repetitions: reps,
            ..ExperimentSpec::default()
        }
    }

    fn cut_row(instance: &str, algorithm: Algorithm, seed: u64, cut: Option<f64>) -> ResultRow {
        let mut row = ResultRow::failed(instance, algorithm, 2, 1, seed, "x".into());
        if cut.is_some() {
            row.error = None;
            row.vertex_cut = cut;
        }
        row
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        assert!("metis".parse::<Algorithm>().is_err());
    }

    #[test]
    fn instance_sources() {
        assert_eq!(
            "er:10:0.5@3".parse::<InstanceSource>().unwrap(),
            InstanceSource::Generated {
                generator: Generator::ErdosRenyi { n: 10, p: 0.5 },
                seed: 3
            }
        );
        assert_eq!(
            "grid:2x3".parse::<InstanceSource>().unwrap(),
            InstanceSource::Generated {
                generator: Generator::Grid { rows: 2, cols: 3 },
                seed: 0
            }
        );
        assert_eq!(
            "graphs/a.graph".parse::<InstanceSource>().unwrap(),
            InstanceSource::File(PathBuf::from("graphs/a.graph"))
        );
        assert!("er:x:1".parse::<InstanceSource>().is_err());
    }

    #[test]
    fn spec_from_json() {
        let text = r#"{
            "instances": ["ring:6"],
            "algorithms": ["greedy", {"algorithm": "jabeja-vc", "jabeja_iterations": 5}],
            "k_values": [2],
            "repetitions": 2
        }"#;
        let spec = ExperimentSpec::from_json(text.as_bytes()).unwrap();
        assert_eq!(spec.algorithms[0], Algorithm::Greedy.into());
        assert_eq!(spec.algorithms[1].options.jabeja_iterations, 5);
        assert_eq!(spec.epsilon, 0.03);
        assert_eq!(spec.pe_counts, vec![1]);
        let defaults = ExperimentSpec::from_json("{}".as_bytes()).unwrap();
        assert_eq!(defaults.k_values, vec![2, 4, 8, 16, 32, 64, 128]);
        assert_eq!(defaults.repetitions, 5);
        assert!(ExperimentSpec::from_json(r#"{"repetitions": 0}"#.as_bytes()).is_err());
        assert!(ExperimentSpec::from_json(r#"{"k_values": [0]}"#.as_bytes()).is_err());
    }

    #[test]
    fn five_repetitions_give_five_rows_and_one_mean() {
        let out = run_experiment(&spec(&["er:40:0.1"], &[Algorithm::Greedy], &[2], 5), 2).unwrap();
        assert_eq!(out.rows.len(), 5);
        assert_eq!(out.summary.len(), 1);
        let seeds: Vec<u64> = out.rows.iter().map(|r| r.seed.unwrap()).collect();
        assert_eq!(seeds, vec![0, 1, 2, 3, 4]);
        let mean = out.rows.iter().map(|r| r.vertex_cut.unwrap()).sum::<f64>() / 5.0;
        assert_eq!(out.summary[0].vertex_cut, Some(mean));
        assert_eq!(out.summary[0].kind, RowKind::Mean);
        assert_eq!(out.summary[0].seed, None);
    }

    #[test]
    fn deterministic_algorithm_gives_identical_cuts() {
        // k = 1 leaves nothing to randomize
        let out = run_experiment(&spec(&["grid:5x5"], &[Algorithm::DspacLp], &[1], 5), 1).unwrap();
        let cuts: Vec<f64> = out.rows.iter().map(|r| r.vertex_cut.unwrap()).collect();
        assert!(cuts.iter().all(|&c| c == cuts[0]));
        assert_eq!(out.summary[0].vertex_cut, Some(cuts[0]));
    }

    #[test]
    fn unloadable_instance_becomes_error_rows() {
        let out = run_experiment(
            &spec(&["/nonexistent/g.graph", "ring:8"], &[Algorithm::Random], &[2], 1),
            1,
        )
        .unwrap();
        assert!(out.has_errors());
        assert!(out.rows[0].error.as_deref().unwrap().contains("nonexistent"));
        assert!(out.rows[1].is_ok());
        assert!(out.summary[0].error.is_some());
    }

    #[test]
    fn rows_do_not_depend_on_thread_count() {
        let s = ExperimentSpec {
            pe_counts: vec![1, 3],
            ..spec(&["er:60:0.1", "grid:4x6"], &Algorithm::ALL, &[2, 4], 2)
        };
        let strip = |o: ExperimentOutput| -> Vec<ResultRow> {
            o.all_rows().map(|r| r.without_timings()).collect()
        };
        let one = strip(run_experiment(&s, 1).unwrap());
        let four = strip(run_experiment(&s, 4).unwrap());
        assert_eq!(one, four);
        assert_eq!(one.iter().filter(|r| r.kind == RowKind::Run).count(), 2 * (4 * 2 * 2 + 2 * 2 * 2));
    }

    #[test]
    fn aggregate_uses_geometric_mean() {
        let rows = vec![
            cut_row("a", Algorithm::Greedy, 0, Some(1.0)),
            cut_row("a", Algorithm::Greedy, 1, Some(3.0)),
            cut_row("b", Algorithm::Greedy, 0, Some(8.0)),
        ];
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.len(), 1);
        assert!((agg[0].geometric_mean - 4.0).abs() < 1e-12);
        assert!(!agg[0].shifted);

        let single = aggregate(&rows[..2]).unwrap();
        assert!((single[0].geometric_mean - 2.0).abs() < 1e-12);

        let zero = vec![cut_row("a", Algorithm::Random, 0, Some(0.0)), cut_row("b", Algorithm::Random, 0, Some(3.0))];
        let agg = aggregate(&zero).unwrap();
        assert!(agg[0].shifted);
        assert!((agg[0].geometric_mean - 2.0).abs() < 1e-12);
        assert!(matches!(aggregate(&[]), Err(BenchError::Empty)));
    }

    #[test]
    fn ratio_examples() {
        let rows = vec![
            cut_row("i", Algorithm::Greedy, 0, Some(100.0)),
            cut_row("i", Algorithm::Random, 0, Some(120.0)),
        ];
        let ratios = performance_ratios(&rows, RatioBasis::Best);
        assert_eq!(ratios[0].algorithm, Algorithm::Random);
        assert!((ratios[0].ratio - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(ratios[1].ratio, 0.0);

        let equal = vec![
            cut_row("i", Algorithm::Greedy, 0, Some(7.0)),
            cut_row("i", Algorithm::Random, 0, Some(7.0)),
            cut_row("j", Algorithm::Greedy, 0, Some(0.0)),
            cut_row("j", Algorithm::Random, 0, Some(0.0)),
        ];
        assert!(performance_ratios(&equal, RatioBasis::Best).iter().all(|r| r.ratio == 0.0));

        let failed = vec![
            cut_row("i", Algorithm::Greedy, 0, Some(7.0)),
            cut_row("i", Algorithm::JabejaVc, 0, None),
        ];
        let r = performance_ratios(&failed, RatioBasis::Best);
        assert_eq!(r.iter().find(|r| r.algorithm == Algorithm::JabejaVc).unwrap().ratio, 1.0);
    }

    #[test]
    fn ratio_basis_best_or_mean() {
        let rows = vec![
            cut_row("i", Algorithm::Greedy, 0, Some(10.0)),
            cut_row("i", Algorithm::Greedy, 1, Some(30.0)),
            cut_row("i", Algorithm::Random, 0, Some(20.0)),
        ];
        let best = performance_ratios(&rows, RatioBasis::Best);
        let greedy = best.iter().find(|r| r.algorithm == Algorithm::Greedy).unwrap();
        assert_eq!(greedy.ratio, 0.0);
        let mean = performance_ratios(&rows, RatioBasis::Mean);
        let greedy = mean.iter().find(|r| r.algorithm == Algorithm::Greedy).unwrap();
        assert_eq!(greedy.ratio, 0.0);
        let random = mean.iter().find(|r| r.algorithm == Algorithm::Random).unwrap();
        assert_eq!(random.ratio, 0.0);
        let greedy_best = best.iter().find(|r| r.algorithm == Algorithm::Random).unwrap();
        assert_eq!(greedy_best.ratio, 0.5);
    }

    #[test]
    fn scaling_rows() {
        let g = generate(&Generator::Grid { rows: 6, cols: 6 }, 0).unwrap();
        let alg: AlgorithmSpec = Algorithm::DspacLp.into();
        let rows = scaling_run("grid", &g, &alg, 2, &[1, 2, 4, 8], 7, 0.03, 2).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].message_bytes, Some(0.0));
        assert!(rows[1].message_bytes.unwrap() > 0.0);
        assert!(rows.iter().all(|r| r.vertex_cut == rows[0].vertex_cut));
        let sequential = run_algorithm(&g, &alg, 2, 1, 7, 0.03, 1).unwrap();
        assert_eq!(rows[0].vertex_cut, Some(sequential.report.vertex_cut as f64));
        assert!(scaling_run("grid", &g, &alg, 2, &[2, 1], 7, 0.03, 1).is_err());
        assert!(scaling_run("grid", &g, &alg, 2, &[1, 64], 7, 0.03, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let out = run_experiment(&spec(&["ring:10", "/missing"], &[Algorithm::Greedy], &[2], 2), 1).unwrap();
        let mut buf = Vec::new();
        write_csv(out.all_rows(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "kind,instance,algorithm,k,pes,seed,vertex_cut,replication_factor,max_imbalance,feasible,\
             construction_ms,partition_ms,total_ms,messages_sent,message_bytes,error\n"
        ));
        let back = read_rows(&buf[..]).unwrap();
        assert_eq!(back, out.all_rows().cloned().collect::<Vec<_>>());
    }
}
