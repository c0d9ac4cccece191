use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use edgepart::bench::{
    aggregate, experiment_threads, performance_ratios, run_algorithm, run_experiment, scaling_run,
    write_csv, Algorithm, AlgorithmOptions, AlgorithmSpec, ExperimentSpec, InstanceSource, RatioBasis,
};
use edgepart::edge_partition::brute_force_optimal;
use edgepart::graph::{build_spmv_graph, write_edge_list, write_metis};
use edgepart::hypergraph::{graph_to_hypergraph, write_hmetis};
use edgepart::spac::build_split_graph_sequential;
use edgepart::Graph;

#[derive(Parser)]
#[command(name = "edgepart", version, about = "Edge partitioning via split graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition the edges of one instance and print a JSON quality report.
    Partition(PartitionArgs),
    /// Run an experiment described by a JSON file and write CSV rows.
    Bench(BenchArgs),
    /// Run one instance on an increasing number of PEs.
    Scale(ScaleArgs),
    /// Convert a graph to another format.
    Convert(ConvertArgs),
    /// Compute the optimal vertex cut of a small instance by enumeration.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct AlgorithmArgs {
    #[arg(long, default_value = "dspac-lp", value_parser = parse_algorithm)]
    algorithm: Algorithm,
    /// Label propagation rounds per level.
    #[arg(long)]
    lp_rounds: Option<usize>,
    /// Multilevel V-cycles.
    #[arg(long)]
    cycles: Option<usize>,
    /// Refine with label propagation only, without coarsening.
    #[arg(long)]
    single_level: bool,
    /// Ja-Be-Ja-VC iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Ja-Be-Ja-VC initial temperature.
    #[arg(long)]
    temperature: Option<f64>,
}

impl AlgorithmArgs {
    fn spec(&self) -> AlgorithmSpec {
        let d = AlgorithmOptions::default();
        AlgorithmSpec {
            algorithm: self.algorithm,
            options: AlgorithmOptions {
                lp_rounds: self.lp_rounds.unwrap_or(d.lp_rounds),
                cycles: self.cycles.unwrap_or(d.cycles),
                single_level: self.single_level,
                jabeja_iterations: self.iterations.unwrap_or(d.jabeja_iterations),
                jabeja_temperature: self.temperature.unwrap_or(d.jabeja_temperature),
            },
        }
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: edgepart::bench::BenchError| e.to_string())
}

#[derive(Args)]
struct PartitionArgs {
    /// Graph file (METIS or edge list) or generator spec such as grid:10x10.
    instance: String,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    pes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    algorithm: AlgorithmArgs,
    /// Partition file, one block per edge in canonical edge order.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Best,
    Mean,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment description in JSON.
    spec: PathBuf,
    /// CSV of raw rows followed by per-cell means; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the repetition count.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the k values.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Override epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override the PE counts of the distributed pipeline.
    #[arg(long, value_delimiter = ',')]
    pes: Option<Vec<usize>>,
    /// Also write per-instance performance ratios as CSV.
    #[arg(long)]
    ratios: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "best")]
    ratio_basis: Basis,
    /// Also write geometric means per algorithm and k as CSV.
    #[arg(long)]
    aggregate: Option<PathBuf>,
    /// Exit with status 0 even when some cells failed.
    #[arg(long)]
    keep_going: bool,
}

#[derive(Args)]
struct ScaleArgs {
    instance: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
    /// Ascending PE counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    pes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    algorithm: AlgorithmArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// METIS graph.
    Metis,
    /// Whitespace-separated edge list.
    EdgeList,
    /// hMETIS hypergraph with one hypernode per edge.
    Hmetis,
    /// Bipartite row/column graph in METIS format.
    Spmv,
    /// Split graph in METIS format.
    Split,
}

#[derive(Args)]
struct ConvertArgs {
    input: String,
    #[arg(long, value_enum)]
    to: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: String,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.03)]
    epsilon: f64,
    /// Witness partition file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(instance: &str) -> Result<Graph> {
    let source: InstanceSource = instance.parse()?;
    source.load().with_context(|| format!("loading {instance}"))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let mut out = output(Some(path))?;
    f(&mut out).with_context(|| format!("writing {}", path.display()))?;
    out.flush()?;
    Ok(())
}

fn partition(args: PartitionArgs) -> Result<ExitCode> {
    let g = load(&args.instance)?;
    let outcome = run_algorithm(
        &g,
        &args.algorithm.spec(),
        args.k,
        args.pes,
        args.seed,
        args.epsilon,
        experiment_threads(),
    )?;
    if let Some(path) = &args.out {
        write_file(path, |w| outcome.partition.write(w))?;
    }
    let mut report = serde_json::to_value(&outcome.report)?;
    report["messages_sent"] = outcome.messages_sent.into();
    report["message_bytes"] = outcome.message_bytes.into();
    let mut out = output(args.report.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let file = File::open(&args.spec).with_context(|| format!("opening {}", args.spec.display()))?;
    let mut spec = ExperimentSpec::from_json(io::BufReader::new(file))
        .with_context(|| format!("reading {}", args.spec.display()))?;
    if let Some(r) = args.reps {
        spec.repetitions = r;
    }
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if let Some(k) = args.k {
        spec.k_values = k;
    }
    if let Some(e) = args.epsilon {
        spec.epsilon = e;
    }
    if let Some(p) = args.pes {
        spec.pe_counts = p;
    }
    let result = run_experiment(&spec, experiment_threads())?;
    let mut out = output(args.out.as_deref())?;
    write_csv(result.all_rows(), &mut out)?;
    out.flush()?;
    if let Some(path) = &args.ratios {
        let basis = match args.ratio_basis {
            Basis::Best => RatioBasis::Best,
            Basis::Mean => RatioBasis::Mean,
        };
        write_csv(&performance_ratios(&result.rows, basis), output(Some(path))?)?;
    }
    if let Some(path) = &args.aggregate {
        match aggregate(&result.rows) {
            Ok(rows) => write_csv(&rows, output(Some(path))?)?,
            Err(e) => eprintln!("aggregate: {e}"),
        }
    }
    let failed: Vec<_> = result.rows.iter().filter(|r| !r.is_ok()).collect();
    for row in &failed {
        eprintln!(
            "error: {} {} k={} pes={} seed={}: {}",
            row.instance,
            row.algorithm,
            row.k,
            row.pes,
            row.seed.unwrap_or_default(),
            row.error.as_deref().unwrap_or_default()
        );
    }
    if failed.is_empty() || args.keep_going {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn scale(args: ScaleArgs) -> Result<ExitCode> {
    let g = load(&args.instance)?;
    let rows = scaling_run(
        &args.instance,
        &g,
        &args.algorithm.spec(),
        args.k,
        &args.pes,
        args.seed,
        args.epsilon,
        experiment_threads(),
    )?;
    let mut out = output(args.out.as_deref())?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn convert(args: ConvertArgs) -> Result<ExitCode> {
    let g = load(&args.input)?;
    let mut out = output(args.out.as_deref())?;
    match args.to {
        Format::Metis => write_metis(&g, &mut out)?,
        Format::EdgeList => write_edge_list(&g, &mut out)?,
        Format::Hmetis => write_hmetis(&graph_to_hypergraph(&g), &mut out)?,
        Format::Spmv => write_metis(&build_spmv_graph(&g), &mut out)?,
        Format::Split => build_split_graph_sequential(&g).write_metis(&mut out)?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: OracleArgs) -> Result<ExitCode> {
    let g = load(&args.instance)?;
    let (cut, witness) = brute_force_optimal(&g, args.k, args.epsilon)?;
    if let Some(path) = &args.out {
        write_file(path, |w| witness.write(w))?;
    }
    let report = serde_json::json!({
        "vertex_cut": cut,
        "k": args.k,
        "epsilon": args.epsilon,
        "edges": g.edge_count(),
        "witness": witness.blocks(),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Partition(a) => partition(a),
        Command::Bench(a) => bench(a),
        Command::Scale(a) => scale(a),
        Command::Convert(a) => convert(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
