//! Command-line front end: single-combo solves, spec-file sweeps and the
//! exact oracle for tiny instances.
//!
//! Exit codes: 0 on full success, 2 when some sweep cells failed or were
//! skipped, 1 on hard errors (bad arguments, unreadable inputs).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clpi::harness::{emit_csv, render_csv, run_experiment, sample_pairs, Algorithm, CellStatus, PairSpec, SweepFile};
use clpi::weights::uniform_functions;
use clpi::{baselines, Graph, TargetPairs, WeightFn};

#[derive(Parser)]
#[command(name = "clpi", about = "Length-bounded path interdiction with continuous impacts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file: one `u v` pair per line, `#` comments
    #[arg(long)]
    graph: PathBuf,
    /// Treat input edges as undirected (each yields two arcs)
    #[arg(long)]
    undirected: bool,
    /// Restrict to a BFS ball of this many nodes
    #[arg(long)]
    subgraph_size: Option<usize>,
    /// Seed for the subgraph center
    #[arg(long, default_value_t = 0)]
    subgraph_seed: u64,
}

#[derive(Args)]
struct PairArgs {
    /// Pairs file with raw ids, one `s t` per line
    #[arg(long, conflicts_with = "num_pairs")]
    pairs: Option<PathBuf>,
    /// Sample this many distinct ordered pairs instead
    #[arg(long)]
    num_pairs: Option<usize>,
    /// Sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run one CPL x TB combination over a T/epsilon grid
    Solve {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        pairs: PairArgs,
        /// Weight function spec, `family:c[:f0]`
        #[arg(long)]
        function: String,
        /// Threshold grid, comma separated
        #[arg(long = "T", value_delimiter = ',', required = true)]
        t: Vec<f64>,
        /// Accuracy grid, comma separated
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        epsilon: Vec<f64>,
        /// Shortest paths per pair and round
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Path-listing driver: ii or fi
        #[arg(long, value_parser = ["ii", "fi"])]
        cpl: String,
        /// Blocking algorithm: te or jsg
        #[arg(long, value_parser = ["te", "jsg"])]
        tb: String,
        /// Requirement decay per expansion sweep
        #[arg(long, default_value_t = 0.1)]
        eps_sched: f64,
        /// Output CSV (per-round series goes to a `.rounds.csv` sibling)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep described by a key-value spec file
    Sweep {
        /// TOML spec: graph, function, T, epsilon, algorithms, ...
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive grid oracle for tiny instances (<= 10 nodes)
    Oracle {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        pairs: PairArgs,
        #[arg(long)]
        function: String,
        #[arg(long = "T")]
        t: f64,
        /// Impact grid step
        #[arg(long, default_value_t = 1.0)]
        grid_step: f64,
        /// Per-node impact bound
        #[arg(long, default_value_t = 1e9)]
        x_max: f64,
    },
}

fn load_graph(args: &GraphArgs) -> clpi::Result<Graph> {
    let file = std::fs::File::open(&args.graph).map_err(|e| {
        clpi::Error::InvalidArgument(format!("cannot open graph {}: {e}", args.graph.display()))
    })?;
    let mut g = Graph::from_edge_list(std::io::BufReader::new(file), args.undirected)?;
    if let Some(size) = args.subgraph_size {
        g = clpi::harness::extract_subgraph(&g, args.subgraph_seed, size);
    }
    Ok(g)
}

fn load_pairs(args: &PairArgs, g: &Graph) -> clpi::Result<TargetPairs> {
    match (&args.pairs, args.num_pairs) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            TargetPairs::parse(&text, g)
        }
        (None, Some(num)) => sample_pairs(g, num, args.seed),
        _ => Err(clpi::Error::InvalidArgument(
            "exactly one of --pairs / --num-pairs is required".into(),
        )),
    }
}

fn finish(records: &[clpi::Record], out: Option<&PathBuf>) -> clpi::Result<ExitCode> {
    match out {
        Some(path) => emit_csv(records, path)?,
        None => print!("{}", render_csv(records)),
    }
    let mut all_ok = true;
    for r in records {
        match &r.status {
            CellStatus::Ok => {}
            CellStatus::Skipped(msg) | CellStatus::Failed(msg) => {
                all_ok = false;
                eprintln!(
                    "cell {} T={} eps={}: {}",
                    r.algorithm.name(),
                    r.t,
                    r.eps,
                    msg
                );
            }
        }
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run() -> clpi::Result<ExitCode> {
    match Cli::parse().command {
        Command::Solve { graph, pairs, function, t, epsilon, k, cpl, tb, eps_sched, out } => {
            let algorithm = match (cpl.as_str(), tb.as_str()) {
                ("ii", "te") => Algorithm::IiTe,
                ("ii", "jsg") => Algorithm::IiJsg,
                ("fi", "te") => Algorithm::FiTe,
                ("fi", "jsg") => Algorithm::FiJsg,
                _ => unreachable!("clap validates the value sets"),
            };
            let spec = clpi::Experiment {
                graph_path: graph.graph.clone(),
                undirected: graph.undirected,
                subgraph: graph.subgraph_size.map(|s| (graph.subgraph_seed, s)),
                pairs: match (&pairs.pairs, pairs.num_pairs) {
                    (Some(path), None) => PairSpec::File(path.clone()),
                    (None, Some(num)) => PairSpec::Sample { num, seed: pairs.seed },
                    _ => {
                        return Err(clpi::Error::InvalidArgument(
                            "exactly one of --pairs / --num-pairs is required".into(),
                        ))
                    }
                },
                function_spec: function,
                t_grid: t,
                eps_grid: epsilon,
                k,
                algorithms: vec![algorithm],
                eps_sched,
                grid_step: 1.0,
            };
            let records = run_experiment(&spec)?;
            finish(&records, out.as_ref())
        }
        Command::Sweep { spec, out } => {
            let text = std::fs::read_to_string(&spec)?;
            let spec = SweepFile::parse(&text)?.into_spec()?;
            let records = run_experiment(&spec)?;
            finish(&records, Some(&out))
        }
        Command::Oracle { graph, pairs, function, t, grid_step, x_max } => {
            let g = load_graph(&graph)?;
            let tp = load_pairs(&pairs, &g)?;
            let f: WeightFn = clpi::weights::WeightFunction::parse(&function)?;
            let fs = uniform_functions(&f, g.node_count());
            let x = baselines::exact_tiny(&g, &fs, &tp, t, grid_step, x_max)?;
            println!("norm_x,{}", x.norm());
            for v in 0..g.node_count() {
                if x.get(v) > 0.0 {
                    println!("{},{}", g.raw_id(v), x.get(v));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
