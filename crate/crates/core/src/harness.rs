//! Experiment harness: target-pair sampling, desk-scale subgraph
//! extraction, sweeps over thresholds and accuracies, and CSV emission.
//!
//! A sweep runs each requested algorithm on every `(T, eps)` grid cell,
//! independently from zero impact, and records the returned norm together
//! with the work metrics (univariate-search queries, stored paths, rounds).
//! Identical specs produce identical CSV output except for the wall-clock
//! column.

use std::collections::HashSet;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::baselines::{cut_baseline, discrete_baseline, exact_tiny};
use crate::cpl::{full_set_interdiction, incremental_interdiction, is_eps_feasible_with, CplConfig, SolveResult, TbChoice};
use crate::error::{Error, Result};
use crate::graph::{all_simple_paths, Graph, NodeId, TargetPairs};
use crate::real::Real;
use crate::weights::{uniform_functions, ImpactVector, WeightFunction};

/// Solver or baseline selectable in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    IiTe,
    IiJsg,
    FiTe,
    FiJsg,
    Cut,
    Discrete,
    Exact,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::IiTe,
        Algorithm::IiJsg,
        Algorithm::FiTe,
        Algorithm::FiJsg,
        Algorithm::Cut,
        Algorithm::Discrete,
        Algorithm::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::IiTe => "II-TE",
            Algorithm::IiJsg => "II-JSG",
            Algorithm::FiTe => "FI-TE",
            Algorithm::FiJsg => "FI-JSG",
            Algorithm::Cut => "CUT",
            Algorithm::Discrete => "DISCRETE",
            Algorithm::Exact => "EXACT",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase();
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{s}`")))
    }
}

/// How the target pairs of an experiment are obtained.
#[derive(Debug, Clone)]
pub enum PairSpec {
    /// Raw-id pairs file, one `s t` per line.
    File(PathBuf),
    /// Uniform sample of distinct ordered pairs.
    Sample { num: usize, seed: u64 },
}

/// Full description of one experiment sweep.
#[derive(Debug, Clone)]
pub struct ExperimentSpec<S> {
    pub graph_path: PathBuf,
    pub undirected: bool,
    /// Optional BFS-ball restriction of the loaded graph: (seed, node count).
    pub subgraph: Option<(u64, usize)>,
    pub pairs: PairSpec,
    pub function_spec: String,
    pub t_grid: Vec<S>,
    pub eps_grid: Vec<S>,
    pub k: usize,
    pub algorithms: Vec<Algorithm>,
    /// Requirement decay per sweep for threshold expansion.
    pub eps_sched: S,
    /// Grid step of the exact oracle.
    pub grid_step: S,
}

/// Cell outcome tag. Failed and skipped cells keep the sweep running.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Skipped(String),
    Failed(String),
}

impl CellStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, CellStatus::Ok)
    }
}

/// One sweep cell: algorithm x threshold x accuracy.
#[derive(Debug, Clone)]
pub struct RunRecord<S> {
    pub algorithm: Algorithm,
    pub function: String,
    pub t: S,
    pub eps: S,
    pub norm_x: S,
    pub queries: u64,
    pub max_stored_paths: usize,
    pub rounds: u32,
    pub per_round_paths: Vec<usize>,
    pub wall_ms: u128,
    pub status: CellStatus,
}

/// Uniform distinct ordered pairs of nodes with degree at least one,
/// deterministic per seed.
pub fn sample_pairs(g: &Graph, num: usize, seed: u64) -> Result<TargetPairs> {
    if num < 1 {
        return Err(Error::InvalidArgument("pair count must be at least 1".into()));
    }
    let eligible: Vec<NodeId> = (0..g.node_count()).filter(|&v| g.degree(v) >= 1).collect();
    let d = eligible.len();
    if d < 2 {
        return Err(Error::InvalidArgument("graph needs two connected-degree nodes".into()));
    }
    let available = d * (d - 1);
    if num > available {
        return Err(Error::InvalidArgument(format!(
            "requested {num} pairs but only {available} ordered pairs exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut pairs = Vec::with_capacity(num);
    while pairs.len() < num {
        let s = eligible[rng.gen_range(0..d)];
        let t = eligible[rng.gen_range(0..d)];
        if s != t && chosen.insert((s, t)) {
            pairs.push((s, t));
        }
    }
    TargetPairs::new(pairs, g)
}

/// BFS ball around a seeded random center, truncated to `size` nodes, with
/// induced arcs. When a component is exhausted the walk restarts from the
/// smallest unvisited node, so `size = n` always reproduces the full graph
/// (up to id remapping). Deterministic per seed.
pub fn extract_subgraph(g: &Graph, center_seed: u64, size: usize) -> Graph {
    let n = g.node_count();
    let size = size.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(center_seed);
    let center = rng.gen_range(0..n);

    let mut picked: Vec<NodeId> = Vec::with_capacity(size);
    let mut visited = vec![false; n];
    let mut queue = VecDeque::new();
    queue.push_back(center);
    visited[center] = true;
    while picked.len() < size {
        match queue.pop_front() {
            Some(u) => {
                picked.push(u);
                for &v in g.successors(u) {
                    if !visited[v] {
                        visited[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            None => {
                // component exhausted: restart from the smallest unvisited node
                match (0..n).find(|&v| !visited[v]) {
                    Some(v) => {
                        visited[v] = true;
                        queue.push_back(v);
                    }
                    None => break,
                }
            }
        }
    }

    let mut new_id = vec![usize::MAX; n];
    for (i, &v) in picked.iter().enumerate() {
        new_id[v] = i;
    }
    let arcs: Vec<(NodeId, NodeId)> = g
        .arcs()
        .iter()
        .filter(|&&(u, v)| new_id[u] != usize::MAX && new_id[v] != usize::MAX)
        .map(|&(u, v)| (new_id[u], new_id[v]))
        .collect();
    let raw_ids: Vec<u64> = picked.iter().map(|&v| g.raw_id(v)).collect();
    Graph::with_raw_ids(picked.len(), arcs, raw_ids, g.undirected_source())
}

fn solve_cell<S: Real>(
    algorithm: Algorithm,
    g: &Graph,
    fs: &[WeightFunction<S>],
    pairs: &TargetPairs,
    t: S,
    eps: S,
    k: usize,
    eps_sched: S,
    grid_step: S,
) -> Result<SolveResult<S>> {
    let mut cfg = CplConfig::new(t, eps)?;
    cfg.k = k;
    cfg.tb_config.rate_decay = eps_sched;
    match algorithm {
        Algorithm::IiTe => {
            cfg.tb = TbChoice::Te;
            incremental_interdiction(g, fs, pairs, &cfg)
        }
        Algorithm::IiJsg => {
            cfg.tb = TbChoice::Jsg;
            incremental_interdiction(g, fs, pairs, &cfg)
        }
        Algorithm::FiTe => {
            cfg.tb = TbChoice::Te;
            full_set_interdiction(g, fs, pairs, &cfg)
        }
        Algorithm::FiJsg => {
            cfg.tb = TbChoice::Jsg;
            full_set_interdiction(g, fs, pairs, &cfg)
        }
        Algorithm::Cut => cut_baseline(g, fs, pairs, t, eps, k),
        Algorithm::Discrete => discrete_baseline(g, fs, pairs, t, eps, k),
        Algorithm::Exact => {
            let x = exact_tiny(g, fs, pairs, t, grid_step, S::of(1e9))?;
            Ok(norm_placeholder(x))
        }
    }
}

fn norm_placeholder<S: Real>(x: ImpactVector<S>) -> SolveResult<S> {
    SolveResult {
        x,
        rounds: 0,
        per_round_paths: Vec::new(),
        max_stored_paths: 0,
        queries: 0,
        updates: 0,
        round_paths: None,
    }
}

/// Checks the oracle preconditions before dispatching an EXACT cell.
fn exact_cell_guard<S: Real>(g: &Graph, fs: &[WeightFunction<S>], pairs: &TargetPairs, t: S) -> Option<String> {
    if g.node_count() > 10 {
        return Some(format!("skipped: oracle precondition ({} nodes > 10)", g.node_count()));
    }
    let mut count = 0usize;
    for &(s, tt) in pairs.pairs() {
        match all_simple_paths(g, s, tt, 4000) {
            Ok(paths) => {
                count += paths
                    .iter()
                    .filter(|p| {
                        p.nodes().iter().fold(S::zero(), |acc, &v| acc + fs[v].eval(S::zero())) < t
                    })
                    .count()
            }
            Err(_) => return Some("skipped: oracle precondition (path explosion)".into()),
        }
        if count > 200 {
            return Some(format!("skipped: oracle precondition ({count} feasible paths > 200)"));
        }
    }
    None
}

/// Runs the full Cartesian sweep. Cells are solved independently from zero
/// impact in deterministic order (algorithms, then thresholds, then
/// accuracies); cell failures are recorded, not fatal. Every successful
/// cell is re-checked for feasibility before it is reported.
pub fn run_experiment<S: Real>(spec: &ExperimentSpec<S>) -> Result<Vec<RunRecord<S>>> {
    let file = fs::File::open(&spec.graph_path).map_err(|e| {
        Error::InvalidArgument(format!("cannot open graph {}: {e}", spec.graph_path.display()))
    })?;
    let mut g = Graph::from_edge_list(BufReader::new(file), spec.undirected)?;
    if let Some((seed, size)) = spec.subgraph {
        g = extract_subgraph(&g, seed, size);
    }
    let pairs = match &spec.pairs {
        PairSpec::File(path) => {
            let text = fs::read_to_string(path)?;
            TargetPairs::parse(&text, &g)?
        }
        PairSpec::Sample { num, seed } => sample_pairs(&g, *num, *seed)?,
    };
    let proto = WeightFunction::<S>::parse(&spec.function_spec)?;
    let fs_vec = uniform_functions(&proto, g.node_count());
    let function = proto.family_name().to_string();

    let mut records = Vec::new();
    for &algorithm in &spec.algorithms {
        for &t in &spec.t_grid {
            for &eps in &spec.eps_grid {
                let started = Instant::now();
                let mut record = RunRecord {
                    algorithm,
                    function: function.clone(),
                    t,
                    eps,
                    norm_x: S::nan(),
                    queries: 0,
                    max_stored_paths: 0,
                    rounds: 0,
                    per_round_paths: Vec::new(),
                    wall_ms: 0,
                    status: CellStatus::Ok,
                };
                if algorithm == Algorithm::Exact {
                    if let Some(reason) = exact_cell_guard(&g, &fs_vec, &pairs, t) {
                        record.status = CellStatus::Skipped(reason);
                        record.wall_ms = started.elapsed().as_millis();
                        records.push(record);
                        continue;
                    }
                }
                match solve_cell(algorithm, &g, &fs_vec, &pairs, t, eps, spec.k, spec.eps_sched, spec.grid_step) {
                    Ok(res) => {
                        let feasible = algorithm == Algorithm::Exact
                            || is_eps_feasible_with(&g, &fs_vec, &res.x, &pairs, t, eps, S::of(1e-9));
                        if feasible {
                            record.norm_x = res.x.norm();
                            record.queries = res.queries;
                            record.max_stored_paths = res.max_stored_paths;
                            record.rounds = res.rounds;
                            record.per_round_paths = res.per_round_paths;
                        } else {
                            record.status =
                                CellStatus::Failed("returned vector is not eps-feasible".into());
                        }
                    }
                    Err(e) => {
                        record.status = CellStatus::Failed(e.to_string());
                    }
                }
                record.wall_ms = started.elapsed().as_millis();
                records.push(record);
            }
        }
    }
    Ok(records)
}

/// Renders the per-cell summary table.
pub fn render_csv<S: Real>(records: &[RunRecord<S>]) -> String {
    let mut out = String::from("algorithm,function,T,epsilon,norm_x,queries,max_stored_paths,rounds,wall_ms\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.algorithm.name(),
            r.function,
            r.t,
            r.eps,
            r.norm_x,
            r.queries,
            r.max_stored_paths,
            r.rounds,
            r.wall_ms
        );
    }
    out
}

/// Renders the long-format per-round stored-path series of successful cells.
pub fn render_rounds_csv<S: Real>(records: &[RunRecord<S>]) -> String {
    let mut out = String::from("algorithm,function,T,epsilon,round,stored_paths\n");
    for r in records {
        if !r.status.is_ok() {
            continue;
        }
        for (i, &count) in r.per_round_paths.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.algorithm.name(),
                r.function,
                r.t,
                r.eps,
                i + 1,
                count
            );
        }
    }
    out
}

/// Path of the sibling per-round file: `runs.csv` -> `runs.rounds.csv`.
pub fn rounds_path(out: &FsPath) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => out.with_extension(format!("rounds.{ext}")),
        None => out.with_extension("rounds.csv"),
    }
}

/// Writes the summary CSV to `out` and the round series to its sibling.
pub fn emit_csv<S: Real>(records: &[RunRecord<S>], out: &FsPath) -> Result<()> {
    fs::write(out, render_csv(records))?;
    fs::write(rounds_path(out), render_rounds_csv(records))?;
    Ok(())
}

/// Key-value sweep description, deserialized from TOML.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub graph: PathBuf,
    #[serde(default = "default_true")]
    pub undirected: bool,
    pub pairs_file: Option<PathBuf>,
    pub num_pairs: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub function: String,
    #[serde(rename = "T")]
    pub t: Vec<f64>,
    pub epsilon: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    pub algorithms: Vec<String>,
    pub subgraph_size: Option<usize>,
    #[serde(default)]
    pub subgraph_seed: u64,
    #[serde(default = "default_eps_sched")]
    pub eps_sched: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
}

fn default_true() -> bool {
    true
}
fn default_k() -> usize {
    20
}
fn default_eps_sched() -> f64 {
    0.1
}
fn default_grid_step() -> f64 {
    1.0
}

impl SweepFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("sweep spec: {e}")))
    }

    pub fn into_spec(self) -> Result<ExperimentSpec<f64>> {
        let pairs = match (self.pairs_file, self.num_pairs) {
            (Some(path), None) => PairSpec::File(path),
            (None, Some(num)) => PairSpec::Sample { num, seed: self.seed },
            _ => {
                return Err(Error::InvalidArgument(
                    "exactly one of pairs_file / num_pairs is required".into(),
                ))
            }
        };
        if self.t.is_empty() || self.epsilon.is_empty() {
            return Err(Error::InvalidArgument("T and epsilon grids must be non-empty".into()));
        }
        let algorithms = self
            .algorithms
            .iter()
            .map(|s| Algorithm::parse(s))
            .collect::<Result<Vec<_>>>()?;
        if algorithms.is_empty() {
            return Err(Error::InvalidArgument("algorithm list must be non-empty".into()));
        }
        Ok(ExperimentSpec {
            graph_path: self.graph,
            undirected: self.undirected,
            subgraph: self.subgraph_size.map(|s| (self.subgraph_seed, s)),
            pairs,
            function_spec: self.function,
            t_grid: self.t,
            eps_grid: self.epsilon,
            k: self.k,
            algorithms,
            eps_sched: self.eps_sched,
            grid_step: self.grid_step,
        })
    }
}
