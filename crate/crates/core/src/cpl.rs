//! Critical path listing: drivers that repeatedly collect k shortest paths
//! per unsatisfied target pair and hand them to a threshold-blocking
//! algorithm until every pair's distance reaches `T(1 - eps)`.
//!
//! Incremental interdiction keeps its impact vector and blocks a fresh,
//! disjoint batch of paths each round, so it never stores more than
//! `|S| * k` paths at a time. Full set interdiction accumulates every path
//! it has ever collected and re-solves the blocking task from a zero vector
//! each round, trading memory and queries for solution quality.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::{k_shortest_paths, node_weighted_distance, Graph, NodeId, Path, TargetPairs};
use crate::real::{ge_rel, Real};
use crate::tb::{jump_start_greedy, threshold_expansion, TbConfig, TbRequest, TbResult};
use crate::weights::{ImpactVector, WeightFunction};

/// Which threshold-blocking algorithm a driver calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbChoice {
    /// Threshold expansion.
    Te,
    /// Jump-start greedy.
    Jsg,
}

impl TbChoice {
    pub fn name(self) -> &'static str {
        match self {
            Self::Te => "TE",
            Self::Jsg => "JSG",
        }
    }
}

/// Driver configuration.
#[derive(Debug, Clone)]
pub struct CplConfig<S> {
    /// Shortest paths collected per unsatisfied pair and round.
    pub k: usize,
    pub threshold: S,
    pub eps: S,
    pub tb: TbChoice,
    pub tb_config: TbConfig<S>,
    pub max_rounds: u32,
    /// Keep the per-round path sets on the result (tests and diagnostics).
    pub record_paths: bool,
}

impl<S: Real> CplConfig<S> {
    pub fn new(threshold: S, eps: S) -> Result<Self> {
        if !(threshold > S::zero()) {
            return Err(Error::InvalidArgument("threshold must be positive".into()));
        }
        if !(eps > S::zero() && eps < S::one()) {
            return Err(Error::InvalidArgument("eps must lie in (0, 1)".into()));
        }
        Ok(Self {
            k: 20,
            threshold,
            eps,
            tb: TbChoice::Te,
            tb_config: TbConfig::default(),
            max_rounds: 500,
            record_paths: false,
        })
    }

    fn validate(&self, g: &Graph, fs: &[WeightFunction<S>]) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if fs.len() != g.node_count() {
            return Err(Error::InvalidArgument("one weight function per node required".into()));
        }
        if !(self.threshold > S::zero()) || !(self.eps > S::zero() && self.eps < S::one()) {
            return Err(Error::InvalidArgument("invalid threshold or eps".into()));
        }
        Ok(())
    }
}

/// Outcome of a driver run with its work and memory metrics.
#[derive(Debug, Clone)]
pub struct SolveResult<S> {
    pub x: ImpactVector<S>,
    pub rounds: u32,
    /// Stored-path count per round: the fresh batch for incremental
    /// interdiction, the cumulative set size for full set interdiction.
    pub per_round_paths: Vec<usize>,
    pub max_stored_paths: usize,
    pub queries: u64,
    pub updates: u64,
    pub round_paths: Option<Vec<Vec<Path>>>,
}

impl<S: Real> SolveResult<S> {
    fn empty(n: usize, record: bool) -> Self {
        Self {
            x: ImpactVector::zeros(n),
            rounds: 0,
            per_round_paths: Vec::new(),
            max_stored_paths: 0,
            queries: 0,
            updates: 0,
            round_paths: record.then(Vec::new),
        }
    }
}

/// True when every target pair's distance is at least `T(1 - eps)` up to
/// the default comparison tolerance.
pub fn is_eps_feasible<S: Real>(
    g: &Graph,
    fs: &[WeightFunction<S>],
    x: &ImpactVector<S>,
    pairs: &TargetPairs,
    t: S,
    eps: S,
) -> bool {
    is_eps_feasible_with(g, fs, x, pairs, t, eps, S::of(1e-9))
}

pub fn is_eps_feasible_with<S: Real>(
    g: &Graph,
    fs: &[WeightFunction<S>],
    x: &ImpactVector<S>,
    pairs: &TargetPairs,
    t: S,
    eps: S,
    cmp_rel: S,
) -> bool {
    let w = x.node_weights(fs);
    let goal = t * (S::one() - eps);
    pairs
        .pairs()
        .iter()
        .all(|&(s, tt)| ge_rel(node_weighted_distance(g, &w, s, tt, t), goal, cmp_rel))
}

fn unsatisfied_pairs<S: Real>(
    g: &Graph,
    w: &[S],
    pairs: &TargetPairs,
    t: S,
    goal: S,
    cmp_rel: S,
) -> Vec<(NodeId, NodeId)> {
    pairs
        .pairs()
        .iter()
        .copied()
        .filter(|&(s, tt)| !ge_rel(node_weighted_distance(g, w, s, tt, t), goal, cmp_rel))
        .collect()
}

/// k shortest paths for one pair, keeping only those still short of the goal.
fn collect_short_paths<S: Real>(
    g: &Graph,
    w: &[S],
    s: NodeId,
    tt: NodeId,
    k: usize,
    t: S,
    goal: S,
    cmp_rel: S,
) -> Vec<Path> {
    k_shortest_paths(g, w, s, tt, k, t)
        .into_iter()
        .filter(|p| {
            let len = p.nodes().iter().fold(S::zero(), |acc, &v| acc + w[v]).min(t);
            !ge_rel(len, goal, cmp_rel)
        })
        .collect()
}

fn run_tb<S: Real>(
    paths: &[Path],
    base: &ImpactVector<S>,
    fs: &[WeightFunction<S>],
    cfg: &CplConfig<S>,
) -> Result<TbResult<S>> {
    let req = TbRequest {
        paths,
        base,
        fs,
        threshold: cfg.threshold,
        eps: cfg.eps,
        config: &cfg.tb_config,
    };
    match cfg.tb {
        TbChoice::Te => threshold_expansion(&req),
        TbChoice::Jsg => jump_start_greedy(&req),
    }
}

/// Incremental interdiction: each round collects the k shortest paths of
/// every unsatisfied pair under the current vector, blocks the still-short
/// ones on top of it, and accumulates the result until no pair is short.
pub fn incremental_interdiction<S: Real>(
    g: &Graph,
    fs: &[WeightFunction<S>],
    pairs: &TargetPairs,
    cfg: &CplConfig<S>,
) -> Result<SolveResult<S>> {
    cfg.validate(g, fs)?;
    let goal = cfg.threshold * (S::one() - cfg.eps);
    let cmp_rel = cfg.tb_config.tol.cmp_rel;
    let mut out = SolveResult::empty(g.node_count(), cfg.record_paths);

    loop {
        let w = out.x.node_weights(fs);
        let unsat = unsatisfied_pairs(g, &w, pairs, cfg.threshold, goal, cmp_rel);
        if unsat.is_empty() {
            break;
        }
        if out.rounds >= cfg.max_rounds {
            return Err(Error::LimitExceeded {
                what: "interdiction rounds",
                limit: cfg.max_rounds as u64,
                detail: format!("{} pairs still unsatisfied", unsat.len()),
            });
        }
        out.rounds += 1;

        let mut batch: Vec<Path> = Vec::new();
        for (s, tt) in unsat {
            batch.extend(collect_short_paths(g, &w, s, tt, cfg.k, cfg.threshold, goal, cmp_rel));
        }
        if batch.is_empty() {
            return Err(Error::Contract(
                "an unsatisfied pair yielded no path below the goal".into(),
            ));
        }
        out.per_round_paths.push(batch.len());
        out.max_stored_paths = out.max_stored_paths.max(batch.len());
        if let Some(rp) = out.round_paths.as_mut() {
            rp.push(batch.clone());
        }

        let res = run_tb(&batch, &out.x, fs, cfg)?;
        out.queries += res.queries;
        out.updates += res.updates;
        out.x = out.x.add(&res.s);
    }
    debug_assert!(is_eps_feasible_with(g, fs, &out.x, pairs, cfg.threshold, cfg.eps, cmp_rel));
    Ok(out)
}

/// Full set interdiction: accumulates every collected path (deduplicated by
/// node sequence), resets the vector each round and re-blocks the whole set
/// from zero, until no pair is short.
pub fn full_set_interdiction<S: Real>(
    g: &Graph,
    fs: &[WeightFunction<S>],
    pairs: &TargetPairs,
    cfg: &CplConfig<S>,
) -> Result<SolveResult<S>> {
    cfg.validate(g, fs)?;
    let goal = cfg.threshold * (S::one() - cfg.eps);
    let cmp_rel = cfg.tb_config.tol.cmp_rel;
    let mut out = SolveResult::empty(g.node_count(), cfg.record_paths);
    let mut cumulative: Vec<Path> = Vec::new();
    let mut seen: HashSet<Vec<NodeId>> = HashSet::new();

    loop {
        let w = out.x.node_weights(fs);
        let unsat = unsatisfied_pairs(g, &w, pairs, cfg.threshold, goal, cmp_rel);
        if unsat.is_empty() {
            break;
        }
        if out.rounds >= cfg.max_rounds {
            return Err(Error::LimitExceeded {
                what: "interdiction rounds",
                limit: cfg.max_rounds as u64,
                detail: format!("{} pairs still unsatisfied", unsat.len()),
            });
        }
        out.rounds += 1;

        let mut grew = false;
        for (s, tt) in unsat {
            for p in collect_short_paths(g, &w, s, tt, cfg.k, cfg.threshold, goal, cmp_rel) {
                if seen.insert(p.nodes().to_vec()) {
                    cumulative.push(p);
                    grew = true;
                }
            }
        }
        if !grew {
            return Err(Error::Contract(
                "no new path found although some pair is unsatisfied".into(),
            ));
        }
        out.per_round_paths.push(cumulative.len());
        out.max_stored_paths = cumulative.len();
        if let Some(rp) = out.round_paths.as_mut() {
            rp.push(cumulative.clone());
        }

        let zero = ImpactVector::zeros(g.node_count());
        let res = run_tb(&cumulative, &zero, fs, cfg)?;
        out.queries += res.queries;
        out.updates += res.updates;
        out.x = res.s;
    }
    debug_assert!(is_eps_feasible_with(g, fs, &out.x, pairs, cfg.threshold, cfg.eps, cmp_rel));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::uniform_functions;
    use approx::assert_relative_eq;

    fn lin_fs(n: usize) -> Vec<WeightFunction<f64>> {
        uniform_functions(&WeightFunction::linear(1.0, 0.0).unwrap(), n)
    }

    #[test]
    fn feasibility_examples() {
        let g = Graph::from_undirected_edges(3, &[(0, 1), (1, 2)]);
        let fs = lin_fs(3);
        let pairs = TargetPairs::new(vec![(0, 2)], &g).unwrap();

        // every node at its cap saturates every path
        let loaded = ImpactVector::uniform(3, 10.0);
        assert!(is_eps_feasible(&g, &fs, &loaded, &pairs, 10.0, 0.1));

        // zero impact leaves the pair short
        let zero = ImpactVector::zeros(3);
        assert!(!is_eps_feasible(&g, &fs, &zero, &pairs, 10.0, 0.1));

        // a disconnected pair contributes true (distance = cap)
        let g2 = Graph::from_arcs(3, vec![(0, 1)], false);
        let pairs2 = TargetPairs::new(vec![(0, 2)], &g2).unwrap();
        assert!(is_eps_feasible(&g2, &lin_fs(3), &zero, &pairs2, 10.0, 0.1));
    }

    #[test]
    fn ii_trivially_feasible_instance_runs_zero_rounds() {
        let g = Graph::from_undirected_edges(3, &[(0, 1), (1, 2)]);
        let fs = uniform_functions(&WeightFunction::linear(1.0, 1.0).unwrap(), 3);
        let pairs = TargetPairs::new(vec![(0, 2)], &g).unwrap();
        // zero-impact distance is 3 >= T(1-eps) = 2.7
        let cfg = CplConfig::new(3.0, 0.1).unwrap();
        let res = incremental_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        assert_eq!(res.rounds, 0);
        assert_eq!(res.x.norm(), 0.0);
        assert_eq!(res.queries, 0);
    }

    #[test]
    fn ii_single_path_matches_direct_blocking() {
        let g = Graph::from_arcs(2, vec![(0, 1)], false);
        let fs = lin_fs(2);
        let pairs = TargetPairs::new(vec![(0, 1)], &g).unwrap();
        let cfg = CplConfig::new(10.0, 0.1).unwrap();
        let res = incremental_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        assert_eq!(res.rounds, 1);

        let paths = vec![Path::from_nodes(vec![0, 1])];
        let direct = run_tb(&paths, &ImpactVector::zeros(2), &fs, &cfg).unwrap();
        assert_relative_eq!(res.x.norm(), direct.s.norm(), max_relative = 1e-12);
        assert_eq!(res.queries, direct.queries);
    }

    #[test]
    fn fi_equals_ii_on_single_path_instance() {
        let g = Graph::from_arcs(3, vec![(0, 1), (1, 2)], false);
        let fs = lin_fs(3);
        let pairs = TargetPairs::new(vec![(0, 2)], &g).unwrap();
        let cfg = CplConfig::new(9.0, 0.1).unwrap();
        let ii = incremental_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        let fi = full_set_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        assert_eq!(ii.rounds, 1);
        assert_eq!(fi.rounds, 1);
        assert_relative_eq!(ii.x.norm(), fi.x.norm(), max_relative = 1e-12);
    }

    #[test]
    fn fi_no_worse_than_ii_on_disjoint_pairs() {
        // two node-disjoint chains
        let g = Graph::from_arcs(6, vec![(0, 1), (1, 2), (3, 4), (4, 5)], false);
        let fs = lin_fs(6);
        let pairs = TargetPairs::new(vec![(0, 2), (3, 5)], &g).unwrap();
        let cfg = CplConfig::new(9.0, 0.1).unwrap();
        let ii = incremental_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        let fi = full_set_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        assert!(fi.x.norm() <= ii.x.norm() + 1e-9);
    }

    #[test]
    fn fi_cumulative_paths_deduplicated_and_feasible() {
        let g = Graph::from_undirected_edges(5, &[(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)]);
        let fs = lin_fs(5);
        let pairs = TargetPairs::new(vec![(0, 4)], &g).unwrap();
        let mut cfg = CplConfig::new(6.0, 0.1).unwrap();
        cfg.k = 2; // force several collection rounds
        cfg.record_paths = true;
        let fi = full_set_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        let rounds = fi.round_paths.as_ref().unwrap();
        assert!(!rounds.is_empty());
        // cumulative and nondecreasing
        for w in fi.per_round_paths.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // final set is duplicate-free and a subset of the DFS enumeration
        let all: HashSet<Vec<NodeId>> = crate::graph::all_simple_paths(&g, 0, 4, 1000)
            .unwrap()
            .into_iter()
            .map(|p| p.nodes().to_vec())
            .collect();
        let last = rounds.last().unwrap();
        let mut uniq = HashSet::new();
        for p in last {
            assert!(uniq.insert(p.nodes().to_vec()), "duplicate path in cumulative set");
            assert!(all.contains(p.nodes()), "collected path is not a simple s-t path");
        }
    }

    #[test]
    fn ii_respects_round_limit() {
        // pair (1, 2) has two internally disjoint paths via 0 and via 3;
        // with k = 1 the first round blocks only the path through node 0
        let g = Graph::from_undirected_edges(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]);
        let fs = lin_fs(4);
        let pairs = TargetPairs::new(vec![(1, 2)], &g).unwrap();
        let mut cfg = CplConfig::new(12.0, 0.1).unwrap();
        cfg.k = 1;
        cfg.max_rounds = 1;
        assert!(matches!(
            incremental_interdiction(&g, &fs, &pairs, &cfg),
            Err(Error::LimitExceeded { .. })
        ));
        cfg.max_rounds = 500;
        let ok = incremental_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        assert!(ok.rounds >= 2);
    }

    #[test]
    fn ii_memory_stays_within_pair_budget() {
        let g = Graph::from_undirected_edges(6, &[(0, 1), (1, 5), (0, 2), (2, 5), (0, 3), (3, 5), (0, 4), (4, 5)]);
        let fs = lin_fs(6);
        let pairs = TargetPairs::new(vec![(0, 5), (5, 0)], &g).unwrap();
        let mut cfg = CplConfig::new(8.0, 0.1).unwrap();
        cfg.k = 3;
        let res = incremental_interdiction(&g, &fs, &pairs, &cfg).unwrap();
        for &count in &res.per_round_paths {
            assert!(count <= pairs.len() * cfg.k);
        }
        assert!(res.max_stored_paths <= pairs.len() * cfg.k);
    }
}
