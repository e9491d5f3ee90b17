//! Comparison methods: the all-or-nothing CUT adaptation, the DISCRETE
//! level-set greedy, and an exhaustive grid oracle for tiny instances.
//!
//! Both baselines reuse the cumulative path-collection loop of full set
//! interdiction; they differ only in how impact is placed on nodes once a
//! round's paths are known.

use std::collections::{HashMap, HashSet};

use crate::cpl::{is_eps_feasible_with, SolveResult};
use crate::error::{Error, Result};
use crate::graph::{all_simple_paths, k_shortest_paths, node_weighted_distance, Graph, NodeId, Path, TargetPairs};
use crate::real::{ge_rel, Real};
use crate::weights::{ImpactVector, PointImpact, WeightFunction};

const CMP_REL: f64 = 1e-9;
const X_MAX: f64 = 1e9;
const MAX_ROUNDS: u32 = 500;

struct BaselineLoop<'a, S> {
    g: &'a Graph,
    pairs: &'a TargetPairs,
    t: S,
    goal: S,
    cmp_rel: S,
    k: usize,
}

impl<'a, S: Real> BaselineLoop<'a, S> {
    fn new(
        g: &'a Graph,
        fs: &'a [WeightFunction<S>],
        pairs: &'a TargetPairs,
        t: S,
        eps: S,
        k: usize,
    ) -> Result<Self> {
        if fs.len() != g.node_count() {
            return Err(Error::InvalidArgument("one weight function per node required".into()));
        }
        if !(t > S::zero()) || !(eps > S::zero() && eps < S::one()) || k < 1 {
            return Err(Error::InvalidArgument("invalid threshold, eps or k".into()));
        }
        Ok(Self { g, pairs, t, goal: t * (S::one() - eps), cmp_rel: S::of(CMP_REL), k })
    }

    fn unsatisfied(&self, w: &[S]) -> Vec<(NodeId, NodeId)> {
        self.pairs
            .pairs()
            .iter()
            .copied()
            .filter(|&(s, tt)| {
                !ge_rel(node_weighted_distance(self.g, w, s, tt, self.t), self.goal, self.cmp_rel)
            })
            .collect()
    }

    fn collect_into(
        &self,
        w: &[S],
        unsat: &[(NodeId, NodeId)],
        cumulative: &mut Vec<Path>,
        seen: &mut HashSet<Vec<NodeId>>,
    ) {
        for &(s, tt) in unsat {
            for p in k_shortest_paths(self.g, w, s, tt, self.k, self.t) {
                let len = p.nodes().iter().fold(S::zero(), |acc, &v| acc + w[v]).min(self.t);
                if !ge_rel(len, self.goal, self.cmp_rel) && seen.insert(p.nodes().to_vec()) {
                    cumulative.push(p);
                }
            }
        }
    }

    fn short_of_goal(&self, sum: S) -> bool {
        !ge_rel(sum.min(self.t), self.goal, self.cmp_rel)
    }
}

fn node_index(paths: &[Path]) -> HashMap<NodeId, Vec<usize>> {
    let mut by_node: HashMap<NodeId, Vec<usize>> = HashMap::new();
    for (i, p) in paths.iter().enumerate() {
        for &v in p.nodes() {
            by_node.entry(v).or_default().push(i);
        }
    }
    by_node
}

fn path_sums<S: Real>(paths: &[Path], w: &[S]) -> Vec<S> {
    paths
        .iter()
        .map(|p| p.nodes().iter().fold(S::zero(), |acc, &v| acc + w[v]))
        .collect()
}

/// Every weight function must reach the threshold within the search bound,
/// otherwise the all-or-nothing and level-set placements cannot block.
fn check_reaches_threshold<S: Real>(fs: &[WeightFunction<S>], t: S, x_max: S) -> Result<()> {
    for (v, f) in fs.iter().enumerate() {
        if f.threshold_input(t, x_max).is_none() {
            return Err(Error::InfeasibleBaseline(format!(
                "weight function of node {v} stays below the threshold {t}"
            )));
        }
    }
    Ok(())
}

/// All-or-nothing baseline: a node receives either zero impact or the full
/// amount at which its weight alone reaches the threshold. Each round
/// greedily loads the unloaded node covering the most still-short collected
/// paths until the collected set is blocked, then re-checks the pairs.
pub fn cut_baseline<S: Real>(
    g: &Graph,
    fs: &[WeightFunction<S>],
    pairs: &TargetPairs,
    t: S,
    eps: S,
    k: usize,
) -> Result<SolveResult<S>> {
    let lp = BaselineLoop::new(g, fs, pairs, t, eps, k)?;
    let x_max = S::of(X_MAX);
    check_reaches_threshold(fs, t, x_max)?;
    let caps: Vec<S> = fs.iter().map(|f| f.x_cap(t, x_max)).collect();

    let mut x = ImpactVector::zeros(g.node_count());
    let mut loaded = vec![false; g.node_count()];
    let mut cumulative: Vec<Path> = Vec::new();
    let mut seen = HashSet::new();
    let mut rounds = 0u32;
    let mut per_round = Vec::new();
    let mut updates = 0u64;

    loop {
        let w = x.node_weights(fs);
        let unsat = lp.unsatisfied(&w);
        if unsat.is_empty() {
            break;
        }
        if rounds >= MAX_ROUNDS {
            return Err(Error::LimitExceeded {
                what: "baseline rounds",
                limit: MAX_ROUNDS as u64,
                detail: format!("{} pairs still unsatisfied", unsat.len()),
            });
        }
        rounds += 1;
        lp.collect_into(&w, &unsat, &mut cumulative, &mut seen);
        per_round.push(cumulative.len());

        let by_node = node_index(&cumulative);
        let mut sums = path_sums(&cumulative, &w);
        loop {
            let short: Vec<usize> = (0..cumulative.len()).filter(|&i| lp.short_of_goal(sums[i])).collect();
            if short.is_empty() {
                break;
            }
            let mut best: Option<(usize, NodeId)> = None;
            for (&v, idxs) in &by_node {
                if loaded[v] {
                    continue;
                }
                let cover = idxs.iter().filter(|&&i| lp.short_of_goal(sums[i])).count();
                if cover > 0 {
                    let better = match best {
                        None => true,
                        Some((bc, bv)) => cover > bc || (cover == bc && v < bv),
                    };
                    if better {
                        best = Some((cover, v));
                    }
                }
            }
            let Some((_, v)) = best else {
                return Err(Error::Stuck("every node of a short path is already loaded".into()));
            };
            let delta = fs[v].eval(caps[v]) - fs[v].eval(x.get(v));
            x.add_point(PointImpact::new(v, caps[v]));
            loaded[v] = true;
            updates += 1;
            for &i in &by_node[&v] {
                sums[i] += delta;
            }
        }
    }

    debug_assert!(is_eps_feasible_with(g, fs, &x, pairs, t, eps, lp.cmp_rel));
    Ok(SolveResult {
        x,
        rounds,
        max_stored_paths: per_round.last().copied().unwrap_or(0),
        per_round_paths: per_round,
        queries: 0,
        updates,
        round_paths: None,
    })
}

/// Discretized baseline: impact on a node is restricted to a small level
/// set (multiples of a third of the node's blocking amount; whole integers
/// for the step family). Each round repeatedly adds the level increment
/// with the best gain per unit cost until the collected paths are blocked.
pub fn discrete_baseline<S: Real>(
    g: &Graph,
    fs: &[WeightFunction<S>],
    pairs: &TargetPairs,
    t: S,
    eps: S,
    k: usize,
) -> Result<SolveResult<S>> {
    let lp = BaselineLoop::new(g, fs, pairs, t, eps, k)?;
    let x_max = S::of(X_MAX);
    check_reaches_threshold(fs, t, x_max)?;

    // per-node level unit and level count
    let three = S::of(3.0);
    let mut unit = vec![S::zero(); g.node_count()];
    let mut max_level = vec![0usize; g.node_count()];
    for (v, f) in fs.iter().enumerate() {
        let cap = f.x_cap(t, x_max);
        if matches!(f, WeightFunction::Step { .. }) {
            unit[v] = S::one();
            max_level[v] = cap.as_f64().ceil() as usize;
        } else {
            unit[v] = cap / three;
            max_level[v] = 3;
        }
    }

    let mut x = ImpactVector::zeros(g.node_count());
    let mut level = vec![0usize; g.node_count()];
    let mut cumulative: Vec<Path> = Vec::new();
    let mut seen = HashSet::new();
    let mut rounds = 0u32;
    let mut per_round = Vec::new();
    let mut updates = 0u64;

    loop {
        let w = x.node_weights(fs);
        let unsat = lp.unsatisfied(&w);
        if unsat.is_empty() {
            break;
        }
        if rounds >= MAX_ROUNDS {
            return Err(Error::LimitExceeded {
                what: "baseline rounds",
                limit: MAX_ROUNDS as u64,
                detail: format!("{} pairs still unsatisfied", unsat.len()),
            });
        }
        rounds += 1;
        lp.collect_into(&w, &unsat, &mut cumulative, &mut seen);
        per_round.push(cumulative.len());

        let by_node = node_index(&cumulative);
        let mut sums = path_sums(&cumulative, &x.node_weights(fs));
        loop {
            if !(0..cumulative.len()).any(|i| lp.short_of_goal(sums[i])) {
                break;
            }
            // best (node, target level) by gain per unit cost
            let mut best: Option<(S, NodeId, usize)> = None;
            for (&v, idxs) in &by_node {
                if level[v] >= max_level[v] {
                    continue;
                }
                let fw = fs[v].eval(x.get(v));
                for lv in (level[v] + 1)..=max_level[v] {
                    let amount = unit[v] * S::of(lv as f64);
                    let cost = amount - x.get(v);
                    if !(cost > S::zero()) {
                        continue;
                    }
                    let delta = fs[v].eval(amount) - fw;
                    let mut gain = S::zero();
                    for &i in idxs {
                        if lp.short_of_goal(sums[i]) {
                            gain += (sums[i] + delta).min(t) - sums[i].min(t);
                        }
                    }
                    if gain <= S::zero() {
                        continue;
                    }
                    let ratio = gain / cost;
                    let better = match &best {
                        None => true,
                        Some((br, bv, blv)) => {
                            ratio > *br || (ratio == *br && (v, lv) < (*bv, *blv))
                        }
                    };
                    if better {
                        best = Some((ratio, v, lv));
                    }
                }
            }
            let Some((_, v, lv)) = best else {
                return Err(Error::Stuck("no level increment lengthens any short path".into()));
            };
            let amount = unit[v] * S::of(lv as f64);
            let cost = amount - x.get(v);
            let delta = fs[v].eval(amount) - fs[v].eval(x.get(v));
            x.add_point(PointImpact::new(v, cost));
            level[v] = lv;
            updates += 1;
            for &i in &by_node[&v] {
                sums[i] += delta;
            }
        }
    }

    debug_assert!(is_eps_feasible_with(g, fs, &x, pairs, t, eps, lp.cmp_rel));
    Ok(SolveResult {
        x,
        rounds,
        max_stored_paths: per_round.last().copied().unwrap_or(0),
        per_round_paths: per_round,
        queries: 0,
        updates,
        round_paths: None,
    })
}

/// Exhaustive branch-and-bound over per-node impact levels `{0, d, 2d, ...}`
/// minimizing the total impact subject to every feasible path reaching the
/// full threshold (no slack). Only for tiny instances: at most 10 nodes and
/// 200 enumerated feasible paths. For linear and step families with `d`
/// dividing the relevant breakpoints the grid optimum is the true optimum.
pub fn exact_tiny<S: Real>(
    g: &Graph,
    fs: &[WeightFunction<S>],
    pairs: &TargetPairs,
    t: S,
    grid_step: S,
    x_max: S,
) -> Result<ImpactVector<S>> {
    if g.node_count() > 10 {
        return Err(Error::OraclePrecondition(format!(
            "{} nodes exceed the oracle limit of 10",
            g.node_count()
        )));
    }
    if !(grid_step > S::zero()) {
        return Err(Error::OraclePrecondition("grid step must be positive".into()));
    }
    if fs.len() != g.node_count() {
        return Err(Error::InvalidArgument("one weight function per node required".into()));
    }

    // feasible paths: simple pair-connecting paths short of t at zero impact
    let mut feasible: Vec<Path> = Vec::new();
    let mut seen = HashSet::new();
    for &(s, tt) in pairs.pairs() {
        let paths = all_simple_paths(g, s, tt, 4000).map_err(|_| {
            Error::OraclePrecondition("more than 200 feasible paths".into())
        })?;
        for p in paths {
            let len = p.nodes().iter().fold(S::zero(), |acc, &v| acc + fs[v].eval(S::zero()));
            if len < t && seen.insert(p.nodes().to_vec()) {
                feasible.push(p);
            }
        }
        if feasible.len() > 200 {
            return Err(Error::OraclePrecondition("more than 200 feasible paths".into()));
        }
    }
    if feasible.is_empty() {
        return Ok(ImpactVector::zeros(g.node_count()));
    }

    // branch only on nodes that lie on feasible paths, most-covered first
    let by_node = node_index(&feasible);
    let mut order: Vec<NodeId> = by_node.keys().copied().collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(by_node[&v].len()), v));

    let levels: Vec<usize> = order
        .iter()
        .map(|&v| {
            let cap = fs[v].x_cap(t, x_max).min(x_max);
            (cap / grid_step).as_f64().ceil() as usize
        })
        .collect();

    // per-path running sums and remaining maximal headroom
    let base: Vec<S> = feasible
        .iter()
        .map(|p| p.nodes().iter().fold(S::zero(), |acc, &v| acc + fs[v].eval(S::zero())))
        .collect();
    let mut rem_max = vec![S::zero(); feasible.len()];
    for (oi, &v) in order.iter().enumerate() {
        let top = fs[v].eval(S::of(levels[oi] as f64) * grid_step) - fs[v].eval(S::zero());
        for &i in &by_node[&v] {
            rem_max[i] += top;
        }
    }

    struct Search<'a, S> {
        fs: &'a [WeightFunction<S>],
        order: &'a [NodeId],
        levels: &'a [usize],
        by_node: &'a HashMap<NodeId, Vec<usize>>,
        grid_step: S,
        t: S,
        sums: Vec<S>,
        rem_max: Vec<S>,
        assign: Vec<S>,
        best_cost: S,
        best: Option<Vec<S>>,
    }

    impl<S: Real> Search<'_, S> {
        fn dfs(&mut self, depth: usize, cost: S) {
            if self.best.is_some() && cost >= self.best_cost {
                return;
            }
            if self.sums.iter().zip(&self.rem_max).any(|(&s, &r)| s + r < self.t) {
                return; // some path can no longer reach the threshold
            }
            if depth == self.order.len() {
                if self.sums.iter().all(|&s| s >= self.t) {
                    self.best_cost = cost;
                    self.best = Some(self.assign.clone());
                }
                return;
            }
            let v = self.order[depth];
            let f0 = self.fs[v].eval(S::zero());
            let top = self.fs[v].eval(S::of(self.levels[depth] as f64) * self.grid_step) - f0;
            for lv in 0..=self.levels[depth] {
                let amount = S::of(lv as f64) * self.grid_step;
                let delta = self.fs[v].eval(amount) - f0;
                for &i in &self.by_node[&v] {
                    self.sums[i] += delta;
                    self.rem_max[i] -= top;
                }
                self.assign[depth] = amount;
                self.dfs(depth + 1, cost + amount);
                for &i in &self.by_node[&v] {
                    self.sums[i] -= delta;
                    self.rem_max[i] += top;
                }
            }
            self.assign[depth] = S::zero();
        }
    }

    let mut search = Search {
        fs,
        order: &order,
        levels: &levels,
        by_node: &by_node,
        grid_step,
        t,
        sums: base,
        rem_max,
        assign: vec![S::zero(); order.len()],
        best_cost: S::infinity(),
        best: None,
    };
    search.dfs(0, S::zero());

    let Some(best) = search.best else {
        return Err(Error::InfeasibleBaseline(
            "no grid assignment blocks every feasible path".into(),
        ));
    };
    let mut x = ImpactVector::zeros(g.node_count());
    for (oi, &v) in order.iter().enumerate() {
        if best[oi] > S::zero() {
            x.add_point(PointImpact::new(v, best[oi]));
        }
    }
    // hard assertion: the oracle result blocks every enumerated path exactly
    for p in &feasible {
        let len = p.nodes().iter().fold(S::zero(), |acc, &v| acc + fs[v].eval(x.get(v)));
        assert!(len >= t, "oracle result leaves path {:?} at {len} < {t}", p.nodes());
    }
    Ok(x)
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
    fn cut_single_path_loads_one_node() {
        let g = Graph::from_arcs(2, vec![(0, 1)], false);
        let fs = lin_fs(2);
        let pairs = TargetPairs::new(vec![(0, 1)], &g).unwrap();
        let res = cut_baseline(&g, &fs, &pairs, 10.0, 0.1, 5).unwrap();
        assert_relative_eq!(res.x.norm(), 10.0, max_relative = 1e-12);
        assert_eq!(res.updates, 1);
        assert_eq!(res.queries, 0);
    }

    #[test]
    fn cut_star_selects_hub_first() {
        // three pair paths all passing through the hub node 3
        let g = Graph::from_arcs(
            7,
            vec![(0, 3), (1, 3), (2, 3), (3, 4), (3, 5), (3, 6)],
            false,
        );
        let fs = lin_fs(7);
        let pairs = TargetPairs::new(vec![(0, 4), (1, 5), (2, 6)], &g).unwrap();
        let res = cut_baseline(&g, &fs, &pairs, 10.0, 0.1, 5).unwrap();
        assert!(res.x.get(3) > 0.0, "hub must be loaded first");
        assert_relative_eq!(res.x.norm(), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn discrete_linear_chain_uses_three_level_units() {
        let g = Graph::from_arcs(3, vec![(0, 1), (1, 2)], false);
        let fs = lin_fs(3);
        let pairs = TargetPairs::new(vec![(0, 2)], &g).unwrap();
        let res = discrete_baseline(&g, &fs, &pairs, 9.0, 0.1, 5).unwrap();
        assert_relative_eq!(res.x.norm(), 9.0, max_relative = 1e-12);
    }

    #[test]
    fn discrete_step_family_uses_integer_levels() {
        let g = Graph::from_arcs(2, vec![(0, 1)], false);
        let fs = uniform_functions(&WeightFunction::step(1.0, 0.0).unwrap(), 2);
        let pairs = TargetPairs::new(vec![(0, 1)], &g).unwrap();
        let res = discrete_baseline(&g, &fs, &pairs, 4.0, 0.1, 5).unwrap();
        let norm: f64 = res.x.norm();
        assert!(norm >= 4.0 * 0.9 && (norm - norm.round()).abs() < 1e-9, "norm {norm}");
        assert_relative_eq!(norm, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn baselines_reject_plateauing_functions() {
        let table: WeightFunction<f64> =
            WeightFunction::table_from_str("0 0\n1 5\n", crate::weights::TableInterp::Constant)
                .unwrap();
        let g = Graph::from_arcs(2, vec![(0, 1)], false);
        let fs = uniform_functions(&table, 2);
        let pairs = TargetPairs::new(vec![(0, 1)], &g).unwrap();
        assert!(matches!(
            cut_baseline(&g, &fs, &pairs, 11.0, 0.1, 5),
            Err(Error::InfeasibleBaseline(_))
        ));
        assert!(matches!(
            discrete_baseline(&g, &fs, &pairs, 11.0, 0.1, 5),
            Err(Error::InfeasibleBaseline(_))
        ));
    }

    #[test]
    fn exact_tiny_single_path() {
        let g = Graph::from_arcs(2, vec![(0, 1)], false);
        let fs = lin_fs(2);
        let pairs = TargetPairs::new(vec![(0, 1)], &g).unwrap();
        let x = exact_tiny(&g, &fs, &pairs, 10.0, 1.0, 1e9).unwrap();
        assert_relative_eq!(x.norm(), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn exact_tiny_disjoint_paths_add_up() {
        let g = Graph::from_arcs(4, vec![(0, 1), (2, 3)], false);
        let fs = lin_fs(4);
        let pairs = TargetPairs::new(vec![(0, 1), (2, 3)], &g).unwrap();
        let x = exact_tiny(&g, &fs, &pairs, 10.0, 1.0, 1e9).unwrap();
        assert_relative_eq!(x.norm(), 20.0, max_relative = 1e-12);
    }

    #[test]
    fn exact_tiny_diamond_shares_endpoints() {
        let g = Graph::from_arcs(4, vec![(0, 1), (0, 2), (1, 3), (2, 3)], false);
        let fs = lin_fs(4);
        let pairs = TargetPairs::new(vec![(0, 3)], &g).unwrap();
        let x = exact_tiny(&g, &fs, &pairs, 10.0, 1.0, 1e9).unwrap();
        assert_relative_eq!(x.norm(), 10.0, max_relative = 1e-12);
        // the optimum loads shared nodes only
        assert_eq!(x.get(1), 0.0);
        assert_eq!(x.get(2), 0.0);
    }

    #[test]
    fn exact_tiny_rejects_large_instances() {
        let g = Graph::from_arcs(11, (0..10).map(|i| (i, i + 1)).collect(), false);
        let fs = lin_fs(11);
        let pairs = TargetPairs::new(vec![(0, 10)], &g).unwrap();
        assert!(matches!(
            exact_tiny(&g, &fs, &pairs, 5.0, 1.0, 1e9),
            Err(Error::OraclePrecondition(_))
        ));
    }

    #[test]
    fn exact_tiny_norm_never_worsens_on_finer_grids() {
        let g = Graph::from_undirected_edges(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]);
        let fs = lin_fs(4);
        let pairs = TargetPairs::new(vec![(0, 3)], &g).unwrap();
        let coarse = exact_tiny(&g, &fs, &pairs, 10.0, 3.0, 1e9).unwrap().norm();
        let mid = exact_tiny(&g, &fs, &pairs, 10.0, 1.0, 1e9).unwrap().norm();
        let fine = exact_tiny(&g, &fs, &pairs, 10.0, 0.5, 1e9).unwrap().norm();
        assert!(mid <= coarse + 1e-12);
        assert!(fine <= mid + 1e-12);
    }
}
