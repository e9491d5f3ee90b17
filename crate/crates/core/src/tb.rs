//! Threshold blocking: given a set of short paths and a base impact vector,
//! find additional impact pushing every given path to length at least
//! `T(1 - eps)`.
//!
//! Two algorithms are provided. Threshold expansion sweeps the nodes under a
//! geometrically decaying gain-per-impact requirement and takes the largest
//! qualifying amount at each node. Jump-start greedy repeatedly adds the
//! single best gain-per-impact amount, escaping the zero trap (maximizer at
//! zero impact, typical for concave weight functions) with a uniform-slack
//! lower bound on step sizes.
//!
//! Runtime is reported in *queries*: one query per univariate threshold or
//! global-optimum search ([`max_x_with_ratio`], [`argmax_ratio`],
//! [`jump_start_bound`]).

use std::cmp::Reverse;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Path};
use crate::real::{ge_rel, Real};
use crate::weights::{ImpactVector, WeightFunction};

/// Counts univariate searches; one increment per search, atomically.
#[derive(Debug, Default)]
pub struct QueryCounter {
    total: AtomicU64,
}

impl QueryCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bump(&self) {
        self.total.fetch_add(1, Ordering::Relaxed);
    }

    pub fn total(&self) -> u64 {
        self.total.load(Ordering::Relaxed)
    }
}

/// Relative tolerances shared by the solvers.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<S> {
    /// Relative slack for threshold comparisons (feasibility, path removal).
    pub cmp_rel: S,
    /// Univariate search resolution, relative to the node's impact cap.
    pub x_rel: S,
    /// Zero-trap detection threshold, relative to the node's impact cap.
    pub zero_rel: S,
    /// Uniform-slack search resolution, relative to its upper bracket.
    pub sigma_rel: S,
    /// Relative tolerance for ratio ties in argmax searches.
    pub tie_rel: S,
}

impl<S: Real> Default for Tolerances<S> {
    fn default() -> Self {
        Self {
            cmp_rel: S::of(1e-9),
            x_rel: S::of(1e-6),
            zero_rel: S::of(1e-9),
            sigma_rel: S::of(1e-6),
            tie_rel: S::of(1e-12),
        }
    }
}

/// Knobs for the threshold-blocking algorithms.
#[derive(Debug, Clone)]
pub struct TbConfig<S> {
    /// Per-sweep decay factor of the expansion requirement (the schedule
    /// multiplies the requirement by `1 - rate_decay` after each full pass).
    pub rate_decay: S,
    /// Initial requirement when some weight function is non-differentiable.
    pub fallback_rate: S,
    /// Decay sweeps before threshold expansion switches to forced progress.
    pub max_sweeps: u32,
    /// Hard cap on point-impact additions (guards non-termination).
    pub max_updates: u64,
    /// Search-domain bound when a weight function plateaus below the
    /// threshold.
    pub x_max: S,
    /// Multi-start grid size for gain-per-impact maximization.
    pub grid_points: u32,
    pub tol: Tolerances<S>,
}

impl<S: Real> Default for TbConfig<S> {
    fn default() -> Self {
        Self {
            rate_decay: S::of(0.1),
            fallback_rate: S::of(1e6),
            max_sweeps: 200,
            max_updates: 2_000_000,
            x_max: S::of(1e9),
            grid_points: 48,
            tol: Tolerances::default(),
        }
    }
}

/// One blocking task: push every path of `paths` to capped length at least
/// `threshold * (1 - eps)` by adding impact on top of `base`.
#[derive(Debug, Clone, Copy)]
pub struct TbRequest<'a, S> {
    pub paths: &'a [Path],
    pub base: &'a ImpactVector<S>,
    pub fs: &'a [WeightFunction<S>],
    pub threshold: S,
    pub eps: S,
    pub config: &'a TbConfig<S>,
}

/// Additional impact found by a blocking algorithm, with its work counters.
#[derive(Debug, Clone)]
pub struct TbResult<S> {
    pub s: ImpactVector<S>,
    pub queries: u64,
    /// Number of positive point-impact additions.
    pub updates: u64,
}

fn validate_request<S: Real>(req: &TbRequest<'_, S>) -> Result<()> {
    if req.paths.is_empty() {
        return Err(Error::InvalidArgument("path set must be non-empty".into()));
    }
    if !(req.threshold > S::zero()) {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    if !(req.eps > S::zero() && req.eps < S::one()) {
        return Err(Error::InvalidArgument("eps must lie in (0, 1)".into()));
    }
    if req.fs.len() != req.base.len() {
        return Err(Error::InvalidArgument("one weight function per node required".into()));
    }
    for p in req.paths {
        for &v in p.nodes() {
            if v >= req.base.len() {
                return Err(Error::InvalidArgument(format!("path node {v} out of range")));
            }
        }
    }
    Ok(())
}

/// Initial gain-per-impact requirement for threshold expansion.
///
/// With differentiable weight functions this is `|P|` times the largest
/// derivative over the region where the function stays below `t`, which
/// upper-bounds every gain-per-impact ratio the search can encounter. For
/// step or table functions it falls back to `fallback`.
pub fn initial_rate_requirement<S: Real>(
    paths: &[Path],
    fs: &[WeightFunction<S>],
    t: S,
    fallback: S,
) -> S {
    let mut bound = S::zero();
    for f in fs {
        match f.derivative_bound(t) {
            Some(d) => bound = bound.max(d),
            None => return fallback,
        }
    }
    S::of(paths.len() as f64) * bound
}

/// Gain-per-impact profile of a single node against a fixed set of short
/// paths through it. `terms` holds the uncapped current sums of those paths.
struct RatioProblem<'a, S> {
    f: &'a WeightFunction<S>,
    w_v: S,
    fw_v: S,
    t: S,
    x_cap: S,
    x_max: S,
    terms: Vec<S>,
}

impl<'a, S: Real> RatioProblem<'a, S> {
    fn build(
        paths: &[Path],
        w: &[S],
        v: NodeId,
        fs: &'a [WeightFunction<S>],
        t: S,
        x_max: S,
    ) -> Self {
        let f = &fs[v];
        let fw_v = f.eval(w[v]);
        let mut terms = Vec::new();
        for p in paths {
            if !p.contains(v) {
                continue;
            }
            let sum = p.nodes().iter().fold(S::zero(), |acc, &u| acc + fs[u].eval(w[u]));
            if sum < t {
                terms.push(sum);
            }
        }
        Self { f, w_v: w[v], fw_v, t, x_cap: f.x_cap(t, x_max), x_max, terms }
    }

    fn gain(&self, x: S) -> S {
        let delta = self.f.eval(self.w_v + x) - self.fw_v;
        self.terms
            .iter()
            .fold(S::zero(), |acc, &sum| acc + ((sum + delta).min(self.t) - sum.min(self.t)))
    }

    fn ratio(&self, x: S) -> S {
        debug_assert!(x > S::zero());
        self.gain(x) / x
    }

    /// Piece boundaries in `(0, x_cap]`: offsets where some path saturates at
    /// the cap, plus jump/kink offsets of the weight function, plus the cap.
    fn boundaries(&self) -> Vec<S> {
        let mut pts = Vec::new();
        for &sum in &self.terms {
            let target = self.fw_v + (self.t - sum);
            if let Some(z) = self.f.threshold_input(target, self.x_max) {
                let off = z - self.w_v;
                if off > S::zero() && off <= self.x_cap {
                    pts.push(off);
                }
            }
        }
        let mut breaks = Vec::new();
        self.f.break_offsets(self.w_v, self.x_cap, &mut breaks);
        pts.extend(breaks);
        pts.push(self.x_cap);
        pts.sort_by(crate::real::cmp_scalar);
        pts.dedup();
        pts
    }

    /// Largest `x` in `(0, x_cap]` whose gain-per-impact ratio meets `rate`,
    /// or zero when no positive amount qualifies.
    fn max_x_given_rate(&self, rate: S, tol: &Tolerances<S>) -> S {
        assert!(rate > S::zero(), "rate requirement must be positive");
        if self.terms.is_empty() || !(self.x_cap > S::zero()) {
            return S::zero();
        }
        let pts = self.boundaries();
        if self.f.is_continuous() {
            self.max_x_smooth(rate, &pts, tol)
        } else {
            self.max_x_jumpy(rate, &pts)
        }
    }

    /// Piecewise-constant gain: on each piece the qualifying set is
    /// `{x <= gain/rate}`, so the rightmost qualifying point is closed-form.
    fn max_x_jumpy(&self, rate: S, pts: &[S]) -> S {
        if self.ratio(self.x_cap) >= rate {
            return self.x_cap;
        }
        let mut lo_pts: Vec<S> = Vec::with_capacity(pts.len() + 1);
        lo_pts.push(S::zero());
        lo_pts.extend_from_slice(pts);
        for i in (0..lo_pts.len() - 1).rev() {
            let a = lo_pts[i];
            let g = if a > S::zero() { self.gain(a) } else { S::zero() };
            if g <= S::zero() {
                continue;
            }
            let x_star = g / rate;
            // x_star < lo_pts[i+1] holds here: the next piece start did not
            // qualify and gain is non-decreasing.
            if x_star >= a {
                return x_star.min(self.x_cap);
            }
        }
        S::zero()
    }

    fn max_x_smooth(&self, rate: S, pts: &[S], tol: &Tolerances<S>) -> S {
        let eps_x = self.x_cap * S::of(1e-12);
        if self.ratio(self.x_cap) >= rate {
            return self.x_cap;
        }
        let mut hi = self.x_cap;
        for i in (0..pts.len()).rev() {
            let a = if i == 0 { S::zero() } else { pts[i - 1] };
            let b = pts[i];
            if b < hi {
                hi = b;
                if self.ratio(hi) >= rate {
                    return hi;
                }
            }
            let a_eval = a.max(eps_x);
            if a_eval < hi && self.ratio(a_eval) >= rate {
                return self.bisect_down(a_eval, hi, rate, tol);
            }
            // Concave pieces may rise above the requirement strictly inside;
            // the interior maximum of gain - rate*x has a closed form.
            if let WeightFunction::Concave { c, .. } = self.f {
                let mid = (a_eval + hi) * S::of(0.5);
                let delta_mid = self.f.eval(self.w_v + mid) - self.fw_v;
                let unsat = self
                    .terms
                    .iter()
                    .filter(|&&sum| sum + delta_mid < self.t)
                    .count();
                if unsat > 0 {
                    let x_star = S::of(unsat as f64) * *c / rate - (S::one() + self.w_v);
                    if x_star > a_eval && x_star < hi && self.ratio(x_star) >= rate {
                        return self.bisect_down(x_star, hi, rate, tol);
                    }
                }
            }
        }
        S::zero()
    }

    /// Rightmost crossing of the requirement in `[lo, hi]`, with
    /// `ratio(lo) >= rate > ratio(hi)`. Returns the qualifying side.
    fn bisect_down(&self, mut lo: S, mut hi: S, rate: S, tol: &Tolerances<S>) -> S {
        let width = self.x_cap * tol.x_rel;
        for _ in 0..200 {
            if hi - lo <= width {
                break;
            }
            let mid = (lo + hi) * S::of(0.5);
            if self.ratio(mid) >= rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Maximizer of the gain-per-impact ratio over `[max(lower, ~0), x_cap]`,
    /// returned with its ratio. Ties prefer the larger amount. With
    /// `lower == 0`, a maximizer below the zero-trap threshold is reported
    /// as `(0, 0)`.
    ///
    /// Concave and linear families admit closed forms (the gain is concave
    /// through the origin, so the ratio is nonincreasing); other families
    /// use a multi-start grid with golden-section refinement, or a scan of
    /// the jump offsets when the function is piecewise constant.
    fn argmax(&self, lower: S, grid_points: u32, tol: &Tolerances<S>) -> (S, S) {
        if self.terms.is_empty() || !(self.x_cap > S::zero()) {
            return (S::zero(), S::zero());
        }
        let zero_tol = self.x_cap * tol.zero_rel;
        let grid_floor = zero_tol * S::of(0.1);
        let hi = self.x_cap;
        let lo = lower.max(grid_floor).min(hi);

        match self.f {
            // nonincreasing ratio: the left end maximizes
            WeightFunction::Concave { .. } => {
                return self.finish_argmax(lo, self.ratio(lo), lower, zero_tol);
            }
            // constant ratio up to the first saturation, decreasing after;
            // ties prefer the larger amount, hence the first saturation
            WeightFunction::Linear { .. } => {
                let s_min = self
                    .boundaries()
                    .first()
                    .copied()
                    .unwrap_or(hi)
                    .max(lo)
                    .min(hi);
                return self.finish_argmax(s_min, self.ratio(s_min), lower, zero_tol);
            }
            _ => {}
        }

        let mut cands: Vec<S> = Vec::with_capacity(grid_points as usize + 8);
        cands.push(lo);
        cands.push(hi);
        if self.f.is_continuous() && lo < hi && grid_points >= 2 {
            let factor = (hi / lo).powf(S::one() / S::of((grid_points - 1) as f64));
            let mut x = lo;
            for _ in 0..grid_points {
                x = x * factor;
                if x > lo && x < hi {
                    cands.push(x);
                }
            }
        }
        for b in self.boundaries() {
            if b >= lo && b <= hi {
                cands.push(b);
            }
        }
        cands.sort_by(crate::real::cmp_scalar);
        cands.dedup();

        let mut best_x = cands[0];
        let mut best_r = self.ratio(cands[0]);
        let mut best_i = 0usize;
        for (i, &x) in cands.iter().enumerate().skip(1) {
            let r = self.ratio(x);
            let tie = best_r.abs() * tol.tie_rel;
            if r > best_r + tie || (r >= best_r - tie && x > best_x) {
                best_x = x;
                best_r = r;
                best_i = i;
            }
        }

        if self.f.is_continuous() && cands.len() > 1 {
            let left = if best_i == 0 { cands[0] } else { cands[best_i - 1] };
            let right = if best_i + 1 == cands.len() { cands[best_i] } else { cands[best_i + 1] };
            if right > left {
                let (gx, gr) = self.golden_max(left, right, tol);
                if gr > best_r + best_r.abs() * tol.tie_rel {
                    best_x = gx;
                    best_r = gr;
                }
            }
        }

        self.finish_argmax(best_x, best_r, lower, zero_tol)
    }

    fn finish_argmax(&self, x: S, r: S, lower: S, zero_tol: S) -> (S, S) {
        if r <= S::zero() {
            return (S::zero(), S::zero());
        }
        if lower == S::zero() && x < zero_tol {
            return (S::zero(), S::zero());
        }
        (x, r)
    }

    fn golden_max(&self, mut a: S, mut b: S, tol: &Tolerances<S>) -> (S, S) {
        let inv_phi = S::of(0.618_033_988_749_894_9);
        let width = self.x_cap * tol.x_rel;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.ratio(c);
        let mut fd = self.ratio(d);
        let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
        for _ in 0..120 {
            if b - a <= width {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.ratio(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.ratio(d);
            }
            let (x, r) = if fc >= fd { (c, fc) } else { (d, fd) };
            if r > best.1 {
                best = (x, r);
            }
        }
        best
    }
}

/// Largest amount at node `v` whose gain-per-impact ratio over `paths`
/// under `w` still meets `rate`; zero when no positive amount qualifies.
/// Counts one query.
pub fn max_x_with_ratio<S: Real>(
    paths: &[Path],
    w: &ImpactVector<S>,
    v: NodeId,
    rate: S,
    fs: &[WeightFunction<S>],
    t: S,
    config: &TbConfig<S>,
    counter: &QueryCounter,
) -> S {
    counter.bump();
    RatioProblem::build(paths, w.entries(), v, fs, t, config.x_max)
        .max_x_given_rate(rate, &config.tol)
}

/// Maximizer of the gain-per-impact ratio at node `v` over amounts at least
/// `lower`, returned with its ratio. Counts one query.
pub fn argmax_ratio<S: Real>(
    paths: &[Path],
    w: &ImpactVector<S>,
    v: NodeId,
    lower: S,
    fs: &[WeightFunction<S>],
    t: S,
    config: &TbConfig<S>,
    counter: &QueryCounter,
) -> (S, S) {
    counter.bump();
    RatioProblem::build(paths, w.entries(), v, fs, t, config.x_max)
        .argmax(lower, config.grid_points, &config.tol)
}

/// Lower bound for jump-start step sizes, `sigma / n`: a uniform addition of
/// `sigma` on every node keeps some path short of `t`, so any vector pushing
/// all paths to `t` has an entry of at least `sigma`. Found by binary search;
/// counts one query. Errors when every path already reaches `t`.
pub fn jump_start_bound<S: Real>(
    paths: &[Path],
    base: &ImpactVector<S>,
    fs: &[WeightFunction<S>],
    t: S,
    config: &TbConfig<S>,
    counter: &QueryCounter,
) -> Result<S> {
    let keeps_short = |sigma: S| -> bool {
        paths.iter().any(|p| {
            let sum = p
                .nodes()
                .iter()
                .fold(S::zero(), |acc, &u| acc + fs[u].eval(base.get(u) + sigma));
            sum < t
        })
    };
    if !keeps_short(S::zero()) {
        return Err(Error::Contract(
            "jump-start bound needs a path below the threshold".into(),
        ));
    }
    counter.bump();
    let sigma_hi = paths
        .iter()
        .flat_map(|p| p.nodes().iter())
        .map(|&u| fs[u].x_cap(t, config.x_max))
        .fold(S::zero(), |a, b| a.max(b));
    let sigma = if keeps_short(sigma_hi) {
        sigma_hi
    } else {
        let width = sigma_hi * config.tol.sigma_rel;
        let mut lo = S::zero();
        let mut hi = sigma_hi;
        for _ in 0..200 {
            if hi - lo <= width {
                break;
            }
            let mid = (lo + hi) * S::of(0.5);
            if keeps_short(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(sigma / S::of(base.len() as f64))
}

/// Live blocking state: per-node totals, cached node weights and uncapped
/// path sums, maintained incrementally as point impacts are added.
struct BlockState<'a, S> {
    fs: &'a [WeightFunction<S>],
    t: S,
    goal: S,
    cmp_rel: S,
    x_max: S,
    paths: &'a [Path],
    w: Vec<S>,
    added: Vec<S>,
    fw: Vec<S>,
    sums: Vec<S>,
    alive: Vec<bool>,
    n_alive: usize,
    by_node: HashMap<NodeId, Vec<usize>>,
}

impl<'a, S: Real> BlockState<'a, S> {
    fn new(req: &TbRequest<'a, S>) -> Self {
        let goal = req.threshold * (S::one() - req.eps);
        let w: Vec<S> = req.base.entries().to_vec();
        let fw: Vec<S> = w.iter().zip(req.fs).map(|(&x, f)| f.eval(x)).collect();
        let mut by_node: HashMap<NodeId, Vec<usize>> = HashMap::new();
        let mut sums = Vec::with_capacity(req.paths.len());
        let mut alive = Vec::with_capacity(req.paths.len());
        let cmp_rel = req.config.tol.cmp_rel;
        let mut n_alive = 0;
        for (i, p) in req.paths.iter().enumerate() {
            let sum = p.nodes().iter().fold(S::zero(), |acc, &u| acc + fw[u]);
            let live = !ge_rel(sum, goal, cmp_rel);
            if live {
                n_alive += 1;
            }
            sums.push(sum);
            alive.push(live);
            for &u in p.nodes() {
                by_node.entry(u).or_default().push(i);
            }
        }
        Self {
            fs: req.fs,
            t: req.threshold,
            goal,
            cmp_rel,
            x_max: req.config.x_max,
            paths: req.paths,
            added: vec![S::zero(); w.len()],
            w,
            fw,
            sums,
            alive,
            n_alive,
            by_node,
        }
    }

    fn add_impact(&mut self, v: NodeId, amount: S) {
        debug_assert!(amount > S::zero());
        let new_w = self.w[v] + amount;
        let new_fw = self.fs[v].eval(new_w);
        let delta = new_fw - self.fw[v];
        self.w[v] = new_w;
        self.added[v] += amount;
        self.fw[v] = new_fw;
        if let Some(idxs) = self.by_node.get(&v) {
            for &i in idxs {
                self.sums[i] += delta;
                if self.alive[i] && ge_rel(self.sums[i], self.goal, self.cmp_rel) {
                    self.alive[i] = false;
                    self.n_alive -= 1;
                }
            }
        }
    }

    /// Nodes appearing on at least one unsatisfied path, ascending.
    fn active_nodes(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .by_node
            .iter()
            .filter(|(_, idxs)| idxs.iter().any(|&i| self.alive[i]))
            .map(|(&v, _)| v)
            .collect();
        out.sort_unstable();
        out
    }

    fn ratio_problem(&self, v: NodeId) -> RatioProblem<'_, S> {
        let f = &self.fs[v];
        let terms: Vec<S> = match self.by_node.get(&v) {
            Some(idxs) => idxs
                .iter()
                .filter(|&&i| self.alive[i] && self.sums[i] < self.t)
                .map(|&i| self.sums[i])
                .collect(),
            None => Vec::new(),
        };
        RatioProblem {
            f,
            w_v: self.w[v],
            fw_v: self.fw[v],
            t: self.t,
            x_cap: f.x_cap(self.t, self.x_max),
            x_max: self.x_max,
            terms,
        }
    }

    fn alive_paths(&self) -> Vec<Path> {
        self.paths
            .iter()
            .enumerate()
            .filter(|(i, _)| self.alive[*i])
            .map(|(_, p)| p.clone())
            .collect()
    }

    fn shortest_alive(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 0..self.paths.len() {
            if self.alive[i] && best.is_none_or(|b| self.sums[i] < self.sums[b]) {
                best = Some(i);
            }
        }
        best
    }

    fn coverage(&self, v: NodeId) -> usize {
        self.by_node
            .get(&v)
            .map(|idxs| idxs.iter().filter(|&&i| self.alive[i]).count())
            .unwrap_or(0)
    }
}

/// Threshold expansion. Sweeps the nodes of the remaining paths round-robin,
/// adding at each node the largest amount whose gain-per-impact ratio meets
/// the current requirement, then decays the requirement and repeats. After
/// the decay budget is exhausted, forced progress loads the impact cap onto
/// high-coverage nodes of the shortest remaining path so termination is
/// guaranteed for arbitrary monotone tables.
pub fn threshold_expansion<S: Real>(req: &TbRequest<'_, S>) -> Result<TbResult<S>> {
    validate_request(req)?;
    let cfg = req.config;
    let counter = QueryCounter::new();
    let mut state = BlockState::new(req);
    let mut updates = 0u64;

    let mut rate = initial_rate_requirement(req.paths, req.fs, req.threshold, cfg.fallback_rate);
    if !(rate > S::zero()) {
        return Err(Error::InvalidArgument("initial rate requirement must be positive".into()));
    }
    let decay = S::one() - cfg.rate_decay;

    let mut sweeps = 0u32;
    while state.n_alive > 0 && sweeps < cfg.max_sweeps {
        for v in state.active_nodes() {
            if state.n_alive == 0 {
                break;
            }
            counter.bump();
            let x = state.ratio_problem(v).max_x_given_rate(rate, &cfg.tol);
            if x > S::zero() {
                state.add_impact(v, x);
                updates += 1;
            }
        }
        rate = rate * decay;
        sweeps += 1;
    }

    // Forced progress: saturate the shortest remaining path one node at a
    // time, preferring nodes shared by many remaining paths.
    let mut budget = 2 * req.paths.iter().map(|p| p.len()).sum::<usize>() + 16;
    while state.n_alive > 0 {
        if budget == 0 {
            return Err(Error::LimitExceeded {
                what: "forced-progress steps",
                limit: (2 * req.paths.iter().map(|p| p.len()).sum::<usize>() + 16) as u64,
                detail: "threshold expansion could not settle the remaining paths".into(),
            });
        }
        budget -= 1;
        let pi = state.shortest_alive().expect("paths remain");
        let mut nodes: Vec<NodeId> = state.paths[pi].nodes().to_vec();
        nodes.sort_by_key(|&v| (Reverse(state.coverage(v)), v));
        let mut applied = false;
        for v in nodes {
            let cap_amount = req.fs[v].x_cap(req.threshold, cfg.x_max);
            if !(cap_amount > S::zero()) {
                continue;
            }
            let gain = req.fs[v].eval(state.w[v] + cap_amount) - state.fw[v];
            if gain > S::zero() {
                state.add_impact(v, cap_amount);
                updates += 1;
                applied = true;
                break;
            }
        }
        if !applied {
            return Err(Error::Stuck(format!(
                "path {:?} cannot reach the threshold under its weight functions",
                state.paths[pi].nodes()
            )));
        }
    }

    debug_assert!(state.alive.iter().all(|&a| !a));
    Ok(TbResult {
        s: ImpactVector::from_entries(state.added),
        queries: counter.total(),
        updates,
    })
}

/// Jump-start greedy. Each round evaluates the best gain-per-impact amount
/// for every node of the remaining paths (falling back to the jump-start
/// lower bound when the unconstrained maximizer is zero), then adds the
/// single best point impact. The jump-start bound is recomputed each round
/// from the surviving paths, lazily on the first zero trap of the round.
pub fn jump_start_greedy<S: Real>(req: &TbRequest<'_, S>) -> Result<TbResult<S>> {
    validate_request(req)?;
    let cfg = req.config;
    let counter = QueryCounter::new();
    let mut state = BlockState::new(req);
    let mut updates = 0u64;

    while state.n_alive > 0 {
        if updates >= cfg.max_updates {
            return Err(Error::LimitExceeded {
                what: "point-impact updates",
                limit: cfg.max_updates,
                detail: "jump-start greedy exceeded its update budget".into(),
            });
        }
        let mut jump_floor: Option<S> = None;
        let mut best: Option<(S, S, NodeId)> = None;
        for v in state.active_nodes() {
            let prob = state.ratio_problem(v);
            counter.bump();
            let (mut x, mut r) = prob.argmax(S::zero(), cfg.grid_points, &cfg.tol);
            if x == S::zero() {
                let floor = match jump_floor {
                    Some(b) => b,
                    None => {
                        let alive_now = state.alive_paths();
                        let base_now = ImpactVector::from_entries(state.w.clone());
                        let b = jump_start_bound(&alive_now, &base_now, req.fs, req.threshold, cfg, &counter)?;
                        jump_floor = Some(b);
                        b
                    }
                };
                counter.bump();
                let (x2, r2) = prob.argmax(floor, cfg.grid_points, &cfg.tol);
                x = x2;
                r = r2;
            }
            if x > S::zero() && r > S::zero() && best.is_none_or(|(br, _, _)| r > br) {
                best = Some((r, x, v));
            }
        }
        let Some((_, x, v)) = best else {
            return Err(Error::Stuck(
                "no node can lengthen any remaining path".into(),
            ));
        };
        state.add_impact(v, x);
        updates += 1;
    }

    debug_assert!(state.alive.iter().all(|&a| !a));
    Ok(TbResult {
        s: ImpactVector::from_entries(state.added),
        queries: counter.total(),
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{path_length, uniform_functions};
    use approx::assert_relative_eq;

    fn lin(n: usize) -> Vec<WeightFunction<f64>> {
        uniform_functions(&WeightFunction::linear(1.0, 0.0).unwrap(), n)
    }

    fn path(nodes: &[NodeId]) -> Path {
        Path::from_nodes(nodes.to_vec())
    }

    #[test]
    fn rate_requirement_examples() {
        let paths = vec![path(&[0]), path(&[1]), path(&[0, 1]), path(&[2])];
        let fs = uniform_functions(&WeightFunction::linear(2.0, 0.0).unwrap(), 3);
        assert_eq!(initial_rate_requirement(&paths, &fs, 10.0, 1e6), 8.0);

        let paths3 = vec![path(&[0]), path(&[1]), path(&[2])];
        let conv = uniform_functions(&WeightFunction::convex(1.0, 0.0).unwrap(), 3);
        assert_relative_eq!(initial_rate_requirement(&paths3, &conv, 9.0, 1e6), 18.0);

        let st = uniform_functions(&WeightFunction::step(1.0, 0.0).unwrap(), 3);
        assert_eq!(initial_rate_requirement(&paths3, &st, 9.0, 1e6), 1e6);
    }

    /// Independent dense-grid check of the rightmost qualifying amount.
    fn grid_oracle_max_x(
        paths: &[Path],
        w: &ImpactVector<f64>,
        v: NodeId,
        rate: f64,
        fs: &[WeightFunction<f64>],
        t: f64,
        x_cap: f64,
    ) -> f64 {
        let steps = 400_000;
        let mut best = 0.0;
        for i in 1..=steps {
            let x = x_cap * i as f64 / steps as f64;
            let r = crate::weights::marginal_gain(paths, w, v, x, fs, t) / x;
            if r >= rate * (1.0 - 1e-12) {
                best = x;
            }
        }
        best
    }

    #[test]
    fn max_x_single_linear_path() {
        let fs = lin(2);
        let paths = vec![path(&[0, 1])];
        let w = ImpactVector::zeros(2);
        let cfg = TbConfig::default();
        let counter = QueryCounter::new();
        // grid oracle agrees: ratio is 1 up to the cap, excluded beyond
        let oracle = grid_oracle_max_x(&paths, &w, 0, 1.0, &fs, 10.0, 10.0);
        assert_relative_eq!(oracle, 10.0, max_relative = 1e-4);
        let x = max_x_with_ratio(&paths, &w, 0, 1.0, &fs, 10.0, &cfg, &counter);
        assert_relative_eq!(x, 10.0, max_relative = 1e-9);
        assert_eq!(counter.total(), 1);
    }

    #[test]
    fn max_x_rate_unreachable() {
        let fs = lin(2);
        let paths = vec![path(&[0, 1])];
        let w = ImpactVector::zeros(2);
        let cfg = TbConfig::default();
        let counter = QueryCounter::new();
        let x = max_x_with_ratio(&paths, &w, 0, 2.0, &fs, 10.0, &cfg, &counter);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn max_x_two_overlapping_paths() {
        let fs = lin(3);
        let paths = vec![path(&[0, 1]), path(&[0, 2])];
        let w = ImpactVector::zeros(3);
        let cfg = TbConfig::default();
        let counter = QueryCounter::new();
        let oracle = grid_oracle_max_x(&paths, &w, 0, 1.5, &fs, 10.0, 10.0);
        assert_relative_eq!(oracle, 10.0, max_relative = 1e-4);
        let x = max_x_with_ratio(&paths, &w, 0, 1.5, &fs, 10.0, &cfg, &counter);
        assert_relative_eq!(x, 10.0, max_relative = 1e-9);
    }

    #[test]
    fn max_x_partial_saturation_crossing() {
        // Path sums differ, so one term saturates first; the requirement is
        // crossed strictly inside a piece and found by bisection.
        let fs = lin(4);
        let paths = vec![path(&[0, 1]), path(&[0, 2, 3])];
        let mut w = ImpactVector::zeros(4);
        w.add_point(crate::weights::PointImpact::new(2, 6.0));
        let cfg = TbConfig::default();
        let counter = QueryCounter::new();
        let rate = 1.2;
        let got = max_x_with_ratio(&paths, &w, 0, rate, &fs, 10.0, &cfg, &counter);
        let oracle = grid_oracle_max_x(&paths, &w, 0, rate, &fs, 10.0, 10.0);
        assert_relative_eq!(got, oracle, max_relative = 1e-3);
        let r = crate::weights::marginal_gain(&paths, &w, 0, got, &fs, 10.0) / got;
        assert!(r >= rate * (1.0 - 1e-9), "returned amount violates the requirement");
    }

    #[test]
    fn max_x_step_family_scans_jump_points() {
        let fs = uniform_functions(&WeightFunction::step(1.0, 0.0).unwrap(), 2);
        let paths = vec![path(&[0, 1])];
        let cfg = TbConfig::default();
        let counter = QueryCounter::new();

        // From zero the whole-domain ratio at the cap is 1, so any rate <= 1
        // is met at the cap itself and any larger rate nowhere.
        let w = ImpactVector::zeros(2);
        let got = max_x_with_ratio(&paths, &w, 0, 0.5, &fs, 4.0, &cfg, &counter);
        assert_relative_eq!(got, 4.0, max_relative = 1e-9);
        assert_eq!(max_x_with_ratio(&paths, &w, 0, 1.5, &fs, 4.0, &cfg, &counter), 0.0);

        // With the partner node preloaded the gain plateaus at 2, so the
        // rightmost qualifying amount sits strictly inside a piece: 2 / 0.7.
        let w2 = ImpactVector::from_entries(vec![0.0, 2.5]);
        let got2 = max_x_with_ratio(&paths, &w2, 0, 0.7, &fs, 4.0, &cfg, &counter);
        let oracle2 = grid_oracle_max_x(&paths, &w2, 0, 0.7, &fs, 4.0, 4.0);
        assert_relative_eq!(got2, oracle2, max_relative = 1e-3);
        assert_relative_eq!(got2, 2.0 / 0.7, max_relative = 1e-9);
    }

    #[test]
    fn argmax_convex_maximizes_at_cap() {
        let fs = uniform_functions(&WeightFunction::convex(1.0, 0.0).unwrap(), 1);
        let paths = vec![path(&[0])];
        let w = ImpactVector::zeros(1);
        let cfg = TbConfig::default();
        let counter = QueryCounter::new();
        let (x, r) = argmax_ratio(&paths, &w, 0, 0.0, &fs, 100.0, &cfg, &counter);
        assert_relative_eq!(x, 10.0, max_relative = 1e-9);
        assert_relative_eq!(r, 10.0, max_relative = 1e-9);
    }

    #[test]
    fn argmax_concave_zero_trap_and_jump_start() {
        let fs = uniform_functions(&WeightFunction::concave(1.0, 0.0).unwrap(), 1);
        let paths = vec![path(&[0])];
        let w = ImpactVector::zeros(1);
        let cfg = TbConfig::default();
        let counter = QueryCounter::new();
        let (x, r) = argmax_ratio(&paths, &w, 0, 0.0, &fs, 2.0, &cfg, &counter);
        assert_eq!((x, r), (0.0, 0.0), "decreasing ratio must report the zero trap");
        let (x2, _) = argmax_ratio(&paths, &w, 0, 0.5, &fs, 2.0, &cfg, &counter);
        assert_relative_eq!(x2, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn jump_start_bound_examples() {
        let cfg = TbConfig::default();
        let counter = QueryCounter::new();
        let fs = lin(5);
        let paths = vec![path(&[0, 1])];
        let base = ImpactVector::zeros(5);
        let beta = jump_start_bound(&paths, &base, &fs, 10.0, &cfg, &counter).unwrap();
        assert_relative_eq!(beta, 1.0, max_relative = 1e-4);

        let fs3 = lin(3);
        let paths3 = vec![path(&[0, 1, 2])];
        let base3 = ImpactVector::zeros(3);
        let beta3 = jump_start_bound(&paths3, &base3, &fs3, 9.0, &cfg, &counter).unwrap();
        assert_relative_eq!(beta3, 1.0, max_relative = 1e-4);

        // all paths already at the threshold: contract error
        let loaded = ImpactVector::from_entries(vec![10.0, 10.0, 10.0]);
        assert!(matches!(
            jump_start_bound(&paths3, &loaded, &fs3, 9.0, &cfg, &counter),
            Err(Error::Contract(_))
        ));
    }

    fn check_blocked(req: &TbRequest<'_, f64>, s: &ImpactVector<f64>) {
        let total = req.base.add(s);
        let goal = req.threshold * (1.0 - req.eps);
        for p in req.paths {
            let d = path_length(p, &total, req.fs, req.threshold);
            assert!(
                ge_rel(d, goal, 1e-9),
                "path {:?} has length {d} < {goal}",
                p.nodes()
            );
        }
    }

    #[test]
    fn te_single_linear_path() {
        let fs = lin(2);
        let paths = vec![path(&[0, 1])];
        let base = ImpactVector::zeros(2);
        let cfg = TbConfig::default();
        let req = TbRequest { paths: &paths, base: &base, fs: &fs, threshold: 10.0, eps: 0.1, config: &cfg };
        let res = threshold_expansion(&req).unwrap();
        assert!(res.s.norm() >= 9.0);
        check_blocked(&req, &res.s);
        assert!(res.updates >= 1);
    }

    #[test]
    fn te_already_satisfied_returns_zero() {
        let fs = uniform_functions(&WeightFunction::linear(1.0, 5.0).unwrap(), 2);
        let paths = vec![path(&[0, 1])]; // length 10 >= 9 = T(1-eps)
        let base = ImpactVector::zeros(2);
        let cfg = TbConfig::default();
        let req = TbRequest { paths: &paths, base: &base, fs: &fs, threshold: 10.0, eps: 0.1, config: &cfg };
        let res = threshold_expansion(&req).unwrap();
        assert_eq!(res.s.norm(), 0.0);
        assert_eq!(res.queries, 0);
    }

    #[test]
    fn te_rejects_empty_path_set() {
        let fs = lin(2);
        let base = ImpactVector::zeros(2);
        let cfg = TbConfig::default();
        let req = TbRequest { paths: &[], base: &base, fs: &fs, threshold: 10.0, eps: 0.1, config: &cfg };
        assert!(matches!(threshold_expansion(&req), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn te_deterministic_queries() {
        let fs = lin(4);
        let paths = vec![path(&[0, 1, 3]), path(&[0, 2, 3])];
        let base = ImpactVector::zeros(4);
        let cfg = TbConfig::default();
        let req = TbRequest { paths: &paths, base: &base, fs: &fs, threshold: 8.0, eps: 0.1, config: &cfg };
        let a = threshold_expansion(&req).unwrap();
        let b = threshold_expansion(&req).unwrap();
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.updates, b.updates);
        assert_eq!(a.s, b.s);
        check_blocked(&req, &a.s);
    }

    #[test]
    fn jsg_concave_path_terminates_feasible() {
        let fs = uniform_functions(&WeightFunction::concave(1.0, 0.0).unwrap(), 3);
        let paths = vec![path(&[0, 1, 2])];
        let base = ImpactVector::zeros(3);
        let cfg = TbConfig::default();
        let req = TbRequest { paths: &paths, base: &base, fs: &fs, threshold: 2.0, eps: 0.1, config: &cfg };
        let res = jump_start_greedy(&req).unwrap();
        check_blocked(&req, &res.s);
        assert!(res.updates >= 1);
    }

    #[test]
    fn jsg_linear_single_path_lands_near_threshold() {
        let fs = lin(2);
        let paths = vec![path(&[0, 1])];
        let base = ImpactVector::zeros(2);
        let cfg = TbConfig::default();
        let req = TbRequest { paths: &paths, base: &base, fs: &fs, threshold: 10.0, eps: 0.1, config: &cfg };
        let res = jump_start_greedy(&req).unwrap();
        check_blocked(&req, &res.s);
        let norm = res.s.norm();
        assert!((9.0..=10.0 + 1e-6).contains(&norm), "norm {norm} outside [9, 10]");
    }

    #[test]
    fn jsg_convex_never_jump_starts() {
        let fs = uniform_functions(&WeightFunction::convex(1.0, 0.0).unwrap(), 1);
        let paths = vec![path(&[0])];
        let base = ImpactVector::zeros(1);
        let cfg = TbConfig::default();
        let req = TbRequest { paths: &paths, base: &base, fs: &fs, threshold: 100.0, eps: 0.1, config: &cfg };
        let res = jump_start_greedy(&req).unwrap();
        // one round, one node, no jump start and no bound estimation
        assert_eq!(res.queries, 1);
        assert_eq!(res.updates, 1);
        check_blocked(&req, &res.s);
    }

    #[test]
    fn blocking_fails_cleanly_when_threshold_unreachable() {
        // both node weights plateau at 5, so the 2-node path tops out at 10
        // while the goal is 12 * 0.9 = 10.8
        let table: WeightFunction<f64> =
            WeightFunction::table_from_str("0 0\n1 5\n", crate::weights::TableInterp::Constant)
                .unwrap();
        let fs = uniform_functions(&table, 2);
        let paths = vec![path(&[0, 1])];
        let base = ImpactVector::zeros(2);
        let mut cfg = TbConfig::default();
        cfg.max_sweeps = 16; // keep the dead sweeps short
        let req = TbRequest { paths: &paths, base: &base, fs: &fs, threshold: 12.0, eps: 0.1, config: &cfg };
        assert!(matches!(threshold_expansion(&req), Err(Error::Stuck(_))));

        // with enough slack the plateau still blocks: goal 10 * 0.9 = 9 <= 10
        let req2 = TbRequest { paths: &paths, base: &base, fs: &fs, threshold: 10.0, eps: 0.1, config: &cfg };
        let res = threshold_expansion(&req2).unwrap();
        check_blocked(&req2, &res.s);
    }
}
