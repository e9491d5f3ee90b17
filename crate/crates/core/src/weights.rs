//! Node weight functions and impact-vector algebra.
//!
//! A node's weight under an impact amount `x >= 0` is given by a monotone
//! non-decreasing function. Four closed-form families are built in, plus a
//! table family driven by user breakpoints. Path lengths are sums of node
//! weights capped at the threshold `T`; only lengths below `T` matter to the
//! solvers, so the cap loses nothing.

use crate::error::{Error, Result};
use crate::graph::{NodeId, Path};
use crate::real::Real;

/// Interpolation mode for the table family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableInterp {
    /// Piecewise-constant: value of the last breakpoint at or below `x`.
    Constant,
    /// Piecewise-linear between breakpoints, flat after the last one.
    Linear,
}

/// User-supplied monotone breakpoint function.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFunction<S> {
    points: Vec<(S, S)>,
    interp: TableInterp,
}

impl<S: Real> TableFunction<S> {
    /// Breakpoints must start at `x = 0`, be strictly increasing in `x` and
    /// non-decreasing and non-negative in value.
    pub fn new(points: Vec<(S, S)>, interp: TableInterp) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("table needs at least one breakpoint".into()));
        }
        if points[0].0 != S::zero() {
            return Err(Error::InvalidArgument("first table breakpoint must be at x = 0".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidArgument("table breakpoints must be strictly increasing in x".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidArgument("table values must be non-decreasing".into()));
            }
        }
        if points[0].1 < S::zero() {
            return Err(Error::InvalidArgument("table values must be non-negative".into()));
        }
        Ok(Self { points, interp })
    }

    fn eval(&self, x: S) -> S {
        // Index of the last breakpoint with bx <= x.
        let i = match self.points.iter().position(|&(bx, _)| bx > x) {
            Some(0) => unreachable!("first breakpoint is 0 and x >= 0"),
            Some(i) => i - 1,
            None => self.points.len() - 1,
        };
        match self.interp {
            TableInterp::Constant => self.points[i].1,
            TableInterp::Linear => {
                if i + 1 == self.points.len() {
                    self.points[i].1
                } else {
                    let (x0, y0) = self.points[i];
                    let (x1, y1) = self.points[i + 1];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    fn threshold_input(&self, y: S) -> Option<S> {
        let last = self.points.len() - 1;
        if self.points[last].1 < y {
            return None; // plateaus below y
        }
        let i = self.points.iter().position(|&(_, v)| v >= y).expect("checked above");
        match self.interp {
            TableInterp::Constant => Some(self.points[i].0),
            TableInterp::Linear => {
                if i == 0 {
                    Some(S::zero())
                } else {
                    let (x0, y0) = self.points[i - 1];
                    let (x1, y1) = self.points[i];
                    if y <= y0 {
                        Some(x0)
                    } else if y1 == y0 {
                        Some(x1)
                    } else {
                        Some(x0 + (x1 - x0) * (y - y0) / (y1 - y0))
                    }
                }
            }
        }
    }
}

/// Monotone non-decreasing node weight function of the impact amount.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFunction<S> {
    /// `f0 + c * ln(1 + x)`
    Concave { c: S, f0: S },
    /// `f0 + c * x^2`
    Convex { c: S, f0: S },
    /// `f0 + c * x`
    Linear { c: S, f0: S },
    /// `f0 + c * floor(x)`
    Step { c: S, f0: S },
    Table(TableFunction<S>),
}

impl<S: Real> WeightFunction<S> {
    pub fn concave(c: S, f0: S) -> Result<Self> {
        check_coeffs(c, f0)?;
        Ok(Self::Concave { c, f0 })
    }

    pub fn convex(c: S, f0: S) -> Result<Self> {
        check_coeffs(c, f0)?;
        Ok(Self::Convex { c, f0 })
    }

    pub fn linear(c: S, f0: S) -> Result<Self> {
        check_coeffs(c, f0)?;
        Ok(Self::Linear { c, f0 })
    }

    pub fn step(c: S, f0: S) -> Result<Self> {
        check_coeffs(c, f0)?;
        Ok(Self::Step { c, f0 })
    }

    /// Parses `family:c[:f0]`, e.g. `convex:0.5` or `linear:1:0.2`.
    /// The table family is built from a breakpoint file via
    /// [`WeightFunction::table_from_str`].
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = |msg: &str| Error::InvalidArgument(format!("function spec `{spec}`: {msg}"));
        if parts.is_empty() || parts.len() > 3 {
            return Err(bad("expected family:c[:f0]"));
        }
        let num = |s: &str| -> Result<S> {
            s.parse::<f64>()
                .map(S::of)
                .map_err(|_| bad(&format!("`{s}` is not a number")))
        };
        let c = if parts.len() > 1 { num(parts[1])? } else { S::one() };
        let f0 = if parts.len() > 2 { num(parts[2])? } else { S::zero() };
        match parts[0] {
            "concave" => Self::concave(c, f0),
            "convex" => Self::convex(c, f0),
            "linear" => Self::linear(c, f0),
            "step" => Self::step(c, f0),
            other => Err(bad(&format!("unknown family `{other}`"))),
        }
    }

    /// Parses two whitespace-separated columns (`x value` per line, `#`
    /// comments allowed) into a table function.
    pub fn table_from_str(text: &str, interp: TableInterp) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected two columns, got {}", cols.len()),
                });
            }
            let parse = |s: &str| -> Result<S> {
                s.parse::<f64>().map(S::of).map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("`{s}` is not a number"),
                })
            };
            points.push((parse(cols[0])?, parse(cols[1])?));
        }
        Ok(Self::Table(TableFunction::new(points, interp)?))
    }

    /// Short family tag used in reports.
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Concave { .. } => "concave",
            Self::Convex { .. } => "convex",
            Self::Linear { .. } => "linear",
            Self::Step { .. } => "step",
            Self::Table(_) => "table",
        }
    }

    /// Node weight under impact `x`. Panics if `x` is negative.
    pub fn eval(&self, x: S) -> S {
        assert!(x >= S::zero(), "impact amount must be non-negative, got {x}");
        match self {
            Self::Concave { c, f0 } => *f0 + *c * (S::one() + x).ln(),
            Self::Convex { c, f0 } => *f0 + *c * x * x,
            Self::Linear { c, f0 } => *f0 + *c * x,
            Self::Step { c, f0 } => *f0 + *c * x.floor(),
            Self::Table(t) => t.eval(x),
        }
    }

    /// Smallest `x` with `f(x) >= y`, or `None` if `f` stays below `y` for
    /// every `x <= x_max`.
    pub fn threshold_input(&self, y: S, x_max: S) -> Option<S> {
        if self.eval(S::zero()) >= y {
            return Some(S::zero());
        }
        let sol = match self {
            Self::Concave { c, f0 } => Some(((y - *f0) / *c).exp() - S::one()),
            Self::Convex { c, f0 } => Some(((y - *f0) / *c).sqrt()),
            Self::Linear { c, f0 } => Some((y - *f0) / *c),
            Self::Step { c, f0 } => Some(((y - *f0) / *c).ceil()),
            Self::Table(t) => t.threshold_input(y),
        };
        match sol {
            Some(x) if x <= x_max => Some(x),
            _ => None,
        }
    }

    /// Search-domain bound: smallest impact at which the node weight reaches
    /// `t` on its own, or `x_max` when the function plateaus below `t`.
    pub fn x_cap(&self, t: S, x_max: S) -> S {
        self.threshold_input(t, x_max).unwrap_or(x_max)
    }

    /// `sup f'` over `x >= 0` with `f(x) <= t`, for differentiable families.
    /// `None` for step and table functions.
    pub fn derivative_bound(&self, t: S) -> Option<S> {
        match self {
            Self::Concave { c, .. } => Some(*c),
            Self::Linear { c, .. } => Some(*c),
            Self::Convex { c, f0 } => {
                let two = S::of(2.0);
                if *f0 >= t {
                    Some(S::zero())
                } else {
                    Some(two * *c * ((t - *f0) / *c).sqrt())
                }
            }
            Self::Step { .. } | Self::Table(_) => None,
        }
    }

    /// Whether `x -> f(w + x)` is continuous (no jump discontinuities).
    pub fn is_continuous(&self) -> bool {
        !matches!(
            self,
            Self::Step { .. } | Self::Table(TableFunction { interp: TableInterp::Constant, .. })
        )
    }

    /// Offsets `x` in `(0, hi]` where `x -> f(w + x)` jumps or kinks,
    /// ascending. Empty for families smooth on the interior.
    pub fn break_offsets(&self, w: S, hi: S, out: &mut Vec<S>) {
        out.clear();
        match self {
            Self::Step { .. } => {
                // floor(w + x) jumps whenever w + x crosses an integer
                let mut next = w.floor() + S::one();
                while next - w <= hi {
                    let off = next - w;
                    if off > S::zero() {
                        out.push(off);
                    }
                    next = next + S::one();
                }
            }
            Self::Table(t) => {
                for &(bx, _) in &t.points {
                    let off = bx - w;
                    if off > S::zero() && off <= hi {
                        out.push(off);
                    }
                }
            }
            _ => {}
        }
    }
}

fn check_coeffs<S: Real>(c: S, f0: S) -> Result<()> {
    if !(c > S::zero()) {
        return Err(Error::InvalidArgument(format!("coefficient c must be positive, got {c}")));
    }
    if !(f0 >= S::zero()) {
        return Err(Error::InvalidArgument(format!("offset f0 must be non-negative, got {f0}")));
    }
    Ok(())
}

/// Builds an identical function for every node, the default experimental setup.
pub fn uniform_functions<S: Real>(f: &WeightFunction<S>, n: usize) -> Vec<WeightFunction<S>> {
    vec![f.clone(); n]
}

/// Impact amount placed on a single node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointImpact<S> {
    pub node: NodeId,
    pub amount: S,
}

impl<S: Real> PointImpact<S> {
    pub fn new(node: NodeId, amount: S) -> Self {
        assert!(amount >= S::zero(), "point impact must be non-negative");
        Self { node, amount }
    }
}

/// Dense non-negative impact amounts, one entry per node. The norm is the
/// entry sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactVector<S> {
    entries: Vec<S>,
}

impl<S: Real> ImpactVector<S> {
    pub fn zeros(n: usize) -> Self {
        Self { entries: vec![S::zero(); n] }
    }

    pub fn uniform(n: usize, amount: S) -> Self {
        assert!(amount >= S::zero(), "impact entries must be non-negative");
        Self { entries: vec![amount; n] }
    }

    pub fn from_entries(entries: Vec<S>) -> Self {
        assert!(
            entries.iter().all(|&e| e >= S::zero()),
            "impact entries must be non-negative"
        );
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, v: NodeId) -> S {
        self.entries[v]
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn norm(&self) -> S {
        self.entries.iter().fold(S::zero(), |a, &b| a + b)
    }

    /// Entrywise sum.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "impact vector length mismatch");
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    /// Entrywise difference clamped at zero.
    pub fn minus(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "impact vector length mismatch");
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| (a - b).max(S::zero()))
                .collect(),
        }
    }

    pub fn add_point(&mut self, p: PointImpact<S>) {
        assert!(p.amount >= S::zero(), "point impact must be non-negative");
        self.entries[p.node] += p.amount;
    }

    /// Entrywise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        assert_eq!(self.len(), other.len(), "impact vector length mismatch");
        self.entries.iter().zip(&other.entries).all(|(&a, &b)| a <= b)
    }

    pub fn ge(&self, other: &Self) -> bool {
        other.le(self)
    }

    /// Per-node weights `f_v(x_v)` under this impact vector.
    pub fn node_weights(&self, fs: &[WeightFunction<S>]) -> Vec<S> {
        assert_eq!(self.len(), fs.len(), "one weight function per node required");
        self.entries.iter().zip(fs).map(|(&x, f)| f.eval(x)).collect()
    }
}

/// Capped length of `p` under impact vector `x`: `min(sum of node weights, t)`.
pub fn path_length<S: Real>(p: &Path, x: &ImpactVector<S>, fs: &[WeightFunction<S>], t: S) -> S {
    let sum = p
        .nodes()
        .iter()
        .fold(S::zero(), |acc, &v| acc + fs[v].eval(x.get(v)));
    sum.min(t)
}

/// Total capped-length increase across `paths` from adding `x` at node `v`
/// on top of `w`. Only paths containing `v` contribute.
pub fn marginal_gain<S: Real>(
    paths: &[Path],
    w: &ImpactVector<S>,
    v: NodeId,
    x: S,
    fs: &[WeightFunction<S>],
    t: S,
) -> S {
    assert!(x >= S::zero(), "impact amount must be non-negative");
    let fw = fs[v].eval(w.get(v));
    let delta = fs[v].eval(w.get(v) + x) - fw;
    let mut gain = S::zero();
    for p in paths {
        if !p.contains(v) {
            continue;
        }
        let sum = p
            .nodes()
            .iter()
            .fold(S::zero(), |acc, &u| acc + fs[u].eval(w.get(u)));
        gain += (sum + delta).min(t) - sum.min(t);
    }
    gain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Path;
    use approx::assert_relative_eq;

    fn path(nodes: &[NodeId]) -> Path {
        Path::from_nodes(nodes.to_vec())
    }

    #[test]
    fn eval_linear() {
        let f = WeightFunction::linear(1.0, 0.0).unwrap();
        assert_eq!(f.eval(2.5), 2.5);
    }

    #[test]
    fn eval_step_floors() {
        let f = WeightFunction::step(1.0, 0.0).unwrap();
        assert_eq!(f.eval(2.9), 2.0);
        assert_eq!(f.eval(3.0), 3.0);
    }

    #[test]
    fn eval_concave_at_zero() {
        let f = WeightFunction::concave(2.0, 0.0).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
    }

    #[test]
    #[should_panic(expected = "non-negative")]
    fn eval_rejects_negative() {
        let f = WeightFunction::linear(1.0, 0.0).unwrap();
        f.eval(-0.1);
    }

    #[test]
    fn vec_add_examples() {
        let a: ImpactVector<f64> = ImpactVector::from_entries(vec![1.0, 0.0]);
        let b = ImpactVector::from_entries(vec![0.0, 2.0]);
        assert_eq!(a.add(&b).entries(), &[1.0, 2.0]);

        let z = ImpactVector::zeros(2);
        assert_eq!(a.add(&z), a);

        let c = ImpactVector::from_entries(vec![1.0, 2.0]);
        let d = ImpactVector::from_entries(vec![3.0, 4.0]);
        assert_eq!(c.add(&d).norm(), 10.0);
    }

    #[test]
    fn vec_minus_clamps() {
        let a = ImpactVector::from_entries(vec![3.0, 1.0]);
        let b = ImpactVector::from_entries(vec![1.0, 2.0]);
        assert_eq!(a.minus(&b).entries(), &[2.0, 0.0]);
        assert_eq!(a.minus(&a).norm(), 0.0);
        assert_eq!(ImpactVector::zeros(2).minus(&b).norm(), 0.0);
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn vec_add_length_mismatch() {
        let a: ImpactVector<f64> = ImpactVector::zeros(2);
        let b = ImpactVector::zeros(3);
        let _ = a.add(&b);
    }

    #[test]
    fn path_length_examples() {
        let fs = uniform_functions(&WeightFunction::linear(1.0, 0.0).unwrap(), 3);
        let p = path(&[0, 1, 2]);
        assert_eq!(path_length(&p, &ImpactVector::zeros(3), &fs, 10.0), 0.0);
        let loaded = ImpactVector::from_entries(vec![5.0, 5.0, 5.0]);
        assert_eq!(path_length(&p, &loaded, &fs, 10.0), 10.0);

        let fs2 = uniform_functions(&WeightFunction::convex(1.0, 0.0).unwrap(), 2);
        let p2 = path(&[0, 1]);
        let x2 = ImpactVector::from_entries(vec![2.0, 3.0]);
        assert_eq!(path_length(&p2, &x2, &fs2, 100.0), 13.0);
    }

    #[test]
    fn marginal_gain_examples() {
        let fs = uniform_functions(&WeightFunction::linear(1.0, 0.0).unwrap(), 4);
        let p = path(&[0, 1, 2]);
        let w = ImpactVector::zeros(4);
        // node off every path gains nothing
        assert_eq!(marginal_gain(&[p.clone()], &w, 3, 7.0, &fs, 10.0), 0.0);
        // uncapped linear gain
        assert_eq!(marginal_gain(&[p.clone()], &w, 1, 4.0, &fs, 10.0), 4.0);
        // cap limits the gain
        assert_eq!(marginal_gain(&[p], &w, 1, 20.0, &fs, 10.0), 10.0);
    }

    #[test]
    fn x_cap_examples() {
        let lin = WeightFunction::linear(1.0, 0.0).unwrap();
        assert_relative_eq!(lin.x_cap(10.0, 1e9), 10.0);

        let conv = WeightFunction::convex(1.0, 0.0).unwrap();
        assert_relative_eq!(conv.x_cap(9.0, 1e9), 3.0);

        let conc = WeightFunction::concave(1.0, 0.0).unwrap();
        assert_eq!(conc.x_cap(50.0, 1e6), 1e6);
    }

    #[test]
    fn threshold_input_step_is_exact() {
        let f = WeightFunction::step(1.0, 0.0).unwrap();
        assert_eq!(f.threshold_input(4.0, 1e9), Some(4.0));
        assert_eq!(f.threshold_input(3.5, 1e9), Some(4.0));
        assert_eq!(f.eval(4.0), 4.0);
    }

    #[test]
    fn parse_specs() {
        let f: WeightFunction<f64> = WeightFunction::parse("convex:0.5").unwrap();
        assert_eq!(f, WeightFunction::convex(0.5, 0.0).unwrap());
        let f: WeightFunction<f64> = WeightFunction::parse("linear:1:0.2").unwrap();
        assert_eq!(f, WeightFunction::linear(1.0, 0.2).unwrap());
        assert!(WeightFunction::<f64>::parse("cubic:1").is_err());
        assert!(WeightFunction::<f64>::parse("linear:-1").is_err());
    }

    #[test]
    fn table_eval_and_threshold() {
        let text = "0 0\n1 2\n3 5\n";
        let f: WeightFunction<f64> =
            WeightFunction::table_from_str(text, TableInterp::Constant).unwrap();
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.eval(2.9), 2.0);
        assert_eq!(f.eval(10.0), 5.0);
        assert_eq!(f.threshold_input(2.0, 1e9), Some(1.0));
        assert_eq!(f.threshold_input(6.0, 1e9), None);

        let g: WeightFunction<f64> =
            WeightFunction::table_from_str(text, TableInterp::Linear).unwrap();
        assert_relative_eq!(g.eval(0.5), 1.0);
        assert_relative_eq!(g.eval(2.0), 3.5);
        assert_relative_eq!(g.threshold_input(3.5, 1e9).unwrap(), 2.0);
    }

    #[test]
    fn break_offsets_step() {
        let f = WeightFunction::step(1.0, 0.0).unwrap();
        let mut out = Vec::new();
        f.break_offsets(0.5, 3.0, &mut out);
        assert_eq!(out, vec![0.5, 1.5, 2.5]);
    }

    #[test]
    fn derivative_bounds() {
        let lin = WeightFunction::linear(2.0, 0.0).unwrap();
        assert_eq!(lin.derivative_bound(10.0), Some(2.0));
        let conv = WeightFunction::convex(1.0, 0.0).unwrap();
        assert_relative_eq!(conv.derivative_bound(9.0).unwrap(), 6.0);
        let conc = WeightFunction::concave(3.0, 0.0).unwrap();
        assert_eq!(conc.derivative_bound(9.0), Some(3.0));
        let step = WeightFunction::step(1.0, 0.0).unwrap();
        assert_eq!(step.derivative_bound(9.0), None);
    }
}
