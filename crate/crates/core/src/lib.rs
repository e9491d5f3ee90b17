//! Length-bounded path interdiction in a continuous impact domain.
//!
//! Given a directed graph whose nodes carry monotone non-decreasing weight
//! functions of a continuous impact amount, and a set of target node pairs,
//! the solvers find an impact vector of small total amount under which
//! every path between the target pairs has (capped) length at least
//! `T(1 - eps)`.
//!
//! The library is organized around two cooperating oracles:
//!
//! * threshold blocking ([`tb`]) pushes a concrete set of paths past the
//!   threshold, by threshold expansion or jump-start greedy;
//! * critical path listing ([`cpl`]) drives the blocking oracle with k
//!   shortest paths per unsatisfied pair, either incrementally or against a
//!   cumulative path set.
//!
//! [`baselines`] holds the all-or-nothing and discretized comparison
//! methods plus an exhaustive oracle for tiny instances, and [`harness`]
//! runs reproducible experiment sweeps with CSV output.
//!
//! All numeric code is generic over the scalar type through [`real::Real`];
//! the aliases below fix `f64`, which the CLI and the test suites use.

pub mod baselines;
pub mod cpl;
pub mod error;
pub mod graph;
pub mod harness;
pub mod real;
pub mod tb;
pub mod weights;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId, Path, TargetPairs};
pub use real::Real;

/// Double-precision aliases for the common entry points.
pub type ImpactVec = weights::ImpactVector<f64>;
pub type WeightFn = weights::WeightFunction<f64>;
pub type TbCfg = tb::TbConfig<f64>;
pub type TbOutcome = tb::TbResult<f64>;
pub type SolveCfg = cpl::CplConfig<f64>;
pub type Solution = cpl::SolveResult<f64>;
pub type Experiment = harness::ExperimentSpec<f64>;
pub type Record = harness::RunRecord<f64>;
