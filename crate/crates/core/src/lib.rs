//! Link-parameter estimation for quantum networks whose links distribute
//! Werner states.
//!
//! * [`network`]: graphs, paths, monitoring plans and channel-use ledgers.
//! * [`oracle`]: exact density-matrix simulation used as ground truth.
//! * [`schemes`]: LZM / JBM / PEM outcome distributions and seeded sampling.
//! * [`fisher`]: Fisher information matrices, Cramér–Rao bounds and crossovers.
//! * [`estimators`]: closed-form estimators, plan solving and variance benchmarks.

pub mod estimators;
pub mod fisher;
pub mod network;
pub mod oracle;
pub mod schemes;

pub use estimators::{benchmark_variance, estimate_path, solve_plan, ExpectedCounts, LinkEstimates, PathEstimate};
pub use fisher::{crossover, plan_qfim, qcrb, task_qfim, FisherMatrix, FisherMode, Qcrb};
pub use network::{
    build_star, builtin_plan, channel_uses, LinkId, MeasurementTask, MonitoringPlan, NetworkGraph, NodeId, Path,
    PlanKind, UsageLedger,
};
pub use schemes::{sample_outcomes, OutcomeCounts, OutcomeDistribution, Scheme};
