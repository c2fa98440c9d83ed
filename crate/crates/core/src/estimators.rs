//! Closed-form link estimators and Monte-Carlo variance benchmarks.
//!
//! A path estimate inverts the scheme's outcome model at the observed
//! frequencies:
//!
//! * LZM: `W = 2 (n00 + n11)/n - 1`
//! * PEM: `W = (4 nPhi+/n - 1)/3`
//! * JBM: `W = sqrt(max(0, (4 nPhi+/n - 1)/3))`
//!
//! and is clamped to `[0, 1]`. Plans are solved task by task: a direct task
//! yields its link, an indirect task divides its path estimate by the
//! product of already estimated links on the path.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fisher::{plan_qfim, FisherError, FisherMode};
use crate::network::{LinkId, MonitoringPlan};
use crate::schemes::{sample_outcomes_on_stream, stream_id, OutcomeCounts, OutcomeDistribution, Scheme, SchemeError};

/// Divisors below this leave the link unidentifiable instead of amplifying noise.
pub const DIVISOR_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("outcome tally is empty")]
    ZeroTotal,
    #[error("counts were recorded for {got} but the task uses {expected}")]
    SchemeMismatch { expected: Scheme, got: Scheme },
    #[error("plan has {expected} tasks but counts were given for {got}")]
    MissingCounts { expected: usize, got: usize },
    #[error("expected {expected} true parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("at least 2 rounds are needed for a variance, got {0}")]
    TooFewRounds(u32),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Fisher(#[from] FisherError),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// Observed (or expected) outcome counts for one task.
pub trait Tally {
    fn scheme(&self) -> Scheme;
    fn counts(&self) -> [f64; 4];
}

impl Tally for OutcomeCounts {
    fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn counts(&self) -> [f64; 4] {
        self.counts.map(|c| c as f64)
    }
}

/// Real-valued counts `n * p_k`: the expectation of a multinomial sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    pub scheme: Scheme,
    pub counts: [f64; 4],
}

impl ExpectedCounts {
    pub fn new(dist: &OutcomeDistribution, n: f64) -> Self {
        ExpectedCounts {
            scheme: dist.scheme,
            counts: dist.probabilities.map(|p| p * n),
        }
    }
}

impl Tally for ExpectedCounts {
    fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn counts(&self) -> [f64; 4] {
        self.counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathEstimate {
    pub scheme: Scheme,
    /// Clamped to `[0, 1]`.
    pub big_w: f64,
    /// The inversion before clamping.
    pub raw: f64,
    pub n: f64,
}

pub fn estimate_path(scheme: Scheme, tally: &impl Tally) -> Result<PathEstimate> {
    if tally.scheme() != scheme {
        return Err(EstimatorError::SchemeMismatch {
            expected: scheme,
            got: tally.scheme(),
        });
    }
    let c = tally.counts();
    let n: f64 = c.iter().sum();
    if n <= 0.0 {
        return Err(EstimatorError::ZeroTotal);
    }
    let raw = match scheme {
        Scheme::Lzm => 2.0 * (c[0] + c[3]) / n - 1.0,
        Scheme::Pem => (4.0 * c[0] / n - 1.0) / 3.0,
        Scheme::Jbm => ((4.0 * c[0] / n - 1.0) / 3.0).max(0.0).sqrt(),
    };
    Ok(PathEstimate {
        scheme,
        big_w: raw.clamp(0.0, 1.0),
        raw,
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LinkEstimate {
    Estimated {
        w_hat: f64,
        /// Index of the task that produced the value.
        task: usize,
        /// Previously estimated links divided out of the path estimate.
        divided_by: Vec<LinkId>,
    },
    /// The divisor was below [`DIVISOR_GUARD`] or depended on a withheld link.
    Unidentifiable { task: usize, divisor: f64 },
    NotCovered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkEstimates {
    pub links: Vec<LinkEstimate>,
}

impl LinkEstimates {
    pub fn value(&self, link: LinkId) -> Option<f64> {
        match self.links.get(link.0)? {
            LinkEstimate::Estimated { w_hat, .. } => Some(*w_hat),
            _ => None,
        }
    }

    /// All values, if every link was estimated.
    pub fn values(&self) -> Option<Vec<f64>> {
        (0..self.links.len()).map(|i| self.value(LinkId(i))).collect()
    }
}

/// Solves a plan sequentially from one tally per task.
pub fn solve_plan<T: Tally>(plan: &MonitoringPlan, tallies: &[T]) -> Result<LinkEstimates> {
    if tallies.len() != plan.tasks().len() {
        return Err(EstimatorError::MissingCounts {
            expected: plan.tasks().len(),
            got: tallies.len(),
        });
    }
    let mut links = vec![LinkEstimate::NotCovered; plan.link_count()];
    for (t, (task, tally)) in plan.tasks().iter().zip(tallies).enumerate() {
        let path_estimate = estimate_path(task.scheme, tally)?;
        let fresh: Vec<LinkId> = task
            .path
            .links()
            .iter()
            .copied()
            .filter(|l| matches!(links[l.0], LinkEstimate::NotCovered))
            .collect();
        let [target] = fresh.as_slice() else {
            // nothing new to learn from this task
            continue;
        };
        let known: Vec<LinkId> = task
            .path
            .links()
            .iter()
            .copied()
            .filter(|l| l != target)
            .collect();
        let mut divisor = 1.0;
        let mut withheld = false;
        for l in &known {
            match &links[l.0] {
                LinkEstimate::Estimated { w_hat, .. } => divisor *= w_hat,
                _ => withheld = true,
            }
        }
        links[target.0] = if withheld || divisor < DIVISOR_GUARD {
            LinkEstimate::Unidentifiable {
                task: t,
                divisor: if withheld { 0.0 } else { divisor },
            }
        } else {
            LinkEstimate::Estimated {
                w_hat: (path_estimate.big_w / divisor).clamp(0.0, 1.0),
                task: t,
                divided_by: known,
            }
        };
    }
    Ok(LinkEstimates { links })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkBenchmark {
    pub link: LinkId,
    pub true_w: f64,
    pub mean: f64,
    /// Unbiased sample variance over the rounds that produced an estimate.
    pub variance: f64,
    /// Cramér–Rao bound for this link with `samples_per_task` samples per task.
    pub crb: f64,
    pub ratio: f64,
    /// Rounds in which the link was unidentifiable.
    pub withheld: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub plan: String,
    pub samples_per_task: u64,
    pub rounds: u32,
    pub seed: u64,
    pub links: Vec<LinkBenchmark>,
}

/// Runs `rounds` independent sample-and-solve rounds and compares the
/// per-link variance with the Cramér–Rao bound.
///
/// Round `r` samples task `t` from ChaCha stream [`stream_id`]`(r, t)` of
/// `seed`, so results do not depend on scheduling. The bound is the diagonal
/// of the inverse (unnormalized) plan Fisher matrix divided by
/// `samples_per_task`; it is 0 when the information diverges and `+inf`
/// when the matrix is singular.
pub fn benchmark_variance(
    plan: &MonitoringPlan,
    true_params: &[f64],
    samples_per_task: u64,
    rounds: u32,
    seed: u64,
    mode: FisherMode,
) -> Result<BenchmarkReport> {
    if rounds < 2 {
        return Err(EstimatorError::TooFewRounds(rounds));
    }
    if samples_per_task == 0 {
        return Err(SchemeError::NoSamples.into());
    }
    if true_params.len() != plan.link_count() {
        return Err(EstimatorError::ParamCount {
            expected: plan.link_count(),
            got: true_params.len(),
        });
    }
    let dists = plan
        .tasks()
        .iter()
        .map(|t| t.scheme.distribution(t.path.product(true_params)))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let estimates = (0..rounds)
        .into_par_iter()
        .map(|r| {
            let tallies = dists
                .iter()
                .enumerate()
                .map(|(t, d)| {
                    sample_outcomes_on_stream(d, samples_per_task, seed, stream_id(r, t as u32))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            solve_plan(plan, &tallies)
        })
        .collect::<Result<Vec<_>>>()?;

    let crb_diag: Vec<f64> = match plan_qfim(plan, true_params, mode, false) {
        Ok(f) => match f.inverse() {
            Some(inv) => (0..f.dim())
                .map(|i| inv[(i, i)] / samples_per_task as f64)
                .collect(),
            None => vec![f64::INFINITY; true_params.len()],
        },
        Err(FisherError::Divergent { .. }) => vec![0.0; true_params.len()],
        Err(e) => return Err(e.into()),
    };

    let links = (0..plan.link_count())
        .map(|i| {
            let link = LinkId(i);
            let values: Vec<f64> = estimates.iter().filter_map(|e| e.value(link)).collect();
            let withheld = rounds - values.len() as u32;
            let (mean, variance) = mean_and_variance(&values);
            let crb = crb_diag[i];
            LinkBenchmark {
                link,
                true_w: true_params[i],
                mean,
                variance,
                crb,
                ratio: variance / crb,
                withheld,
            }
        })
        .collect();

    Ok(BenchmarkReport {
        plan: plan.name().to_string(),
        samples_per_task,
        rounds,
        seed,
        links,
    })
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    if values.len() < 2 {
        return (values.first().copied().unwrap_or(f64::NAN), f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
