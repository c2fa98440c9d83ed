//! Outcome distributions of the three measurement schemes and seeded sampling.
//!
//! Every distribution is a function of the end-to-end Werner parameter `W`
//! of the measured path (the product of its link parameters).
//!
//! Sampling uses ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64(seed)`. Independent experiments draw from distinct ChaCha
//! streams of the same key: stream id `(round << 32) | task` for task `task`
//! in Monte-Carlo round `round` (see [`stream_id`]). Each draw takes one
//! `f64` from the generator and picks the first outcome whose cumulative
//! probability exceeds it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("end-to-end Werner parameter {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("sample size must be at least 1")]
    NoSamples,
}

/// Local Z-basis, joint Bell-state, or pre-shared-entanglement-assisted measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "LZM")]
    Lzm,
    #[serde(rename = "JBM")]
    Jbm,
    #[serde(rename = "PEM")]
    Pem,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Lzm, Scheme::Jbm, Scheme::Pem];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lzm => "LZM",
            Scheme::Jbm => "JBM",
            Scheme::Pem => "PEM",
        }
    }

    pub fn labels(self) -> [&'static str; 4] {
        match self {
            Scheme::Lzm => LZM_LABELS,
            Scheme::Jbm | Scheme::Pem => BELL_LABELS,
        }
    }

    /// Outcome probabilities at end-to-end parameter `big_w`, without range checks.
    pub fn probabilities(self, big_w: f64) -> [f64; 4] {
        match self {
            Scheme::Lzm => {
                let same = (1.0 + big_w) / 4.0;
                let diff = (1.0 - big_w) / 4.0;
                [same, diff, diff, same]
            }
            Scheme::Jbm => bell_weights(big_w * big_w),
            Scheme::Pem => bell_weights(big_w),
        }
    }

    /// `d p_k / d W` for each outcome.
    pub fn derivatives(self, big_w: f64) -> [f64; 4] {
        match self {
            Scheme::Lzm => [0.25, -0.25, -0.25, 0.25],
            Scheme::Jbm => {
                let s = 0.5 * big_w;
                [3.0 * s, -s, -s, -s]
            }
            Scheme::Pem => [0.75, -0.25, -0.25, -0.25],
        }
    }

    pub fn distribution(self, big_w: f64) -> Result<OutcomeDistribution, SchemeError> {
        match self {
            Scheme::Lzm => lzm_distribution(big_w),
            Scheme::Jbm => jbm_distribution(big_w),
            Scheme::Pem => pem_distribution(big_w),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scheme `{s}` (expected LZM, JBM or PEM)"))
    }
}

pub const LZM_LABELS: [&str; 4] = ["00", "01", "10", "11"];
pub const BELL_LABELS: [&str; 4] = ["Phi+", "Phi-", "Psi+", "Psi-"];

/// Bell-basis statistics of a Werner state with parameter `x`.
fn bell_weights(x: f64) -> [f64; 4] {
    let other = (1.0 - x) / 4.0;
    [(1.0 + 3.0 * x) / 4.0, other, other, other]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub scheme: Scheme,
    pub big_w: f64,
    pub probabilities: [f64; 4],
}

impl OutcomeDistribution {
    pub fn labels(&self) -> [&'static str; 4] {
        self.scheme.labels()
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.labels()
            .iter()
            .position(|l| *l == label)
            .map(|i| self.probabilities[i])
    }
}

fn checked(scheme: Scheme, big_w: f64) -> Result<OutcomeDistribution, SchemeError> {
    if !(0.0..=1.0).contains(&big_w) {
        return Err(SchemeError::OutOfRange(big_w));
    }
    Ok(OutcomeDistribution {
        scheme,
        big_w,
        probabilities: scheme.probabilities(big_w),
    })
}

/// Z-basis outcomes `00, 01, 10, 11` of `rho(W)` measured at both ends.
pub fn lzm_distribution(big_w: f64) -> Result<OutcomeDistribution, SchemeError> {
    checked(Scheme::Lzm, big_w)
}

/// Bell outcomes of `rho(W^2)` produced by cyclic generation.
pub fn jbm_distribution(big_w: f64) -> Result<OutcomeDistribution, SchemeError> {
    checked(Scheme::Jbm, big_w)
}

/// Bell outcomes of `rho(W)` teleported onto the monitor through a noiseless pair.
pub fn pem_distribution(big_w: f64) -> Result<OutcomeDistribution, SchemeError> {
    checked(Scheme::Pem, big_w)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub scheme: Scheme,
    pub counts: [u64; 4],
    pub total: u64,
    pub seed: u64,
    pub stream: u64,
}

impl OutcomeCounts {
    pub fn count(&self, label: &str) -> Option<u64> {
        self.scheme
            .labels()
            .iter()
            .position(|l| *l == label)
            .map(|i| self.counts[i])
    }

    /// Counts assembled by hand; `seed` and `stream` are zero.
    pub fn from_counts(scheme: Scheme, counts: [u64; 4]) -> Self {
        OutcomeCounts {
            scheme,
            counts,
            total: counts.iter().sum(),
            seed: 0,
            stream: 0,
        }
    }
}

/// Stream id for task `task` in Monte-Carlo round `round`.
pub fn stream_id(round: u32, task: u32) -> u64 {
    (u64::from(round) << 32) | u64::from(task)
}

/// `n` categorical draws on stream 0 of `seed`.
pub fn sample_outcomes(
    dist: &OutcomeDistribution,
    n: u64,
    seed: u64,
) -> Result<OutcomeCounts, SchemeError> {
    sample_outcomes_on_stream(dist, n, seed, 0)
}

pub fn sample_outcomes_on_stream(
    dist: &OutcomeDistribution,
    n: u64,
    seed: u64,
    stream: u64,
) -> Result<OutcomeCounts, SchemeError> {
    if n == 0 {
        return Err(SchemeError::NoSamples);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let p = dist.probabilities;
    let cumulative = [p[0], p[0] + p[1], p[0] + p[1] + p[2]];
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let u: f64 = rng.gen();
        let k = cumulative.iter().position(|&c| u < c).unwrap_or(3);
        counts[k] += 1;
    }
    // zero-probability outcomes can only be hit through rounding in the last bucket
    if p[3] == 0.0 && counts[3] > 0 {
        let last = (0..3).rev().find(|&i| p[i] > 0.0).unwrap_or(0);
        counts[last] += counts[3];
        counts[3] = 0;
    }
    Ok(OutcomeCounts {
        scheme: dist.scheme,
        counts,
        total: n,
        seed,
        stream,
    })
}
