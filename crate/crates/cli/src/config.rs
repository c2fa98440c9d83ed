//! Experiment manifests.
//!
//! A manifest is a TOML file with flat, dotted keys:
//!
//! ```toml
//! experiment = "star"          # single-link | ratio | star | benchmark
//! mode = "paper"               # paper | first-principles
//! normalize = "on"             # on | off (booleans also accepted)
//! seed = 7
//! samples = 100000             # samples per task (benchmark)
//! rounds = 200                 # Monte-Carlo rounds (benchmark)
//! output = "fig4b.csv"
//! sweep = "heterogeneous"      # homogeneous | heterogeneous (star)
//! grid.start = 0.01
//! grid.stop = 0.99
//! grid.step = 0.01
//! fixed.w0 = 0.99              # held fixed in heterogeneous star sweeps
//! fixed.w1 = 0.99
//! plan = "JBM2"                # benchmark plan: LZM1 JBM1 PEM1 JBM2 JBM3 HYB2 HYB3 custom
//! true_w = [0.9, 0.8, 0.7]     # true link parameters (benchmark)
//! ```
//!
//! A `custom` benchmark plan reads its graph from `[network]` and its
//! ordered tasks from `[[tasks]]`:
//!
//! ```toml
//! [network]
//! nodes = 3
//! links = [[0, 1, 0.9], [1, 2, 0.8]]
//! monitors = [0, 2]
//!
//! [[tasks]]
//! scheme = "LZM"
//! links = [0]
//!
//! [[tasks]]
//! scheme = "LZM"
//! links = [0, 1]
//! ```
//!
//! Command-line flags override the corresponding file keys.

use std::fmt;
use std::path::PathBuf;

use qnt_core::network::{
    build_star, builtin_plan, single_link_plan, LinkId, MeasurementTask, MonitoringPlan, NetworkError,
    NetworkGraph, Path, PlanKind,
};
use qnt_core::{FisherMode, Scheme};
use serde::Deserialize;
use thiserror::Error;

pub const GRID_MIN: f64 = 0.01;
pub const GRID_MAX: f64 = 0.99;
/// Upper bound on grid points, so a malformed step cannot exhaust memory.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("config is for `{found}` but the `{expected}` command was run")]
    WrongExperiment { expected: Experiment, found: Experiment },
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: &'static str, reason: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SingleLink,
    Ratio,
    Star,
    Benchmark,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::SingleLink => "single-link",
            Experiment::Ratio => "ratio",
            Experiment::Star => "star",
            Experiment::Benchmark => "benchmark",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StarSweep {
    /// All three links share the swept parameter.
    Homogeneous,
    /// `w0` and `w1` fixed, `w2` swept.
    Heterogeneous,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Toggle {
    Bool(bool),
    Word(String),
}

impl Toggle {
    fn resolve(&self) -> Result<bool, ConfigError> {
        match self {
            Toggle::Bool(b) => Ok(*b),
            Toggle::Word(w) => parse_toggle(w).map_err(|reason| ConfigError::Value {
                key: "normalize",
                reason,
            }),
        }
    }
}

pub fn parse_toggle(word: &str) -> Result<bool, String> {
    match word.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(format!("`{word}` is not on/off")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedSpec {
    w0: Option<f64>,
    w1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: usize,
    pub links: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub monitors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub scheme: Scheme,
    pub links: Vec<usize>,
}

/// The manifest as written, before defaults and validation.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    experiment: Option<Experiment>,
    mode: Option<FisherMode>,
    normalize: Option<Toggle>,
    seed: Option<u64>,
    samples: Option<u64>,
    rounds: Option<u32>,
    output: Option<PathBuf>,
    sweep: Option<StarSweep>,
    grid: Option<GridSpec>,
    fixed: Option<FixedSpec>,
    plan: Option<String>,
    true_w: Option<Vec<f64>>,
    network: Option<NetworkSpec>,
    tasks: Option<Vec<TaskSpec>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Builds the graph and ordered plan declared by `[network]` and `[[tasks]]`.
    pub fn custom_plan(&self) -> Result<Option<(NetworkGraph, MonitoringPlan)>, ConfigError> {
        let Some(spec) = &self.network else {
            return Ok(None);
        };
        let graph = NetworkGraph::new(spec.nodes, &spec.links, spec.monitors.iter().copied())?;
        let tasks = self
            .tasks
            .iter()
            .flatten()
            .map(|t| {
                let ids: Vec<LinkId> = t.links.iter().copied().map(LinkId).collect();
                Ok(MeasurementTask::new(t.scheme, Path::new(&graph, &ids)?))
            })
            .collect::<Result<Vec<_>, NetworkError>>()?;
        let plan = MonitoringPlan::new("custom", &graph, tasks)?;
        Ok(Some((graph, plan)))
    }
}

/// Command-line overrides; `None` keeps the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<FisherMode>,
    pub normalize: Option<bool>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            start: GRID_MIN,
            stop: GRID_MAX,
            step: 0.01,
        }
    }
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, ConfigError> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(ConfigError::Grid("values must be finite".into()));
        }
        if step <= 0.0 {
            return Err(ConfigError::Grid(format!("step {step} must be positive")));
        }
        if start < GRID_MIN - 1e-12 || stop > GRID_MAX + 1e-12 {
            return Err(ConfigError::Grid(format!(
                "[{start}, {stop}] leaves [{GRID_MIN}, {GRID_MAX}]"
            )));
        }
        if start > stop {
            return Err(ConfigError::Grid(format!("start {start} exceeds stop {stop}")));
        }
        let grid = Grid { start, stop, step };
        if grid.len_unchecked() > MAX_GRID_POINTS {
            return Err(ConfigError::Grid(format!(
                "more than {MAX_GRID_POINTS} points"
            )));
        }
        Ok(grid)
    }

    fn len_unchecked(&self) -> usize {
        let span = (self.stop - self.start) / self.step;
        if span > MAX_GRID_POINTS as f64 {
            return usize::MAX;
        }
        (span + 1e-9).floor() as usize + 1
    }

    /// Grid values, rounded to 12 decimals so `0.01 + k * 0.01` lands on the decimal.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len_unchecked())
            .map(|i| {
                let x = self.start + i as f64 * self.step;
                (x * 1e12).round() / 1e12
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkPlan {
    SingleLink(Scheme),
    Star(PlanKind),
    Custom,
}

impl BenchmarkPlan {
    fn parse(name: &str) -> Result<Self, String> {
        if name.eq_ignore_ascii_case("custom") {
            return Ok(BenchmarkPlan::Custom);
        }
        if let Some(scheme) = name.strip_suffix('1') {
            if let Ok(s) = scheme.parse::<Scheme>() {
                return Ok(BenchmarkPlan::SingleLink(s));
            }
        }
        name.parse::<PlanKind>()
            .map(BenchmarkPlan::Star)
            .map_err(|_| format!("unknown plan `{name}` (LZM1, JBM1, PEM1, JBM2, JBM3, HYB2, HYB3, custom)"))
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub experiment: Experiment,
    pub grid: Grid,
    pub mode: FisherMode,
    pub normalize: bool,
    pub seed: u64,
    pub samples: u64,
    pub rounds: u32,
    pub sweep: StarSweep,
    pub fixed_w0: f64,
    pub fixed_w1: f64,
    pub output: Option<PathBuf>,
    /// Benchmark graph, plan and true parameters.
    pub benchmark: Option<(NetworkGraph, MonitoringPlan, Vec<f64>)>,
}

impl SweepConfig {
    /// Applies defaults and overrides for `experiment`, then validates.
    pub fn resolve(
        file: &ConfigFile,
        experiment: Experiment,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        if let Some(found) = file.experiment {
            if found != experiment {
                return Err(ConfigError::WrongExperiment {
                    expected: experiment,
                    found,
                });
            }
        }
        let grid_spec = file.grid.clone().unwrap_or_default();
        let defaults = Grid::default();
        let grid = Grid::new(
            grid_spec.start.unwrap_or(defaults.start),
            grid_spec.stop.unwrap_or(defaults.stop),
            grid_spec.step.unwrap_or(defaults.step),
        )?;

        let default_mode = match experiment {
            Experiment::Benchmark => FisherMode::FirstPrinciples,
            _ => FisherMode::Paper,
        };
        let mode = overrides.mode.or(file.mode).unwrap_or(default_mode);
        let file_normalize = file.normalize.as_ref().map(Toggle::resolve).transpose()?;
        let normalize = overrides
            .normalize
            .or(file_normalize)
            .unwrap_or(experiment == Experiment::Star);

        let fixed = file.fixed.clone().unwrap_or_default();
        let fixed_w0 = unit_interval("fixed.w0", fixed.w0.unwrap_or(0.99))?;
        let fixed_w1 = unit_interval("fixed.w1", fixed.w1.unwrap_or(0.99))?;

        let samples = file.samples.unwrap_or(100_000);
        if samples == 0 {
            return Err(ConfigError::Value {
                key: "samples",
                reason: "must be at least 1".into(),
            });
        }
        let rounds = file.rounds.unwrap_or(200);
        if experiment == Experiment::Benchmark && rounds < 2 {
            return Err(ConfigError::Value {
                key: "rounds",
                reason: "must be at least 2".into(),
            });
        }

        let benchmark = if experiment == Experiment::Benchmark {
            Some(resolve_benchmark(file)?)
        } else {
            None
        };

        Ok(SweepConfig {
            experiment,
            grid,
            mode,
            normalize,
            seed: overrides.seed.or(file.seed).unwrap_or(0),
            samples,
            rounds,
            sweep: file.sweep.unwrap_or(StarSweep::Homogeneous),
            fixed_w0,
            fixed_w1,
            output: overrides.output.clone().or_else(|| file.output.clone()),
            benchmark,
        })
    }
}

fn unit_interval(key: &'static str, w: f64) -> Result<f64, ConfigError> {
    if (0.0..=1.0).contains(&w) {
        Ok(w)
    } else {
        Err(ConfigError::Value {
            key,
            reason: format!("{w} is outside [0, 1]"),
        })
    }
}

fn resolve_benchmark(file: &ConfigFile) -> Result<(NetworkGraph, MonitoringPlan, Vec<f64>), ConfigError> {
    let name = file.plan.as_deref().unwrap_or("PEM1");
    let kind = BenchmarkPlan::parse(name).map_err(|reason| ConfigError::Value { key: "plan", reason })?;
    let (graph, plan) = match kind {
        BenchmarkPlan::SingleLink(scheme) => {
            let w = file.true_w.as_ref().and_then(|v| v.first().copied()).unwrap_or(0.6);
            single_link_plan(scheme, unit_interval("true_w", w)?)?
        }
        BenchmarkPlan::Star(kind) => {
            let ws = file.true_w.clone().unwrap_or_else(|| vec![0.9, 0.8, 0.7]);
            let g = build_star(3, &ws)?;
            let plan = builtin_plan(kind, &g)?;
            (g, plan)
        }
        BenchmarkPlan::Custom => file.custom_plan()?.ok_or(ConfigError::Value {
            key: "plan",
            reason: "`custom` needs a [network] section".into(),
        })?,
    };
    let params = match &file.true_w {
        Some(ws) => {
            let g = graph.with_params(ws)?;
            g.params()
        }
        None => graph.params(),
    };
    Ok((graph, plan, params))
}
