//! The experiments behind each subcommand. Every command produces a
//! [`Table`] whose rows are ordered by grid index, so identical inputs give
//! byte-identical CSV.

use std::io::Write;

use qnt_core::estimators::benchmark_variance;
use qnt_core::fisher::{crossover, path_information, plan_qfim, qcrb, single_link_information, FisherMode};
use qnt_core::network::{build_star, builtin_plan, single_link_plan, PlanKind};
use qnt_core::oracle;
use qnt_core::schemes::Scheme;
use qnt_core::channel_uses;
use thiserror::Error;

use crate::config::{StarSweep, SweepConfig};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Model(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

fn model_err(e: impl std::fmt::Display) -> CommandError {
    CommandError::Model(e.to_string())
}

/// Renders a number with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Extra lines for the terminal, not part of the CSV.
    pub notes: Vec<String>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Channel uses of one direct measurement of a single link.
fn single_link_uses(scheme: Scheme) -> f64 {
    let (_, plan) = single_link_plan(scheme, 0.5).expect("0.5 is a valid parameter");
    channel_uses(&plan).total as f64
}

fn single_link_point(scheme: Scheme, w: f64, mode: FisherMode, normalize: bool) -> (f64, f64) {
    let mut f = single_link_information(scheme, w, mode);
    if normalize {
        f /= single_link_uses(scheme);
    }
    // a 1x1 matrix is singular exactly when its entry is not positive
    let bound = if f > 0.0 { 1.0 / f } else { f64::INFINITY };
    (f, bound)
}

/// `scheme,w,fisher,qcrb,mode,normalized` for each scheme at every grid point.
pub fn cmd_single_link(config: &SweepConfig) -> Table {
    let mut table = Table::new(&["scheme", "w", "fisher", "qcrb", "mode", "normalized"]);
    for w in config.grid.points() {
        for scheme in Scheme::ALL {
            let (f, bound) = single_link_point(scheme, w, config.mode, config.normalize);
            table.rows.push(vec![
                scheme.to_string(),
                fmt_num(w),
                fmt_num(f),
                fmt_num(bound),
                config.mode.to_string(),
                if config.normalize { "on" } else { "off" }.to_string(),
            ]);
        }
    }
    table
}

/// `w,qcrb_lzm/qcrb_jbm`; the crossover goes to the notes.
pub fn cmd_ratio(config: &SweepConfig) -> Table {
    let mut table = Table::new(&["w", "qcrb_lzm/qcrb_jbm"]);
    for w in config.grid.points() {
        let (_, lzm) = single_link_point(Scheme::Lzm, w, config.mode, config.normalize);
        let (_, jbm) = single_link_point(Scheme::Jbm, w, config.mode, config.normalize);
        table.rows.push(vec![fmt_num(w), fmt_num(lzm / jbm)]);
    }
    let root = if config.normalize {
        normalized_crossover(config.mode)
    } else {
        crossover(Scheme::Lzm, Scheme::Jbm, config.mode)
    };
    table.notes.push(match root {
        Some(w) => format!("crossover,{}", fmt_num(w)),
        None => "crossover,none".to_string(),
    });
    table
}

fn normalized_crossover(mode: FisherMode) -> Option<f64> {
    let diff = |w: f64| {
        single_link_point(Scheme::Lzm, w, mode, true).0 - single_link_point(Scheme::Jbm, w, mode, true).0
    };
    let (mut lo, mut hi) = (1e-3, 1.0 - 1e-3);
    let (d_lo, d_hi) = (diff(lo), diff(hi));
    if d_lo.signum() == d_hi.signum() {
        return None;
    }
    while hi - lo > qnt_core::fisher::CROSSOVER_TOL {
        let mid = 0.5 * (lo + hi);
        if diff(mid).signum() == d_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Star parameters `(w0, w1, w2)` at grid value `w`.
pub fn star_params(config: &SweepConfig, w: f64) -> [f64; 3] {
    match config.sweep {
        StarSweep::Homogeneous => [w; 3],
        StarSweep::Heterogeneous => [config.fixed_w0, config.fixed_w1, w],
    }
}

pub fn star_qcrb(kind: PlanKind, params: [f64; 3], mode: FisherMode, normalize: bool) -> Result<f64, CommandError> {
    let g = build_star(3, &params).map_err(model_err)?;
    let plan = builtin_plan(kind, &g).map_err(model_err)?;
    let f = plan_qfim(&plan, &params, mode, normalize).map_err(model_err)?;
    Ok(qcrb(&f).value)
}

/// `strategy,w,qcrb` for the four star strategies.
pub fn cmd_star(config: &SweepConfig) -> Result<Table, CommandError> {
    let mut table = Table::new(&["strategy", "w", "qcrb"]);
    for w in config.grid.points() {
        let params = star_params(config, w);
        for kind in PlanKind::ALL {
            let bound = star_qcrb(kind, params, config.mode, config.normalize)?;
            table.rows.push(vec![kind.to_string(), fmt_num(w), fmt_num(bound)]);
        }
    }
    Ok(table)
}

/// `plan,link,true_w,empirical_variance,crb,ratio`.
pub fn cmd_benchmark(config: &SweepConfig) -> Result<Table, CommandError> {
    let (_, plan, params) = config
        .benchmark
        .as_ref()
        .ok_or_else(|| CommandError::Model("benchmark plan missing".into()))?;
    let report = benchmark_variance(plan, params, config.samples, config.rounds, config.seed, config.mode)
        .map_err(model_err)?;
    let mut table = Table::new(&["plan", "link", "true_w", "empirical_variance", "crb", "ratio"]);
    for link in &report.links {
        table.rows.push(vec![
            report.plan.clone(),
            link.link.to_string(),
            fmt_num(link.true_w),
            fmt_num(link.variance),
            fmt_num(link.crb),
            fmt_num(link.ratio),
        ]);
        if link.withheld > 0 {
            table
                .notes
                .push(format!("{}: unidentifiable in {} rounds", link.link, link.withheld));
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const ORACLE_TOL: f64 = 1e-12;
pub const MODE_TOL: f64 = 1e-9;

fn max_abs(a: [f64; 4], b: [f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn deviation_check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        tolerance,
        passed: value.is_finite() && value <= tolerance,
    }
}

type Simulator = fn(&[f64]) -> oracle::Result<[f64; 4]>;

/// Oracle equivalence and closed-form consistency checks.
pub fn run_validation() -> Vec<Check> {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let chains: Vec<Vec<f64>> = vec![vec![0.9, 0.8], vec![0.5, 0.95, 0.7], vec![0.3, 1.0]];
    let inputs: Vec<Vec<f64>> = grid.iter().map(|&w| vec![w]).chain(chains).collect();

    let mut checks = Vec::new();
    let scheme_checks: [(&'static str, Scheme, Simulator); 3] = [
        ("lzm-distribution-vs-oracle", Scheme::Lzm, oracle::lzm_outcomes),
        ("jbm-distribution-vs-oracle", Scheme::Jbm, oracle::jbm_outcomes),
        ("pem-distribution-vs-oracle", Scheme::Pem, oracle::pem_outcomes),
    ];
    for (name, scheme, simulate) in scheme_checks {
        let worst = inputs
            .iter()
            .map(|params| {
                let big_w: f64 = params.iter().product();
                match (simulate(params), scheme.distribution(big_w)) {
                    (Ok(sim), Ok(d)) => max_abs(sim, d.probabilities),
                    _ => f64::INFINITY,
                }
            })
            .fold(0.0, f64::max);
        checks.push(deviation_check(name, worst, ORACLE_TOL));
    }

    let mut worst = 0.0f64;
    for i in 0..=10 {
        for j in 0..=10 {
            let (w1, w2) = (i as f64 / 10.0, j as f64 / 10.0);
            let dev = match (oracle::linear_generation(&[w1, w2]), oracle::werner_density(w1 * w2)) {
                (Ok(a), Ok(b)) => a.max_abs_diff(&b),
                _ => f64::INFINITY,
            };
            worst = worst.max(dev);
        }
    }
    checks.push(deviation_check("swap-multiplicativity", worst, ORACLE_TOL));

    let interior: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let ratio_dev = interior
        .iter()
        .map(|&w| {
            let paper = path_information(Scheme::Lzm, &[w], FisherMode::Paper)[(0, 0)];
            let fp = path_information(Scheme::Lzm, &[w], FisherMode::FirstPrinciples)[(0, 0)];
            (paper / fp - 2.0).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "lzm-direct-closed-form-ratio",
        value: 2.0 + ratio_dev,
        tolerance: 1e-12,
        passed: ratio_dev <= 1e-12,
    });

    let mode_dev = |scheme: Scheme, len: usize| -> f64 {
        let mut worst = 0.0f64;
        let mut params = vec![0.0; len];
        let n = interior.len();
        for idx in 0..n.pow(len as u32) {
            let mut k = idx;
            for p in params.iter_mut() {
                *p = interior[k % n];
                k /= n;
            }
            let paper = path_information(scheme, &params, FisherMode::Paper);
            let fp = path_information(scheme, &params, FisherMode::FirstPrinciples);
            for (a, b) in paper.iter().zip(fp.iter()) {
                worst = worst.max(rel(*a, *b));
            }
        }
        worst
    };
    let pairs: [(&'static str, Scheme, usize); 5] = [
        ("lzm-indirect-mode-agreement", Scheme::Lzm, 2),
        ("jbm-direct-mode-agreement", Scheme::Jbm, 1),
        ("jbm-indirect-mode-agreement", Scheme::Jbm, 2),
        ("pem-direct-mode-agreement", Scheme::Pem, 1),
        ("pem-indirect-mode-agreement", Scheme::Pem, 2),
    ];
    for (name, scheme, len) in pairs {
        let worst = mode_dev(scheme, len).max(if len == 2 { mode_dev(scheme, 3) } else { 0.0 });
        checks.push(deviation_check(name, worst, MODE_TOL));
    }
    checks
}

/// `check,value,tolerance,status`.
pub fn cmd_validate() -> (Table, bool) {
    let checks = run_validation();
    let mut table = Table::new(&["check", "value", "tolerance", "status"]);
    for c in &checks {
        table.rows.push(vec![
            c.name.to_string(),
            fmt_num(c.value),
            fmt_num(c.tolerance),
            if c.passed { "pass" } else { "fail" }.to_string(),
        ]);
    }
    (table, checks.iter().all(|c| c.passed))
}
