//! Fisher information of measurement outcomes with respect to link parameters.
//!
//! Two evaluation modes are offered. [`FisherMode::Paper`] evaluates the
//! published closed forms term by term. [`FisherMode::FirstPrinciples`]
//! evaluates `F_ij = sum_k (dp_k/dw_i)(dp_k/dw_j) / p_k` directly from the
//! outcome models, using `dp_k/dw_i = (dp_k/dW) * prod_{l != i} w_l`.
//!
//! The modes agree everywhere except the directly monitored LZM link, where
//! the closed form is exactly twice the first-principles value
//! (`2/((1+w)(1-w))` against `1/(1-w^2)`). The published LZM/JBM crossover
//! near 0.577 follows from the closed form; first principles put it at 1/3.
//!
//! The scalar bound is the trace of the inverse Fisher matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{channel_uses, MeasurementTask, MonitoringPlan, UsageLedger};
use crate::schemes::Scheme;

/// Condition number above which a Fisher matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FisherError {
    #[error("parameter vector has {got} entries but link {link} was referenced")]
    MissingParam { link: usize, got: usize },
    #[error("Werner parameter {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("Fisher information diverges for {task} ({mode} mode): an outcome with nonzero slope has probability 0")]
    Divergent { task: String, mode: FisherMode },
}

pub type Result<T> = std::result::Result<T, FisherError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FisherMode {
    Paper,
    FirstPrinciples,
}

impl FisherMode {
    pub fn name(self) -> &'static str {
        match self {
            FisherMode::Paper => "paper",
            FisherMode::FirstPrinciples => "first-principles",
        }
    }
}

impl fmt::Display for FisherMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FisherMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "paper" => Ok(FisherMode::Paper),
            "first-principles" => Ok(FisherMode::FirstPrinciples),
            _ => Err(format!(
                "unknown mode `{s}` (expected paper or first-principles)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    entries: DMatrix<f64>,
    mode: FisherMode,
    /// Present when the matrix was divided by the plan's total channel uses.
    ledger: Option<UsageLedger>,
}

impl FisherMatrix {
    pub fn zeros(dim: usize, mode: FisherMode) -> Self {
        FisherMatrix {
            entries: DMatrix::zeros(dim, dim),
            mode,
            ledger: None,
        }
    }

    pub fn from_entries(entries: DMatrix<f64>, mode: FisherMode) -> Self {
        assert!(entries.is_square(), "Fisher matrix must be square");
        FisherMatrix {
            entries,
            mode,
            ledger: None,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn mode(&self) -> FisherMode {
        self.mode
    }

    pub fn is_normalized(&self) -> bool {
        self.ledger.is_some()
    }

    pub fn ledger(&self) -> Option<&UsageLedger> {
        self.ledger.as_ref()
    }

    pub fn is_symmetric(&self) -> bool {
        let m = &self.entries;
        (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= SYMMETRY_TOL))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn is_psd(&self) -> bool {
        self.eigenvalues().first().is_none_or(|&e| e >= -PSD_TOL)
    }

    /// Inverse, or `None` when the condition number exceeds [`SINGULAR_CONDITION`].
    pub fn inverse(&self) -> Option<DMatrix<f64>> {
        let eig = SymmetricEigen::new(self.entries.clone());
        let (min, max) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
        if self.dim() > 0 && (min <= 0.0 || max / min > SINGULAR_CONDITION) {
            return None;
        }
        let inv_diag = eig.eigenvalues.map(|e| 1.0 / e);
        Some(&eig.eigenvectors * DMatrix::from_diagonal(&inv_diag) * eig.eigenvectors.transpose())
    }

    fn scale(&mut self, factor: f64) {
        self.entries *= factor;
    }
}

impl std::ops::AddAssign<&FisherMatrix> for FisherMatrix {
    fn add_assign(&mut self, rhs: &FisherMatrix) {
        self.entries += &rhs.entries;
    }
}

/// Fisher information over the path coordinates only, in path order.
///
/// Entries that divide by zero come back non-finite; callers decide whether
/// that is an error.
pub fn path_information(scheme: Scheme, path_params: &[f64], mode: FisherMode) -> DMatrix<f64> {
    let n = path_params.len();
    let big_w: f64 = path_params.iter().product();
    // g_i = prod_{l != i} w_l, the slope of W in w_i
    let g: Vec<f64> = (0..n)
        .map(|i| {
            path_params
                .iter()
                .enumerate()
                .filter(|(l, _)| *l != i)
                .map(|(_, w)| w)
                .product()
        })
        .collect();

    match mode {
        FisherMode::FirstPrinciples => {
            let p = scheme.probabilities(big_w);
            let dp = scheme.derivatives(big_w);
            DMatrix::from_fn(n, n, |i, j| {
                (0..4)
                    .map(|k| {
                        let num = dp[k] * g[i] * dp[k] * g[j];
                        if num == 0.0 {
                            0.0
                        } else {
                            num / p[k]
                        }
                    })
                    .sum()
            })
        }
        FisherMode::Paper => {
            if n == 1 {
                let w = path_params[0];
                let direct = match scheme {
                    Scheme::Lzm => 2.0 / ((1.0 + w) * (1.0 - w)),
                    Scheme::Jbm => 12.0 * w * w / ((1.0 + 3.0 * w * w) * (1.0 - w * w)),
                    Scheme::Pem => 3.0 / ((1.0 + 3.0 * w) * (1.0 - w)),
                };
                return DMatrix::from_element(1, 1, direct);
            }
            match scheme {
                Scheme::Lzm => {
                    let denom = (1.0 + big_w) * (1.0 - big_w);
                    DMatrix::from_fn(n, n, |i, j| g[i] * g[j] / denom)
                }
                Scheme::Jbm => {
                    let w_sq: f64 = path_params.iter().map(|w| w * w).product();
                    let denom = (1.0 + 3.0 * w_sq) * (1.0 - w_sq);
                    let g_sq: Vec<f64> = g.iter().map(|x| x * x).collect();
                    DMatrix::from_fn(n, n, |i, j| {
                        12.0 * path_params[i] * path_params[j] / denom * g_sq[i] * g_sq[j]
                    })
                }
                Scheme::Pem => {
                    let denom = (1.0 + 3.0 * big_w) * (1.0 - big_w);
                    DMatrix::from_fn(n, n, |i, j| 3.0 / denom * g[i] * g[j])
                }
            }
        }
    }
}

/// Fisher information of one task over the full parameter vector.
pub fn task_qfim(task: &MeasurementTask, params: &[f64], mode: FisherMode) -> Result<FisherMatrix> {
    let links = task.path.links();
    let mut local = Vec::with_capacity(links.len());
    for l in links {
        let w = *params.get(l.0).ok_or(FisherError::MissingParam {
            link: l.0,
            got: params.len(),
        })?;
        if !(0.0..=1.0).contains(&w) {
            return Err(FisherError::OutOfRange(w));
        }
        local.push(w);
    }
    let block = path_information(task.scheme, &local, mode);
    if block.iter().any(|x| !x.is_finite()) {
        return Err(FisherError::Divergent {
            task: task.to_string(),
            mode,
        });
    }
    let mut full = DMatrix::zeros(params.len(), params.len());
    for (a, la) in links.iter().enumerate() {
        for (b, lb) in links.iter().enumerate() {
            full[(la.0, lb.0)] = block[(a, b)];
        }
    }
    Ok(FisherMatrix::from_entries(full, mode))
}

/// Sum of the task matrices, optionally divided by the plan's total channel uses.
pub fn plan_qfim(
    plan: &MonitoringPlan,
    params: &[f64],
    mode: FisherMode,
    normalize: bool,
) -> Result<FisherMatrix> {
    if params.len() < plan.link_count() {
        return Err(FisherError::MissingParam {
            link: plan.link_count() - 1,
            got: params.len(),
        });
    }
    let mut total = FisherMatrix::zeros(params.len(), mode);
    for task in plan.tasks() {
        total += &task_qfim(task, params, mode)?;
    }
    if normalize {
        let ledger = channel_uses(plan);
        if ledger.total > 0 {
            total.scale(1.0 / ledger.total as f64);
        }
        total.ledger = Some(ledger);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qcrb {
    /// `tr(F^-1)`, or `+inf` when `F` is singular.
    pub value: f64,
    pub singular: bool,
}

pub fn qcrb(fisher: &FisherMatrix) -> Qcrb {
    match fisher.inverse() {
        Some(inv) => Qcrb {
            value: inv.trace(),
            singular: false,
        },
        None => Qcrb {
            value: f64::INFINITY,
            singular: true,
        },
    }
}

/// Fisher information of a single directly monitored link.
pub fn single_link_information(scheme: Scheme, w: f64, mode: FisherMode) -> f64 {
    path_information(scheme, &[w], mode)[(0, 0)]
}

/// Bound for a single directly monitored link; `+inf` where the information vanishes.
pub fn single_link_qcrb(scheme: Scheme, w: f64, mode: FisherMode) -> f64 {
    let f = single_link_information(scheme, w, mode);
    qcrb(&FisherMatrix::from_entries(DMatrix::from_element(1, 1, f), mode)).value
}

pub const CROSSOVER_TOL: f64 = 1e-10;
const CROSSOVER_SCAN: usize = 1000;

/// First `w` in (0, 1) where the single-link informations of two schemes cross.
///
/// Scans a uniform grid for a strict sign change of `F_a - F_b`, then
/// bisects to [`CROSSOVER_TOL`]. Identical curves have no crossing.
pub fn crossover(a: Scheme, b: Scheme, mode: FisherMode) -> Option<f64> {
    let diff = |w: f64| single_link_information(a, w, mode) - single_link_information(b, w, mode);
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..CROSSOVER_SCAN {
        let w = i as f64 / CROSSOVER_SCAN as f64;
        let d = diff(w);
        if d == 0.0 || !d.is_finite() {
            continue;
        }
        if let Some((w0, d0)) = prev {
            if d0.signum() != d.signum() {
                return Some(bisect(diff, w0, w, d0));
            }
        }
        prev = Some((w, d));
    }
    None
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let sign_lo = f_lo.signum();
    while hi - lo > CROSSOVER_TOL {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_star, builtin_plan, LinkId, NetworkGraph, Path, PlanKind};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn line(params: &[f64]) -> NetworkGraph {
        let links: Vec<_> = params.iter().enumerate().map(|(i, &w)| (i, i + 1, w)).collect();
        NetworkGraph::new(params.len() + 1, &links, [0, params.len()]).unwrap()
    }

    fn task(scheme: Scheme, g: &NetworkGraph) -> MeasurementTask {
        let ids: Vec<_> = (0..g.link_count()).map(LinkId).collect();
        MeasurementTask::new(scheme, Path::new(g, &ids).unwrap())
    }

    #[test]
    fn direct_closed_forms() {
        assert_relative_eq!(
            single_link_information(Scheme::Jbm, 0.5, FisherMode::Paper),
            12.0 * 0.25 / (1.75 * 0.75),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            single_link_information(Scheme::Jbm, 0.5, FisherMode::Paper),
            2.285_714_285_714_286,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            single_link_information(Scheme::Pem, 0.6, FisherMode::Paper),
            2.678_571_428_571_429,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            single_link_information(Scheme::Lzm, 0.5, FisherMode::Paper),
            8.0 / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            single_link_information(Scheme::Lzm, 0.5, FisherMode::FirstPrinciples),
            4.0 / 3.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn lzm_indirect_entry() {
        let g = line(&[0.9, 0.8]);
        let f = task_qfim(&task(Scheme::Lzm, &g), &g.params(), FisherMode::Paper).unwrap();
        assert_relative_eq!(f.get(0, 0), 0.64 / (1.72 * 0.28), max_relative = 1e-14);
        assert_relative_eq!(f.get(0, 0), 1.328_903_654_485_049_8, max_relative = 1e-12);
    }

    #[test]
    fn cross_terms_are_nonnegative() {
        for scheme in Scheme::ALL {
            for mode in [FisherMode::Paper, FisherMode::FirstPrinciples] {
                let g = line(&[0.3, 0.9, 0.55]);
                let f = task_qfim(&task(scheme, &g), &g.params(), mode).unwrap();
                assert!(f.entries().iter().all(|&x| x >= 0.0));
                assert!(f.is_symmetric() && f.is_psd());
            }
        }
    }

    #[test]
    fn task_matrix_is_zero_off_path() {
        let g = build_star(3, &[0.9, 0.8, 0.7]).unwrap();
        let plan = builtin_plan(PlanKind::Jbm2, &g).unwrap();
        let f = task_qfim(&plan.tasks()[2], &g.params(), FisherMode::Paper).unwrap();
        for k in 0..3 {
            assert_eq!(f.get(1, k), 0.0);
            assert_eq!(f.get(k, 1), 0.0);
        }
        assert!(f.get(0, 2) > 0.0);
    }

    #[test]
    fn jbm3_is_diagonal_and_normalized_by_six() {
        let w = 0.7;
        let g = build_star(3, &[w; 3]).unwrap();
        let plan = builtin_plan(PlanKind::Jbm3, &g).unwrap();
        let raw = plan_qfim(&plan, &g.params(), FisherMode::Paper, false).unwrap();
        let norm = plan_qfim(&plan, &g.params(), FisherMode::Paper, true).unwrap();
        let fj = single_link_information(Scheme::Jbm, w, FisherMode::Paper);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { fj } else { 0.0 };
                assert_abs_diff_eq!(raw.get(i, j), want, epsilon = 1e-15);
                assert_abs_diff_eq!(norm.get(i, j), want / 6.0, epsilon = 1e-15);
            }
        }
        assert!(norm.is_normalized());
        assert_eq!(norm.ledger().unwrap().total, 6);
        assert!(!raw.is_normalized());
    }

    #[test]
    fn jbm2_link_one_has_no_cross_terms() {
        let g = build_star(3, &[0.9, 0.8, 0.7]).unwrap();
        let plan = builtin_plan(PlanKind::Jbm2, &g).unwrap();
        let f = plan_qfim(&plan, &g.params(), FisherMode::FirstPrinciples, true).unwrap();
        assert_eq!(f.get(1, 0), 0.0);
        assert_eq!(f.get(1, 2), 0.0);
        assert!(f.get(1, 1) > 0.0);
    }

    #[test]
    fn empty_plan_is_zero() {
        let plan = MonitoringPlan::empty("none", 3);
        let f = plan_qfim(&plan, &[0.5; 3], FisherMode::Paper, true).unwrap();
        assert!(f.entries().iter().all(|&x| x == 0.0));
        assert!(qcrb(&f).singular);
    }

    #[test]
    fn qcrb_values() {
        assert_relative_eq!(single_link_qcrb(Scheme::Pem, 0.0, FisherMode::Paper), 1.0 / 3.0);
        assert_eq!(single_link_qcrb(Scheme::Jbm, 0.0, FisherMode::Paper), f64::INFINITY);
        let d = FisherMatrix::from_entries(
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 4.0])),
            FisherMode::Paper,
        );
        let b = qcrb(&d);
        assert!(!b.singular);
        assert_relative_eq!(b.value, 0.75, max_relative = 1e-15);
        assert_relative_eq!(
            single_link_qcrb(Scheme::Jbm, 0.5, FisherMode::Paper),
            0.4375,
            max_relative = 1e-14
        );
    }

    #[test]
    fn ill_conditioned_is_singular() {
        let d = FisherMatrix::from_entries(
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-13])),
            FisherMode::Paper,
        );
        assert!(qcrb(&d).singular);
        assert_eq!(qcrb(&d).value, f64::INFINITY);
    }

    #[test]
    fn divergence_is_flagged() {
        let g = line(&[1.0]);
        let err = task_qfim(&task(Scheme::Pem, &g), &[1.0], FisherMode::FirstPrinciples);
        assert!(matches!(err, Err(FisherError::Divergent { .. })));
        let err = task_qfim(&task(Scheme::Lzm, &g), &[1.0], FisherMode::Paper);
        assert!(matches!(err, Err(FisherError::Divergent { .. })));
        // zero slope at w = 0 is not a divergence
        let ok = task_qfim(&task(Scheme::Jbm, &g), &[0.0], FisherMode::FirstPrinciples).unwrap();
        assert_eq!(ok.get(0, 0), 0.0);
        assert!(matches!(
            task_qfim(&task(Scheme::Jbm, &g), &[], FisherMode::Paper),
            Err(FisherError::MissingParam { .. })
        ));
    }

    #[test]
    fn crossovers() {
        let paper = crossover(Scheme::Lzm, Scheme::Jbm, FisherMode::Paper).unwrap();
        assert_abs_diff_eq!(paper, 1.0 / 3f64.sqrt(), epsilon = 1e-9);
        let fp = crossover(Scheme::Lzm, Scheme::Jbm, FisherMode::FirstPrinciples).unwrap();
        assert_abs_diff_eq!(fp, 1.0 / 3.0, epsilon = 1e-9);
        for mode in [FisherMode::Paper, FisherMode::FirstPrinciples] {
            assert_eq!(crossover(Scheme::Pem, Scheme::Pem, mode), None);
        }
    }

    #[test]
    fn mode_names_parse() {
        assert_eq!("first_principles".parse(), Ok(FisherMode::FirstPrinciples));
        assert_eq!("Paper".parse(), Ok(FisherMode::Paper));
        assert!("exact".parse::<FisherMode>().is_err());
    }
}
