//! Exact dense density-matrix simulation of Werner pairs.
//!
//! This is the ground truth the analytic outcome models are checked
//! against: Werner states are built as matrices, chained through Bell-state
//! measurements, and measured, with no closed forms involved.
//!
//! Conventions: the first qubit label is the most significant bit of the
//! matrix index. Bell states are `Phi± = (|00> ± |11>)/sqrt2` and
//! `Psi± = (|01> ± |10>)/sqrt2`; the swap correction for outcome
//! `Phi+, Phi-, Psi+, Psi-` is `I, Z, X, XZ` on the retained qubit.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Largest supported matrix dimension (three Werner pairs).
pub const MAX_DIM: usize = 64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
/// Outcomes less likely than this carry no post-measurement state.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("Werner parameter {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("dimension {0} exceeds the cap of {MAX_DIM}")]
    DimensionCap(usize),
    #[error("qubit {0} is not part of the state")]
    UnknownQubit(QubitId),
    #[error("qubit {0} appears twice")]
    DuplicateQubit(QubitId),
    #[error("expected a two-qubit state, got {0} qubits")]
    NotTwoQubit(usize),
    #[error("chains of {0} links are not supported (1 to 3)")]
    ChainLength(usize),
    #[error("matrix is {rows}x{cols} but {qubits} qubit labels were given")]
    Shape {
        rows: usize,
        cols: usize,
        qubits: usize,
    },
    #[error("not a density matrix: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitId(pub u32);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes over `|00>, |01>, |10>, |11>`.
    pub fn amplitudes(self) -> [f64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            BellState::PhiPlus => [h, 0.0, 0.0, h],
            BellState::PhiMinus => [h, 0.0, 0.0, -h],
            BellState::PsiPlus => [0.0, h, h, 0.0],
            BellState::PsiMinus => [0.0, h, -h, 0.0],
        }
    }

    fn correction(self) -> [[f64; 2]; 2] {
        const I: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];
        const X: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];
        const Z: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];
        // X * Z
        const XZ: [[f64; 2]; 2] = [[0.0, -1.0], [1.0, 0.0]];
        match self {
            BellState::PhiPlus => I,
            BellState::PhiMinus => Z,
            BellState::PsiPlus => X,
            BellState::PsiMinus => XZ,
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellState::PhiPlus => "Phi+",
            BellState::PhiMinus => "Phi-",
            BellState::PsiPlus => "Psi+",
            BellState::PsiMinus => "Psi-",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    qubits: Vec<QubitId>,
}

impl DensityMatrix {
    /// Wraps `matrix` after checking shape, labels, Hermiticity, trace and positivity.
    pub fn new(matrix: DMatrix<Complex64>, qubits: Vec<QubitId>) -> Result<Self> {
        let state = Self::unchecked(matrix, qubits)?;
        state.check_invariants()?;
        Ok(state)
    }

    fn unchecked(matrix: DMatrix<Complex64>, qubits: Vec<QubitId>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols || qubits.len() >= usize::BITS as usize || rows != 1 << qubits.len() {
            return Err(OracleError::Shape {
                rows,
                cols,
                qubits: qubits.len(),
            });
        }
        if rows > MAX_DIM {
            return Err(OracleError::DimensionCap(rows));
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(OracleError::DuplicateQubit(*q));
            }
        }
        Ok(DensityMatrix { matrix, qubits })
    }

    /// Hermitian, unit trace and positive semidefinite within the module tolerances.
    pub fn check_invariants(&self) -> Result<()> {
        let m = &self.matrix;
        let hermitian_dev = m
            .iter()
            .zip(m.adjoint().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if hermitian_dev > HERMITIAN_TOL {
            return Err(OracleError::Invalid(format!(
                "Hermitian deviation {hermitian_dev:e}"
            )));
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(OracleError::Invalid(format!("trace {trace}")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(OracleError::Invalid(format!("eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Largest elementwise absolute difference; labels are ignored.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.matrix.shape() != other.matrix.shape() {
            return f64::INFINITY;
        }
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Same matrix with new qubit labels.
    pub fn relabel(&self, qubits: Vec<QubitId>) -> Result<Self> {
        Self::unchecked(self.matrix.clone(), qubits)
    }

    pub fn expectation(&self, vector: &[Complex64]) -> f64 {
        let v = DVector::from_column_slice(vector);
        (v.adjoint() * &self.matrix * &v)[(0, 0)].re
    }

    fn position(&self, q: QubitId) -> Result<usize> {
        self.qubits
            .iter()
            .position(|&x| x == q)
            .ok_or(OracleError::UnknownQubit(q))
    }
}

fn check_w(w: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&w) {
        Ok(w)
    } else {
        Err(OracleError::OutOfRange(w))
    }
}

/// `w |Phi+><Phi+| + (1 - w) I/4` on qubits `q0, q1`.
pub fn werner_density(w: f64) -> Result<DensityMatrix> {
    werner_density_on(w, QubitId(0), QubitId(1))
}

pub fn werner_density_on(w: f64, a: QubitId, b: QubitId) -> Result<DensityMatrix> {
    let w = check_w(w)?;
    let phi = BellState::PhiPlus.amplitudes();
    let m = DMatrix::from_fn(4, 4, |i, j| {
        let mixed = if i == j { (1.0 - w) / 4.0 } else { 0.0 };
        Complex64::new(w * phi[i] * phi[j] + mixed, 0.0)
    });
    DensityMatrix::unchecked(m, vec![a, b])
}

/// Overlap `(1 + 3w)/4` of `rho(w)` with `Phi+`.
pub fn werner_fidelity(w: f64) -> Result<f64> {
    Ok((1.0 + 3.0 * check_w(w)?) / 4.0)
}

/// Kronecker product with concatenated labels.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let dim = a.dim() * b.dim();
    if dim > MAX_DIM {
        return Err(OracleError::DimensionCap(dim));
    }
    let qubits = a.qubits.iter().chain(&b.qubits).copied().collect();
    DensityMatrix::unchecked(a.matrix.kronecker(&b.matrix), qubits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellOutcome {
    pub label: BellState,
    pub probability: f64,
    /// Normalized state of the unmeasured qubits; `None` for negligible outcomes.
    pub post_state: Option<DensityMatrix>,
}

/// Projects `pair` onto each Bell state.
///
/// With `correct = Some(q)` the outcome-dependent Pauli correction is applied
/// to retained qubit `q`, so that every post-measurement state coincides for
/// a swap of Werner pairs.
pub fn bsm(
    state: &DensityMatrix,
    pair: (QubitId, QubitId),
    correct: Option<QubitId>,
) -> Result<[BellOutcome; 4]> {
    let (pa, pb) = (state.position(pair.0)?, state.position(pair.1)?);
    if pa == pb {
        return Err(OracleError::DuplicateQubit(pair.0));
    }
    let n = state.qubits.len();
    let remaining: Vec<QubitId> = state
        .qubits
        .iter()
        .copied()
        .filter(|q| *q != pair.0 && *q != pair.1)
        .collect();
    let target = match correct {
        Some(q) => Some(
            remaining
                .iter()
                .position(|&x| x == q)
                .ok_or(OracleError::UnknownQubit(q))?,
        ),
        None => None,
    };
    let rest_positions: Vec<usize> = (0..n).filter(|&p| p != pa && p != pb).collect();
    let rest_dim = 1usize << rest_positions.len();

    // full index of (pair bits x, remaining bits r)
    let full = |x: usize, r: usize| -> usize {
        let mut idx = 0;
        let bit = |p: usize| 1usize << (n - 1 - p);
        if x & 2 != 0 {
            idx |= bit(pa);
        }
        if x & 1 != 0 {
            idx |= bit(pb);
        }
        for (k, &p) in rest_positions.iter().enumerate() {
            if r & (1 << (rest_positions.len() - 1 - k)) != 0 {
                idx |= bit(p);
            }
        }
        idx
    };

    let rho = &state.matrix;
    let outcomes = BellState::ALL.map(|label| {
        let amp = label.amplitudes();
        let mut sigma = DMatrix::<Complex64>::zeros(rest_dim, rest_dim);
        for r in 0..rest_dim {
            for s in 0..rest_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..4 {
                    if amp[x] == 0.0 {
                        continue;
                    }
                    for y in 0..4 {
                        if amp[y] == 0.0 {
                            continue;
                        }
                        acc += rho[(full(x, r), full(y, s))] * (amp[x] * amp[y]);
                    }
                }
                sigma[(r, s)] = acc;
            }
        }
        let probability = sigma.trace().re.max(0.0);
        let post_state = if probability < NEGLIGIBLE_PROBABILITY {
            None
        } else {
            let mut sigma = sigma / Complex64::new(probability, 0.0);
            if let Some(t) = target {
                sigma = conjugate_single(&sigma, remaining.len(), t, label.correction());
            }
            Some(DensityMatrix {
                matrix: sigma,
                qubits: remaining.clone(),
            })
        };
        BellOutcome {
            label,
            probability,
            post_state,
        }
    });
    Ok(outcomes)
}

/// `U rho U^dagger` with `U` acting on the qubit at `pos` of an `n`-qubit register.
fn conjugate_single(
    rho: &DMatrix<Complex64>,
    n: usize,
    pos: usize,
    u: [[f64; 2]; 2],
) -> DMatrix<Complex64> {
    let mut full = DMatrix::<Complex64>::identity(1, 1);
    for p in 0..n {
        let factor = if p == pos {
            DMatrix::from_fn(2, 2, |i, j| Complex64::new(u[i][j], 0.0))
        } else {
            DMatrix::identity(2, 2)
        };
        full = full.kronecker(&factor);
    }
    &full * rho * full.adjoint()
}

/// Probability-weighted mixture of the corrected post-measurement states.
fn swap(state: &DensityMatrix, pair: (QubitId, QubitId), correct: QubitId) -> Result<DensityMatrix> {
    let outcomes = bsm(state, pair, Some(correct))?;
    let mut acc: Option<DensityMatrix> = None;
    for o in outcomes {
        let Some(post) = o.post_state else { continue };
        let weighted = post.matrix * Complex64::new(o.probability, 0.0);
        acc = Some(match acc {
            None => DensityMatrix {
                matrix: weighted,
                qubits: post.qubits,
            },
            Some(mut a) => {
                a.matrix += weighted;
                a
            }
        });
    }
    acc.ok_or_else(|| OracleError::Invalid("every BSM outcome is negligible".into()))
}

/// One end-to-end pair over a chain of 1 to 3 Werner links.
///
/// Link `i` holds qubits `2i, 2i+1`. All pairs are tensored into one state and
/// each intermediate node swaps, correcting the far-end qubit. The result is
/// labelled `q0, q1`.
pub fn linear_generation(params: &[f64]) -> Result<DensityMatrix> {
    if params.is_empty() || params.len() > 3 {
        return Err(OracleError::ChainLength(params.len()));
    }
    let mut state: Option<DensityMatrix> = None;
    for (i, &w) in params.iter().enumerate() {
        let i = i as u32;
        let pair = werner_density_on(w, QubitId(2 * i), QubitId(2 * i + 1))?;
        state = Some(match state {
            None => pair,
            Some(s) => tensor(&s, &pair)?,
        });
    }
    let mut state = state.expect("at least one link");
    let far = QubitId(2 * params.len() as u32 - 1);
    for i in 1..params.len() as u32 {
        state = swap(&state, (QubitId(2 * i - 1), QubitId(2 * i)), far)?;
    }
    let out = state.relabel(vec![QubitId(0), QubitId(1)])?;
    out.check_invariants()?;
    Ok(out)
}

/// Two linear generations fused by a swap at the far endpoint, leaving a pair at the near one.
pub fn cyclic_generation(params: &[f64]) -> Result<DensityMatrix> {
    let first = linear_generation(params)?;
    let second = linear_generation(params)?.relabel(vec![QubitId(2), QubitId(3)])?;
    let both = tensor(&first, &second)?;
    let fused = swap(&both, (QubitId(1), QubitId(3)), QubitId(2))?;
    let out = fused.relabel(vec![QubitId(0), QubitId(1)])?;
    out.check_invariants()?;
    Ok(out)
}

/// Computational-basis outcome probabilities `00, 01, 10, 11` of a two-qubit state.
pub fn zz_probabilities(state: &DensityMatrix) -> Result<[f64; 4]> {
    if state.qubits.len() != 2 {
        return Err(OracleError::NotTwoQubit(state.qubits.len()));
    }
    Ok(std::array::from_fn(|i| state.matrix[(i, i)].re))
}

/// Bell-measurement probabilities of a two-qubit state measured on its own qubits.
pub fn bell_probabilities(state: &DensityMatrix) -> Result<[f64; 4]> {
    if state.qubits.len() != 2 {
        return Err(OracleError::NotTwoQubit(state.qubits.len()));
    }
    let outcomes = bsm(state, (state.qubits[0], state.qubits[1]), None)?;
    Ok(outcomes.map(|o| o.probability))
}

/// LZM statistics from the simulated chain.
pub fn lzm_outcomes(params: &[f64]) -> Result<[f64; 4]> {
    zz_probabilities(&linear_generation(params)?)
}

/// JBM statistics: cyclic generation, then a local Bell measurement at the monitor.
pub fn jbm_outcomes(params: &[f64]) -> Result<[f64; 4]> {
    bell_probabilities(&cyclic_generation(params)?)
}

/// PEM statistics by teleportation.
///
/// The chain state sits on `(A, B) = (q0, q1)` and a noiseless pair on
/// `(A0, B0) = (q2, q3)`. `B` swaps `B` with `B0`, correcting `A0`, and `A`
/// then Bell-measures `(A, A0)`.
pub fn pem_outcomes(params: &[f64]) -> Result<[f64; 4]> {
    let chain = linear_generation(params)?;
    let ancilla = werner_density_on(1.0, QubitId(2), QubitId(3))?;
    let joint = tensor(&chain, &ancilla)?;
    let at_monitor = swap(&joint, (QubitId(1), QubitId(3)), QubitId(2))?;
    at_monitor.check_invariants()?;
    bell_probabilities(&at_monitor)
}
