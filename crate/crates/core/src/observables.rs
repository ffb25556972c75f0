//! Probabilistic and quantum observables.
//!
//! A probabilistic observable is a spectrum `γ_a` with outcome probabilities
//! linear in the Bloch vector, `w_a = Σ_k c_ak ρ_k + c_a0`. Quantum
//! observables are the ones whose coefficients come from diagonalizing a
//! hermitian operator, `c_αk = (U L_k U†)_αα / M`, `c_α0 = 1/M`. The map back
//! to operators, `e_0 = Σ_a γ_a c_a0`, `e_k = Σ_a γ_a c_ak`, is defined for
//! every probabilistic observable but is not injective.

use serde::{Deserialize, Serialize};

use crate::basis::GeneratorBasis;
use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{self, CMatrix, Order};
use crate::state::BlochState;

const HERMITIAN_TOL: f64 = 1e-10;
const NORMALIZATION_TOL: f64 = 1e-12;
const PROBABILITY_TOL: f64 = 1e-10;
pub const COMMUTING_TOL: f64 = 1e-10;
const SPECTRUM_TOL: f64 = 1e-9;

/// Hermitian operator together with its expansion `e_0 + Σ e_k L_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperator {
    matrix: CMatrix,
    e0: f64,
    e: Vec<f64>,
}

impl QuantumOperator {
    pub fn from_matrix(basis: &GeneratorBasis, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: matrix.nrows(),
            });
        }
        let deviation = linalg::hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitian { deviation });
        }
        let (e0, e) = basis.expand(&matrix);
        Ok(Self { matrix, e0, e })
    }

    /// The generator `L_label` (1-based) as an operator.
    pub fn generator(basis: &GeneratorBasis, label: usize) -> Self {
        Self::from_matrix(basis, basis.by_label(label).clone()).expect("generators are hermitian")
    }

    pub fn identity(basis: &GeneratorBasis) -> Self {
        Self::from_matrix(basis, linalg::identity(basis.dim())).expect("identity is hermitian")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.e
    }

    /// `⟨A⟩ = e_0 + Σ e_k ρ_k = tr(ρ Â)`.
    pub fn expectation(&self, s: &BlochState) -> Result<f64> {
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: s.dim(),
            });
        }
        Ok(self.e0 + dot(&self.e, s.coefficients()))
    }

    /// Largest elementwise deviation of `Â²` from the identity.
    pub fn involution_defect(&self) -> f64 {
        linalg::max_abs_diff(
            &(&self.matrix * &self.matrix),
            &linalg::identity(self.dim()),
        )
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// `λ_A Â + λ_B B̂`.
    pub fn combine(basis: &GeneratorBasis, la: f64, a: &Self, lb: f64, b: &Self) -> Result<Self> {
        Self::from_matrix(basis, a.matrix.scale(la) + b.matrix.scale(lb))
    }
}

impl Serialize for QuantumOperator {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        io::matrix_to_pairs(&self.matrix).serialize(serializer)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn operator_from_coefficients(
    basis: &GeneratorBasis,
    e0: f64,
    e: &[f64],
) -> Result<QuantumOperator> {
    if e.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: e.len(),
        });
    }
    let matrix = basis.assemble(e0, e);
    Ok(QuantumOperator {
        matrix,
        e0,
        e: e.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObservable")]
pub struct ProbabilisticObservable {
    gamma: Vec<f64>,
    c0: Vec<f64>,
    c: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    gamma: Vec<f64>,
    c0: Vec<f64>,
    c: Vec<Vec<f64>>,
}

impl TryFrom<RawObservable> for ProbabilisticObservable {
    type Error = Error;

    fn try_from(raw: RawObservable) -> Result<Self> {
        ProbabilisticObservable::new(raw.gamma, raw.c0, raw.c)
    }
}

impl ProbabilisticObservable {
    /// Checks shapes and the normalization `Σ_a c_ak = 0`, `Σ_a c_a0 = 1`.
    pub fn new(gamma: Vec<f64>, c0: Vec<f64>, c: Vec<Vec<f64>>) -> Result<Self> {
        let m = gamma.len();
        if m == 0 || c0.len() != m || c.len() != m {
            return Err(Error::InvalidInput(format!(
                "observable needs matching gamma/c0/c lengths, got {}/{}/{}",
                m,
                c0.len(),
                c.len()
            )));
        }
        let n = c[0].len();
        if c.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput(
                "coefficient rows differ in length".into(),
            ));
        }
        let total: f64 = c0.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!("Σ c_a0 = {total}, expected 1")));
        }
        for k in 0..n {
            let col: f64 = c.iter().map(|row| row[k]).sum();
            if col.abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidInput(format!(
                    "Σ_a c_a{} = {col}, expected 0",
                    k + 1
                )));
            }
        }
        Ok(Self { gamma, c0, c })
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.gamma
    }

    pub fn c0(&self) -> &[f64] {
        &self.c0
    }

    pub fn c(&self) -> &[Vec<f64>] {
        &self.c
    }

    /// Number of Bloch coefficients the observable reads.
    pub fn bloch_len(&self) -> usize {
        self.c[0].len()
    }

    pub fn is_two_level(&self) -> bool {
        let mut g = self.gamma.clone();
        g.sort_by(f64::total_cmp);
        g.len() == 2 && (g[0] + 1.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12
    }
}

/// Spectrum and linear probability coefficients of a hermitian operator.
///
/// Eigenvalues within `1e-9 · max(range, 1)` are merged; the coefficient rows
/// of a degenerate eigenvalue are summed over its eigenspace. The spectrum is
/// listed in descending order.
pub fn quantum_observable_from_operator(
    basis: &GeneratorBasis,
    op: &QuantumOperator,
) -> Result<ProbabilisticObservable> {
    if op.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: op.dim(),
        });
    }
    let deviation = linalg::hermiticity_deviation(op.matrix());
    if deviation > HERMITIAN_TOL {
        return Err(Error::NonHermitian { deviation });
    }
    let m = basis.dim() as f64;
    let eig = linalg::eigh(op.matrix(), Order::Descending);
    let groups = linalg::group_degenerate(&eig.values);
    let mut gamma = Vec::with_capacity(groups.len());
    let mut c0 = Vec::with_capacity(groups.len());
    let mut c = Vec::with_capacity(groups.len());
    for (value, members) in groups {
        let mut row = vec![0.0; basis.len()];
        for &idx in &members {
            let v = &eig.vectors[idx];
            for (k, l) in basis.generators().iter().enumerate() {
                row[k] += linalg::sandwich(v, l) / m;
            }
        }
        gamma.push(value);
        c0.push(members.len() as f64 / m);
        c.push(row);
    }
    Ok(ProbabilisticObservable { gamma, c0, c })
}

/// Operator image `e_0 = Σ_a γ_a c_a0`, `e_k = Σ_a γ_a c_ak`.
pub fn operator_from_observable(
    basis: &GeneratorBasis,
    obs: &ProbabilisticObservable,
) -> Result<QuantumOperator> {
    if obs.bloch_len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: obs.bloch_len(),
        });
    }
    let e0 = dot(&obs.gamma, &obs.c0);
    let e: Vec<f64> = (0..basis.len())
        .map(|k| {
            obs.gamma
                .iter()
                .zip(&obs.c)
                .map(|(g, row)| g * row[k])
                .sum()
        })
        .collect();
    operator_from_coefficients(basis, e0, &e)
}

/// `w_a = Σ_k c_ak ρ_k + c_a0`, clamped to `[0, 1]` after a tolerance check.
pub fn probabilities_in_state(obs: &ProbabilisticObservable, s: &BlochState) -> Result<Vec<f64>> {
    if obs.bloch_len() != s.coefficients().len() {
        return Err(Error::DimensionMismatch {
            expected: obs.bloch_len(),
            found: s.coefficients().len(),
        });
    }
    obs.c
        .iter()
        .zip(&obs.c0)
        .enumerate()
        .map(|(a, (row, c0))| {
            let w = dot(row, s.coefficients()) + c0;
            if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&w) {
                Err(Error::NegativeProbability { index: a, value: w })
            } else {
                Ok(w.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// `⟨A^p⟩ = Σ_a w_a γ_a^p`.
pub fn moment(obs: &ProbabilisticObservable, s: &BlochState, p: u32) -> Result<f64> {
    let w = probabilities_in_state(obs, s)?;
    Ok(w.iter()
        .zip(&obs.gamma)
        .map(|(w, g)| w * g.powi(p as i32))
        .sum())
}

pub fn expectation(obs: &ProbabilisticObservable, s: &BlochState) -> Result<f64> {
    moment(obs, s, 1)
}

/// The random two-level observable: outcomes ±1 with probability 1/2 in
/// every state. Its operator image is zero although its square is one.
pub fn random_observable(dim: usize) -> ProbabilisticObservable {
    let n = dim * dim - 1;
    ProbabilisticObservable {
        gamma: vec![1.0, -1.0],
        c0: vec![0.5, 0.5],
        c: vec![vec![0.0; n]; 2],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumComparison {
    /// Distinct values of `λ_A γ_a + λ_B γ_b` over all pairs, descending.
    pub classical: Vec<f64>,
    /// Distinct eigenvalues of `λ_A Â + λ_B B̂`, descending.
    pub operator: Vec<f64>,
    pub coincide: bool,
}

fn distinct_descending(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if out
            .last()
            .is_none_or(|last| (last - v).abs() > SPECTRUM_TOL)
        {
            out.push(v);
        }
    }
    out
}

/// Compare the classical spectrum of a linear combination with the spectrum
/// of the combined operator, as sets.
pub fn combination_spectrum_check(
    basis: &GeneratorBasis,
    a: &ProbabilisticObservable,
    b: &ProbabilisticObservable,
    la: f64,
    lb: f64,
) -> Result<SpectrumComparison> {
    let classical = distinct_descending(
        a.gamma
            .iter()
            .flat_map(|ga| b.gamma.iter().map(move |gb| la * ga + lb * gb))
            .collect(),
    );
    let op_a = operator_from_observable(basis, a)?;
    let op_b = operator_from_observable(basis, b)?;
    let combined = QuantumOperator::combine(basis, la, &op_a, lb, &op_b)?;
    let operator = distinct_descending(linalg::eigenvalues(combined.matrix()));
    let coincide = classical.len() == operator.len()
        && classical
            .iter()
            .zip(&operator)
            .all(|(x, y)| (x - y).abs() <= SPECTRUM_TOL);
    Ok(SpectrumComparison {
        classical,
        operator,
        coincide,
    })
}

pub fn commutator_norm(a: &QuantumOperator, b: &QuantumOperator) -> f64 {
    linalg::max_abs(&linalg::commutator(a.matrix(), b.matrix()))
}

pub fn is_commuting_pair(a: &QuantumOperator, b: &QuantumOperator) -> bool {
    commutator_norm(a, b) <= COMMUTING_TOL
}

/// Operator `½{Â, B̂}` of the classical product of two commuting observables.
pub fn classical_product_operator(
    basis: &GeneratorBasis,
    a: &QuantumOperator,
    b: &QuantumOperator,
) -> Result<QuantumOperator> {
    let norm = commutator_norm(a, b);
    if norm > COMMUTING_TOL {
        return Err(Error::NonCommuting { norm });
    }
    QuantumOperator::from_matrix(
        basis,
        linalg::anticommutator(a.matrix(), b.matrix()).scale(0.5),
    )
}
