//! Quantum states of an `M`-level subsystem.
//!
//! The Bloch vector `ρ_k = ⟨A^(k)⟩` of basis-observable expectations is the
//! canonical state. The density matrix `ρ = (1 + ρ_k L_k) / M` and, for pure
//! states, the wave function with `ρ_αβ = ψ_α ψ*_β` are derived from it.
//! Positivity is checked when a density matrix is built, not when a Bloch
//! vector is, so that non-quantum points of the classical simplex can be
//! represented and rejected explicitly.

use serde::{Deserialize, Serialize};

use crate::basis::GeneratorBasis;
use crate::error::{Error, Result};
use crate::io::{self, MatrixPairs};
use crate::linalg::{self, CMatrix, CVector, C64};

/// Eigenvalues above `-POSITIVITY_TOL` count as non-negative.
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-12;
pub const PURE_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBloch")]
pub struct BlochState {
    #[serde(rename = "M")]
    dim: usize,
    rho: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBloch {
    #[serde(rename = "M")]
    dim: usize,
    rho: Vec<f64>,
}

impl TryFrom<RawBloch> for BlochState {
    type Error = Error;

    fn try_from(raw: RawBloch) -> Result<Self> {
        BlochState::new(raw.dim, raw.rho)
    }
}

impl BlochState {
    /// Coefficients shorter than `M² − 1` are zero-padded.
    pub fn new(dim: usize, mut rho: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        let n = dim * dim - 1;
        if rho.len() > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rho.len(),
            });
        }
        if let Some(bad) = rho.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite Bloch coefficient {bad}"
            )));
        }
        rho.resize(n, 0.0);
        Ok(Self { dim, rho })
    }

    /// The equipartition state `ρ = 1/M`.
    pub fn equipartition(dim: usize) -> Self {
        Self::new(dim, Vec::new()).expect("dimension at least 2")
    }

    /// State from `(label, value)` pairs using 1-based labels `ρ_1 … ρ_{M²−1}`.
    pub fn from_labels(dim: usize, entries: &[(usize, f64)]) -> Result<Self> {
        let mut state = Self::equipartition(dim);
        for &(label, value) in entries {
            if label == 0 || label > state.rho.len() {
                return Err(Error::InvalidInput(format!("label {label} out of range")));
            }
            state.rho[label - 1] = value;
        }
        Ok(state)
    }

    /// The two entangled pure states `ρ_3 = ε ρ_12 = −ε ρ_14 = −1` of two
    /// qubits; `ε = +1` is the spin singlet.
    pub fn entangled_pair(epsilon: i8) -> Self {
        let e = f64::from(epsilon.signum());
        Self::from_labels(4, &[(3, -1.0), (12, -e), (14, e)]).expect("labels in range")
    }

    pub fn singlet() -> Self {
        Self::entangled_pair(1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.rho
    }

    /// `ρ_label`, 1-based.
    pub fn label(&self, label: usize) -> f64 {
        self.rho[label - 1]
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }
}

/// `P = Σ_k ρ_k²`.
pub fn purity(s: &BlochState) -> f64 {
    s.rho.iter().map(|r| r * r).sum()
}

/// Hermitian, unit-trace, positive `M × M` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput("density matrix must be square".into()));
        }
        let herm = linalg::hermiticity_deviation(&matrix);
        if herm > TRACE_TOL {
            return Err(Error::NonHermitian { deviation: herm });
        }
        let trace = linalg::trace(&matrix).re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne { trace });
        }
        let min = min_eigenvalue(&matrix);
        if min < -POSITIVITY_TOL {
            return Err(Error::NonPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self(matrix))
    }

    /// Equipartition `1/M`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self(linalg::identity(dim).scale(1.0 / dim as f64))
    }

    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self(matrix)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigenvalues(&self.0)
    }

    /// `tr ρ²`.
    pub fn trace_square(&self) -> f64 {
        linalg::trace_product(&self.0, &self.0).re
    }

    /// `tr(ρ A)`.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        linalg::trace_product(&self.0, a).re
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        io::matrix_to_pairs(&self.0).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = MatrixPairs::deserialize(deserializer)?;
        let m = io::matrix_from_pairs(&pairs).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    linalg::eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// `(1 + Σ ρ_k L_k) / M` without any positivity check.
pub fn assemble_density(basis: &GeneratorBasis, s: &BlochState) -> Result<CMatrix> {
    check_dim(basis, s)?;
    Ok(basis.assemble(1.0, &s.rho).scale(1.0 / basis.dim() as f64))
}

fn check_dim(basis: &GeneratorBasis, s: &BlochState) -> Result<()> {
    if basis.dim() != s.dim {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: s.dim,
        });
    }
    Ok(())
}

/// `ρ = (1 + Σ ρ_k L_k) / M`, rejecting non-positive results.
pub fn density_from_bloch(basis: &GeneratorBasis, s: &BlochState) -> Result<DensityMatrix> {
    let m = assemble_density(basis, s)?;
    let min = min_eigenvalue(&m);
    if min < -POSITIVITY_TOL {
        return Err(Error::NonPositive {
            min_eigenvalue: min,
        });
    }
    Ok(DensityMatrix(m))
}

/// `ρ_k = tr(ρ L_k)`.
pub fn bloch_from_density(basis: &GeneratorBasis, rho: &DensityMatrix) -> Result<BlochState> {
    bloch_from_matrix(basis, rho.matrix())
}

pub(crate) fn bloch_from_matrix(basis: &GeneratorBasis, m: &CMatrix) -> Result<BlochState> {
    if basis.dim() != m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: m.nrows(),
        });
    }
    let rho = basis
        .generators()
        .iter()
        .map(|l| linalg::trace_product(m, l).re)
        .collect();
    BlochState::new(basis.dim(), rho)
}

/// `C = tr[(ρ² − ρ)²]`, zero exactly for pure states.
pub fn copurity(rho: &DensityMatrix) -> f64 {
    matrix_copurity(rho.matrix())
}

pub(crate) fn matrix_copurity(m: &CMatrix) -> f64 {
    let defect = m * m - m;
    linalg::trace_product(&defect, &defect).re
}

/// Unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction(CVector);

impl WaveFunction {
    pub fn new(components: Vec<C64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(components))
    }

    pub fn from_vector(v: CVector) -> Result<Self> {
        let deviation = (v.norm() - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NormDeviation { deviation });
        }
        Ok(Self(v))
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Ok(Self(v.unscale(norm)))
    }

    /// The basis vector `ψ̂` with a one at `index` (0-based).
    pub fn basis_vector(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = linalg::ONE;
        Self(v)
    }

    pub(crate) fn from_trusted(v: CVector) -> Self {
        Self(v)
    }

    /// Fix the global phase: the first component of largest modulus becomes
    /// real and non-negative.
    pub fn with_phase_convention(mut self) -> Self {
        linalg::fix_phase(&mut self.0);
        self
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &CVector {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Take the root of a pure density matrix.
pub fn wavefunction_from_pure(rho: &DensityMatrix) -> Result<WaveFunction> {
    let c = copurity(rho);
    if c > PURE_TOL {
        return Err(Error::NotPure { copurity: c });
    }
    let m = rho.matrix();
    let pivot = (0..m.nrows())
        .max_by(|&a, &b| m[(a, a)].re.total_cmp(&m[(b, b)].re).then(b.cmp(&a)))
        .expect("nonempty matrix");
    let column: CVector = m.column(pivot).into_owned();
    Ok(WaveFunction::normalized(column)?.with_phase_convention())
}

/// `ρ_αβ = ψ_α ψ*_β`.
pub fn density_from_wavefunction(psi: &WaveFunction) -> Result<DensityMatrix> {
    let deviation = (psi.norm() - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::NormDeviation { deviation });
    }
    Ok(DensityMatrix(linalg::outer(&psi.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateReport {
    pub purity: f64,
    pub purity_bound: f64,
    pub purity_ok: bool,
    pub min_eigenvalue: f64,
    pub positive: bool,
    pub valid: bool,
}

/// Purity bound `P ≤ M − 1` and positivity of the reconstructed matrix.
pub fn validate_quantum_state(basis: &GeneratorBasis, s: &BlochState) -> Result<StateReport> {
    let m = assemble_density(basis, s)?;
    let p = purity(s);
    let bound = (s.dim - 1) as f64;
    let purity_ok = p <= bound + POSITIVITY_TOL;
    let min = min_eigenvalue(&m);
    let positive = min >= -POSITIVITY_TOL;
    Ok(StateReport {
        purity: p,
        purity_bound: bound,
        purity_ok,
        min_eigenvalue: min,
        positive,
        valid: purity_ok && positive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit() -> GeneratorBasis {
        GeneratorBasis::pauli_strings(1).unwrap()
    }

    fn two_qubits() -> GeneratorBasis {
        GeneratorBasis::pauli_strings(2).unwrap()
    }

    fn singlet_matrix() -> CMatrix {
        let id = linalg::identity(4);
        let xx = linalg::pauli_string(&[1, 1]);
        let yy = linalg::pauli_string(&[2, 2]);
        let zz = linalg::pauli_string(&[3, 3]);
        (id - xx - yy - zz).scale(0.25)
    }

    #[test]
    fn zero_vector_is_equipartition() {
        for q in 1..=3 {
            let b = GeneratorBasis::pauli_strings(q).unwrap();
            let rho = density_from_bloch(&b, &BlochState::equipartition(b.dim())).unwrap();
            assert_eq!(rho, DensityMatrix::maximally_mixed(b.dim()));
        }
    }

    #[test]
    fn qubit_eigenstate() {
        let s = BlochState::new(2, vec![0.0, 0.0, 1.0]).unwrap();
        let rho = density_from_bloch(&qubit(), &s).unwrap();
        let diag: Vec<f64> = rho.matrix().diagonal().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, 0.0]);
        assert_eq!(purity(&s), 1.0);
    }

    #[test]
    fn singlet_density_and_back() {
        let b = two_qubits();
        let rho = density_from_bloch(&b, &BlochState::singlet()).unwrap();
        assert!(linalg::max_abs_diff(rho.matrix(), &singlet_matrix()) < 1e-15);
        let back = bloch_from_density(&b, &rho).unwrap();
        for (k, v) in back.coefficients().iter().enumerate() {
            let expected = match k + 1 {
                3 | 12 => -1.0,
                14 => 1.0,
                _ => 0.0,
            };
            assert!((v - expected).abs() < 1e-14, "ρ_{}", k + 1);
        }
        assert!((purity(&back) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn short_vectors_are_padded_long_ones_rejected() {
        assert_eq!(
            BlochState::new(2, vec![0.5]).unwrap().coefficients(),
            &[0.5, 0.0, 0.0]
        );
        assert!(BlochState::new(2, vec![0.0; 4]).is_err());
    }

    #[test]
    fn copurity_values() {
        let m = DensityMatrix::maximally_mixed(4);
        let expected = 9.0 / 64.0; // (M-1)^2 / M^3
        assert!((copurity(&m) - expected).abs() < 1e-15);
        let s = BlochState::new(2, vec![0.0, 0.0, 0.5]).unwrap();
        let rho = density_from_bloch(&qubit(), &s).unwrap();
        assert!((copurity(&rho) - 9.0 / 128.0).abs() < 1e-15);
        let pure = density_from_bloch(&two_qubits(), &BlochState::singlet()).unwrap();
        assert!(copurity(&pure) < 1e-15);
    }

    #[test]
    fn singlet_wavefunction() {
        let b = two_qubits();
        let s = 1.0 / 2f64.sqrt();
        for (eps, sign) in [(1, -1.0), (-1, 1.0)] {
            let rho = density_from_bloch(&b, &BlochState::entangled_pair(eps)).unwrap();
            let psi = wavefunction_from_pure(&rho).unwrap();
            let expected = [0.0, s, sign * s, 0.0];
            for (z, e) in psi.components().iter().zip(expected) {
                assert!((z - C64::new(e, 0.0)).norm() < 1e-12);
            }
            let again = density_from_wavefunction(&psi).unwrap();
            assert!(linalg::max_abs_diff(again.matrix(), rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn non_pure_root_rejected() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            wavefunction_from_pure(&rho),
            Err(Error::NotPure { .. })
        ));
    }

    #[test]
    fn global_phase_is_unobservable() {
        let psi = WaveFunction::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let rotated =
            WaveFunction::from_vector(psi.components().map(|z| z * C64::from_polar(1.0, 0.7)))
                .unwrap();
        let a = density_from_wavefunction(&psi).unwrap();
        let b = density_from_wavefunction(&rotated).unwrap();
        assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-15);
        assert!(WaveFunction::new(vec![linalg::ONE, linalg::ONE]).is_err());
    }

    #[test]
    fn basis_vector_density() {
        let rho = density_from_wavefunction(&WaveFunction::basis_vector(4, 0)).unwrap();
        assert_eq!(rho.matrix()[(0, 0)], linalg::ONE);
        let root = wavefunction_from_pure(&rho).unwrap();
        assert_eq!(root, WaveFunction::basis_vector(4, 0));
    }

    #[test]
    fn validation_reports() {
        let b = qubit();
        let ok = validate_quantum_state(&b, &BlochState::equipartition(2)).unwrap();
        assert!(ok.valid && ok.purity == 0.0);
        let bad = BlochState::new(2, vec![1.0, 1.0, 1.0]).unwrap();
        let report = validate_quantum_state(&b, &bad).unwrap();
        assert!(!report.valid && !report.purity_ok && !report.positive);
        assert!((report.min_eigenvalue - (1.0 - 3f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(matches!(
            density_from_bloch(&b, &bad),
            Err(Error::NonPositive { .. })
        ));
        let singlet = validate_quantum_state(&two_qubits(), &BlochState::singlet()).unwrap();
        assert!(singlet.valid && (singlet.purity - 3.0).abs() < 1e-15);
    }

    #[test]
    fn full_purity_is_not_sufficient_for_purity_of_state() {
        // P = M - 1 = 3 spread over three commuting diagonal generators with
        // the wrong sign pattern gives a non-pure (indeed non-positive) matrix.
        let b = two_qubits();
        let s = BlochState::from_labels(4, &[(1, 1.0), (2, 1.0), (3, -1.0)]).unwrap();
        assert!((purity(&s) - 3.0).abs() < 1e-15);
        let m = assemble_density(&b, &s).unwrap();
        assert!(matrix_copurity(&m) > 0.1);
    }

    #[test]
    fn bloch_json() {
        let s: BlochState = serde_json::from_str(r#"{"M": 2, "rho": [0.1]}"#).unwrap();
        assert_eq!(s.coefficients(), &[0.1, 0.0, 0.0]);
        assert!(serde_json::from_str::<BlochState>(r#"{"M": 2, "rho": [], "x": 1}"#).is_err());
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"M":2,"rho":[0.1,0.0,0.0]}"#
        );
    }
}
