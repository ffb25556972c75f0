//! Strict JSON configuration for the batch subcommands.
//!
//! Every struct rejects unknown keys. Operators and states are given in one
//! of several tagged forms and resolved against the generator basis.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use qemerge::basis::GeneratorBasis;
use qemerge::evolution::ScalingProfile;
use qemerge::io::{self, MatrixPairs};
use qemerge::linalg::{self, C64};
use qemerge::measurement::ReductionMode;
use qemerge::observables::QuantumOperator;
use qemerge::state::{self, BlochState, DensityMatrix, WaveFunction};

use crate::ParseError;

pub fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ParseError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> anyhow::Result<T> {
    serde_json::from_str(text).map_err(|e| ParseError(e.to_string()).into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct WeightedOperator {
    pub weight: f64,
    pub operator: OperatorSpec,
}

/// A hermitian operator, in exactly one of these forms:
/// `{"label": k}` for the generator `L_k` (1-based),
/// `{"pauli": "XZ"}` or `{"pauli": "-YY"}` for a signed Pauli string,
/// `{"matrix": [[[re, im], …], …]}`,
/// `{"coefficients": {"e0": …, "e": […]}}`,
/// `{"sum": [{"weight": w, "operator": …}, …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Label(usize),
    Pauli(String),
    Matrix(MatrixPairs),
    Coefficients(Coefficients),
    Sum(Vec<WeightedOperator>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    #[serde(default)]
    pub e0: f64,
    pub e: Vec<f64>,
}

fn pauli_matrix(text: &str, dim: usize) -> qemerge::Result<linalg::CMatrix> {
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, text.strip_prefix('+').unwrap_or(text)),
    };
    let factors = body
        .chars()
        .map(|c| match c {
            'I' => Ok(0),
            'X' => Ok(1),
            'Y' => Ok(2),
            'Z' => Ok(3),
            other => Err(qemerge::Error::InvalidInput(format!(
                "unknown Pauli letter {other:?}"
            ))),
        })
        .collect::<qemerge::Result<Vec<u8>>>()?;
    if factors.is_empty() || 1usize.checked_shl(factors.len() as u32) != Some(dim) {
        return Err(qemerge::Error::InvalidInput(format!(
            "Pauli string {text:?} does not act on dimension {dim}"
        )));
    }
    Ok(linalg::pauli_string(&factors).scale(sign))
}

impl OperatorSpec {
    fn matrix(&self, basis: &GeneratorBasis) -> qemerge::Result<linalg::CMatrix> {
        match self {
            OperatorSpec::Label(k) => {
                if *k == 0 || *k > basis.len() {
                    return Err(qemerge::Error::InvalidInput(format!(
                        "generator label {k} outside 1..={}",
                        basis.len()
                    )));
                }
                Ok(basis.by_label(*k).clone())
            }
            OperatorSpec::Pauli(text) => pauli_matrix(text, basis.dim()),
            OperatorSpec::Matrix(pairs) => io::matrix_from_pairs(pairs),
            OperatorSpec::Coefficients(c) => {
                if c.e.len() != basis.len() {
                    return Err(qemerge::Error::DimensionMismatch {
                        expected: basis.len(),
                        found: c.e.len(),
                    });
                }
                Ok(basis.assemble(c.e0, &c.e))
            }
            OperatorSpec::Sum(terms) => {
                let mut total = linalg::CMatrix::zeros(basis.dim(), basis.dim());
                for t in terms {
                    total += t.operator.matrix(basis)? * C64::new(t.weight, 0.0);
                }
                Ok(total)
            }
        }
    }

    pub fn resolve(&self, basis: &GeneratorBasis) -> qemerge::Result<QuantumOperator> {
        QuantumOperator::from_matrix(basis, self.matrix(basis)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum NamedState {
    /// `ρ_3 = ρ_12 = −1`, `ρ_14 = +1`.
    Singlet,
    /// The `ε = −1` partner of the singlet.
    EntangledMinus,
    /// `ρ_3 = −1` only; maximally anticorrelated but mixed.
    Anticorrelated,
    Equipartition,
}

/// A state, in exactly one of these forms:
/// `{"bloch": [ρ_1, …]}` (zero-padded), `{"labels": [[k, ρ_k], …]}`,
/// `{"density": [[[re, im], …], …]}`, `{"wavefunction": [[re, im], …]}`,
/// `{"named": "singlet"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Bloch(Vec<f64>),
    Labels(Vec<(usize, f64)>),
    Density(MatrixPairs),
    Wavefunction(Vec<[f64; 2]>),
    Named(NamedState),
}

impl StateSpec {
    pub fn resolve(&self, basis: &GeneratorBasis) -> qemerge::Result<BlochState> {
        let dim = basis.dim();
        match self {
            StateSpec::Bloch(rho) => BlochState::new(dim, rho.clone()),
            StateSpec::Labels(entries) => BlochState::from_labels(dim, entries),
            StateSpec::Density(pairs) => {
                let rho = DensityMatrix::new(io::matrix_from_pairs(pairs)?)?;
                state::bloch_from_density(basis, &rho)
            }
            StateSpec::Wavefunction(components) => {
                let psi = WaveFunction::new(
                    components
                        .iter()
                        .map(|[re, im]| C64::new(*re, *im))
                        .collect(),
                )?;
                state::bloch_from_density(basis, &state::density_from_wavefunction(&psi)?)
            }
            StateSpec::Named(name) => {
                let needs_m4 = !matches!(name, NamedState::Equipartition);
                if needs_m4 && dim != 4 {
                    return Err(qemerge::Error::DimensionMismatch {
                        expected: 4,
                        found: dim,
                    });
                }
                Ok(match name {
                    NamedState::Singlet => BlochState::singlet(),
                    NamedState::EntangledMinus => BlochState::entangled_pair(-1),
                    NamedState::Anticorrelated => BlochState::from_labels(4, &[(3, -1.0)])?,
                    NamedState::Equipartition => BlochState::equipartition(dim),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<MatrixPairs>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(rename = "M")]
    pub dim: usize,
    pub operators: Vec<OperatorSpec>,
    pub state: StateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Explicit joint probabilities instead of the product assignment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(rename = "M")]
    pub dim: usize,
    pub state: StateSpec,
    /// Measured first.
    pub first: OperatorSpec,
    pub second: OperatorSpec,
    pub mode: ReductionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(rename = "M")]
    pub dim: usize,
    pub state: StateSpec,
    /// `H_k`; `H_0` only shifts a global phase and is not accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<f64>>,
    /// Antisymmetric `T̃`, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingProfile>,
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_dt() -> f64 {
    qemerge::evolution::DEFAULT_DT
}

fn default_stride() -> usize {
    1
}

pub fn basis_for(dim: usize) -> qemerge::Result<GeneratorBasis> {
    GeneratorBasis::for_dimension(dim)
}

pub fn operators(
    basis: &GeneratorBasis,
    specs: &[OperatorSpec],
) -> qemerge::Result<Vec<QuantumOperator>> {
    specs.iter().map(|s| s.resolve(basis)).collect()
}

/// Canonical JSON of an operator, for output.
pub fn describe(op: &QuantumOperator) -> serde_json::Value {
    serde_json::json!({ "e0": op.e0(), "e": op.coefficients() })
}
