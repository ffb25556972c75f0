//! Finite classical ensembles realizing a set of quantum observables.
//!
//! Each registered operator contributes one slot holding the index of one of
//! its distinct eigenvalues; the state space is the direct product of these
//! index sets. The classical observable attached to an operator reads its own
//! slot and takes the corresponding eigenvalue. Probabilities are assigned
//! afterwards: the product of the quantum marginals is always admissible, and
//! any joint table matching the marginals is accepted as an alternative.

use serde::Serialize;

use crate::basis::GeneratorBasis;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg;
use crate::observables::{self, ProbabilisticObservable, QuantumOperator};
use crate::state::BlochState;
use crate::table::JointTable;

/// Largest classical state space the builder will allocate.
pub const STATE_CAP: usize = 10_000_000;
const NORMALIZATION_TOL: f64 = 1e-12;
const MARGINAL_TOL: f64 = 1e-10;

/// Default independence threshold `ε = 10⁻⁶ · M`.
pub fn default_epsilon(dim: usize) -> f64 {
    1e-6 * dim as f64
}

/// `tr[(Â − B̂)²]`.
pub fn trace_distance_squared(a: &QuantumOperator, b: &QuantumOperator) -> f64 {
    let diff = a.matrix() - b.matrix();
    linalg::trace_product(&diff, &diff).re
}

/// Two operators are independent when `tr[(Â − B̂)²] ≥ ε`.
pub fn independence_check(a: &QuantumOperator, b: &QuantumOperator, epsilon: f64) -> bool {
    trace_distance_squared(a, b) >= epsilon
}

/// Real values `A_τ`, one per classical state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalObservable(Vec<f64>);

impl ClassicalObservable {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn is_two_valued(&self) -> Result<()> {
        match self.0.iter().find(|v| (v.abs() - 1.0).abs() > 1e-12) {
            Some(&value) => Err(Error::NotTwoValued { value }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Registered {
    pub operator: QuantumOperator,
    pub observable: ProbabilisticObservable,
}

#[derive(Debug, Clone)]
pub struct ClassicalEnsemble {
    dim: usize,
    slot_sizes: Vec<usize>,
    /// Row-major `states × slots` eigenvalue indices.
    labels: Vec<u8>,
    probabilities: Vec<f64>,
    registered: Vec<Registered>,
}

impl ClassicalEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of classical states.
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn slot_count(&self) -> usize {
        self.slot_sizes.len()
    }

    pub fn slot_sizes(&self) -> &[usize] {
        &self.slot_sizes
    }

    /// Label tuple `(a_1, …, a_N)` of state `tau`.
    pub fn label(&self, tau: usize) -> &[u8] {
        let n = self.slot_sizes.len();
        &self.labels[tau * n..(tau + 1) * n]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn registered(&self) -> &[Registered] {
        &self.registered
    }

    /// Classical observable of registered operator `slot`: `A_τ = γ_{a_slot(τ)}`.
    pub fn observable(&self, slot: usize) -> ClassicalObservable {
        let gamma = self.registered[slot].observable.spectrum();
        ClassicalObservable(
            (0..self.len())
                .map(|tau| gamma[usize::from(self.label(tau)[slot])])
                .collect(),
        )
    }

    /// Index of the state with the given label tuple.
    pub fn state_index(&self, label: &[usize]) -> usize {
        label
            .iter()
            .zip(&self.slot_sizes)
            .fold(0, |acc, (&a, &size)| acc * size + a)
    }
}

/// Direct-product ensemble over pairwise independent operators, with
/// uniform probabilities.
pub fn build_product_ensemble(
    basis: &GeneratorBasis,
    operators: &[QuantumOperator],
    epsilon: f64,
) -> Result<ClassicalEnsemble> {
    if operators.is_empty() {
        return Err(Error::InvalidInput(
            "at least one operator is required".into(),
        ));
    }
    for (i, a) in operators.iter().enumerate() {
        for (j, b) in operators.iter().enumerate().skip(i + 1) {
            let distance = trace_distance_squared(a, b);
            if distance < epsilon {
                return Err(Error::DependentOperators {
                    first: i,
                    second: j,
                    distance,
                    epsilon,
                });
            }
        }
    }
    let registered = operators
        .iter()
        .map(|op| {
            Ok(Registered {
                operator: op.clone(),
                observable: observables::quantum_observable_from_operator(basis, op)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slot_sizes: Vec<usize> = registered
        .iter()
        .map(|r| r.observable.spectrum().len())
        .collect();
    let states = slot_sizes.iter().map(|&s| s as u128).product::<u128>();
    if states > STATE_CAP as u128 {
        return Err(Error::StateSpaceCap {
            states,
            cap: STATE_CAP,
        });
    }
    let states = states as usize;
    let n = slot_sizes.len();
    let mut labels = vec![0u8; states * n];
    for tau in 0..states {
        let mut rest = tau;
        for slot in (0..n).rev() {
            labels[tau * n + slot] = (rest % slot_sizes[slot]) as u8;
            rest /= slot_sizes[slot];
        }
    }
    Ok(ClassicalEnsemble {
        dim: basis.dim(),
        slot_sizes,
        labels,
        probabilities: vec![1.0 / states as f64; states],
        registered,
    })
}

fn marginals(ens: &ClassicalEnsemble, s: &BlochState) -> Result<Vec<Vec<f64>>> {
    if s.dim() != ens.dim {
        return Err(Error::DimensionMismatch {
            expected: ens.dim,
            found: s.dim(),
        });
    }
    ens.registered
        .iter()
        .map(|r| observables::probabilities_in_state(&r.observable, s))
        .collect()
}

/// `p_τ = Π_i w^(i)_{a_i(τ)}`, the product of the quantum marginals.
pub fn assign_product_probabilities(
    ens: &ClassicalEnsemble,
    s: &BlochState,
) -> Result<ClassicalEnsemble> {
    assign_product_probabilities_with(ens, s, Exec::default())
}

pub fn assign_product_probabilities_with(
    ens: &ClassicalEnsemble,
    s: &BlochState,
    exec: Exec,
) -> Result<ClassicalEnsemble> {
    let w = marginals(ens, s)?;
    let probabilities = exec.map(ens.len(), |tau| {
        ens.label(tau)
            .iter()
            .zip(&w)
            .map(|(&a, wi)| wi[usize::from(a)])
            .product()
    });
    Ok(ClassicalEnsemble {
        probabilities,
        ..ens.clone()
    })
}

/// Replace the probabilities by an explicit joint table, which must be
/// normalized and reproduce every registered observable's quantum marginal.
pub fn assign_joint_probabilities(
    ens: &ClassicalEnsemble,
    s: &BlochState,
    joint: Vec<f64>,
) -> Result<ClassicalEnsemble> {
    if joint.len() != ens.len() {
        return Err(Error::DimensionMismatch {
            expected: ens.len(),
            found: joint.len(),
        });
    }
    if let Some((index, &value)) = joint.iter().enumerate().find(|(_, p)| **p < 0.0) {
        return Err(Error::NegativeProbability { index, value });
    }
    let total: f64 = joint.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidInput(format!(
            "joint probabilities sum to {total}"
        )));
    }
    let w = marginals(ens, s)?;
    let mut deviation: f64 = 0.0;
    for (slot, wi) in w.iter().enumerate() {
        let mut sums = vec![0.0; wi.len()];
        for (tau, p) in joint.iter().enumerate() {
            sums[usize::from(ens.label(tau)[slot])] += p;
        }
        for (a, b) in sums.iter().zip(wi) {
            deviation = deviation.max((a - b).abs());
        }
    }
    if deviation > MARGINAL_TOL {
        return Err(Error::MarginalMismatch { deviation });
    }
    Ok(ClassicalEnsemble {
        probabilities: joint,
        ..ens.clone()
    })
}

/// `⟨A⟩ = Σ_τ p_τ A_τ`.
pub fn expectation(ens: &ClassicalEnsemble, a: &ClassicalObservable) -> Result<f64> {
    expectation_with(ens, a, Exec::default())
}

pub fn expectation_with(
    ens: &ClassicalEnsemble,
    a: &ClassicalObservable,
    exec: Exec,
) -> Result<f64> {
    if a.len() != ens.len() {
        return Err(Error::DimensionMismatch {
            expected: ens.len(),
            found: a.len(),
        });
    }
    let p = &ens.probabilities;
    Ok(exec.sum(ens.len(), |tau| p[tau] * a.0[tau]))
}

/// Pointwise product `(A·B)_τ = A_τ B_τ`.
pub fn classical_product(
    a: &ClassicalObservable,
    b: &ClassicalObservable,
) -> Result<ClassicalObservable> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(ClassicalObservable(
        a.0.iter().zip(&b.0).map(|(x, y)| x * y).collect(),
    ))
}

/// `⟨A·B⟩ = Σ_τ p_τ A_τ B_τ`.
pub fn classical_correlation(
    ens: &ClassicalEnsemble,
    a: &ClassicalObservable,
    b: &ClassicalObservable,
) -> Result<f64> {
    expectation(ens, &classical_product(a, b)?)
}

/// Probabilities `p_ss'` that two-level observables *have* the values `s, s'`.
pub fn joint_value_probabilities(
    ens: &ClassicalEnsemble,
    a: &ClassicalObservable,
    b: &ClassicalObservable,
) -> Result<JointTable> {
    a.is_two_valued()?;
    b.is_two_valued()?;
    JointTable::from_moments(
        expectation(ens, a)?,
        expectation(ens, b)?,
        classical_correlation(ens, a, b)?,
    )
}
