//! Conditional probabilities for two consecutive measurements of two-level
//! observables, the resulting measurement correlation, joint outcome tables
//! and the Bell-inequality slack.
//!
//! After measuring `A = ±1` the state is replaced by an eigenstate of `Â`.
//! Two reduction rules are provided:
//!
//! * minimally destructive: `ρ → (1 ± Â) ρ (1 ± Â) / (2 (1 ± ⟨A⟩))`, which
//!   keeps pure states pure;
//! * maximally destructive: `ρ → (1 ± Â) / M`, which forgets everything but
//!   the measured value.

use serde::{Deserialize, Serialize};

use crate::basis::{GeneratorBasis, StructureConstants};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{self, CMatrix};
use crate::observables::{dot, QuantumOperator};
use crate::state::{self, BlochState};
use crate::table::JointTable;

/// Branches less likely than this are unreachable.
pub const BRANCH_TOL: f64 = 1e-12;
pub const TWO_LEVEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionMode {
    MinimallyDestructive,
    MaximallyDestructive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementOutcome {
    pub sign: i8,
    pub probability: f64,
    pub state: BlochState,
}

fn require_two_level(op: &QuantumOperator) -> Result<()> {
    let deviation = op.involution_defect();
    if deviation > TWO_LEVEL_TOL {
        return Err(Error::NotTwoLevel { deviation });
    }
    Ok(())
}

fn unit_sign(sign: i8) -> Result<f64> {
    match sign {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        other => Err(Error::InvalidInput(format!(
            "outcome sign must be ±1, got {other}"
        ))),
    }
}

/// `w^A_± = (1 ± ⟨A⟩) / 2`.
pub fn branch_probability(s: &BlochState, a: &QuantumOperator, sign: i8) -> Result<f64> {
    require_two_level(a)?;
    Ok(0.5 * (1.0 + unit_sign(sign)? * a.expectation(s)?))
}

/// State after measuring `A = sign`.
pub fn reduce_state(
    basis: &GeneratorBasis,
    s: &BlochState,
    a: &QuantumOperator,
    sign: i8,
    mode: ReductionMode,
) -> Result<BlochState> {
    Ok(measure(basis, s, a, sign, mode)?.state)
}

/// Branch probability together with the reduced state.
pub fn measure(
    basis: &GeneratorBasis,
    s: &BlochState,
    a: &QuantumOperator,
    sign: i8,
    mode: ReductionMode,
) -> Result<MeasurementOutcome> {
    let rho = state::density_from_bloch(basis, s)?;
    let probability = branch_probability(s, a, sign)?;
    if probability < BRANCH_TOL {
        return Err(Error::BranchUnreachable { probability });
    }
    let sigma = unit_sign(sign)?;
    let projector: CMatrix = linalg::identity(basis.dim()) + a.matrix().scale(sigma);
    let reduced = match mode {
        ReductionMode::MinimallyDestructive => {
            (&projector * rho.matrix() * &projector).scale(1.0 / (4.0 * probability))
        }
        ReductionMode::MaximallyDestructive => {
            let trace = a.trace();
            if trace.abs() > TWO_LEVEL_TOL {
                return Err(Error::NotTraceless { trace });
            }
            projector.scale(1.0 / basis.dim() as f64)
        }
    };
    Ok(MeasurementOutcome {
        sign,
        probability,
        state: state::bloch_from_matrix(basis, &reduced)?,
    })
}

/// `(w^B_+, w^B_−)` after `A` was found with `first_sign`.
pub fn conditional_probability(
    basis: &GeneratorBasis,
    s: &BlochState,
    a: &QuantumOperator,
    b: &QuantumOperator,
    first_sign: i8,
    mode: ReductionMode,
) -> Result<(f64, f64)> {
    require_two_level(b)?;
    let after = reduce_state(basis, s, a, first_sign, mode)?;
    let mean = b.expectation(&after)?;
    let plus = (0.5 * (1.0 + mean)).clamp(0.0, 1.0);
    let minus = (0.5 * (1.0 - mean)).clamp(0.0, 1.0);
    Ok((plus, minus))
}

/// `⟨BA⟩_m = tr(B̂ ρ_{A+}) w^A_+ − tr(B̂ ρ_{A−}) w^A_−`.
///
/// Unreachable branches contribute zero weight.
pub fn measurement_correlation(
    basis: &GeneratorBasis,
    s: &BlochState,
    a: &QuantumOperator,
    b: &QuantumOperator,
    mode: ReductionMode,
) -> Result<f64> {
    require_two_level(b)?;
    let mut total = 0.0;
    for sign in [1i8, -1] {
        let weight = branch_probability(s, a, sign)?;
        if weight < BRANCH_TOL {
            continue;
        }
        let after = reduce_state(basis, s, a, sign, mode)?;
        total += f64::from(sign) * weight * b.expectation(&after)?;
    }
    Ok(total)
}

/// Closed form `½ tr({Â, B̂} ρ)`.
pub fn quantum_correlation(
    basis: &GeneratorBasis,
    s: &BlochState,
    a: &QuantumOperator,
    b: &QuantumOperator,
) -> Result<f64> {
    let rho = state::assemble_density(basis, s)?;
    let anti = linalg::anticommutator(a.matrix(), b.matrix());
    Ok(0.5 * linalg::trace_product(&anti, &rho).re)
}

/// Probabilities `w_ss'` for measuring `A = s` and `B = s'`, built from the
/// quantum correlation.
pub fn joint_outcome_probabilities(
    basis: &GeneratorBasis,
    s: &BlochState,
    a: &QuantumOperator,
    b: &QuantumOperator,
) -> Result<JointTable> {
    require_two_level(a)?;
    require_two_level(b)?;
    JointTable::from_moments(
        a.expectation(s)?,
        b.expectation(s)?,
        quantum_correlation(basis, s, a, b)?,
    )
}

/// Joint outcome table computed directly in Bloch space from the operator
/// coefficients and `d_mlk`; agrees with [`joint_outcome_probabilities`].
pub fn joint_outcome_probabilities_bloch(
    sc: &StructureConstants,
    s: &BlochState,
    a: &QuantumOperator,
    b: &QuantumOperator,
) -> Result<JointTable> {
    let rho = s.coefficients();
    if rho.len() != sc.len() || a.coefficients().len() != sc.len() {
        return Err(Error::DimensionMismatch {
            expected: sc.len(),
            found: rho.len(),
        });
    }
    let (ea, eb) = (a.coefficients(), b.coefficients());
    let mut correlation =
        a.e0() * b.e0() + a.e0() * dot(eb, rho) + b.e0() * dot(ea, rho) + dot(ea, eb);
    for (m, am) in ea.iter().enumerate().filter(|(_, v)| **v != 0.0) {
        for (l, bl) in eb.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            for &(k, d) in sc.d_terms(m, l) {
                correlation += d * am * bl * rho[k];
            }
        }
    }
    let mean_a = a.e0() + dot(ea, rho);
    let mean_b = b.e0() + dot(eb, rho);
    JointTable::from_moments(mean_a, mean_b, correlation)
}

/// `Â(θ) = cos θ L_1 + sin θ L_8` and `B̂(φ) = cos φ L_2 + sin φ L_4` at `M = 4`.
pub fn rotated_spin_operators(
    basis: &GeneratorBasis,
    theta: f64,
    phi: f64,
) -> Result<(QuantumOperator, QuantumOperator)> {
    if basis.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: basis.dim(),
        });
    }
    let a = basis.by_label(1).scale(theta.cos()) + basis.by_label(8).scale(theta.sin());
    let b = basis.by_label(2).scale(phi.cos()) + basis.by_label(4).scale(phi.sin());
    Ok((
        QuantumOperator::from_matrix(basis, a)?,
        QuantumOperator::from_matrix(basis, b)?,
    ))
}

/// `C(θ, φ) = cosθ cosφ ρ_3 + cosθ sinφ ρ_6 + sinθ cosφ ρ_10 + sinθ sinφ ρ_12`.
pub fn rotated_spin_correlation(s: &BlochState, theta: f64, phi: f64) -> Result<f64> {
    if s.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: s.dim(),
        });
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok(ct * cp * s.label(3) + ct * sp * s.label(6) + st * cp * s.label(10) + st * sp * s.label(12))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellReport {
    pub theta1: f64,
    pub theta2: f64,
    /// `C(θ1, θ2)`.
    pub c12: f64,
    /// `C(θ1, 0)`.
    pub c10: f64,
    /// `C(θ2, 0)`.
    pub c20: f64,
    /// `1 + C(θ1, θ2) − |C(θ1, 0) − C(θ2, 0)|`; negative means violated.
    pub slack: f64,
    pub violated: bool,
}

/// Slack of the inequality `|C(θ1,0) − C(θ2,0)| ≤ 1 + C(θ1,θ2)`.
pub fn bell_check(correlation: impl Fn(f64, f64) -> f64, theta1: f64, theta2: f64) -> BellReport {
    let c12 = correlation(theta1, theta2);
    let c10 = correlation(theta1, 0.0);
    let c20 = correlation(theta2, 0.0);
    let slack = 1.0 + c12 - (c10 - c20).abs();
    BellReport {
        theta1,
        theta2,
        c12,
        c10,
        c20,
        slack,
        violated: slack < 0.0,
    }
}

/// Slack at every ordered pair `(θ1, θ2)` of `angles`, row-major in `θ1`.
pub fn bell_grid<F>(correlation: F, angles: &[f64], exec: Exec) -> Vec<BellReport>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let n = angles.len();
    exec.map(n * n, |idx| {
        bell_check(&correlation, angles[idx / n], angles[idx % n])
    })
}

/// `k π / divisions` for `k = 0..=divisions`.
pub fn angle_grid(divisions: usize) -> Vec<f64> {
    (0..=divisions)
        .map(|k| k as f64 * std::f64::consts::PI / divisions as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntermediateReductionReport {
    pub trace_x: f64,
    pub trace_ax: f64,
    pub trace_x2: f64,
    /// `M (P − 1)`.
    pub expected_trace_x2: f64,
    pub valid: bool,
}

/// Check the constraints `tr X = 0`, `tr(ÂX) = 0`, `tr X² = M(P − 1)` on a
/// candidate `X` for the reduction `ρ_{A+} = (1 + Â + X) / M` at purity `P`.
pub fn validate_intermediate_reduction(
    a: &QuantumOperator,
    x: &CMatrix,
    purity: f64,
) -> IntermediateReductionReport {
    const TOL: f64 = 1e-10;
    let m = a.dim() as f64;
    let trace_x = linalg::trace(x).re;
    let trace_ax = linalg::trace_product(a.matrix(), x).re;
    let trace_x2 = linalg::trace_product(x, x).re;
    let expected_trace_x2 = m * (purity - 1.0);
    let valid = trace_x.abs() <= TOL
        && trace_ax.abs() <= TOL
        && (trace_x2 - expected_trace_x2).abs() <= TOL;
    IntermediateReductionReport {
        trace_x,
        trace_ax,
        trace_x2,
        expected_trace_x2,
        valid,
    }
}
