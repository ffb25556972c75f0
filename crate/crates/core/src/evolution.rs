//! Time evolution of the Bloch vector
//! `∂_t ρ_k = T_kl ρ_l + D ρ_k` with antisymmetric `T`, its unitary fixed
//! point (von Neumann and Schrödinger), and equilibrium states.
//!
//! `T` splits into a Hamiltonian part `−2 f_klm H_m` and a residual `T̃`.
//! Integration is fixed-step fourth-order Runge–Kutta.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{GeneratorBasis, StructureConstants};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, I};
use crate::observables::QuantumOperator;
use crate::state::{self, BlochState, DensityMatrix, WaveFunction, POSITIVITY_TOL};

pub const ANTISYMMETRY_TOL: f64 = 1e-12;
pub const DEFAULT_DT: f64 = 1e-3;

/// Generator of one evolution step.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSpec {
    t: DMatrix<f64>,
    d: f64,
    hamiltonian: Option<Vec<f64>>,
    residual: Option<DMatrix<f64>>,
}

fn antisymmetry_defect(t: &DMatrix<f64>) -> f64 {
    (t + t.transpose()).amax()
}

fn require_antisymmetric(t: &DMatrix<f64>) -> Result<()> {
    if !t.is_square() {
        return Err(Error::InvalidInput("T must be square".into()));
    }
    let defect = antisymmetry_defect(t);
    if defect > ANTISYMMETRY_TOL {
        return Err(Error::InvalidInput(format!(
            "T is not antisymmetric (|T + Tᵀ| = {defect:e})"
        )));
    }
    Ok(())
}

/// `T_kl = −2 f_klm H_m`.
fn hamiltonian_part(sc: &StructureConstants, h: &[f64]) -> Result<DMatrix<f64>> {
    let n = sc.len();
    if h.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.len(),
        });
    }
    let mut t = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            t[(k, l)] = -2.0 * sc.f_terms(k, l).iter().map(|&(m, f)| f * h[m]).sum::<f64>();
        }
    }
    Ok(t)
}

impl EvolutionSpec {
    pub fn new(t: DMatrix<f64>, d: f64) -> Result<Self> {
        require_antisymmetric(&t)?;
        Ok(Self {
            t,
            d,
            hamiltonian: None,
            residual: None,
        })
    }

    /// `T = −2 f·H + T̃`.
    pub fn from_parts(
        sc: &StructureConstants,
        h: &[f64],
        residual: Option<DMatrix<f64>>,
        d: f64,
    ) -> Result<Self> {
        let mut t = hamiltonian_part(sc, h)?;
        if let Some(r) = &residual {
            require_antisymmetric(r)?;
            if r.nrows() != t.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: t.nrows(),
                    found: r.nrows(),
                });
            }
            t += r;
        }
        Ok(Self {
            t,
            d,
            hamiltonian: Some(h.to_vec()),
            residual,
        })
    }

    pub fn with_scaling(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn scaling(&self) -> f64 {
        self.d
    }

    pub fn hamiltonian(&self) -> Option<&[f64]> {
        self.hamiltonian.as_deref()
    }

    /// `T̃ = T + 2 f·H`, or `T` itself when no Hamiltonian was given.
    pub fn residual(&self, sc: &StructureConstants) -> Result<DMatrix<f64>> {
        match &self.hamiltonian {
            Some(h) => Ok(&self.t - hamiltonian_part(sc, h)?),
            None => Ok(self.t.clone()),
        }
    }

    pub fn len(&self) -> usize {
        self.t.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.t.nrows() == 0
    }

    fn rate(&self, rho: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.t * rho;
        if self.d != 0.0 {
            out.axpy(self.d, rho, 1.0);
        }
        out
    }
}

/// Purely Hamiltonian generator, `T̃ = 0` and `D = 0`.
pub fn hamiltonian_to_generator(h: &[f64], sc: &StructureConstants) -> Result<EvolutionSpec> {
    EvolutionSpec::from_parts(sc, h, None, 0.0)
}

/// Step size, horizon and sampling of a fixed-step integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub t_final: f64,
    pub dt: f64,
    /// Record every `stride`-th step; the final step is always recorded.
    pub stride: usize,
}

impl StepControl {
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        Self::with_stride(t_final, dt, 1)
    }

    pub fn with_stride(t_final: f64, dt: f64, stride: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidInput(format!(
                "t_final must be positive, got {t_final}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidInput("stride must be at least 1".into()));
        }
        Ok(Self {
            t_final,
            dt,
            stride,
        })
    }

    /// Number of steps; the actual step is `t_final / steps ≤ dt`.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt - 1e-9).ceil() as usize).max(1)
    }

    pub fn step_size(&self) -> f64 {
        self.t_final / self.steps() as f64
    }
}

trait Linear: Clone {
    /// `self + a x`.
    fn plus_scaled(&self, a: f64, x: &Self) -> Self;
}

impl Linear for DVector<f64> {
    fn plus_scaled(&self, a: f64, x: &Self) -> Self {
        self + x * a
    }
}

impl Linear for CMatrix {
    fn plus_scaled(&self, a: f64, x: &Self) -> Self {
        self + x.scale(a)
    }
}

impl Linear for CVector {
    fn plus_scaled(&self, a: f64, x: &Self) -> Self {
        self + x.scale(a)
    }
}

fn rk4_step<V: Linear>(y: &V, h: f64, f: &impl Fn(&V) -> V) -> V {
    let k1 = f(y);
    let k2 = f(&y.plus_scaled(0.5 * h, &k1));
    let k3 = f(&y.plus_scaled(0.5 * h, &k2));
    let k4 = f(&y.plus_scaled(h, &k3));
    y.plus_scaled(h / 6.0, &k1)
        .plus_scaled(h / 3.0, &k2)
        .plus_scaled(h / 3.0, &k3)
        .plus_scaled(h / 6.0, &k4)
}

/// Integrate and return `(t, y)` at the sampled steps, starting with `t = 0`.
fn integrate<V: Linear>(y0: V, control: &StepControl, f: impl Fn(&V) -> V) -> Vec<(f64, V)> {
    let n = control.steps();
    let h = control.step_size();
    let mut samples = Vec::with_capacity(n / control.stride + 2);
    let mut y = y0;
    samples.push((0.0, y.clone()));
    for step in 1..=n {
        y = rk4_step(&y, h, &f);
        if step % control.stride == 0 || step == n {
            let t = if step == n {
                control.t_final
            } else {
                step as f64 * h
            };
            samples.push((t, y.clone()));
        }
    }
    samples
}

/// Sampled Bloch trajectory with per-sample diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    pub purity: Vec<f64>,
    pub copurity: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    /// `false` where the density matrix has left the positive cone.
    pub valid: Vec<bool>,
}

impl Trajectory {
    fn from_samples(basis: &GeneratorBasis, samples: Vec<(f64, DVector<f64>)>) -> Result<Self> {
        let mut out = Trajectory {
            times: Vec::with_capacity(samples.len()),
            states: Vec::with_capacity(samples.len()),
            purity: Vec::with_capacity(samples.len()),
            copurity: Vec::with_capacity(samples.len()),
            min_eigenvalue: Vec::with_capacity(samples.len()),
            valid: Vec::with_capacity(samples.len()),
        };
        for (t, rho) in samples {
            let s = BlochState::new(basis.dim(), rho.iter().copied().collect())?;
            let m = state::assemble_density(basis, &s)?;
            let min = linalg::eigenvalues(&m).first().copied().unwrap_or(0.0);
            out.times.push(t);
            out.purity.push(s.purity());
            out.copurity.push(state::matrix_copurity(&m));
            out.min_eigenvalue.push(min);
            out.valid.push(min >= -POSITIVITY_TOL);
            out.states.push(s);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&BlochState> {
        self.states.last()
    }

    /// Whether any sample left the positive cone.
    pub fn positivity_breached(&self) -> bool {
        self.valid.iter().any(|v| !v)
    }
}

fn check_state(basis: &GeneratorBasis, s: &BlochState) -> Result<()> {
    if s.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: s.dim(),
        });
    }
    Ok(())
}

/// Integrate `∂_t ρ_k = T_kl ρ_l + D ρ_k`.
pub fn evolve_bloch(
    basis: &GeneratorBasis,
    s: &BlochState,
    spec: &EvolutionSpec,
    control: &StepControl,
) -> Result<Trajectory> {
    if spec.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: spec.len(),
        });
    }
    evolve_bloch_with(basis, s, control, |rho| spec.rate(rho))
}

/// Integrate `∂_t ρ = rate(ρ)` where the rate may depend on the state.
pub fn evolve_bloch_with(
    basis: &GeneratorBasis,
    s: &BlochState,
    control: &StepControl,
    rate: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> Result<Trajectory> {
    check_state(basis, s)?;
    let y0 = DVector::from_column_slice(s.coefficients());
    Trajectory::from_samples(basis, integrate(y0, control, rate))
}

fn require_hermitian(h: &QuantumOperator, dim: usize) -> Result<()> {
    if h.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: h.dim(),
        });
    }
    Ok(())
}

/// Sampled density matrices of `∂_t ρ = −i[H, ρ]`.
pub fn von_neumann_track(
    rho: &DensityMatrix,
    h: &QuantumOperator,
    control: &StepControl,
) -> Result<Vec<(f64, DensityMatrix)>> {
    require_hermitian(h, rho.dim())?;
    let hm = h.matrix().clone();
    let samples = integrate(rho.matrix().clone(), control, |r: &CMatrix| {
        linalg::commutator(&hm, r) * (-I)
    });
    Ok(samples
        .into_iter()
        .map(|(t, m)| (t, DensityMatrix::from_trusted(m)))
        .collect())
}

/// `∂_t ρ = −i[H, ρ]`, reported in Bloch coordinates.
pub fn evolve_von_neumann(
    basis: &GeneratorBasis,
    rho: &DensityMatrix,
    h: &QuantumOperator,
    control: &StepControl,
) -> Result<Trajectory> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho.dim(),
        });
    }
    let samples = von_neumann_track(rho, h, control)?
        .into_iter()
        .map(|(t, m)| {
            let s = state::bloch_from_matrix(basis, m.matrix())?;
            Ok((t, DVector::from_column_slice(s.coefficients())))
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_samples(basis, samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
    pub norms: Vec<f64>,
}

/// `i ∂_t ψ = H ψ`. No renormalization is applied.
pub fn evolve_schrodinger(
    psi: &WaveFunction,
    h: &QuantumOperator,
    control: &StepControl,
) -> Result<WaveTrajectory> {
    require_hermitian(h, psi.dim())?;
    let hm = h.matrix().clone();
    let samples = integrate(psi.components().clone(), control, |v: &CVector| {
        (&hm * v) * (-I)
    });
    let mut out = WaveTrajectory {
        times: Vec::new(),
        states: Vec::new(),
        norms: Vec::new(),
    };
    for (t, v) in samples {
        out.times.push(t);
        out.norms.push(v.norm());
        out.states.push(WaveFunction::from_trusted(v));
    }
    Ok(out)
}

/// Eigenpairs of `H` in ascending energy with phase-fixed eigenvectors.
pub fn energy_eigenstates(h: &QuantumOperator) -> Vec<(f64, WaveFunction)> {
    let eig = linalg::eigh(h.matrix(), linalg::Order::Ascending);
    eig.values
        .into_iter()
        .zip(eig.vectors)
        .map(|(e, v)| (e, WaveFunction::from_trusted(v)))
        .collect()
}

/// `e^{−βH} / tr e^{−βH}`.
pub fn boltzmann_state(h: &QuantumOperator, beta: f64) -> Result<DensityMatrix> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "β must be finite and non-negative, got {beta}"
        )));
    }
    let e_min = linalg::eigenvalues(h.matrix())
        .first()
        .copied()
        .unwrap_or(0.0);
    // Shifting by the ground energy keeps every weight in (0, 1].
    let weights = linalg::hermitian_function(h.matrix(), |e| (-beta * (e - e_min)).exp());
    let z = linalg::trace(&weights).re;
    let mut rho = weights.scale(1.0 / z);
    rho = (&rho + rho.adjoint()).scale(0.5);
    DensityMatrix::new(rho)
}

/// State-dependent scaling rate `D(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalingProfile {
    /// `D = rate`.
    Constant { rate: f64 },
    /// `D = rate` while `P < M − 1`, zero afterwards.
    Saturating { rate: f64 },
    /// `D = κ (1 − P / (M − 1))`.
    Logistic { kappa: f64 },
}

impl ScalingProfile {
    pub fn rate(&self, purity: f64, dim: usize) -> f64 {
        let p_max = (dim - 1) as f64;
        match *self {
            ScalingProfile::Constant { rate } => rate,
            ScalingProfile::Saturating { rate } => {
                if purity < p_max {
                    rate
                } else {
                    0.0
                }
            }
            ScalingProfile::Logistic { kappa } => kappa * (1.0 - purity / p_max),
        }
    }
}

/// Evolution with a state-dependent `D` on top of a fixed `T`.
///
/// Positivity is monitored through [`Trajectory::valid`], not enforced.
pub fn syncoherence_demo(
    basis: &GeneratorBasis,
    s: &BlochState,
    spec: &EvolutionSpec,
    profile: ScalingProfile,
    control: &StepControl,
) -> Result<Trajectory> {
    if spec.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: spec.len(),
        });
    }
    let dim = basis.dim();
    evolve_bloch_with(basis, s, control, |rho| {
        let d = profile.rate(rho.norm_squared(), dim);
        let mut out = spec.generator() * rho;
        out.axpy(d, rho, 1.0);
        out
    })
}

/// `(E_j, |ψ_j⟩⟨ψ_j|)` as density matrices, for stationarity checks.
pub fn eigenprojectors(h: &QuantumOperator) -> Vec<(f64, DensityMatrix)> {
    energy_eigenstates(h)
        .into_iter()
        .map(|(e, psi)| {
            (
                e,
                DensityMatrix::from_trusted(linalg::outer(psi.components())),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::structure_constants;

    fn qubit() -> (GeneratorBasis, StructureConstants) {
        let b = GeneratorBasis::pauli_strings(1).unwrap();
        let sc = structure_constants(&b).unwrap();
        (b, sc)
    }

    #[test]
    fn qubit_precession_generator() {
        let (_, sc) = qubit();
        let omega = 1.7;
        let spec = hamiltonian_to_generator(&[0.0, 0.0, omega / 2.0], &sc).unwrap();
        let t = spec.generator();
        assert!((t[(0, 1)] + omega).abs() < 1e-15);
        assert!((t[(1, 0)] - omega).abs() < 1e-15);
        assert_eq!(t[(0, 2)], 0.0);
        assert_eq!(t[(1, 2)], 0.0);
        assert!(spec.residual(&sc).unwrap().amax() < 1e-15);
    }

    #[test]
    fn zero_hamiltonian() {
        let (_, sc) = qubit();
        let spec = hamiltonian_to_generator(&[0.0; 3], &sc).unwrap();
        assert_eq!(spec.generator().amax(), 0.0);
    }

    #[test]
    fn precession_closed_form() {
        let (b, sc) = qubit();
        let omega = 2.0;
        let spec = hamiltonian_to_generator(&[0.0, 0.0, omega / 2.0], &sc).unwrap();
        let s = BlochState::new(2, vec![1.0, 0.0, 0.0]).unwrap();
        let control = StepControl::with_stride(1.0, 1e-3, 100).unwrap();
        let tr = evolve_bloch(&b, &s, &spec, &control).unwrap();
        for (t, st) in tr.times.iter().zip(&tr.states) {
            let r = st.coefficients();
            assert!((r[0] - (omega * t).cos()).abs() < 1e-10);
            assert!((r[1] - (omega * t).sin()).abs() < 1e-10);
            assert_eq!(r[2], 0.0);
        }
        assert_eq!(*tr.times.last().unwrap(), 1.0);
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn step_count() {
        let c = StepControl::new(1.0, 0.3).unwrap();
        assert_eq!(c.steps(), 4);
        let exact = StepControl::new(1.0, 0.1).unwrap();
        assert_eq!(exact.steps(), 10);
        assert!(StepControl::new(0.0, 0.1).is_err());
        assert!(StepControl::new(1.0, -0.1).is_err());
    }

    #[test]
    fn scaling_purity_law() {
        let b = GeneratorBasis::pauli_strings(1).unwrap();
        let spec = EvolutionSpec::new(DMatrix::zeros(3, 3), -0.1).unwrap();
        let s = BlochState::new(2, vec![0.0, 0.0, 1.0]).unwrap();
        let tr = evolve_bloch(
            &b,
            &s,
            &spec,
            &StepControl::with_stride(10.0, 1e-3, 1000).unwrap(),
        )
        .unwrap();
        let p = *tr.purity.last().unwrap();
        assert!((p / (-2.0f64).exp() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_symmetric_generator() {
        let mut t = DMatrix::zeros(3, 3);
        t[(0, 1)] = 1.0;
        t[(1, 0)] = 1.0;
        assert!(EvolutionSpec::new(t, 0.0).is_err());
    }

    #[test]
    fn boltzmann_qubit() {
        let b = GeneratorBasis::pauli_strings(1).unwrap();
        let z = QuantumOperator::generator(&b, 3);
        let rho = boltzmann_state(&z, 1.0).unwrap();
        let e = std::f64::consts::E;
        let z_part = e + 1.0 / e;
        assert!((rho.matrix()[(0, 0)].re - 1.0 / e / z_part).abs() < 1e-15);
        assert!((rho.matrix()[(1, 1)].re - e / z_part).abs() < 1e-15);
        assert!((rho.trace_square() * 2.0 - 1.0 - 1f64.tanh().powi(2)).abs() < 1e-14);
        let cold = boltzmann_state(&z, 40.0).unwrap();
        assert!(cold.matrix()[(0, 0)].re <= (-80.0f64).exp());
        assert!((cold.matrix()[(1, 1)].re - 1.0).abs() <= f64::EPSILON);
        let hot = boltzmann_state(&z, 0.0).unwrap();
        assert!((hot.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(boltzmann_state(&z, -1.0).is_err());
    }

    #[test]
    fn eigenstates_ascending() {
        let b = GeneratorBasis::pauli_strings(1).unwrap();
        let z = QuantumOperator::generator(&b, 3);
        let eig = energy_eigenstates(&z);
        assert_eq!(eig.len(), 2);
        assert!((eig[0].0 + 1.0).abs() < 1e-15 && (eig[1].0 - 1.0).abs() < 1e-15);
        assert!((eig[0].1.components()[1].re - 1.0).abs() < 1e-15);
        assert!((eig[1].1.components()[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn logistic_profile() {
        let p = ScalingProfile::Logistic { kappa: 2.0 };
        assert_eq!(p.rate(3.0, 4), 0.0);
        assert_eq!(p.rate(0.0, 4), 2.0);
        assert_eq!(ScalingProfile::Saturating { rate: 0.5 }.rate(1.0, 2), 0.0);
    }
}
