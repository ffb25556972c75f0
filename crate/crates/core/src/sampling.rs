//! Random states and operators for property tests and sweeps.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::GeneratorBasis;
use crate::error::Result;
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::observables::QuantumOperator;
use crate::state::{self, BlochState, DensityMatrix, WaveFunction};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| gaussian(rng))
}

/// Haar-distributed unitary from the phase-corrected QR of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            linalg::ONE
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Hermitian matrix with Gaussian entries, scaled to unit spectral spread
/// on average.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, rng);
    (&g + g.adjoint()).scale(0.5 / (dim as f64).sqrt())
}

pub fn random_operator<R: Rng + ?Sized>(
    basis: &GeneratorBasis,
    rng: &mut R,
) -> Result<QuantumOperator> {
    QuantumOperator::from_matrix(basis, random_hermitian(basis.dim(), rng))
}

/// `U diag(+1 × plus, −1 × rest) U†`.
pub fn random_involution<R: Rng + ?Sized>(
    basis: &GeneratorBasis,
    plus: usize,
    rng: &mut R,
) -> Result<QuantumOperator> {
    let dim = basis.dim();
    let u = random_unitary(dim, rng);
    let d = CMatrix::from_diagonal(&CVector::from_fn(dim, |i, _| {
        if i < plus {
            linalg::ONE
        } else {
            -linalg::ONE
        }
    }));
    let m = &u * d * u.adjoint();
    QuantumOperator::from_matrix(basis, (&m + m.adjoint()).scale(0.5))
}

/// Two-level operator with equal multiplicities, so `tr Â = 0` for even `M`.
pub fn random_two_level<R: Rng + ?Sized>(
    basis: &GeneratorBasis,
    rng: &mut R,
) -> Result<QuantumOperator> {
    random_involution(basis, basis.dim() / 2, rng)
}

pub fn random_wavefunction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> WaveFunction {
    loop {
        let v = CVector::from_fn(dim, |_, _| gaussian(rng));
        if let Ok(psi) = WaveFunction::normalized(v) {
            return psi.with_phase_convention();
        }
    }
}

pub fn random_pure_state<R: Rng + ?Sized>(
    basis: &GeneratorBasis,
    rng: &mut R,
) -> Result<BlochState> {
    let rho = state::density_from_wavefunction(&random_wavefunction(basis.dim(), rng))?;
    state::bloch_from_density(basis, &rho)
}

/// Full-rank mixed state `G G† / tr(G G†)` with Ginibre `G`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    let g = ginibre(dim, rng);
    let mut m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    m = m.scale(1.0 / tr);
    m = (&m + m.adjoint()).scale(0.5);
    DensityMatrix::new(m)
}

pub fn random_mixed_state<R: Rng + ?Sized>(
    basis: &GeneratorBasis,
    rng: &mut R,
) -> Result<BlochState> {
    state::bloch_from_density(basis, &random_density(basis.dim(), rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(4, &mut rng);
        assert!(linalg::max_abs_diff(&(&u * u.adjoint()), &linalg::identity(4)) < 1e-12);
    }

    #[test]
    fn involution_squares_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = GeneratorBasis::pauli_strings(2).unwrap();
        let a = random_two_level(&b, &mut rng).unwrap();
        assert!(a.involution_defect() < 1e-12);
        assert!(a.trace().abs() < 1e-12);
    }

    #[test]
    fn states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = GeneratorBasis::pauli_strings(2).unwrap();
        let pure = random_pure_state(&b, &mut rng).unwrap();
        assert!((pure.purity() - 3.0).abs() < 1e-10);
        let mixed = random_mixed_state(&b, &mut rng).unwrap();
        assert!(mixed.purity() < 3.0);
        assert!(state::validate_quantum_state(&b, &mixed).unwrap().valid);
    }
}
