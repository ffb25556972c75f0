use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qemerge::basis::{self, GeneratorBasis};
use qemerge::evolution::{self, EvolutionSpec, ScalingProfile, StepControl};
use qemerge::linalg;
use qemerge::observables::QuantumOperator;
use qemerge::sampling;
use qemerge::state::{self, BlochState, DensityMatrix};

fn precession_error(dt: f64) -> f64 {
    let b = GeneratorBasis::pauli_strings(1).unwrap();
    let sc = basis::structure_constants(&b).unwrap();
    let omega = 1.0;
    let t_final = 10.0;
    let spec = evolution::hamiltonian_to_generator(&[0.0, 0.0, omega / 2.0], &sc).unwrap();
    let s = BlochState::new(2, vec![1.0, 0.0, 0.0]).unwrap();
    let control = StepControl::with_stride(t_final, dt, usize::MAX).unwrap();
    let tr = evolution::evolve_bloch(&b, &s, &spec, &control).unwrap();
    let r = tr.last().unwrap().coefficients();
    ((r[0] - (omega * t_final).cos()).powi(2) + (r[1] - (omega * t_final).sin()).powi(2)).sqrt()
}

#[test]
fn fourth_order_convergence() {
    let ratio = precession_error(0.1) / precession_error(0.05);
    assert!((ratio - 16.0).abs() <= 2.0, "ratio {ratio}");
}

#[test]
fn purity_is_conserved_without_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let sc = basis::structure_constants(&b).unwrap();
    let h = sampling::random_operator(&b, &mut rng).unwrap();
    let spec = evolution::hamiltonian_to_generator(h.coefficients(), &sc).unwrap();
    let s = sampling::random_pure_state(&b, &mut rng).unwrap();
    let tr = evolution::evolve_bloch(
        &b,
        &s,
        &spec,
        &StepControl::with_stride(1.0, 1e-3, 10).unwrap(),
    )
    .unwrap();
    let p0 = tr.purity[0];
    assert!(tr.purity.iter().all(|p| (p - p0).abs() <= 1e-9));
    assert!(tr.copurity.iter().all(|c| *c <= 1e-9));
    assert!(!tr.positivity_breached());
}

#[test]
fn purity_flow_law() {
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let sc = basis::structure_constants(&b).unwrap();
    let mut h = vec![0.0; 15];
    h[2] = 0.7;
    h[11] = -0.3;
    let d = 0.05;
    let spec = EvolutionSpec::from_parts(&sc, &h, None, d).unwrap();
    let s = BlochState::from_labels(4, &[(3, -0.3), (12, -0.2), (6, 0.1)]).unwrap();
    let dt = 1e-4;
    let tr = evolution::evolve_bloch(&b, &s, &spec, &StepControl::new(0.1, dt).unwrap()).unwrap();
    let p0 = tr.purity[0];
    for (t, p) in tr.times.iter().zip(&tr.purity) {
        assert!((p / (p0 * (2.0 * d * t).exp()) - 1.0).abs() <= 1e-6);
    }
    for i in 1..tr.len() - 1 {
        let derivative =
            (tr.purity[i + 1] - tr.purity[i - 1]) / (tr.times[i + 1] - tr.times[i - 1]);
        assert!((derivative / (2.0 * d * tr.purity[i]) - 1.0).abs() <= 1e-5);
    }
}

#[test]
fn residual_generator_is_antisymmetric_and_recovered() {
    let b = GeneratorBasis::pauli_strings(1).unwrap();
    let sc = basis::structure_constants(&b).unwrap();
    let mut r = DMatrix::zeros(3, 3);
    r[(0, 2)] = 0.4;
    r[(2, 0)] = -0.4;
    let spec = EvolutionSpec::from_parts(&sc, &[0.1, 0.2, 0.3], Some(r.clone()), 0.0).unwrap();
    let t = spec.generator();
    assert!((t + t.transpose()).amax() <= 1e-12);
    assert!((spec.residual(&sc).unwrap() - r).amax() <= 1e-15);
}

#[test]
fn hamiltonian_along_l3_couples_only_f_pairs() {
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let sc = basis::structure_constants(&b).unwrap();
    let mut h = vec![0.0; 15];
    h[2] = 1.0;
    let spec = evolution::hamiltonian_to_generator(&h, &sc).unwrap();
    for k in 0..15 {
        for l in 0..15 {
            assert_eq!(
                spec.generator()[(k, l)] != 0.0,
                sc.f(k, l, 2) != 0.0,
                "k={k} l={l}"
            );
        }
    }
}

#[test]
fn bloch_and_matrix_evolution_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for q in [1, 2] {
        let b = GeneratorBasis::pauli_strings(q).unwrap();
        let sc = basis::structure_constants(&b).unwrap();
        for _ in 0..10 {
            let h = sampling::random_operator(&b, &mut rng).unwrap();
            let rho = sampling::random_density(b.dim(), &mut rng).unwrap();
            let s = state::bloch_from_density(&b, &rho).unwrap();
            let spec = evolution::hamiltonian_to_generator(h.coefficients(), &sc).unwrap();
            let control = StepControl::with_stride(1.0, 1e-3, 100).unwrap();
            let bloch = evolution::evolve_bloch(&b, &s, &spec, &control).unwrap();
            let matrix = evolution::evolve_von_neumann(&b, &rho, &h, &control).unwrap();
            assert_eq!(bloch.times, matrix.times);
            for (x, y) in bloch.states.iter().zip(&matrix.states) {
                for (u, v) in x.coefficients().iter().zip(y.coefficients()) {
                    assert!((u - v).abs() <= 1e-8);
                }
            }
        }
    }
}

#[test]
fn von_neumann_conserves_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let h = sampling::random_operator(&b, &mut rng).unwrap();
    let rho = sampling::random_density(4, &mut rng).unwrap();
    let spectrum = rho.eigenvalues();
    let track =
        evolution::von_neumann_track(&rho, &h, &StepControl::with_stride(1.0, 1e-3, 50).unwrap())
            .unwrap();
    for (_, m) in &track {
        assert!((linalg::trace(m.matrix()).re - 1.0).abs() <= 1e-8);
        assert!(linalg::hermiticity_deviation(m.matrix()) <= 1e-8);
        for (x, y) in m.eigenvalues().iter().zip(&spectrum) {
            assert!((x - y).abs() <= 1e-8);
        }
    }
}

#[test]
fn schrodinger_tracks_von_neumann() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let b = GeneratorBasis::pauli_strings(1).unwrap();
    let h = QuantumOperator::from_matrix(&b, b.by_label(3).scale(0.8)).unwrap();
    let psi = sampling::random_wavefunction(2, &mut rng);
    let rho = state::density_from_wavefunction(&psi).unwrap();
    let control = StepControl::with_stride(1.0, 1e-3, 25).unwrap();
    let waves = evolution::evolve_schrodinger(&psi, &h, &control).unwrap();
    let track = evolution::von_neumann_track(&rho, &h, &control).unwrap();
    assert!(waves.norms.iter().all(|n| (n - 1.0).abs() <= 1e-10));
    for (w, (_, m)) in waves.states.iter().zip(&track) {
        assert!(linalg::max_abs_diff(&linalg::outer(w.components()), m.matrix()) <= 1e-8);
    }
}

#[test]
fn eigenprojectors_and_gibbs_states_are_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let h = sampling::random_operator(&b, &mut rng).unwrap();
    let control = StepControl::new(1.0, 1e-3).unwrap();
    let mut fixed: Vec<DensityMatrix> = evolution::eigenprojectors(&h)
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    fixed.push(evolution::boltzmann_state(&h, 0.7).unwrap());
    for rho in fixed {
        let track = evolution::von_neumann_track(&rho, &h, &control).unwrap();
        let end = &track.last().unwrap().1;
        assert!(linalg::max_abs_diff(end.matrix(), rho.matrix()) <= 1e-10);
    }
}

#[test]
fn degenerate_energies() {
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let h = QuantumOperator::from_matrix(&b, b.by_label(1) + b.by_label(2)).unwrap();
    let eig = evolution::energy_eigenstates(&h);
    let energies: Vec<f64> = eig.iter().map(|(e, _)| *e).collect();
    assert_eq!(energies, vec![-2.0, 0.0, 0.0, 2.0]);
    // Only the projector onto the degenerate subspace is basis independent.
    let projector = linalg::outer(eig[1].1.components()) + linalg::outer(eig[2].1.components());
    let mut expected = linalg::CMatrix::zeros(4, 4);
    expected[(1, 1)] = linalg::ONE;
    expected[(2, 2)] = linalg::ONE;
    assert!(linalg::max_abs_diff(&projector, &expected) <= 1e-12);
}

#[test]
fn gibbs_limits() {
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let h = QuantumOperator::from_matrix(&b, b.by_label(1) + b.by_label(2)).unwrap();
    let hot = evolution::boltzmann_state(&h, 0.0).unwrap();
    assert!(
        linalg::max_abs_diff(hot.matrix(), DensityMatrix::maximally_mixed(4).matrix()) <= 1e-15
    );
    let cold = evolution::boltzmann_state(&h, 30.0).unwrap();
    assert!(state::copurity(&cold) <= 1e-20);
    assert!((cold.matrix()[(3, 3)].re - 1.0).abs() <= 1e-20f64.max(2.0 * (-60.0f64).exp()));
}

#[test]
fn syncoherence_grows_to_the_unit_sphere() {
    let b = GeneratorBasis::pauli_strings(1).unwrap();
    let spec = EvolutionSpec::new(DMatrix::zeros(3, 3), 0.0).unwrap();
    let s = BlochState::new(2, vec![0.3, 0.0, 0.4]).unwrap();
    let control = StepControl::with_stride(20.0, 1e-3, 100).unwrap();
    let tr = evolution::syncoherence_demo(
        &b,
        &s,
        &spec,
        ScalingProfile::Logistic { kappa: 1.0 },
        &control,
    )
    .unwrap();
    assert!(tr.purity.windows(2).all(|w| w[1] >= w[0]));
    assert!(*tr.copurity.last().unwrap() <= 1e-6);
    let end = tr.last().unwrap().coefficients();
    // Radial growth keeps the direction.
    assert!((end[0] / end[2] - 0.75).abs() <= 1e-12);
    assert!(!tr.positivity_breached());
}

#[test]
fn syncoherence_toward_the_singlet() {
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let spec = EvolutionSpec::new(DMatrix::zeros(15, 15), 0.0).unwrap();
    let s = BlochState::from_labels(4, &[(3, -0.5), (12, -0.5), (14, 0.5)]).unwrap();
    let control = StepControl::with_stride(20.0, 1e-3, 200).unwrap();
    let tr = evolution::syncoherence_demo(
        &b,
        &s,
        &spec,
        ScalingProfile::Logistic { kappa: 1.0 },
        &control,
    )
    .unwrap();
    assert!(tr.purity.windows(2).all(|w| w[1] >= w[0]));
    assert!((tr.purity.last().unwrap() - 3.0).abs() <= 1e-6);
    assert!(*tr.copurity.last().unwrap() <= 1e-6);
    assert!(!tr.positivity_breached());
}

#[test]
fn syncoherence_from_a_mixed_direction_is_flagged() {
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let spec = EvolutionSpec::new(DMatrix::zeros(15, 15), 0.0).unwrap();
    let s = BlochState::from_labels(4, &[(3, -0.9)]).unwrap();
    let control = StepControl::with_stride(10.0, 1e-3, 100).unwrap();
    let tr = evolution::syncoherence_demo(
        &b,
        &s,
        &spec,
        ScalingProfile::Logistic { kappa: 1.0 },
        &control,
    )
    .unwrap();
    assert!(tr.valid[0]);
    assert!(tr.positivity_breached());
}

#[test]
fn decoherence_of_the_singlet() {
    let b = GeneratorBasis::pauli_strings(2).unwrap();
    let spec = EvolutionSpec::new(DMatrix::zeros(15, 15), -0.2).unwrap();
    let tr = evolution::evolve_bloch(
        &b,
        &BlochState::singlet(),
        &spec,
        &StepControl::with_stride(5.0, 1e-3, 500).unwrap(),
    )
    .unwrap();
    for (t, p) in tr.times.iter().zip(&tr.purity) {
        assert!((p / (3.0 * (-0.4 * t).exp()) - 1.0).abs() <= 1e-6);
    }
    assert!(!tr.positivity_breached());
}

#[test]
fn zero_dynamics_are_constant() {
    let b = GeneratorBasis::pauli_strings(1).unwrap();
    let spec = EvolutionSpec::new(DMatrix::zeros(3, 3), 0.0).unwrap();
    let s = BlochState::new(2, vec![0.1, -0.2, 0.3]).unwrap();
    let tr = evolution::evolve_bloch(&b, &s, &spec, &StepControl::new(1.0, 0.1).unwrap()).unwrap();
    assert!(tr.states.iter().all(|x| x == &s));
    let h = QuantumOperator::from_matrix(&b, b.by_label(2).clone()).unwrap();
    let eq = evolution::evolve_von_neumann(
        &b,
        &DensityMatrix::maximally_mixed(2),
        &h,
        &StepControl::new(1.0, 0.1).unwrap(),
    )
    .unwrap();
    assert!(eq.states.iter().all(|x| x.purity() == 0.0));
}
