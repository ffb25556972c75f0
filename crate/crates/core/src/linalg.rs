//! Small dense complex linear algebra used throughout the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance used to decide that two moduli tie when fixing phases.
const PHASE_TIE: f64 = 1e-12;

/// One of the four single-qubit factors `1, τ1, τ2, τ3`.
pub fn pauli(index: u8) -> CMatrix {
    let entries = match index {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => panic!("pauli index {index} out of range"),
    };
    DMatrix::from_row_slice(2, 2, &entries)
}

/// Tensor product of single-qubit factors, leftmost factor most significant.
pub fn pauli_string(factors: &[u8]) -> CMatrix {
    factors
        .iter()
        .fold(DMatrix::from_element(1, 1, ONE), |acc, &f| {
            acc.kronecker(&pauli(f))
        })
}

pub fn identity(dim: usize) -> CMatrix {
    DMatrix::identity(dim, dim)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest elementwise modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_deviation(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// Rescale `v` by a unit phase so that its first component of largest
/// modulus is real and non-negative.
pub fn fix_phase(v: &mut CVector) {
    let largest = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= largest * (1.0 - PHASE_TIE))
        .expect("maximum is attained");
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|z| *z *= phase);
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

fn lexicographic(a: &CVector, b: &CVector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.re.total_cmp(&y.re).then_with(|| x.im.total_cmp(&y.im));
        if ord.is_ne() {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Spectral decomposition of a hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<CVector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Ascending,
    Descending,
}

/// Eigen-decomposition of a hermitian matrix with phase-fixed eigenvectors.
///
/// Ties in the eigenvalue are broken by lexicographic comparison of the
/// phase-fixed eigenvectors so that the output is reproducible.
pub fn eigh(a: &CMatrix, order: Order) -> Eigen {
    // Symmetrize so rounding noise in the input cannot leak into the solver.
    let sym = (a + a.adjoint()).scale(0.5);
    let decomposition = SymmetricEigen::new(sym);
    let mut pairs: Vec<(f64, CVector)> = decomposition
        .eigenvalues
        .iter()
        .zip(decomposition.eigenvectors.column_iter())
        .map(|(&value, column)| {
            let mut v = column.into_owned();
            v.normalize_mut();
            fix_phase(&mut v);
            (value, v)
        })
        .collect();
    pairs.sort_by(|(va, xa), (vb, xb)| {
        let by_value = match order {
            Order::Ascending => va.total_cmp(vb),
            Order::Descending => vb.total_cmp(va),
        };
        by_value.then_with(|| lexicographic(xa, xb))
    });
    let (values, vectors) = pairs.into_iter().unzip();
    Eigen { values, vectors }
}

pub fn eigenvalues(a: &CMatrix) -> Vec<f64> {
    let sym = (a + a.adjoint()).scale(0.5);
    let mut values: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Group sorted eigenvalues whose spread is within `1e-9 · max(range, 1)`.
///
/// Returns `(representative value, member indices)` per group.
pub fn group_degenerate(values: &[f64]) -> Vec<(f64, Vec<usize>)> {
    const REL: f64 = 1e-9;
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = REL * (hi - lo).max(1.0);
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some((_, members)) if (v - values[members[0]]).abs() <= tol => members.push(i),
            _ => groups.push((v, vec![i])),
        }
    }
    for (rep, members) in &mut groups {
        *rep = members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64;
    }
    groups
}

/// Outer product `ψ ψ†`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Expectation `v† A v` (real part).
pub fn sandwich(v: &CVector, a: &CMatrix) -> f64 {
    (v.adjoint() * a * v)[(0, 0)].re
}

/// Apply `f` to the spectrum of a hermitian matrix.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let eig = eigh(a, Order::Ascending);
    let n = a.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (value, v) in eig.values.iter().zip(&eig.vectors) {
        out += outer(v).scale(f(*value));
    }
    out
}
