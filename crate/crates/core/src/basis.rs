//! Hermitian generator sets `L_k` of su(M) normalized so that
//! `tr L_k = 0`, `L_k² = 1` and `tr(L_k L_l) = M δ_kl`, together with their
//! structure constants `f_klm` and `d_klm`:
//!
//! ```text
//! [L_k, L_l] = 2i f_klm L_m        {L_k, L_l} = 2 δ_kl + 2 d_klm L_m
//! ```
//!
//! Generators are indexed from 0 in the API. The conventional physics labels
//! `L_1 … L_{M²-1}` are available through [`GeneratorBasis::by_label`].

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{self, CMatrix, C64};

/// Largest dimension for which built-in bases are constructed.
pub const MAX_DIM: usize = 16;

const HERMITIAN_TOL: f64 = 1e-12;
const ALGEBRA_TOL: f64 = 1e-10;

/// Two-qubit factor assignment for `M = 4`, in label order `L_1 … L_15`.
/// Entries are `(sign, left factor, right factor)` with 0 = 1, 1..3 = τ1..τ3.
const TWO_QUBIT_TABLE: [(i8, u8, u8); 15] = [
    (1, 3, 0),  // L1  = τ3⊗1
    (1, 0, 3),  // L2  = 1⊗τ3
    (1, 3, 3),  // L3  = τ3⊗τ3
    (1, 0, 1),  // L4  = 1⊗τ1
    (1, 0, 2),  // L5  = 1⊗τ2
    (1, 3, 1),  // L6  = τ3⊗τ1
    (1, 2, 0),  // L7  = τ2⊗1
    (1, 1, 0),  // L8  = τ1⊗1
    (1, 2, 3),  // L9  = τ2⊗τ3
    (1, 1, 3),  // L10 = τ1⊗τ3
    (1, 3, 2),  // L11 = τ3⊗τ2
    (1, 1, 1),  // L12 = τ1⊗τ1
    (1, 2, 1),  // L13 = τ2⊗τ1
    (-1, 2, 2), // L14 = -(τ2⊗τ2)
    (1, 1, 2),  // L15 = τ1⊗τ2
];

/// Signed tensor product of single-qubit factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PauliLabel {
    pub sign: i8,
    /// 0 = 1, 1 = τ1, 2 = τ2, 3 = τ3; leftmost factor first.
    pub factors: Vec<u8>,
}

impl PauliLabel {
    pub fn matrix(&self) -> CMatrix {
        linalg::pauli_string(&self.factors).scale(f64::from(self.sign))
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self
            .factors
            .iter()
            .map(|&p| match p {
                0 => "1".to_string(),
                k => format!("τ{k}"),
            })
            .collect::<Vec<_>>()
            .join("⊗");
        if self.sign < 0 {
            write!(f, "-({body})")
        } else {
            write!(f, "({body})")
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    generators: Vec<CMatrix>,
    index_table: Option<Vec<PauliLabel>>,
}

impl GeneratorBasis {
    /// All `4^q − 1` non-identity Pauli strings on `q` qubits.
    ///
    /// For `q = 2` the ordering follows the two-qubit label table above;
    /// otherwise strings are enumerated in base 4 with the leftmost factor
    /// most significant.
    pub fn pauli_strings(qubits: u32) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidInput("qubit count must be at least 1".into()));
        }
        let dim =
            1usize
                .checked_shl(qubits)
                .filter(|&d| d <= MAX_DIM)
                .ok_or(Error::DimensionCap {
                    qubits,
                    cap: MAX_DIM,
                })?;
        let labels: Vec<PauliLabel> = if qubits == 2 {
            TWO_QUBIT_TABLE
                .iter()
                .map(|&(sign, a, b)| PauliLabel {
                    sign,
                    factors: vec![a, b],
                })
                .collect()
        } else {
            (1..dim * dim)
                .map(|code| {
                    let factors = (0..qubits)
                        .rev()
                        .map(|pos| ((code >> (2 * pos)) & 3) as u8)
                        .collect();
                    PauliLabel { sign: 1, factors }
                })
                .collect()
        };
        let generators = labels.iter().map(PauliLabel::matrix).collect();
        Ok(Self {
            dim,
            generators,
            index_table: Some(labels),
        })
    }

    /// Built-in basis for dimension `dim` (must be a power of two ≤ 16).
    pub fn for_dimension(dim: usize) -> Result<Self> {
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidInput(format!(
                "built-in bases exist only for M = 2^q, got {dim}"
            )));
        }
        Self::pauli_strings(dim.trailing_zeros())
    }

    /// User-supplied generators; rejected unless every relation holds.
    pub fn from_matrices(generators: Vec<CMatrix>) -> Result<Self> {
        let report = validate_matrices(&generators);
        if !report.is_valid() {
            return Err(Error::InvalidBasis(report.summary()));
        }
        Ok(Self {
            dim: report.dim,
            generators,
            index_table: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators, `M² − 1`.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn generator(&self, index: usize) -> &CMatrix {
        &self.generators[index]
    }

    /// Generator by its 1-based label, `by_label(1)` is `L_1`.
    pub fn by_label(&self, label: usize) -> &CMatrix {
        assert!(
            label >= 1 && label <= self.len(),
            "label L_{label} out of range"
        );
        &self.generators[label - 1]
    }

    pub fn index_table(&self) -> Option<&[PauliLabel]> {
        self.index_table.as_deref()
    }

    /// Expansion `A = e_0 + Σ e_k L_k` with `e_0 = tr A / M`, `e_k = tr(A L_k) / M`.
    pub fn expand(&self, a: &CMatrix) -> (f64, Vec<f64>) {
        let m = self.dim as f64;
        let e0 = linalg::trace(a).re / m;
        let e = self
            .generators
            .iter()
            .map(|l| linalg::trace_product(a, l).re / m)
            .collect();
        (e0, e)
    }

    /// `e_0 · 1 + Σ e_k L_k`.
    pub fn assemble(&self, e0: f64, e: &[f64]) -> CMatrix {
        let mut out = linalg::identity(self.dim).scale(e0);
        for (coef, l) in e.iter().zip(&self.generators) {
            if *coef != 0.0 {
                out += l.scale(*coef);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Generator count differs from `M² − 1`.
    Count,
    /// Matrix is not square `M × M`.
    Shape,
    Hermitian,
    Traceless,
    SquaresToIdentity,
    /// `tr(L_k L_l) = M δ_kl`.
    Orthogonality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub relation: Relation,
    pub generators: Vec<usize>,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisReport {
    #[serde(rename = "M")]
    pub dim: usize,
    pub generator_count: usize,
    pub violations: Vec<Violation>,
}

impl BasisReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn flags(&self, relation: Relation) -> bool {
        self.violations.iter().any(|v| v.relation == relation)
    }

    fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| format!("{:?} {:?} ({:e})", v.relation, v.generators, v.deviation))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

pub fn validate_basis(basis: &GeneratorBasis) -> BasisReport {
    validate_matrices(&basis.generators)
}

/// Check every normalization relation on a candidate generator list.
pub fn validate_matrices(generators: &[CMatrix]) -> BasisReport {
    let dim = generators.first().map_or(0, CMatrix::nrows);
    let mut violations = Vec::new();
    let mut push = |relation, generators: Vec<usize>, deviation: f64| {
        violations.push(Violation {
            relation,
            generators,
            deviation,
        });
    };

    let expected = (dim * dim).saturating_sub(1);
    if generators.len() != expected || dim == 0 {
        push(
            Relation::Count,
            vec![],
            (generators.len() as f64 - expected as f64).abs(),
        );
    }
    let square: Vec<usize> = (0..generators.len())
        .filter(|&k| generators[k].nrows() == dim && generators[k].ncols() == dim)
        .collect();
    for k in 0..generators.len() {
        if !square.contains(&k) {
            push(Relation::Shape, vec![k], f64::NAN);
        }
    }

    let m = dim as f64;
    let id = linalg::identity(dim);
    for &k in &square {
        let l = &generators[k];
        let herm = linalg::hermiticity_deviation(l);
        if herm > HERMITIAN_TOL {
            push(Relation::Hermitian, vec![k], herm);
        }
        let tr = linalg::trace(l).norm();
        if tr > HERMITIAN_TOL {
            push(Relation::Traceless, vec![k], tr);
        }
        let sq = linalg::max_abs_diff(&(l * l), &id);
        if sq > HERMITIAN_TOL {
            push(Relation::SquaresToIdentity, vec![k], sq);
        }
    }
    for (i, &k) in square.iter().enumerate() {
        for &l in &square[i..] {
            let target = if k == l { m } else { 0.0 };
            let dev = (linalg::trace_product(&generators[k], &generators[l])
                - C64::new(target, 0.0))
            .norm();
            if dev > HERMITIAN_TOL {
                push(Relation::Orthogonality, vec![k, l], dev);
            }
        }
    }
    BasisReport {
        dim,
        generator_count: generators.len(),
        violations,
    }
}

/// Sparse structure constants: for every ordered pair `(k, l)` the nonzero
/// `(m, value)` terms of `f_klm` and `d_klm`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    n: usize,
    f: Vec<Vec<(usize, f64)>>,
    d: Vec<Vec<(usize, f64)>>,
}

impl StructureConstants {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn f_terms(&self, k: usize, l: usize) -> &[(usize, f64)] {
        &self.f[k * self.n + l]
    }

    pub fn d_terms(&self, k: usize, l: usize) -> &[(usize, f64)] {
        &self.d[k * self.n + l]
    }

    pub fn f(&self, k: usize, l: usize, m: usize) -> f64 {
        lookup(self.f_terms(k, l), m)
    }

    pub fn d(&self, k: usize, l: usize, m: usize) -> f64 {
        lookup(self.d_terms(k, l), m)
    }
}

fn lookup(terms: &[(usize, f64)], m: usize) -> f64 {
    terms
        .binary_search_by_key(&m, |&(idx, _)| idx)
        .map_or(0.0, |pos| terms[pos].1)
}

/// Nonzero entries of each generator, for `O(nnz)` traces.
fn sparse_entries(l: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for i in 0..l.nrows() {
        for j in 0..l.ncols() {
            if l[(i, j)].norm() > 0.0 {
                out.push((i, j, l[(i, j)]));
            }
        }
    }
    out
}

/// `f_klm = tr([L_k, L_l] L_m) / (2iM)` and `d_klm = tr({L_k, L_l} L_m) / (2M)`.
pub fn structure_constants(basis: &GeneratorBasis) -> Result<StructureConstants> {
    structure_constants_with(basis, Exec::default())
}

pub fn structure_constants_with(basis: &GeneratorBasis, exec: Exec) -> Result<StructureConstants> {
    const KEEP: f64 = 1e-12;
    let n = basis.len();
    let m = basis.dim() as f64;
    let sparse: Vec<_> = basis.generators.iter().map(sparse_entries).collect();

    type Row = Vec<(usize, f64)>;
    // Rows for k ≤ l, computed per k.
    let per_k: Vec<Result<Vec<(Row, Row)>>> = exec.map(n, |k| {
        let lk = &basis.generators[k];
        (k..n)
            .map(|l| {
                let prod = lk * &basis.generators[l];
                let adj = prod.adjoint();
                let comm = &prod - &adj;
                let anti = &prod + &adj;
                let mut f_row = Vec::new();
                let mut d_row = Vec::new();
                for (idx, entries) in sparse.iter().enumerate() {
                    let mut tc = C64::new(0.0, 0.0);
                    let mut ta = C64::new(0.0, 0.0);
                    for &(i, j, v) in entries {
                        tc += comm[(j, i)] * v;
                        ta += anti[(j, i)] * v;
                    }
                    // tc / (2iM): real part comes from tc.im.
                    let f_val = C64::new(tc.im, -tc.re) / (2.0 * m);
                    let d_val = ta / (2.0 * m);
                    for (val, (a, b, c)) in [(f_val, (k, l, idx)), (d_val, (k, l, idx))] {
                        if val.im.abs() > ALGEBRA_TOL {
                            return Err(Error::NonRealStructureConstant {
                                k: a,
                                l: b,
                                m: c,
                                imag: val.im,
                            });
                        }
                    }
                    if f_val.re.abs() > KEEP {
                        f_row.push((idx, f_val.re));
                    }
                    if d_val.re.abs() > KEEP {
                        d_row.push((idx, d_val.re));
                    }
                }
                Ok((f_row, d_row))
            })
            .collect()
    });

    let mut f = vec![Vec::new(); n * n];
    let mut d = vec![Vec::new(); n * n];
    for (k, rows) in per_k.into_iter().enumerate() {
        for (offset, (f_row, d_row)) in rows?.into_iter().enumerate() {
            let l = k + offset;
            f[l * n + k] = f_row.iter().map(|&(m, v)| (m, -v)).collect();
            d[l * n + k] = d_row.clone();
            f[k * n + l] = f_row;
            d[k * n + l] = d_row;
        }
    }
    Ok(StructureConstants { n, f, d })
}

/// Largest elementwise error when rebuilding `[L_k, L_l]` from `f` and
/// `{L_k, L_l}` from `d`, over all pairs.
pub fn reconstruction_error(basis: &GeneratorBasis, sc: &StructureConstants) -> f64 {
    let n = basis.len();
    let id = linalg::identity(basis.dim());
    let two_i = C64::new(0.0, 2.0);
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for l in 0..n {
            let (a, b) = (basis.generator(k), basis.generator(l));
            let mut comm = CMatrix::zeros(basis.dim(), basis.dim());
            for &(m, v) in sc.f_terms(k, l) {
                comm += basis.generator(m).map(|z| z * two_i * v);
            }
            let mut anti = if k == l {
                id.scale(2.0)
            } else {
                CMatrix::zeros(basis.dim(), basis.dim())
            };
            for &(m, v) in sc.d_terms(k, l) {
                anti += basis.generator(m).scale(2.0 * v);
            }
            worst = worst
                .max(linalg::max_abs_diff(&comm, &linalg::commutator(a, b)))
                .max(linalg::max_abs_diff(&anti, &linalg::anticommutator(a, b)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(m: &CMatrix) -> Vec<f64> {
        m.diagonal().iter().map(|z| z.re).collect()
    }

    #[test]
    fn single_qubit_is_pauli() {
        let b = GeneratorBasis::pauli_strings(1).unwrap();
        assert_eq!(b.len(), 3);
        for (k, l) in b.generators().iter().enumerate() {
            assert_eq!(l, &linalg::pauli(k as u8 + 1));
            assert!(linalg::max_abs_diff(&(l * l), &linalg::identity(2)) < 1e-15);
        }
    }

    #[test]
    fn two_qubit_labels() {
        let b = GeneratorBasis::pauli_strings(2).unwrap();
        assert_eq!(diag(b.by_label(1)), vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(diag(b.by_label(2)), vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(diag(b.by_label(3)), vec![1.0, -1.0, -1.0, 1.0]);
        let yy = linalg::pauli_string(&[2, 2]);
        assert_eq!(b.by_label(14), &(-yy));
        assert_eq!(b.by_label(12), &linalg::pauli_string(&[1, 1]));
        assert_eq!(b.by_label(8), &linalg::pauli_string(&[1, 0]));
        assert_eq!(b.by_label(4), &linalg::pauli_string(&[0, 1]));
        assert_eq!(b.by_label(6), &linalg::pauli_string(&[3, 1]));
        assert_eq!(b.by_label(10), &linalg::pauli_string(&[1, 3]));
        assert_eq!(b.index_table().unwrap()[13].to_string(), "-(τ2⊗τ2)");
    }

    #[test]
    fn dimension_cap() {
        assert!(matches!(
            GeneratorBasis::pauli_strings(5),
            Err(Error::DimensionCap { qubits: 5, .. })
        ));
        assert_eq!(GeneratorBasis::pauli_strings(4).unwrap().len(), 255);
    }

    #[test]
    fn builtin_bases_validate() {
        for q in 1..=4 {
            let b = GeneratorBasis::pauli_strings(q).unwrap();
            assert_eq!(b.len(), b.dim() * b.dim() - 1);
            assert!(validate_basis(&b).is_valid(), "q = {q}");
        }
    }

    #[test]
    fn scaled_generator_is_flagged() {
        let b = GeneratorBasis::pauli_strings(2).unwrap();
        let mut gens = b.generators().to_vec();
        gens[4] = gens[4].scale(2.0);
        let report = validate_matrices(&gens);
        assert!(report.flags(Relation::SquaresToIdentity));
        assert!(report.flags(Relation::Orthogonality));
        assert!(!report.flags(Relation::Traceless));
        assert!(GeneratorBasis::from_matrices(gens).is_err());
    }

    #[test]
    fn traceful_generator_is_flagged() {
        let b = GeneratorBasis::pauli_strings(1).unwrap();
        let mut gens = b.generators().to_vec();
        gens[0] = linalg::identity(2);
        let report = validate_matrices(&gens);
        assert!(report.flags(Relation::Traceless));
    }

    #[test]
    fn qubit_structure_constants() {
        let b = GeneratorBasis::pauli_strings(1).unwrap();
        let sc = structure_constants(&b).unwrap();
        assert!((sc.f(0, 1, 2) - 1.0).abs() < 1e-14);
        assert!((sc.f(1, 0, 2) + 1.0).abs() < 1e-14);
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    assert_eq!(sc.d(k, l, m), 0.0);
                }
                assert_eq!(sc.f(k, k, l), 0.0);
            }
        }
    }

    #[test]
    fn reconstruction_small() {
        for q in 1..=2 {
            let b = GeneratorBasis::pauli_strings(q).unwrap();
            let sc = structure_constants(&b).unwrap();
            assert!(reconstruction_error(&b, &sc) < 1e-10);
        }
    }
}
