//! Bit chains: sets of mutually commuting two-level operators closed under
//! products up to sign, and the sign-consistency check for value
//! assignments shared between several chains.
//!
//! A value assignment gives every member `v(T) = ±1` subject to
//! `v(T_i) v(T_j) = c_ijk v(T_k)` whenever `T̂_i T̂_j = c_ijk T̂_k`. Members of
//! different chains whose operators agree up to sign share one value, with
//! `v(−T) = −v(T)`. The constraints are linear over GF(2), so consistency
//! is decided by Gaussian elimination; a contradiction comes with the
//! subset of product identities whose signs multiply to `−1`.

use serde::Serialize;

use crate::basis::{GeneratorBasis, PauliLabel};
use crate::ensemble::{self, ClassicalEnsemble};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::observables::QuantumOperator;
use crate::state::BlochState;
use crate::table::JointTable;

pub const INVOLUTION_TOL: f64 = 1e-10;
pub const COMMUTATION_TOL: f64 = 1e-10;
/// Elementwise tolerance for matching a product against a member.
pub const CLOSURE_TOL: f64 = 1e-10;
/// Elementwise tolerance for identifying members of different chains.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Largest variable count accepted by [`exhaustive_assignment`].
pub const EXHAUSTIVE_CAP_BITS: u32 = 20;

pub const CHAIN_NAMES: [&str; 8] = ["C", "A", "B", "F", "G", "H", "Q-candidate", "Q-proper"];

#[derive(Debug, Clone, PartialEq)]
pub struct ChainMember {
    pub name: String,
    /// Pauli-string form, when known.
    pub label: Option<PauliLabel>,
    pub operator: QuantumOperator,
}

/// `T̂_first T̂_second = sign · T̂_product`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProductEntry {
    pub first: usize,
    pub second: usize,
    pub product: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitChain {
    name: String,
    members: Vec<ChainMember>,
    table: Vec<ProductEntry>,
}

impl BitChain {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.members[0].operator.dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[ChainMember] {
        &self.members
    }

    /// One entry per unordered pair `first < second`.
    pub fn product_table(&self) -> &[ProductEntry] {
        &self.table
    }

    pub fn product(&self, first: usize, second: usize) -> Option<ProductEntry> {
        let (a, b) = if first <= second {
            (first, second)
        } else {
            (second, first)
        };
        self.table
            .iter()
            .copied()
            .find(|e| e.first == a && e.second == b)
    }

    pub fn summary(&self) -> ChainSummary {
        ChainSummary {
            name: self.name.clone(),
            members: self
                .members
                .iter()
                .map(|m| MemberSummary {
                    name: m.name.clone(),
                    operator: m.label.as_ref().map(ToString::to_string),
                })
                .collect(),
            products: self.table.iter().map(|e| self.describe(e)).collect(),
        }
    }

    fn describe(&self, e: &ProductEntry) -> String {
        let sign = if e.sign > 0 { '+' } else { '-' };
        format!(
            "{} · {} = {}{}",
            self.members[e.first].name,
            self.members[e.second].name,
            sign,
            self.members[e.product].name
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberSummary {
    pub name: String,
    pub operator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub name: String,
    pub members: Vec<MemberSummary>,
    pub products: Vec<String>,
}

/// Chain with members named `T1, T2, …`.
pub fn make_chain(operators: Vec<QuantumOperator>) -> Result<BitChain> {
    let members = operators
        .into_iter()
        .enumerate()
        .map(|(i, operator)| ChainMember {
            name: format!("T{}", i + 1),
            label: None,
            operator,
        })
        .collect();
    make_named_chain("chain", members)
}

/// Check involution, commutation, closure and size, in that order, and
/// record the product table.
pub fn make_named_chain(name: &str, members: Vec<ChainMember>) -> Result<BitChain> {
    let Some(first) = members.first() else {
        return Err(Error::InvalidInput(
            "a bit chain needs at least one member".into(),
        ));
    };
    let dim = first.operator.dim();
    if let Some(bad) = members.iter().find(|m| m.operator.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.operator.dim(),
        });
    }
    let identity = linalg::identity(dim);
    for (index, m) in members.iter().enumerate() {
        let a = m.operator.matrix();
        let squares_to_one = linalg::max_abs_diff(&(a * a), &identity) <= INVOLUTION_TOL;
        let trivial = linalg::max_abs_diff(a, &identity) <= INVOLUTION_TOL
            || linalg::max_abs_diff(&(-a), &identity) <= INVOLUTION_TOL;
        if !squares_to_one || trivial {
            return Err(Error::ChainNotInvolutory { index });
        }
    }
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            let c = linalg::commutator(members[i].operator.matrix(), members[j].operator.matrix());
            if linalg::max_abs(&c) > COMMUTATION_TOL {
                return Err(Error::ChainNotCommuting {
                    first: i,
                    second: j,
                });
            }
        }
    }
    let mut table = Vec::with_capacity(members.len() * members.len().saturating_sub(1) / 2);
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            let p = members[i].operator.matrix() * members[j].operator.matrix();
            let found = members.iter().enumerate().find_map(|(k, m)| {
                signed_match(&p, m.operator.matrix(), CLOSURE_TOL).map(|s| (k, s))
            });
            let Some((product, sign)) = found else {
                return Err(Error::ChainClosure {
                    first: i,
                    second: j,
                });
            };
            table.push(ProductEntry {
                first: i,
                second: j,
                product,
                sign,
            });
        }
    }
    if members.len() > dim - 1 {
        return Err(Error::ChainTooLarge {
            members: members.len(),
            max: dim - 1,
        });
    }
    Ok(BitChain {
        name: name.to_string(),
        members,
        table,
    })
}

/// `Some(±1)` when `a = ±b` elementwise within `tol`.
fn signed_match(a: &CMatrix, b: &CMatrix, tol: f64) -> Option<i8> {
    if linalg::max_abs_diff(a, b) <= tol {
        Some(1)
    } else if linalg::max_abs_diff(a, &(-b)) <= tol {
        Some(-1)
    } else {
        None
    }
}

/// `w_{s1 s2} = ¼(1 + s1⟨T1⟩ + s2⟨T2⟩ + s1 s2 c ⟨T3⟩)` for the first two
/// members and their product `T̂1 T̂2 = c T̂3`.
pub fn chain_outcome_probabilities(s: &BlochState, chain: &BitChain) -> Result<JointTable> {
    let entry = chain
        .product(0, 1)
        .ok_or_else(|| Error::InvalidInput("chain needs at least two members".into()))?;
    let t = |i: usize| chain.members[i].operator.expectation(s);
    JointTable::from_moments(t(0)?, t(1)?, f64::from(entry.sign) * t(entry.product)?)
}

/// Classical ensemble over the first two chain members whose joint
/// probabilities are the chain outcome probabilities in `s`.
///
/// The product member is then the pointwise product of the two slot
/// observables, times the table sign.
pub fn realize_chain(
    basis: &GeneratorBasis,
    chain: &BitChain,
    s: &BlochState,
) -> Result<ClassicalEnsemble> {
    let table = chain_outcome_probabilities(s, chain)?;
    let operators = [
        chain.members[0].operator.clone(),
        chain.members[1].operator.clone(),
    ];
    let ens = ensemble::build_product_ensemble(
        basis,
        &operators,
        ensemble::default_epsilon(basis.dim()),
    )?;
    ensemble::assign_joint_probabilities(&ens, s, table.entries().to_vec())
}

fn pauli_factor(c: char) -> Option<u8> {
    match c {
        'I' => Some(0),
        'X' => Some(1),
        'Y' => Some(2),
        'Z' => Some(3),
        _ => None,
    }
}

fn label(sign: i8, letters: &str) -> PauliLabel {
    PauliLabel {
        sign,
        factors: letters
            .chars()
            .map(|c| pauli_factor(c).expect("valid Pauli letter"))
            .collect(),
    }
}

/// Product of two commuting Pauli strings.
fn label_product(a: &PauliLabel, b: &PauliLabel) -> PauliLabel {
    let mut phase = C64::new(f64::from(a.sign * b.sign), 0.0);
    let factors = a
        .factors
        .iter()
        .zip(&b.factors)
        .map(|(&x, &y)| match (x, y) {
            (0, y) => y,
            (x, 0) => x,
            (x, y) if x == y => 0,
            (x, y) => {
                // τ_x τ_y = i ε_xyz τ_z
                phase *= if (x % 3) + 1 == y {
                    linalg::I
                } else {
                    -linalg::I
                };
                6 - x - y
            }
        })
        .collect();
    debug_assert!(
        phase.im == 0.0,
        "commuting strings multiply with a real sign"
    );
    PauliLabel {
        sign: phase.re as i8,
        factors,
    }
}

/// `(T1, T2, T3, T2T3, T3T1, T1T2, T1T2T3)`.
fn complete_from_bases(bases: [PauliLabel; 3]) -> Vec<PauliLabel> {
    let [a, b, c] = bases;
    let bc = label_product(&b, &c);
    let ca = label_product(&c, &a);
    let ab = label_product(&a, &b);
    let abc = label_product(&ab, &c);
    vec![a, b, c, bc, ca, ab, abc]
}

fn chain_names(prefix: &str, bases: [&str; 3]) -> Vec<String> {
    let mut names: Vec<String> = bases.iter().map(|s| s.to_string()).collect();
    names.extend((1..=3).map(|i| format!("{prefix}~{i}")));
    names.push(format!("{prefix}≈"));
    names
}

/// Named Pauli-string members of one of the candidate chains at `M = 8`.
pub fn build_paper_chain(name: &str) -> Result<Vec<(String, PauliLabel)>> {
    let (names, bases) = match name {
        "C" => (chain_names("C", ["C1", "C2", "C3"]), ["ZII", "IZI", "IIZ"]),
        "A" => (chain_names("A", ["A1", "A2", "A3"]), ["XII", "IXI", "IIX"]),
        "B" => (chain_names("B", ["B1", "B2", "B3"]), ["YII", "IYI", "IIY"]),
        "F" => (chain_names("F", ["C1", "A2", "A3"]), ["ZII", "IXI", "IIX"]),
        "G" => (chain_names("G", ["A1", "C2", "A3"]), ["XII", "IZI", "IIX"]),
        "H" => (chain_names("H", ["A1", "A2", "C3"]), ["XII", "IXI", "IIZ"]),
        "Q-candidate" => (chain_names("Q", ["F≈", "G≈", "H≈"]), ["ZXX", "XZX", "XXZ"]),
        "Q-proper" => (
            ["Q1", "Q2", "Q3", "Q2Q3", "Q3Q1", "Q1Q2", "Q1Q2Q3"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ["ZXX", "XZX", "XXZ"],
        ),
        other => return Err(Error::UnknownChain(other.to_string())),
    };
    let labels = complete_from_bases(bases.map(|b| label(1, b)));
    Ok(names.into_iter().zip(labels).collect())
}

/// A candidate chain as a verified [`BitChain`] over the `M = 8` basis.
pub fn paper_chain(basis: &GeneratorBasis, name: &str) -> Result<BitChain> {
    if basis.dim() != 8 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            found: basis.dim(),
        });
    }
    let members = build_paper_chain(name)?
        .into_iter()
        .map(|(member, label)| {
            Ok(ChainMember {
                name: member,
                operator: QuantumOperator::from_matrix(basis, label.matrix())?,
                label: Some(label),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    make_named_chain(name, members)
}

/// Where a chain member lives in the shared variable set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberRef {
    pub chain: String,
    pub member: String,
    /// `v(member) = sign · x_variable`.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub operator: Option<String>,
    pub members: Vec<MemberRef>,
}

/// One product identity of a chain in value form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Identity {
    pub chain: String,
    /// `first · second = ±product` in member names.
    pub relation: String,
    /// The same identity in operators, when labels are known.
    pub operators: Option<String>,
    /// Shared variables touched, each once.
    pub variables: [usize; 3],
    /// Sign of `x_a x_b x_c` forced by the identity.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainValues {
    pub chain: String,
    pub values: Vec<(String, i8)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum KsOutcome {
    Consistent {
        assignment: Vec<ChainValues>,
    },
    /// The listed identities multiply to `1 = −1`.
    Contradiction {
        witness: Vec<Identity>,
        identifications: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsReport {
    pub chains: Vec<String>,
    pub variables: Vec<Variable>,
    pub identities: usize,
    pub outcome: KsOutcome,
}

impl KsReport {
    pub fn is_contradiction(&self) -> bool {
        matches!(self.outcome, KsOutcome::Contradiction { .. })
    }
}

struct System {
    variables: Vec<Variable>,
    /// Per chain, per member: `(variable, sign)`.
    placement: Vec<Vec<(usize, i8)>>,
    identities: Vec<Identity>,
}

fn build_system(chains: &[BitChain]) -> System {
    let mut reps: Vec<&CMatrix> = Vec::new();
    let mut variables: Vec<Variable> = Vec::new();
    let mut placement = Vec::with_capacity(chains.len());
    for chain in chains {
        let mut places = Vec::with_capacity(chain.len());
        for m in &chain.members {
            let matrix = m.operator.matrix();
            let found = reps.iter().enumerate().find_map(|(v, rep)| {
                (rep.shape() == matrix.shape())
                    .then(|| signed_match(matrix, rep, IDENTITY_TOL))
                    .flatten()
                    .map(|s| (v, s))
            });
            let (var, sign) = found.unwrap_or_else(|| {
                reps.push(matrix);
                let operator = m.label.as_ref().map(|l| {
                    PauliLabel {
                        sign: 1,
                        factors: l.factors.clone(),
                    }
                    .to_string()
                });
                variables.push(Variable {
                    operator,
                    members: Vec::new(),
                });
                (reps.len() - 1, 1)
            });
            variables[var].members.push(MemberRef {
                chain: chain.name.clone(),
                member: m.name.clone(),
                sign,
            });
            places.push((var, sign));
        }
        placement.push(places);
    }
    let mut identities = Vec::new();
    for (chain, places) in chains.iter().zip(&placement) {
        for e in &chain.table {
            let (a, sa) = places[e.first];
            let (b, sb) = places[e.second];
            let (c, sc) = places[e.product];
            let operators = match (
                &chain.members[e.first].label,
                &chain.members[e.second].label,
                &chain.members[e.product].label,
            ) {
                (Some(x), Some(y), Some(z)) => {
                    let product = PauliLabel {
                        sign: e.sign * z.sign,
                        factors: z.factors.clone(),
                    };
                    Some(format!("{x} · {y} = {product}"))
                }
                _ => None,
            };
            identities.push(Identity {
                chain: chain.name.clone(),
                relation: chain.describe(e),
                operators,
                variables: [a, b, c],
                sign: e.sign * sa * sb * sc,
            });
        }
    }
    System {
        variables,
        placement,
        identities,
    }
}

/// GF(2) row: variable bits, right-hand side, and the identities combined.
#[derive(Clone)]
struct Row {
    bits: Vec<bool>,
    rhs: bool,
    history: Vec<bool>,
}

impl Row {
    fn xor(&mut self, other: &Row) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
        self.rhs ^= other.rhs;
        for (a, b) in self.history.iter_mut().zip(&other.history) {
            *a ^= b;
        }
    }
}

/// Solve `x_a + x_b + x_c = [sign < 0]` over GF(2) for the selected
/// identities. `Ok` holds an assignment (bit set = value −1), `Err` the
/// identities whose sum is `0 = 1`.
fn solve(
    nvars: usize,
    identities: &[Identity],
    selected: &[usize],
) -> std::result::Result<Vec<bool>, Vec<usize>> {
    let mut pivots: Vec<Option<Row>> = vec![None; nvars];
    for (pos, &idx) in selected.iter().enumerate() {
        let id = &identities[idx];
        let mut row = Row {
            bits: vec![false; nvars],
            rhs: id.sign < 0,
            history: vec![false; selected.len()],
        };
        for &v in &id.variables {
            row.bits[v] ^= true;
        }
        row.history[pos] = true;
        for (v, pivot) in pivots.iter().enumerate() {
            if let Some(p) = pivot.as_ref().filter(|_| row.bits[v]) {
                row.xor(p);
            }
        }
        match row.bits.iter().position(|&b| b) {
            Some(lead) => pivots[lead] = Some(row),
            None if row.rhs => {
                return Err(selected
                    .iter()
                    .zip(&row.history)
                    .filter(|(_, &h)| h)
                    .map(|(&i, _)| i)
                    .collect());
            }
            None => {}
        }
    }
    let mut x = vec![false; nvars];
    for v in (0..nvars).rev() {
        if let Some(p) = &pivots[v] {
            x[v] = p.bits[v + 1..]
                .iter()
                .zip(&x[v + 1..])
                .fold(p.rhs, |acc, (&b, &xu)| acc ^ (b && xu));
        }
    }
    Ok(x)
}

/// Drop identities from a contradictory set while it stays contradictory.
fn minimize(nvars: usize, identities: &[Identity], mut witness: Vec<usize>) -> Vec<usize> {
    let mut i = 0;
    while i < witness.len() {
        let mut trial = witness.clone();
        trial.remove(i);
        match solve(nvars, identities, &trial) {
            Err(smaller) => witness = smaller,
            Ok(_) => i += 1,
        }
    }
    witness.sort_unstable();
    witness
}

/// Whether the identities force `1 = −1`: every variable appears an even
/// number of times and the signs multiply to `−1`.
pub fn verify_witness(nvars: usize, witness: &[Identity]) -> bool {
    let mut parity = vec![false; nvars];
    for id in witness {
        for &v in &id.variables {
            if v >= nvars {
                return false;
            }
            parity[v] ^= true;
        }
    }
    let sign: i8 = witness.iter().map(|id| id.sign).product();
    !witness.is_empty() && parity.iter().all(|p| !p) && sign == -1
}

fn assignment_values(chains: &[BitChain], system: &System, x: &[bool]) -> Vec<ChainValues> {
    chains
        .iter()
        .zip(&system.placement)
        .map(|(chain, places)| ChainValues {
            chain: chain.name.clone(),
            values: chain
                .members
                .iter()
                .zip(places)
                .map(|(m, &(v, s))| (m.name.clone(), if x[v] { -s } else { s }))
                .collect(),
        })
        .collect()
}

/// Decide whether all chains admit one shared value assignment.
pub fn ks_contradiction_check(chains: &[BitChain]) -> KsReport {
    let system = build_system(chains);
    let nvars = system.variables.len();
    let all: Vec<usize> = (0..system.identities.len()).collect();
    let outcome = match solve(nvars, &system.identities, &all) {
        Ok(x) => KsOutcome::Consistent {
            assignment: assignment_values(chains, &system, &x),
        },
        Err(found) => {
            let witness: Vec<Identity> = minimize(nvars, &system.identities, found)
                .into_iter()
                .map(|i| system.identities[i].clone())
                .collect();
            let mut used: Vec<usize> = witness.iter().flat_map(|id| id.variables).collect();
            used.sort_unstable();
            used.dedup();
            let identifications = used
                .into_iter()
                .filter_map(|v| {
                    let refs = &system.variables[v].members;
                    let first = &refs[0];
                    let others: Vec<String> = refs[1..]
                        .iter()
                        .filter(|r| r.sign != first.sign || r.member != first.member)
                        .map(|r| {
                            let sign = if r.sign == first.sign { "" } else { "-" };
                            format!("{} = {}{}", r.member, sign, first.member)
                        })
                        .collect();
                    (!others.is_empty()).then(|| others.join(", "))
                })
                .collect();
            KsOutcome::Contradiction {
                witness,
                identifications,
            }
        }
    };
    KsReport {
        chains: chains.iter().map(|c| c.name.clone()).collect(),
        variables: system.variables,
        identities: system.identities.len(),
        outcome,
    }
}

/// Brute-force search for a shared assignment, per chain and member.
///
/// Refuses more than `2^20` assignments.
pub fn exhaustive_assignment(chains: &[BitChain]) -> Result<Option<Vec<ChainValues>>> {
    let system = build_system(chains);
    let nvars = system.variables.len();
    if nvars > EXHAUSTIVE_CAP_BITS as usize {
        return Err(Error::StateSpaceCap {
            states: 1u128 << nvars,
            cap: 1usize << EXHAUSTIVE_CAP_BITS,
        });
    }
    for mask in 0u64..(1u64 << nvars) {
        let value = |v: usize| if mask >> v & 1 == 1 { -1i8 } else { 1 };
        let ok = system
            .identities
            .iter()
            .all(|id| id.variables.iter().map(|&v| value(v)).product::<i8>() == id.sign);
        if ok {
            let x: Vec<bool> = (0..nvars).map(|v| mask >> v & 1 == 1).collect();
            return Ok(Some(assignment_values(chains, &system, &x)));
        }
    }
    Ok(None)
}
