use std::path::PathBuf;

use anyhow::bail;
use serde::Serialize;

use qemerge::basis::{self, BasisReport, GeneratorBasis};
use qemerge::ensemble;
use qemerge::evolution::{self, EvolutionSpec, ScalingProfile, StepControl, Trajectory};
use qemerge::io;
use qemerge::linalg::RMatrix;
use qemerge::measurement::{self, ReductionMode};
use qemerge::state::{self, BlochState};
use qemerge::table::JointTable;

use crate::config::{self, BasisConfig, EnsembleConfig, EvolveConfig, MeasureConfig};
use crate::output::{self, Csv, Format, Provenance};
use crate::{Failure, Output};

#[derive(Serialize)]
struct BasisOutput {
    report: BasisReport,
    /// Pauli-string form of `L_1, L_2, …` for built-in bases.
    labels: Option<Vec<String>>,
    /// `max |[L_k, L_l] − 2i f_klm L_m|, |{L_k, L_l} − 2δ_kl − 2 d_klm L_m|`.
    reconstruction_error: Option<f64>,
}

pub fn validate_basis(
    dim: Option<usize>,
    path: Option<PathBuf>,
    out: &Output,
) -> anyhow::Result<()> {
    let cfg: BasisConfig = match (dim, path) {
        (Some(_), Some(_)) => bail!(crate::ParseError("give either --dim or --config".into())),
        (Some(d), None) => BasisConfig {
            dim: Some(d),
            generators: None,
        },
        (None, Some(p)) => config::read(&p)?,
        (None, None) => BasisConfig {
            dim: Some(4),
            generators: None,
        },
    };
    let (report, built) = match (&cfg.dim, &cfg.generators) {
        (Some(d), None) => {
            let b = config::basis_for(*d)?;
            (basis::validate_basis(&b), Some(b))
        }
        (None, Some(pairs)) => {
            let matrices = pairs
                .iter()
                .map(|p| io::matrix_from_pairs(p))
                .collect::<qemerge::Result<Vec<_>>>()?;
            let report = basis::validate_matrices(&matrices);
            let b = if report.is_valid() {
                GeneratorBasis::from_matrices(matrices).ok()
            } else {
                None
            };
            (report, b)
        }
        _ => bail!(crate::ParseError(
            "basis config needs exactly one of \"M\" or \"generators\"".into()
        )),
    };
    let reconstruction_error = match &built {
        Some(b) => Some(basis::reconstruction_error(
            b,
            &basis::structure_constants(b)?,
        )),
        None => None,
    };
    let labels = built
        .as_ref()
        .and_then(|b| b.index_table())
        .map(|t| t.iter().map(ToString::to_string).collect());
    let valid = report.is_valid();
    let prov = Provenance::new(
        "validate-basis",
        &cfg,
        &["generator-algebra", "structure-constants"],
    )?;
    output::json(
        out.path(),
        &prov,
        &BasisOutput {
            report,
            labels,
            reconstruction_error,
        },
    )?;
    if !valid {
        bail!(Failure::Validation("basis relations violated".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SlotInfo {
    operator: serde_json::Value,
    spectrum: Vec<f64>,
}

#[derive(Serialize)]
struct StateRow {
    label: Vec<u8>,
    p: f64,
}

#[derive(Serialize)]
struct Expectation {
    slot: usize,
    classical: f64,
    quantum: f64,
}

#[derive(Serialize)]
struct EnsembleOutput {
    #[serde(rename = "M")]
    dim: usize,
    epsilon: f64,
    assignment: &'static str,
    slots: Vec<SlotInfo>,
    states: Vec<StateRow>,
    expectations: Vec<Expectation>,
}

pub fn ensemble_build(
    path: PathBuf,
    epsilon: Option<f64>,
    format: Format,
    out: &Output,
) -> anyhow::Result<()> {
    let mut cfg: EnsembleConfig = config::read(&path)?;
    if epsilon.is_some() {
        cfg.epsilon = epsilon;
    }
    let b = config::basis_for(cfg.dim)?;
    let ops = config::operators(&b, &cfg.operators)?;
    let s = cfg.state.resolve(&b)?;
    state::density_from_bloch(&b, &s)?;
    let eps = cfg
        .epsilon
        .unwrap_or_else(|| ensemble::default_epsilon(b.dim()));
    let base = ensemble::build_product_ensemble(&b, &ops, eps)?;
    let (ens, assignment) = match &cfg.joint {
        Some(joint) => (
            ensemble::assign_joint_probabilities(&base, &s, joint.clone())?,
            "joint",
        ),
        None => (
            ensemble::assign_product_probabilities(&base, &s)?,
            "product",
        ),
    };
    let rho = state::density_from_bloch(&b, &s)?;
    let expectations = ops
        .iter()
        .enumerate()
        .map(|(slot, op)| {
            Ok(Expectation {
                slot,
                classical: ensemble::expectation(&ens, &ens.observable(slot))?,
                quantum: rho.expectation(op.matrix()),
            })
        })
        .collect::<qemerge::Result<Vec<_>>>()?;
    let prov = Provenance::new(
        "ensemble-build",
        &cfg,
        &[
            "product-ensemble",
            "observable-probabilities",
            "classical-expectation",
        ],
    )?;
    match format {
        Format::Json => {
            let slots = ens
                .registered()
                .iter()
                .map(|r| SlotInfo {
                    operator: config::describe(&r.operator),
                    spectrum: r.observable.spectrum().to_vec(),
                })
                .collect();
            let states = (0..ens.len())
                .map(|t| StateRow {
                    label: ens.label(t).to_vec(),
                    p: ens.probabilities()[t],
                })
                .collect();
            let body = EnsembleOutput {
                dim: b.dim(),
                epsilon: eps,
                assignment,
                slots,
                states,
                expectations,
            };
            output::json(out.path(), &prov, &body)
        }
        Format::Csv => {
            let mut columns: Vec<String> =
                (1..=ens.slot_count()).map(|i| format!("a{i}")).collect();
            columns.push("p".into());
            let mut csv = Csv::new(&prov, &columns);
            for t in 0..ens.len() {
                let mut cells: Vec<String> = ens.label(t).iter().map(ToString::to_string).collect();
                cells.push(output::float(ens.probabilities()[t]));
                csv.row(cells);
            }
            for e in &expectations {
                csv.comment(&format!(
                    "slot {}: classical {} quantum {}",
                    e.slot + 1,
                    output::float(e.classical),
                    output::float(e.quantum)
                ));
            }
            csv.finish(out.path())
        }
    }
}

#[derive(Serialize)]
struct Branch {
    sign: i8,
    probability: f64,
    /// `None` when the branch is unreachable.
    state: Option<BlochState>,
    /// `(w^B_+, w^B_−)` after this outcome.
    conditional: Option<(f64, f64)>,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum Joint {
    Table(JointTable),
    Refused(String),
}

#[derive(Serialize)]
struct MeasureOutput {
    mode: ReductionMode,
    first: serde_json::Value,
    second: serde_json::Value,
    expectation_first: f64,
    expectation_second: f64,
    branches: Vec<Branch>,
    measurement_correlation: f64,
    /// `½ tr({Â, B̂} ρ)`.
    quantum_correlation: f64,
    joint: Joint,
}

pub fn measure(path: PathBuf, out: &Output) -> anyhow::Result<()> {
    let cfg: MeasureConfig = config::read(&path)?;
    let b = config::basis_for(cfg.dim)?;
    let s = cfg.state.resolve(&b)?;
    let a = cfg.first.resolve(&b)?;
    let c = cfg.second.resolve(&b)?;
    let mut branches = Vec::with_capacity(2);
    for sign in [1i8, -1] {
        let probability = measurement::branch_probability(&s, &a, sign)?;
        let (state, conditional) = if probability < measurement::BRANCH_TOL {
            (None, None)
        } else {
            let after = measurement::reduce_state(&b, &s, &a, sign, cfg.mode)?;
            let cond = measurement::conditional_probability(&b, &s, &a, &c, sign, cfg.mode)?;
            (Some(after), Some(cond))
        };
        branches.push(Branch {
            sign,
            probability,
            state,
            conditional,
        });
    }
    let joint = match measurement::joint_outcome_probabilities(&b, &s, &a, &c) {
        Ok(t) => Joint::Table(t),
        Err(e @ qemerge::Error::NegativeProbability { .. }) => Joint::Refused(e.to_string()),
        Err(e) => return Err(e.into()),
    };
    let body = MeasureOutput {
        mode: cfg.mode,
        first: config::describe(&a),
        second: config::describe(&c),
        expectation_first: a.expectation(&s)?,
        expectation_second: c.expectation(&s)?,
        branches,
        measurement_correlation: measurement::measurement_correlation(&b, &s, &a, &c, cfg.mode)?,
        quantum_correlation: measurement::quantum_correlation(&b, &s, &a, &c)?,
        joint,
    };
    let prov = Provenance::new(
        "measure",
        &cfg,
        &[
            "state-reduction",
            "conditional-probability",
            "measurement-correlation",
            "joint-outcome-table",
        ],
    )?;
    output::json(out.path(), &prov, &body)
}

pub struct EvolveOverrides {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub stride: Option<usize>,
}

pub fn evolve(
    path: PathBuf,
    overrides: EvolveOverrides,
    format: Format,
    out: &Output,
) -> anyhow::Result<()> {
    let mut cfg: EvolveConfig = config::read(&path)?;
    cfg.dt = overrides.dt.unwrap_or(cfg.dt);
    cfg.t_final = overrides.t_final.unwrap_or(cfg.t_final);
    cfg.stride = overrides.stride.unwrap_or(cfg.stride);
    let b = config::basis_for(cfg.dim)?;
    let sc = basis::structure_constants(&b)?;
    let s = cfg.state.resolve(&b)?;
    state::density_from_bloch(&b, &s)?;
    let h = cfg
        .hamiltonian
        .clone()
        .unwrap_or_else(|| vec![0.0; b.len()]);
    let residual = match &cfg.residual {
        Some(rows) => {
            if rows.len() != b.len() || rows.iter().any(|r| r.len() != b.len()) {
                return Err(qemerge::Error::DimensionMismatch {
                    expected: b.len(),
                    found: rows.len(),
                }
                .into());
            }
            Some(RMatrix::from_fn(b.len(), b.len(), |i, j| rows[i][j]))
        }
        None => None,
    };
    let control = StepControl::with_stride(cfg.t_final, cfg.dt, cfg.stride)?;
    let trajectory = match cfg.scaling {
        None => evolution::evolve_bloch(
            &b,
            &s,
            &EvolutionSpec::from_parts(&sc, &h, residual, 0.0)?,
            &control,
        )?,
        Some(ScalingProfile::Constant { rate }) => evolution::evolve_bloch(
            &b,
            &s,
            &EvolutionSpec::from_parts(&sc, &h, residual, rate)?,
            &control,
        )?,
        Some(profile) => {
            let spec = EvolutionSpec::from_parts(&sc, &h, residual, 0.0)?;
            evolution::syncoherence_demo(&b, &s, &spec, profile, &control)?
        }
    };
    let prov = Provenance::new(
        "evolve",
        &cfg,
        &["bloch-evolution", "hamiltonian-generator", "purity-flow"],
    )?;
    match format {
        Format::Json => output::json(out.path(), &prov, &trajectory),
        Format::Csv => trajectory_csv(&prov, &trajectory, b.len()).finish(out.path()),
    }
}

fn trajectory_csv(prov: &Provenance, tr: &Trajectory, n: usize) -> Csv {
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=n).map(|k| format!("rho_{k}")));
    columns.extend(["P", "copurity", "valid"].map(String::from));
    let mut csv = Csv::new(prov, &columns);
    for i in 0..tr.len() {
        let mut cells = vec![output::float(tr.times[i])];
        cells.extend(
            tr.states[i]
                .coefficients()
                .iter()
                .map(|&x| output::float(x)),
        );
        cells.push(output::float(tr.purity[i]));
        cells.push(output::float(tr.copurity[i]));
        cells.push(if tr.valid[i] { "1".into() } else { "0".into() });
        csv.row(cells);
    }
    if tr.positivity_breached() {
        csv.comment("positivity breached: rows with valid = 0 are outside the quantum state space");
    }
    csv
}
