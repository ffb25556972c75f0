use serde::Serialize;

use qemerge::basis::GeneratorBasis;
use qemerge::chains::{self, BitChain, ChainMember, ChainSummary, KsOutcome, KsReport};
use qemerge::ensemble;
use qemerge::exec::Exec;
use qemerge::io::{self, MatrixPairs};
use qemerge::measurement::{self, BellReport, ReductionMode};
use qemerge::observables::QuantumOperator;
use qemerge::state::{self, BlochState};
use qemerge::table::JointTable;

use crate::config::{NamedState, StateSpec};
use crate::output::{self, Csv, Provenance};
use crate::Output;

#[derive(Serialize)]
struct BellConfig {
    divisions: usize,
    state: NamedState,
}

fn bell_state(name: NamedState) -> anyhow::Result<(GeneratorBasis, BlochState)> {
    let b = GeneratorBasis::for_dimension(4)?;
    let s = StateSpec::Named(name).resolve(&b)?;
    Ok((b, s))
}

fn correlation_fn(s: &BlochState) -> impl Fn(f64, f64) -> f64 + Sync + Send + '_ {
    // Dimension is checked once by the caller.
    move |t, p| measurement::rotated_spin_correlation(s, t, p).expect("M = 4 state")
}

/// First grid point with the smallest slack.
fn most_violating(grid: &[BellReport]) -> Option<&BellReport> {
    grid.iter()
        .fold(None, |best: Option<&BellReport>, r| match best {
            Some(b) if b.slack <= r.slack => Some(b),
            _ => Some(r),
        })
}

pub fn bell(divisions: usize, name: NamedState, out: &Output) -> anyhow::Result<()> {
    if divisions == 0 {
        anyhow::bail!(crate::ParseError("--divisions must be positive".into()));
    }
    let (_, s) = bell_state(name)?;
    let angles = measurement::angle_grid(divisions);
    let grid = measurement::bell_grid(correlation_fn(&s), &angles, Exec::default());
    let prov = Provenance::new(
        "demo bell",
        &BellConfig {
            divisions,
            state: name,
        },
        &["rotated-spin-correlation", "bell-inequality"],
    )?;
    let mut csv = Csv::new(&prov, &["theta1", "theta2", "slack"]);
    for r in &grid {
        csv.row(vec![
            output::float(r.theta1),
            output::float(r.theta2),
            output::float(r.slack),
        ]);
    }
    let violated = grid.iter().filter(|r| r.violated).count();
    csv.comment(&format!(
        "violated at {violated} of {} grid points",
        grid.len()
    ));
    if let Some(r) = most_violating(&grid) {
        csv.comment(&format!(
            "smallest slack {} at theta1 = {} theta2 = {}",
            output::float(r.slack),
            output::float(r.theta1),
            output::float(r.theta2)
        ));
    }
    csv.finish(out.path())
}

#[derive(Serialize)]
struct ChainCheck {
    summary: ChainSummary,
    consistent: bool,
}

#[derive(Serialize)]
struct KsTrace {
    family: Vec<String>,
    chains: Vec<ChainCheck>,
    q_proper: ChainCheck,
    report: KsReport,
    /// Each witness identity, then the identifications that make them clash.
    derivation: Vec<String>,
    witness_verified: bool,
    verdict: &'static str,
}

const KS_FAMILY: [&str; 5] = ["C", "F", "G", "H", "Q-candidate"];

fn check_alone(chain: &BitChain) -> ChainCheck {
    let report = chains::ks_contradiction_check(std::slice::from_ref(chain));
    ChainCheck {
        summary: chain.summary(),
        consistent: !report.is_contradiction(),
    }
}

fn ks_trace() -> anyhow::Result<KsTrace> {
    let b8 = GeneratorBasis::for_dimension(8)?;
    let family = KS_FAMILY
        .iter()
        .map(|name| chains::paper_chain(&b8, name))
        .collect::<qemerge::Result<Vec<_>>>()?;
    let q_proper = check_alone(&chains::paper_chain(&b8, "Q-proper")?);
    let report = chains::ks_contradiction_check(&family);
    let mut derivation = Vec::new();
    let mut witness_verified = false;
    if let KsOutcome::Contradiction {
        witness,
        identifications,
    } = &report.outcome
    {
        for id in witness {
            let ops = id
                .operators
                .as_deref()
                .map(|o| format!("  [{o}]"))
                .unwrap_or_default();
            derivation.push(format!("{}: {}{}", id.chain, id.relation, ops));
        }
        for line in identifications {
            derivation.push(format!("identify {line}"));
        }
        derivation.push("product of all values above: 1 = -1".into());
        witness_verified = chains::verify_witness(report.variables.len(), witness);
    }
    let verdict = if report.is_contradiction() {
        "CONTRADICTION"
    } else {
        "CONSISTENT"
    };
    Ok(KsTrace {
        family: KS_FAMILY.iter().map(ToString::to_string).collect(),
        chains: family.iter().map(check_alone).collect(),
        q_proper,
        report,
        derivation,
        witness_verified,
        verdict,
    })
}

#[derive(Serialize)]
struct NoConfig {}

pub fn ks(out: &Output) -> anyhow::Result<()> {
    let trace = ks_trace()?;
    let prov = Provenance::new(
        "demo ks",
        &NoConfig {},
        &["bit-chain-closure", "value-assignment-contradiction"],
    )?;
    output::json(out.path(), &prov, &trace)
}

#[derive(Serialize)]
struct SingletConfig {
    divisions: usize,
}

#[derive(Serialize)]
struct BellPoint {
    state: NamedState,
    #[serde(flatten)]
    report: BellReport,
}

#[derive(Serialize)]
struct SingletOutput {
    bloch: BlochState,
    density_matrix: MatrixPairs,
    /// Components as `[re, im]`.
    wave_function: Vec<[f64; 2]>,
    copurity: f64,
    angles: Vec<f64>,
    /// `C(θ_i, φ_j)`, closed form.
    correlation: Vec<Vec<f64>>,
    /// `max |C + cos(θ − φ)|` over the grid.
    max_deviation_from_cosine: f64,
    /// `max` difference between the closed form and the measurement pipeline.
    max_pipeline_deviation: f64,
    bell: Vec<BellPoint>,
}

fn pipeline_correlation(
    b: &GeneratorBasis,
    s: &BlochState,
    t: f64,
    p: f64,
) -> qemerge::Result<f64> {
    let (a, c) = measurement::rotated_spin_operators(b, t, p)?;
    measurement::measurement_correlation(b, s, &a, &c, ReductionMode::MinimallyDestructive)
}

pub fn singlet(divisions: usize, out: &Output) -> anyhow::Result<()> {
    if divisions == 0 {
        anyhow::bail!(crate::ParseError("--divisions must be positive".into()));
    }
    let (b, s) = bell_state(NamedState::Singlet)?;
    let rho = state::density_from_bloch(&b, &s)?;
    let psi = state::wavefunction_from_pure(&rho)?.with_phase_convention();
    let angles = measurement::angle_grid(divisions);
    let n = angles.len();
    let cells = Exec::default().map(n * n, |idx| {
        let (t, p) = (angles[idx / n], angles[idx % n]);
        let closed = measurement::rotated_spin_correlation(&s, t, p)?;
        let piped = pipeline_correlation(&b, &s, t, p)?;
        Ok::<_, qemerge::Error>((
            closed,
            (closed + (t - p).cos()).abs(),
            (closed - piped).abs(),
        ))
    });
    let cells = cells.into_iter().collect::<qemerge::Result<Vec<_>>>()?;
    let correlation = cells
        .chunks(n)
        .map(|row| row.iter().map(|c| c.0).collect())
        .collect();
    let max_deviation_from_cosine = cells.iter().map(|c| c.1).fold(0.0, f64::max);
    let max_pipeline_deviation = cells.iter().map(|c| c.2).fold(0.0, f64::max);
    let (t1, t2) = (std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_4);
    let mut bell = Vec::new();
    for name in [NamedState::Singlet, NamedState::Anticorrelated] {
        let (_, st) = bell_state(name)?;
        bell.push(BellPoint {
            state: name,
            report: measurement::bell_check(correlation_fn(&st), t1, t2),
        });
    }
    let body = SingletOutput {
        density_matrix: io::matrix_to_pairs(rho.matrix()),
        wave_function: psi.components().iter().map(|z| [z.re, z.im]).collect(),
        copurity: state::copurity(&rho),
        bloch: s,
        angles,
        correlation,
        max_deviation_from_cosine,
        max_pipeline_deviation,
        bell,
    };
    let prov = Provenance::new(
        "demo singlet",
        &SingletConfig { divisions },
        &[
            "entangled-density-matrix",
            "entangled-wave-function",
            "rotated-spin-correlation",
            "bell-inequality",
        ],
    )?;
    output::json(out.path(), &prov, &body)
}

#[derive(Serialize)]
struct ChainRealization {
    state: NamedState,
    /// Joint outcome table of the first two members.
    table: JointTable,
    /// Classical ensemble realizing the chain.
    probabilities: Vec<(Vec<u8>, f64)>,
    classical_correlation: f64,
    quantum_correlation: f64,
}

#[derive(Serialize)]
struct AnticorrelationTrace {
    chains: Vec<ChainSummary>,
    realizations: Vec<ChainRealization>,
}

#[derive(Serialize)]
struct ChainsOutput {
    anticorrelation: AnticorrelationTrace,
    kochen_specker: KsTrace,
}

fn realization(
    b: &GeneratorBasis,
    chain: &BitChain,
    name: NamedState,
) -> anyhow::Result<ChainRealization> {
    let (_, s) = bell_state(name)?;
    let table = chains::chain_outcome_probabilities(&s, chain)?;
    let ens = chains::realize_chain(b, chain, &s)?;
    let probabilities = (0..ens.len())
        .map(|t| (ens.label(t).to_vec(), ens.probabilities()[t]))
        .collect();
    let classical_correlation =
        ensemble::classical_correlation(&ens, &ens.observable(0), &ens.observable(1))?;
    let ops: Vec<&QuantumOperator> = chain
        .members()
        .iter()
        .take(2)
        .map(|m| &m.operator)
        .collect();
    let quantum_correlation = measurement::quantum_correlation(b, &s, ops[0], ops[1])?;
    Ok(ChainRealization {
        state: name,
        table,
        probabilities,
        classical_correlation,
        quantum_correlation,
    })
}

fn labelled_chain(
    b: &GeneratorBasis,
    name: &str,
    members: &[(&str, usize)],
) -> anyhow::Result<BitChain> {
    let labels = b.index_table();
    let members = members
        .iter()
        .map(|&(member, k)| ChainMember {
            name: member.to_string(),
            label: labels.map(|t| t[k - 1].clone()),
            operator: QuantumOperator::generator(b, k),
        })
        .collect();
    Ok(chains::make_named_chain(name, members)?)
}

pub fn chains_demo(out: &Output) -> anyhow::Result<()> {
    let b = GeneratorBasis::for_dimension(4)?;
    // Spin along 3 and along 1 for both qubits; each chain closes with its product.
    let chain_3 = labelled_chain(&b, "spin-3", &[("A3", 1), ("B3", 2), ("A3B3", 3)])?;
    let chain_1 = labelled_chain(&b, "spin-1", &[("A1", 8), ("B1", 4), ("A1B1", 12)])?;
    let mut realizations = Vec::new();
    for chain in [&chain_3, &chain_1] {
        for name in [NamedState::Singlet, NamedState::Anticorrelated] {
            realizations.push(realization(&b, chain, name)?);
        }
    }
    let body = ChainsOutput {
        anticorrelation: AnticorrelationTrace {
            chains: vec![chain_3.summary(), chain_1.summary()],
            realizations,
        },
        kochen_specker: ks_trace()?,
    };
    let prov = Provenance::new(
        "demo chains",
        &NoConfig {},
        &[
            "bit-chain-probabilities",
            "chain-realization",
            "value-assignment-contradiction",
        ],
    )?;
    output::json(out.path(), &prov, &body)
}
