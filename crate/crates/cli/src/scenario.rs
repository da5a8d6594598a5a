//! Scenario files: JSON schema, validation and construction of library objects.

use std::collections::BTreeMap;
use std::path::Path;

use histlab::channels::{choi_from_kraus, ChoiChannel, KrausChannel};
use histlab::history::InstantChain;
use histlab::qcore::{
    ComplexMatrix, DensityMatrix, Ket, MatrixJson, OrthonormalBasis, UnitaryOp, VectorJson,
};
use histlab::tempcorr::{SequentialMeasurementPlan, SpinObservable};
use histlab::uncertainty::EnergyModel;
use histlab::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub chain: Option<ChainSpec>,
    #[serde(default)]
    pub initial: Option<VectorJson>,
    /// Input state of the channel analysis; defaults to the projector on `initial`.
    #[serde(default)]
    pub rho: Option<MatrixJson>,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub monitor: Option<MonitorSpec>,
    #[serde(default)]
    pub measurements: Option<MeasurementSpec>,
    #[serde(default)]
    pub energy: Option<EnergySpec>,
    #[serde(default)]
    pub pointer: Option<PointerSpec>,
    #[serde(default)]
    pub lg: Option<LgSpec>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    /// Metric path (`analysis.field.subfield`) to expected value.
    #[serde(default)]
    pub expect: BTreeMap<String, Expectation>,
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    History,
    Monitor,
    Channel,
    Pointer,
    Sequential,
    Lg,
    Uncertainty,
    Discrimination,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::History => "history",
            Analysis::Monitor => "monitor",
            Analysis::Channel => "channel",
            Analysis::Pointer => "pointer",
            Analysis::Sequential => "sequential",
            Analysis::Lg => "lg",
            Analysis::Uncertainty => "uncertainty",
            Analysis::Discrimination => "discrimination",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        ALL_ANALYSES.iter().copied().find(|a| a.name() == s)
    }
}

pub const ALL_ANALYSES: [Analysis; 8] = [
    Analysis::History,
    Analysis::Monitor,
    Analysis::Channel,
    Analysis::Pointer,
    Analysis::Sequential,
    Analysis::Lg,
    Analysis::Uncertainty,
    Analysis::Discrimination,
];

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: f64,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RySpec {
    pub ry: f64,
}

/// A named gate (`identity`, `x`, `y`, `z`, `h`), `{"ry": θ}`, or an explicit matrix.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Named(String),
    Ry(RySpec),
    Matrix(MatrixJson),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionSpec {
    pub direction: [f64; 3],
}

/// `x`, `y`, `z`, `{"direction": [x, y, z]}` (spin along a unit vector), or a Hermitian matrix.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Named(String),
    Direction(DirectionSpec),
    Matrix(MatrixJson),
}

/// `computational`, `hadamard`, or a matrix whose columns are the basis vectors.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum BasisSpec {
    Named(String),
    Matrix(MatrixJson),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub instants: usize,
    #[serde(default)]
    pub dim: Option<usize>,
    /// One step repeated between every pair of instants.
    #[serde(default)]
    pub step: Option<OperatorSpec>,
    /// One step per pair of adjacent instants.
    #[serde(default)]
    pub steps: Option<Vec<OperatorSpec>>,
    /// One basis for every instant.
    #[serde(default)]
    pub basis: Option<BasisSpec>,
    #[serde(default)]
    pub bases: Option<Vec<BasisSpec>>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub kraus: Option<Vec<MatrixJson>>,
    #[serde(default)]
    pub choi: Option<MatrixJson>,
    #[serde(default)]
    pub depolarizing: Option<f64>,
    #[serde(default)]
    pub amplitude_damping: Option<f64>,
    #[serde(default)]
    pub unitary: Option<OperatorSpec>,
    #[serde(default)]
    pub in_basis: Option<BasisSpec>,
    #[serde(default)]
    pub out_basis: Option<BasisSpec>,
    #[serde(default)]
    pub trace_decreasing: bool,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSpec {
    #[serde(default)]
    pub postselect: Option<VectorJson>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub instants: Vec<usize>,
    pub observables: Vec<ObservableSpec>,
    pub shots: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    pub hamiltonian: OperatorSpec,
    /// When set, the uncertainty analysis evolves with `exp(-iHτ)` in the energy eigenbasis.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub allow_degenerate: bool,
}

fn default_offset() -> i64 {
    0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PointerSpec {
    pub direction: [f64; 3],
    pub t1: usize,
    pub t2: usize,
    pub lattice_dim: usize,
    #[serde(default = "default_offset")]
    pub offset: i64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LgSpec {
    pub theta_min: f64,
    pub theta_max: f64,
    pub steps: usize,
    #[serde(default)]
    pub observable: Option<ObservableSpec>,
    /// Defaults to the maximally mixed qubit.
    #[serde(default)]
    pub rho: Option<MatrixJson>,
}

/// Library objects built from a validated scenario.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub chain: Option<InstantChain>,
    pub initial: Option<Ket>,
    pub rho: Option<DensityMatrix>,
    pub kraus: Option<KrausChannel>,
    pub choi: Option<ChoiChannel>,
    pub postselect: Option<Ket>,
    pub plan: Option<SequentialMeasurementPlan>,
    pub energy: Option<EnergyModel>,
    pub energy_chain: Option<InstantChain>,
    pub pointer: Option<PointerSpec>,
    pub spin: Option<SpinObservable>,
    pub lg: Option<LgSpec>,
    pub lg_observable: Option<ComplexMatrix>,
    pub lg_rho: Option<DensityMatrix>,
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, CliError> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(s)
}

fn matrix(m: &MatrixJson) -> histlab::Result<ComplexMatrix> {
    ComplexMatrix::try_from(m.clone())
}

fn named_gate(name: &str, dim: usize) -> Option<UnitaryOp> {
    Some(match name {
        "identity" | "i" => UnitaryOp::identity(dim),
        "x" => UnitaryOp::pauli_x(),
        "y" => UnitaryOp::pauli_y(),
        "z" => UnitaryOp::pauli_z(),
        "h" | "hadamard" => UnitaryOp::hadamard(),
        _ => return None,
    })
}

fn operator_dim(op: &OperatorSpec) -> Option<usize> {
    match op {
        OperatorSpec::Named(n) if n == "identity" || n == "i" => None,
        OperatorSpec::Named(_) | OperatorSpec::Ry(_) => Some(2),
        OperatorSpec::Matrix(m) => Some(m.rows),
    }
}

fn observable_dim(o: &ObservableSpec) -> usize {
    match o {
        ObservableSpec::Matrix(m) => m.rows,
        _ => 2,
    }
}

fn basis_dim(b: &BasisSpec) -> Option<usize> {
    match b {
        BasisSpec::Named(n) if n == "hadamard" => Some(2),
        BasisSpec::Named(_) => None,
        BasisSpec::Matrix(m) => Some(m.rows),
    }
}

fn build_unitary(op: &OperatorSpec, dim: usize, tol: f64) -> Result<UnitaryOp, String> {
    match op {
        OperatorSpec::Named(n) => named_gate(n, dim).ok_or_else(|| format!("unknown gate '{n}'")),
        OperatorSpec::Ry(r) => Ok(UnitaryOp::ry(r.ry)),
        OperatorSpec::Matrix(m) => {
            let m = matrix(m).map_err(|e| e.to_string())?;
            UnitaryOp::with_tolerance(m, tol).map_err(|e| e.to_string())
        }
    }
}

fn build_hermitian(op: &OperatorSpec, dim: usize) -> Result<ComplexMatrix, String> {
    let m = match op {
        OperatorSpec::Named(n) => named_gate(n, dim)
            .ok_or_else(|| format!("unknown operator '{n}'"))?
            .matrix()
            .clone(),
        OperatorSpec::Ry(_) => return Err("a rotation is not a Hamiltonian".into()),
        OperatorSpec::Matrix(m) => matrix(m).map_err(|e| e.to_string())?,
    };
    if !m.is_hermitian(histlab::qcore::DEFAULT_TOL) {
        return Err(format!(
            "not Hermitian (residual {:.3e})",
            m.hermitian_residual()
        ));
    }
    Ok(m)
}

fn build_observable(o: &ObservableSpec) -> Result<ComplexMatrix, String> {
    match o {
        ObservableSpec::Named(n) => match n.as_str() {
            "x" => Ok(SpinObservable::x().matrix().clone()),
            "y" => Ok(UnitaryOp::pauli_y().matrix().clone()),
            "z" => Ok(SpinObservable::z().matrix().clone()),
            _ => Err(format!("unknown observable '{n}'")),
        },
        ObservableSpec::Direction(d) => SpinObservable::along(d.direction)
            .map(|s| s.matrix().clone())
            .map_err(|e| e.to_string()),
        ObservableSpec::Matrix(m) => matrix(m).map_err(|e| e.to_string()),
    }
}

fn build_basis(b: &BasisSpec, dim: usize, tol: f64) -> Result<OrthonormalBasis, String> {
    match b {
        BasisSpec::Named(n) => match n.as_str() {
            "computational" => Ok(OrthonormalBasis::computational(dim)),
            "hadamard" => Ok(OrthonormalBasis::hadamard()),
            _ => Err(format!("unknown basis '{n}'")),
        },
        BasisSpec::Matrix(m) => {
            let m = matrix(m).map_err(|e| e.to_string())?;
            OrthonormalBasis::from_matrix_with_tolerance(&m, tol).map_err(|e| e.to_string())
        }
    }
}

fn density(m: &MatrixJson, tol: f64) -> Result<DensityMatrix, String> {
    let m = matrix(m).map_err(|e| e.to_string())?;
    DensityMatrix::with_tolerance(m, tol).map_err(|e| e.to_string())
}

/// Checks that every field in `fields` has the dimension of the first one.
fn check_group(fields: &[(String, usize)], errors: &mut Vec<String>) {
    if let Some((ref_name, ref_dim)) = fields.first() {
        for (name, dim) in &fields[1..] {
            if dim != ref_dim {
                errors.push(format!(
                    "dimension mismatch: {ref_name} has dimension {ref_dim} but {name} has dimension {dim}"
                ));
            }
        }
    }
}

fn channel_input_dim(c: &ChannelSpec) -> Option<(String, usize)> {
    if let Some(k) = c.kraus.as_ref().and_then(|k| k.first()) {
        return Some(("channel.kraus[0] (columns)".into(), k.cols));
    }
    if let Some(b) = c.in_basis.as_ref().and_then(basis_dim) {
        return Some(("channel.in_basis".into(), b));
    }
    if c.depolarizing.is_some() || c.amplitude_damping.is_some() {
        return Some(("channel preset".into(), 2));
    }
    if let Some(u) = c.unitary.as_ref().and_then(operator_dim) {
        return Some(("channel.unitary".into(), u));
    }
    None
}

fn needs(analysis: Analysis, present: bool, what: &str, errors: &mut Vec<String>) {
    if !present {
        errors.push(format!(
            "analysis '{}' needs a '{what}' section",
            analysis.name()
        ));
    }
}

impl Scenario {
    /// Validates the scenario for `analyses` and builds the library objects.
    ///
    /// Every violation found is reported, not only the first.
    pub fn prepare(
        &self,
        analyses: &[Analysis],
        seed_override: Option<u64>,
    ) -> Result<Prepared, CliError> {
        let mut errors = Vec::new();
        let tol = self.tolerance;
        let seed = seed_override.or(self.seed);
        if self.schema_version != SCHEMA_VERSION {
            errors.push(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            errors.push(format!("tolerance must be positive and finite (got {tol})"));
        }

        // dimension consistency of the evolving system
        let mut system: Vec<(String, usize)> = Vec::new();
        if let Some(c) = &self.chain {
            if let Some(d) = c.dim {
                system.push(("chain.dim".into(), d));
            }
            if let Some(s) = c.step.as_ref().and_then(operator_dim) {
                system.push(("chain.step".into(), s));
            }
            for (k, s) in c.steps.iter().flatten().enumerate() {
                if let Some(d) = operator_dim(s) {
                    system.push((format!("chain.steps[{k}]"), d));
                }
            }
            if let Some(b) = c.basis.as_ref().and_then(basis_dim) {
                system.push(("chain.basis".into(), b));
            }
            for (k, b) in c.bases.iter().flatten().enumerate() {
                if let Some(d) = basis_dim(b) {
                    system.push((format!("chain.bases[{k}]"), d));
                }
            }
        }
        if let Some(i) = &self.initial {
            system.push(("initial".into(), i.re.len()));
        }
        if let Some(p) = self.monitor.as_ref().and_then(|m| m.postselect.as_ref()) {
            system.push(("monitor.postselect".into(), p.re.len()));
        }
        if let Some(m) = &self.measurements {
            for (k, o) in m.observables.iter().enumerate() {
                system.push((format!("measurements.observables[{k}]"), observable_dim(o)));
            }
        }
        if let Some(d) = self
            .energy
            .as_ref()
            .and_then(|e| operator_dim(&e.hamiltonian))
        {
            system.push(("energy.hamiltonian".into(), d));
        }
        check_group(&system, &mut errors);
        let dim = system.first().map_or(2, |f| f.1);

        // the channel acts on its own input space
        let mut channel_in: Vec<(String, usize)> = Vec::new();
        if let Some(c) = &self.channel {
            if let Some(f) = channel_input_dim(c) {
                channel_in.push(f);
            }
            if let Some(r) = &self.rho {
                channel_in.push(("rho".into(), r.rows));
            } else if let Some(i) = &self.initial {
                channel_in.push(("initial".into(), i.re.len()));
            }
            check_group(&channel_in, &mut errors);
        }

        let wants = |a: Analysis| analyses.contains(&a);
        for &a in analyses {
            match a {
                Analysis::History | Analysis::Monitor | Analysis::Discrimination => {
                    needs(a, self.chain.is_some(), "chain", &mut errors);
                    needs(a, self.initial.is_some(), "initial", &mut errors);
                }
                Analysis::Channel => {
                    needs(a, self.channel.is_some(), "channel", &mut errors);
                    needs(
                        a,
                        self.rho.is_some() || self.initial.is_some(),
                        "rho' or 'initial",
                        &mut errors,
                    );
                }
                Analysis::Pointer => {
                    needs(a, self.chain.is_some(), "chain", &mut errors);
                    needs(a, self.initial.is_some(), "initial", &mut errors);
                    needs(a, self.pointer.is_some(), "pointer", &mut errors);
                }
                Analysis::Sequential => {
                    needs(a, self.chain.is_some(), "chain", &mut errors);
                    needs(a, self.initial.is_some(), "initial", &mut errors);
                    needs(a, self.measurements.is_some(), "measurements", &mut errors);
                }
                Analysis::Lg => needs(a, self.lg.is_some(), "lg", &mut errors),
                Analysis::Uncertainty => {
                    needs(a, self.chain.is_some(), "chain", &mut errors);
                    needs(a, self.initial.is_some(), "initial", &mut errors);
                    needs(a, self.energy.is_some(), "energy", &mut errors);
                }
            }
        }
        if wants(Analysis::Sequential)
            && self.measurements.as_ref().is_some_and(|m| m.shots > 0)
            && seed.is_none()
        {
            errors.push("Monte-Carlo shots requested in 'measurements' but no seed given (scenario 'seed' or --seed)".into());
        }
        for key in self.expect.keys() {
            let head = key.split('.').next().unwrap_or("");
            match Analysis::from_name(head) {
                None => errors.push(format!(
                    "expectation '{key}' does not start with an analysis name"
                )),
                Some(a) if !self.analyses.contains(&a) && !analyses.contains(&a) => {
                    errors.push(format!(
                        "expectation '{key}' refers to analysis '{head}', which is not requested"
                    ))
                }
                _ => {}
            }
        }

        // build the library objects; construction failures are input errors too
        let mut chain = None;
        if let Some(c) = &self.chain {
            match build_chain(c, dim, tol) {
                Ok(ch) => chain = Some(ch),
                Err(es) => errors.extend(es),
            }
        }
        let initial = self.initial.as_ref().and_then(|v| {
            v.to_amps()
                .and_then(|a| Ket::with_tolerance(a, tol))
                .map_err(|e| errors.push(format!("initial: {e}")))
                .ok()
        });
        let postselect = self
            .monitor
            .as_ref()
            .and_then(|m| m.postselect.as_ref())
            .and_then(|v| {
                v.to_amps()
                    .and_then(|a| Ket::with_tolerance(a, tol))
                    .map_err(|e| errors.push(format!("monitor.postselect: {e}")))
                    .ok()
            });

        let mut rho = None;
        let mut kraus = None;
        let mut choi = None;
        if let Some(c) = &self.channel {
            let din = channel_in.first().map_or(dim, |f| f.1);
            rho = match (&self.rho, &initial) {
                (Some(r), _) => density(r, tol)
                    .map_err(|e| errors.push(format!("rho: {e}")))
                    .ok(),
                (None, Some(k)) => Some(k.to_density()),
                _ => None,
            };
            match build_channel(c, din, tol) {
                Ok((k, ch)) => {
                    kraus = k;
                    choi = Some(ch);
                }
                Err(e) => errors.push(format!("channel: {e}")),
            }
        }

        let mut plan = None;
        if let (Some(m), Some(ch)) = (&self.measurements, &chain) {
            let obs: Result<Vec<_>, _> = m.observables.iter().map(build_observable).collect();
            match obs {
                Ok(obs) => {
                    match SequentialMeasurementPlan::new(ch.clone(), m.instants.clone(), obs) {
                        Ok(p) => plan = Some(p),
                        Err(e) => errors.push(format!("measurements: {e}")),
                    }
                }
                Err(e) => errors.push(format!("measurements.observables: {e}")),
            }
        }

        let mut energy = None;
        let mut energy_chain = None;
        if let Some(e) = &self.energy {
            match build_hermitian(&e.hamiltonian, dim).and_then(|h| {
                EnergyModel::new(h, e.allow_degenerate).map_err(|err| err.to_string())
            }) {
                Ok(em) => {
                    if let (Some(tau), Some(c)) = (e.tau, &self.chain) {
                        if c.step.is_some() || c.steps.is_some() {
                            errors.push("energy.tau generates the chain steps; remove chain.step/chain.steps".into());
                        }
                        match em.chain(c.instants, tau) {
                            Ok(ch) => energy_chain = Some(ch),
                            Err(err) => errors.push(format!("energy: {err}")),
                        }
                    }
                    energy = Some(em);
                }
                Err(err) => errors.push(format!("energy.hamiltonian: {err}")),
            }
        }

        let spin = self.pointer.as_ref().and_then(|p| {
            SpinObservable::along(p.direction)
                .map_err(|e| errors.push(format!("pointer.direction: {e}")))
                .ok()
        });

        let mut lg_observable = None;
        let mut lg_rho = None;
        if let Some(l) = &self.lg {
            if l.steps == 0 {
                errors.push("lg.steps must be at least 1".into());
            }
            if !(l.theta_min.is_finite() && l.theta_max.is_finite()) || l.theta_min > l.theta_max {
                errors.push("lg needs finite theta_min <= theta_max".into());
            }
            match l
                .observable
                .as_ref()
                .map_or(Ok(SpinObservable::z().matrix().clone()), build_observable)
            {
                Ok(o) if o.rows() == 2 => lg_observable = Some(o),
                Ok(o) => errors.push(format!(
                    "lg.observable must be a qubit observable (got dimension {})",
                    o.rows()
                )),
                Err(e) => errors.push(format!("lg.observable: {e}")),
            }
            lg_rho = match &l.rho {
                Some(r) => density(r, tol)
                    .map_err(|e| errors.push(format!("lg.rho: {e}")))
                    .ok(),
                None => Some(DensityMatrix::maximally_mixed(2)),
            };
        }

        if !errors.is_empty() {
            return Err(CliError::Invalid(errors));
        }
        Ok(Prepared {
            scenario: self.clone(),
            seed,
            tolerance: tol,
            chain,
            initial,
            rho,
            kraus,
            choi,
            postselect,
            plan,
            energy,
            energy_chain,
            pointer: self.pointer.clone(),
            spin,
            lg: self.lg.clone(),
            lg_observable,
            lg_rho,
        })
    }
}

fn build_chain(c: &ChainSpec, dim: usize, tol: f64) -> Result<InstantChain, Vec<String>> {
    let mut errors = Vec::new();
    if c.instants < 2 {
        errors.push(format!(
            "chain.instants must be at least 2 (got {})",
            c.instants
        ));
        return Err(errors);
    }
    if c.step.is_some() && c.steps.is_some() {
        errors.push("chain: give either 'step' or 'steps', not both".into());
    }
    if c.basis.is_some() && c.bases.is_some() {
        errors.push("chain: give either 'basis' or 'bases', not both".into());
    }
    let specs: Vec<OperatorSpec> = match (&c.step, &c.steps) {
        (_, Some(s)) => {
            if s.len() != c.instants - 1 {
                errors.push(format!(
                    "chain.steps has {} entries but {} instants need {}",
                    s.len(),
                    c.instants,
                    c.instants - 1
                ));
            }
            s.clone()
        }
        (Some(s), None) => vec![s.clone(); c.instants - 1],
        (None, None) => vec![OperatorSpec::Named("identity".into()); c.instants - 1],
    };
    let mut steps = Vec::new();
    for (k, s) in specs.iter().enumerate() {
        match build_unitary(s, dim, tol) {
            Ok(u) => steps.push(u),
            Err(e) => errors.push(format!("chain.steps[{k}]: {e}")),
        }
    }
    let basis_specs: Option<Vec<BasisSpec>> = match (&c.basis, &c.bases) {
        (_, Some(b)) => {
            if b.len() != c.instants {
                errors.push(format!(
                    "chain.bases has {} entries for {} instants",
                    b.len(),
                    c.instants
                ));
            }
            Some(b.clone())
        }
        (Some(b), None) => Some(vec![b.clone(); c.instants]),
        (None, None) => None,
    };
    let mut bases = Vec::new();
    for (k, b) in basis_specs.iter().flatten().enumerate() {
        match build_basis(b, dim, tol) {
            Ok(b) => bases.push(b),
            Err(e) => errors.push(format!("chain.bases[{k}]: {e}")),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let chain = InstantChain::new(steps, basis_specs.map(|_| bases))
        .map_err(|e| vec![format!("chain: {e}")])?;
    match &c.labels {
        Some(l) => chain
            .with_labels(l.clone())
            .map_err(|e| vec![format!("chain.labels: {e}")]),
        None => Ok(chain),
    }
}

fn build_channel(
    c: &ChannelSpec,
    din: usize,
    tol: f64,
) -> Result<(Option<KrausChannel>, ChoiChannel), String> {
    let given = [
        c.kraus.is_some(),
        c.choi.is_some(),
        c.depolarizing.is_some(),
        c.amplitude_damping.is_some(),
        c.unitary.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if given != 1 {
        return Err(
            "give exactly one of kraus, choi, depolarizing, amplitude_damping, unitary".into(),
        );
    }
    let kraus = if let Some(ops) = &c.kraus {
        let ops = ops
            .iter()
            .map(matrix)
            .collect::<histlab::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let k = if c.trace_decreasing {
            KrausChannel::trace_decreasing(ops)
        } else {
            KrausChannel::new(ops)
        };
        Some(k.map_err(|e| e.to_string())?)
    } else if let Some(p) = c.depolarizing {
        Some(KrausChannel::depolarizing(p).map_err(|e| e.to_string())?)
    } else if let Some(g) = c.amplitude_damping {
        Some(KrausChannel::amplitude_damping(g).map_err(|e| e.to_string())?)
    } else if let Some(u) = &c.unitary {
        Some(KrausChannel::unitary(&build_unitary(u, din, tol)?))
    } else {
        None
    };
    let dout = match (&kraus, &c.choi, &c.out_basis) {
        (Some(k), _, _) => k.out_dim(),
        (None, _, Some(b)) if basis_dim(b).is_some() => basis_dim(b).unwrap_or(din),
        (None, Some(m), _) => m.rows / din.max(1),
        _ => din,
    };
    let bin = c
        .in_basis
        .as_ref()
        .map_or(Ok(OrthonormalBasis::computational(din)), |b| {
            build_basis(b, din, tol)
        })?;
    let bout = c
        .out_basis
        .as_ref()
        .map_or(Ok(OrthonormalBasis::computational(dout)), |b| {
            build_basis(b, dout, tol)
        })?;
    let choi = match (&kraus, &c.choi) {
        (Some(k), _) => choi_from_kraus(k, &bin, &bout).map_err(|e| e.to_string())?,
        (None, Some(m)) => ChoiChannel::from_matrix(
            matrix(m).map_err(|e| e.to_string())?,
            bin,
            bout,
            c.trace_decreasing,
            tol,
        )
        .map_err(|e| e.to_string())?,
        (None, None) => unreachable!("exactly one channel form is present"),
    };
    Ok((kraus, choi))
}

/// Shorthand used by fixtures and tests: `|ψ>` as paired real arrays.
pub fn vector_json(amps: &[C64]) -> VectorJson {
    VectorJson::from_amps(amps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_names_round_trip() {
        for a in ALL_ANALYSES {
            assert_eq!(Analysis::from_name(a.name()), Some(a));
        }
        assert_eq!(Analysis::from_name("nope"), None);
    }

    #[test]
    fn check_group_compares_against_the_first_field() {
        let mut errors = Vec::new();
        let fields = vec![
            ("a".to_string(), 2),
            ("b".to_string(), 2),
            ("c".to_string(), 3),
        ];
        check_group(&fields, &mut errors);
        assert_eq!(
            errors,
            ["dimension mismatch: a has dimension 2 but c has dimension 3"]
        );
    }

    #[test]
    fn operator_specs_accept_names_rotations_and_matrices() {
        for json in [
            r#""h""#,
            r#"{"ry": 0.3}"#,
            r#"{"rows":2,"cols":2,"re":[0,1,1,0],"im":[0,0,0,0]}"#,
        ] {
            let spec: OperatorSpec = serde_json::from_str(json).unwrap();
            assert_eq!(operator_dim(&spec), Some(2), "{json}");
        }
    }

    #[test]
    fn default_tolerance_applies() {
        let s = parse_scenario_str(r#"{"schema_version":1,"name":"t","analyses":["lg"],"lg":{"theta_min":0,"theta_max":1,"steps":2}}"#)
            .unwrap();
        assert_eq!(s.tolerance, histlab::qcore::DEFAULT_TOL);
        assert!(s.prepare(&s.analyses, None).is_ok());
    }
}
