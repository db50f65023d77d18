//! Config ingestion, run orchestration, angle sweeps, kick landscapes and
//! CSV/JSON emission.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{self, EvolutionParams, OracleBackend};
use crate::models::{self, KickMode, KickSpec, Model, ModelConfig, ModelKind, TermRole};
use crate::observables::{self, Observers, OrderParameter, RunResult};
use crate::pauli::Pauli;
use crate::theory::{self, TheoryInputs, TheoryReport};

pub const CSV_COLUMNS: [&str; 8] = ["t", "energy", "scaled_energy", "p_all0", "p_all1", "order_prob", "fidelity", "norm"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
}

fn default_epsilon() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Defaults to `pfm` for TFIM models and `odd_parity` for h2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderParameter>,
    /// Defaults to on for TFIM models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ghz_fidelity: Option<bool>,
    /// Known ground energy; skips the oracle when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_target: Option<f64>,
    #[serde(default = "default_backend")]
    pub oracle: OracleBackend,
}

fn default_backend() -> OracleBackend {
    OracleBackend::Dense
}

impl Default for ObservablesConfig {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            order: None,
            ghz_fidelity: None,
            e_target: None,
            oracle: default_backend(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), prefix: "run".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub thetas: Vec<f64>,
    /// Annealing time constants; defaults to `model.tau` alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    /// Also write every run's time series.
    #[serde(default)]
    pub write_runs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisPair {
    pub ancilla: Pauli,
    pub system: Pauli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub thetas: Vec<f64>,
    pub axis_pairs: Vec<AxisPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixerEnergy {
    /// Mixer-term energy of an unkicked run at the evaluation time.
    Simulated,
    /// `-N_S theta_M0 e^{-T/tau}`.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[serde(default = "default_mixer_energy")]
    pub mixer_energy: MixerEnergy,
    /// Evaluation time of the averaged theory; defaults to `model.tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixer_eval_time: Option<f64>,
}

fn default_mixer_energy() -> MixerEnergy {
    MixerEnergy::Simulated
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self { mixer_energy: default_mixer_energy(), mixer_eval_time: None }
    }
}

/// One experiment, as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub observables: ObservablesConfig,
    /// Seeds the imaginary-time oracle's starting vector.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeConfig>,
    #[serde(default)]
    pub theory: TheoryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl ExperimentConfig {
    /// Parse and validate. Relative `coefficients_file` paths resolve against
    /// `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| Error::Schema(vec![e.to_string()]))?;
        if let (Some(base), Some(file)) = (base_dir, cfg.model.coefficients_file.as_mut()) {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text, path.parent())
    }

    /// Every offending field, one message each.
    pub fn validate(&self) -> Vec<String> {
        let mut bad = self.model.validate();
        if !self.model.kick.is_trivial() && self.model.n_ancilla == 0 {
            bad.push("model.n_ancilla must be >= 1 when kicks are active".into());
        }
        if let Some(dt) = self.evolution.dt {
            if !positive(dt) {
                bad.push("evolution.dt must be > 0".into());
            }
        }
        if let Some(t) = self.evolution.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                bad.push("evolution.t_end must be >= 0".into());
            }
        }
        if self.evolution.record_stride == Some(0) {
            bad.push("evolution.record_stride must be >= 1".into());
        }
        let eps = self.observables.epsilon;
        if !(eps > 0.0 && eps < 1.0) {
            bad.push("observables.epsilon must lie in (0, 1)".into());
        }
        if let Some(e) = self.observables.e_target {
            if !(e < 0.0 && e.is_finite()) {
                bad.push("observables.e_target must be negative".into());
            }
        }
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            bad.push("output.prefix must be a non-empty file stem".into());
        }
        if let Some(s) = &self.sweep {
            if s.thetas.is_empty() {
                bad.push("sweep.thetas must be non-empty".into());
            }
            if s.thetas.iter().any(|t| !t.is_finite()) {
                bad.push("sweep.thetas must be finite".into());
            }
            if let Some(taus) = &s.taus {
                if taus.is_empty() || taus.iter().any(|&t| !positive(t)) {
                    bad.push("sweep.taus must be non-empty and > 0".into());
                }
            }
        }
        if let Some(l) = &self.landscape {
            if l.thetas.is_empty() || l.thetas.iter().any(|t| !t.is_finite()) {
                bad.push("landscape.thetas must be non-empty and finite".into());
            }
            if l.axis_pairs.is_empty() {
                bad.push("landscape.axis_pairs must be non-empty".into());
            }
            if l.axis_pairs.iter().any(|p| p.ancilla == Pauli::XY) {
                bad.push("landscape.axis_pairs ancilla axis must be X, Y or Z".into());
            }
            if self.model.n_ancilla == 0 {
                bad.push("landscape needs model.n_ancilla >= 1".into());
            }
        }
        if let Some(t) = self.theory.mixer_eval_time {
            if !positive(t) {
                bad.push("theory.mixer_eval_time must be > 0".into());
            }
        }
        if self.workers == Some(0) {
            bad.push("workers must be >= 1".into());
        }
        bad
    }

    pub fn check(&self) -> Result<()> {
        let bad = self.validate();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(bad))
        }
    }

    fn observers(&self, e_target: f64) -> Observers {
        let tfim = self.model.model != ModelKind::H2;
        Observers {
            e_target,
            order: self.observables.order.unwrap_or(if tfim { OrderParameter::Pfm } else { OrderParameter::OddParity }),
            ghz_fidelity: self.observables.ghz_fidelity.unwrap_or(tfim),
            epsilon: Some(self.observables.epsilon),
        }
    }

    fn theory_time(&self) -> f64 {
        self.theory.mixer_eval_time.unwrap_or(self.model.tau)
    }

    pub fn output_path(&self, suffix: &str) -> PathBuf {
        self.output.dir.join(format!("{}{suffix}", self.output.prefix))
    }
}

/// True ground energy of the model's problem Hamiltonian, either from the
/// config or from the oracle.
pub fn target_energy(cfg: &ExperimentConfig, model: &Model) -> Result<(f64, Option<OracleBackend>)> {
    if let Some(e) = cfg.observables.e_target {
        return Ok((e, None));
    }
    let g = evolution::ground_state_oracle(&model.hamiltonian.problem(), cfg.model.n_system, cfg.observables.oracle, cfg.seed)?;
    Ok((g.energy, Some(g.backend)))
}

/// `oracle` subcommand payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub e_target: f64,
    pub backend: OracleBackend,
    pub n_system: usize,
}

pub fn oracle(cfg: &ExperimentConfig) -> Result<OracleReport> {
    let model = models::build(&cfg.model)?;
    let g = evolution::ground_state_oracle(&model.hamiltonian.problem(), cfg.model.n_system, cfg.observables.oracle, cfg.seed)?;
    Ok(OracleReport { e_target: g.energy, backend: g.backend, n_system: cfg.model.n_system })
}

fn resolve_params(cfg: &ExperimentConfig, model: &Model) -> Result<EvolutionParams> {
    EvolutionParams::resolve(
        &model.hamiltonian,
        &cfg.model.kick,
        cfg.evolution.dt,
        cfg.evolution.t_end,
        cfg.evolution.record_stride,
    )
}

/// Evolve without touching the filesystem, using a known target energy.
pub fn simulate(cfg: &ExperimentConfig, e_target: f64) -> Result<RunResult> {
    cfg.check()?;
    let model = models::build(&cfg.model)?;
    let params = resolve_params(cfg, &model)?;
    let mut result = evolution::evolve_run(&model, &cfg.model.kick, &params, &cfg.observers(e_target))?;
    result.config_echo = serde_json::to_value(cfg)?;
    Ok(result)
}

/// Mixer-term energy of an unkicked run at time `t`.
pub fn simulated_mixer_energy(cfg: &ExperimentConfig, t: f64) -> Result<f64> {
    let mut model_cfg = cfg.model.clone();
    model_cfg.kick = model_cfg.kick.with_theta(0.0);
    model_cfg.kick.continuous_rate = None;
    if model_cfg.kick.mode == KickMode::Continuous {
        model_cfg.kick.mode = KickMode::Impulsive;
    }
    let model = models::build(&model_cfg)?;
    let params = EvolutionParams::resolve(&model.hamiltonian, &model_cfg.kick, cfg.evolution.dt, Some(t), Some(1))?;
    let state = evolution::evolve_state(&model, &model_cfg.kick, &params)?;
    let t_final = params.n_steps() as f64 * params.dt;
    state.expectation(&model.hamiltonian.at_role(t_final, TermRole::Mixer))
}

/// Inputs for the averaged theory derived from a config.
pub fn theory_inputs(cfg: &ExperimentConfig, model: &Model, e_target: f64) -> TheoryInputs {
    TheoryInputs {
        n_s: cfg.model.n_system,
        n_a: cfg.model.n_ancilla,
        n_k: match cfg.model.kick.mode {
            KickMode::Impulsive => cfg.model.kick.n_k,
            KickMode::Continuous => 0,
        },
        theta: cfg.model.kick.theta,
        theta_m0: cfg.model.theta_mixer0,
        tau: cfg.model.tau,
        theta_xx0: cfg.model.theta_xx0.unwrap_or(0.0),
        n_bonds: model.n_bonds,
        e_target,
        epsilon: cfg.observables.epsilon,
        t_eval: cfg.theory_time(),
    }
}

pub fn theory_report(cfg: &ExperimentConfig, model: &Model, e_target: f64) -> Result<TheoryReport> {
    let inputs = theory_inputs(cfg, model, e_target);
    let e_mixer = match cfg.theory.mixer_energy {
        MixerEnergy::Simulated => simulated_mixer_energy(cfg, inputs.t_eval)?,
        MixerEnergy::ClosedForm => {
            theory::closed_form_mixer_energy(inputs.n_s, inputs.theta_m0, inputs.tau, inputs.t_eval)
        }
    };
    TheoryReport::compute(&inputs, e_mixer)
}

/// `theory` subcommand: oracle energy plus the full report.
pub fn theory_for_config(cfg: &ExperimentConfig) -> Result<TheoryReport> {
    cfg.check()?;
    let model = models::build(&cfg.model)?;
    let (e_target, _) = target_energy(cfg, &model)?;
    theory_report(cfg, &model, e_target)
}

/// Theory versus simulation for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryDeltas {
    /// Configured angle minus the predicted optimum.
    pub theta_minus_optimal: Option<f64>,
    /// Recorded energy at the record nearest the theory evaluation time.
    pub energy_at_t_eval: Option<f64>,
    /// `e0 + e2 + e_system_flow`.
    pub predicted_energy_at_t_eval: f64,
    pub energy_delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_energy: Option<f64>,
    pub final_relative_error: Option<f64>,
    pub t_star: Option<f64>,
    pub e_target: f64,
    /// `None` when the target came from the config.
    pub e_target_backend: Option<OracleBackend>,
    pub dt: f64,
    pub t_end: f64,
    pub n_records: usize,
    pub theory: Option<TheoryReport>,
    pub theory_error: Option<String>,
    pub deltas: Option<TheoryDeltas>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: RunResult,
    pub summary: RunSummary,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

fn deltas(report: &TheoryReport, result: &RunResult) -> TheoryDeltas {
    let t = report.inputs.t_eval;
    let energy_at = result
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| result.energy[i]);
    let e = &report.energies;
    let predicted = e.e0 + e.e2 + e.e_system_flow;
    TheoryDeltas {
        theta_minus_optimal: report.optimal_angle.as_ref().ok().map(|opt| report.inputs.theta - opt),
        energy_at_t_eval: energy_at,
        predicted_energy_at_t_eval: predicted,
        energy_delta: energy_at.map(|x| x - predicted),
    }
}

/// Run one experiment and write `<prefix>.csv` and `<prefix>.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.check()?;
    let model = models::build(&cfg.model)?;
    let (e_target, backend) = target_energy(cfg, &model)?;
    let params = resolve_params(cfg, &model)?;
    let mut result = evolution::evolve_run(&model, &cfg.model.kick, &params, &cfg.observers(e_target))?;
    result.config_echo = serde_json::to_value(cfg)?;

    let (theory, theory_error) = match theory_report(cfg, &model, e_target) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = RunSummary {
        final_energy: result.final_energy(),
        final_relative_error: result.final_relative_error(),
        t_star: result.t_star,
        e_target,
        e_target_backend: backend,
        dt: params.dt,
        t_end: params.t_end,
        n_records: result.len(),
        deltas: theory.as_ref().map(|r| deltas(r, &result)),
        theory,
        theory_error,
        config: result.config_echo.clone(),
    };

    fs::create_dir_all(&cfg.output.dir)?;
    let csv_path = cfg.output_path(".csv");
    let json_path = cfg.output_path(".json");
    write_atomic(&csv_path, |p| write_csv(&result, p))?;
    if let Err(e) = write_atomic(&json_path, |p| write_json(&summary, p)) {
        let _ = fs::remove_file(&csv_path);
        return Err(e);
    }
    Ok(RunOutcome { result, summary, csv_path, json_path })
}

/// Write through a temporary sibling and rename; the temporary is removed on
/// failure so no partial file is left behind.
fn write_atomic(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    match write(&tmp).and_then(|_| fs::rename(&tmp, path).map_err(Error::from)) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Time series with the fixed column set; a missing fidelity is an empty
/// field. Floats use the shortest representation that parses back exactly.
pub fn write_csv(result: &RunResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for i in 0..result.len() {
        let fid = result.fidelity.as_ref().map(|f| f[i].to_string()).unwrap_or_default();
        w.write_record([
            result.times[i].to_string(),
            result.energy[i].to_string(),
            result.scaled_energy[i].to_string(),
            result.p_all0[i].to_string(),
            result.p_all1[i].to_string(),
            result.order_prob[i].to_string(),
            fid,
            result.norm[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(field: &str, column: &str, row: usize) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Config(format!("row {row}: column {column} is not a number: {field:?}")))
}

/// Read a time-series CSV back. `t_star`, `e_target` and the config echo are
/// not part of the CSV; see [`read_run`].
pub fn read_csv(path: &Path) -> Result<RunResult> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut out = RunResult::empty(f64::NAN, true);
    let mut any_fidelity = false;
    let mut all_fidelity = true;
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let col = |i: usize| parse_f64(&rec[i], CSV_COLUMNS[i], row);
        out.times.push(col(0)?);
        out.energy.push(col(1)?);
        out.scaled_energy.push(col(2)?);
        out.p_all0.push(col(3)?);
        out.p_all1.push(col(4)?);
        out.order_prob.push(col(5)?);
        if rec[6].is_empty() {
            all_fidelity = false;
        } else {
            any_fidelity = true;
            out.fidelity.as_mut().expect("initialized").push(col(6)?);
        }
        out.norm.push(col(7)?);
    }
    if any_fidelity && !all_fidelity {
        return Err(Error::Config("fidelity column is only partly filled".into()));
    }
    if !any_fidelity {
        out.fidelity = None;
    }
    Ok(out)
}

/// Rebuild a full [`RunResult`] from a run's CSV and JSON summary.
pub fn read_run(csv_path: &Path, json_path: &Path) -> Result<RunResult> {
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(json_path)?)?;
    let mut result = read_csv(csv_path)?;
    result.t_star = summary.t_star;
    result.e_target = summary.e_target;
    result.config_echo = summary.config;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub theta: f64,
    pub t_star: Option<f64>,
    pub final_error: f64,
}

/// Best angle for one annealing time constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptimum {
    pub tau: f64,
    /// `None` means no admissible angle.
    pub theta_opt: Option<f64>,
    pub t_star: Option<f64>,
    pub status: String,
    /// Predicted optimum for comparison, if the formula applies.
    pub theory_theta_opt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub e_target: f64,
    pub epsilon: f64,
    pub rows: Vec<SweepRow>,
    pub optima: Vec<SweepOptimum>,
}

/// Argmin of `T*` over rows whose final relative error is within `epsilon`;
/// ties go to the smaller angle.
pub fn empirical_optimum(rows: &[SweepRow], epsilon: f64) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.final_error <= epsilon && r.t_star.is_some())
        .min_by(|a, b| {
            let (ta, tb) = (a.t_star.unwrap(), b.t_star.unwrap());
            ta.total_cmp(&tb).then(a.theta.total_cmp(&b.theta))
        })
}

fn with_tau_theta(cfg: &ExperimentConfig, tau: f64, theta: f64, index: usize) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.model.tau = tau;
    c.model.kick.theta = theta;
    c.sweep = None;
    c.landscape = None;
    c.output.prefix = format!("{}_run{index:03}", cfg.output.prefix);
    c
}

/// Compute every `(tau, theta)` cell without writing files.
pub fn sweep_table(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.check()?;
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Schema(vec!["sweep section is required for a sweep".into()]))?;
    let model = models::build(&cfg.model)?;
    let (e_target, _) = target_energy(cfg, &model)?;
    let taus = spec.taus.clone().unwrap_or_else(|| vec![cfg.model.tau]);
    let cells: Vec<ExperimentConfig> = taus
        .iter()
        .flat_map(|&tau| spec.thetas.iter().map(move |&theta| (tau, theta)))
        .enumerate()
        .map(|(i, (tau, theta))| {
            let mut c = with_tau_theta(cfg, tau, theta, i);
            c.observables.e_target = Some(e_target);
            c
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let results: Vec<Result<SweepRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let result = if spec.write_runs { run(c).map(|o| o.result)? } else { simulate(c, e_target)? };
                Ok(SweepRow {
                    tau: c.model.tau,
                    theta: c.model.kick.theta,
                    t_star: result.t_star,
                    final_error: result.final_relative_error().unwrap_or(f64::INFINITY),
                })
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;

    let eps = cfg.observables.epsilon;
    let optima = taus
        .iter()
        .map(|&tau| {
            let group: Vec<SweepRow> = rows.iter().filter(|r| r.tau == tau).cloned().collect();
            let best = empirical_optimum(&group, eps);
            let mut tcfg = cfg.clone();
            tcfg.model.tau = tau;
            let e_mixer = match cfg.theory.mixer_energy {
                MixerEnergy::Simulated => simulated_mixer_energy(&tcfg, tcfg.theory_time()).ok(),
                MixerEnergy::ClosedForm => Some(theory::closed_form_mixer_energy(
                    cfg.model.n_system,
                    cfg.model.theta_mixer0,
                    tau,
                    tcfg.theory_time(),
                )),
            };
            let theory_theta_opt = e_mixer
                .and_then(|m| theory::optimal_angle(e_target, m, cfg.model.n_ancilla, cfg.model.kick.n_k).ok());
            SweepOptimum {
                tau,
                theta_opt: best.map(|r| r.theta),
                t_star: best.and_then(|r| r.t_star),
                status: if best.is_some() { "ok".into() } else { "no admissible angle".into() },
                theory_theta_opt,
            }
        })
        .collect();
    Ok(SweepOutcome { e_target, epsilon: eps, rows, optima })
}

/// Sweep and write `<prefix>_sweep.csv` and `<prefix>_sweep.json`.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    fs::create_dir_all(&cfg.output.dir)?;
    let out = sweep_table(cfg)?;
    write_atomic(&cfg.output_path("_sweep.csv"), |p| {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["tau", "theta", "t_star", "final_error"])?;
        for r in &out.rows {
            w.write_record([
                r.tau.to_string(),
                r.theta.to_string(),
                r.t_star.map(|t| t.to_string()).unwrap_or_default(),
                r.final_error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let json = serde_json::json!({ "sweep": &out, "config": cfg });
    write_atomic(&cfg.output_path("_sweep.json"), |p| write_json(&json, p))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub ancilla_axis: Pauli,
    pub system_axis: Pauli,
    pub theta: f64,
    pub energy: f64,
}

/// Reduced energy at `t = 0` after one kick of each angle on the initial
/// state, for every axis pair.
pub fn landscape_table(cfg: &ExperimentConfig) -> Result<Vec<LandscapeRow>> {
    cfg.check()?;
    let spec = cfg
        .landscape
        .as_ref()
        .ok_or_else(|| Error::Schema(vec!["landscape section is required for a landscape".into()]))?;
    let model = models::build(&cfg.model)?;
    let mut rows = Vec::with_capacity(spec.axis_pairs.len() * spec.thetas.len());
    for pair in &spec.axis_pairs {
        for &theta in &spec.thetas {
            let kick = KickSpec::impulsive(pair.ancilla, pair.system, theta, cfg.model.kick.dt_k, 1);
            let state = evolution::apply_kick(&model.initial, &kick)?;
            rows.push(LandscapeRow {
                ancilla_axis: pair.ancilla,
                system_axis: pair.system,
                theta,
                energy: observables::reduced_energy(&state, &model.hamiltonian, 0.0)?,
            });
        }
    }
    Ok(rows)
}

/// Landscape written to `<prefix>_landscape.csv`.
pub fn landscape(cfg: &ExperimentConfig) -> Result<Vec<LandscapeRow>> {
    let rows = landscape_table(cfg)?;
    fs::create_dir_all(&cfg.output.dir)?;
    write_atomic(&cfg.output_path("_landscape.csv"), |p| {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["ancilla_axis", "system_axis", "theta", "energy"])?;
        for r in &rows {
            w.write_record([r.ancilla_axis.to_string(), r.system_axis.to_string(), r.theta.to_string(), r.energy.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(rows)
}
