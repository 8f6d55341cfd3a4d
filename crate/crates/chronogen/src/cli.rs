//! Command-line front end: strict JSON config ingestion, scenario execution,
//! CSV/JSON export, machine-readable reports, deterministic exit codes.
//!
//! Exit codes: 0 success, 2 verification failure (a residual or infidelity
//! above tolerance, or an unusable readout), 3 singular clock overlap,
//! 4 config error (parse or validation), 1 unexpected internal error.
//!
//! Identical config + seed produce byte-identical artifacts: numbers are
//! written with 17 significant digits and nothing time- or host-dependent
//! enters the outputs.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    compare, infidelity, integrate_tdse, linspace, tdse_residual, SystemTrajectory,
};
use crate::error::{Error, Result};
use crate::hilbert::{c64, eigh, CMatrix, CVector};
use crate::model::{
    assemble_global, coupled_two_level_spec, pauli, random_spec, HamiltonianSpec, PauliAxis,
};
use crate::readout::{expectation_curve, invert_readout, resolution_spectrum};
use crate::relational::{
    conditioned_pair, verify_decomposition, ConditionedPotential, EffectivePotentialSample,
};
use crate::scenarios::{
    component_deviations, conditioned_run, generate_solvable, pauli_components,
    run_two_level_example, ExampleBundle, TwoLevelReference,
};
use crate::spectral::{eigenspaces, select_state, GlobalEigenstate};

/// Environment variable overriding the config seed.
pub const SEED_ENV_VAR: &str = "CHRONOGEN_SEED";

type Cpx = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Example,
    Verify,
    Generate,
    Readout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecSource {
    /// A named built-in model: `coupled-two-level` or `degenerate-free`.
    Builtin(String),
    /// A seeded random instance.
    Random(RandomSpecConfig),
    /// Inline matrices, row-major, complex entries as `[re, im]`.
    Inline(InlineSpec),
}

impl Default for SpecSource {
    fn default() -> Self {
        SpecSource::Builtin("coupled-two-level".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpecConfig {
    pub d_s: usize,
    pub d_c: usize,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSpec {
    pub d_s: usize,
    pub d_c: usize,
    pub h_system: Vec<Vec<Cpx>>,
    pub h_clock: Vec<Vec<Cpx>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_interaction: Option<Vec<Vec<Cpx>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenstateSelector {
    /// Index into the list of eigenspaces (ascending energy).
    #[serde(default)]
    pub energy_index: usize,
    /// Coefficients within the selected eigenspace (default: first basis
    /// vector).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Cpx>>,
}


impl EigenstateSelector {
    fn is_default(&self) -> bool {
        self.energy_index == 0 && self.coefficients.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 2.0 * std::f64::consts::PI,
            points: 2001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// projected-vs-integrated infidelity bound
    #[serde(default = "default_infidelity_tol")]
    pub infidelity: f64,
    /// norm-drift bound for the integrated trajectory, and the bound on
    /// `| ||phi|| - 1 |` for the reference example
    #[serde(default = "default_norm_drift_tol")]
    pub norm_drift: f64,
    /// decomposition-identity residual bound
    #[serde(default = "default_decomposition_tol")]
    pub decomposition: f64,
    /// closed-form comparison bound (reference example only)
    #[serde(default = "default_closed_form_tol")]
    pub closed_form: f64,
}

fn default_infidelity_tol() -> f64 {
    1e-7
}
fn default_norm_drift_tol() -> f64 {
    1e-8
}
fn default_decomposition_tol() -> f64 {
    1e-10
}
fn default_closed_form_tol() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            infidelity: default_infidelity_tol(),
            norm_drift: default_norm_drift_tol(),
            decomposition: default_decomposition_tol(),
            closed_form: default_closed_form_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory (default: current directory).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub spec: SpecSource,
    #[serde(default)]
    pub eigenstate: EigenstateSelector,
    /// Initial clock state as `[re, im]` pairs (default: the reference
    /// state for built-ins, a uniform superposition over the clock
    /// eigenbasis otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi0: Option<Vec<Cpx>>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Hermitian clock observable for readout mode (default: sigma_x for
    /// two-level clocks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Vec<Vec<Cpx>>>,
    /// If set in readout mode, invert the curve at this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_value: Option<f64>,
}

/// Parse a strict JSON config document. Unknown keys are rejected; syntax
/// and shape problems surface as [`Error::ConfigParse`], semantic problems
/// as [`Error::ConfigInvalid`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    validate_config(&config)?;
    Ok(config)
}

pub fn serialize_config(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serialization is infallible")
}

fn validate_config(config: &RunConfig) -> Result<()> {
    let g = &config.grid;
    if g.points < 2 {
        return Err(Error::ConfigInvalid(format!(
            "grid.points must be >= 2, got {}",
            g.points
        )));
    }
    if !g.start.is_finite() || !g.stop.is_finite() || g.stop <= g.start {
        return Err(Error::ConfigInvalid(format!(
            "grid requires finite stop > start, got [{}, {}]",
            g.start, g.stop
        )));
    }
    let t = &config.tolerances;
    for (name, v) in [
        ("infidelity", t.infidelity),
        ("norm_drift", t.norm_drift),
        ("decomposition", t.decomposition),
        ("closed_form", t.closed_form),
    ] {
        if v.is_nan() || v <= 0.0 || !v.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "tolerances.{name} must be a positive finite number, got {v}"
            )));
        }
    }
    if let SpecSource::Random(r) = &config.spec {
        if r.d_s == 0 || r.d_c == 0 {
            return Err(Error::ConfigInvalid("random spec dimensions must be >= 1".into()));
        }
        if r.coupling.is_nan() || r.coupling < 0.0 {
            return Err(Error::ConfigInvalid("random spec coupling must be >= 0".into()));
        }
    }
    Ok(())
}

/// Flags that travel alongside the config document.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub report: ReportFormat,
    pub threads: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            report: ReportFormat::Text,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

/// Execute the configured run. Writes artifacts, prints a one-line summary
/// (or a JSON report) to stdout and returns the process exit code.
pub fn run(config: &RunConfig, opts: &RunOptions) -> i32 {
    let mut config = config.clone();
    if let Ok(seed_text) = std::env::var(SEED_ENV_VAR) {
        match seed_text.parse::<u64>() {
            Ok(seed) => config.seed = seed,
            Err(_) => {
                eprintln!("error: config validation error: {SEED_ENV_VAR} must be a u64, got {seed_text:?}");
                return 4;
            }
        }
    }
    if let Err(e) = validate_config(&config) {
        eprintln!("error: {e}");
        return exit_code_for(&e);
    }
    let threads = opts.threads.unwrap_or(1).max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: could not build thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&config, opts)) {
        Ok(outcome) => {
            match opts.report {
                ReportFormat::Text => println!("{}", outcome.summary),
                ReportFormat::Json => println!("{}", outcome.report),
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::SingularOverlap { .. } => 3,
        Error::ExportUnverified { .. }
        | Error::NonMonotoneReadout
        | Error::ReadoutOutOfRange { .. } => 2,
        Error::ConfigParse(_)
        | Error::ConfigInvalid(_)
        | Error::Validation(_)
        | Error::DimensionMismatch { .. }
        | Error::NotHermitian { .. }
        | Error::Capacity { .. } => 4,
        Error::GridMismatch { .. } | Error::Io(_) => 1,
    }
}

struct Outcome {
    exit_code: i32,
    summary: String,
    report: String,
}

fn execute(config: &RunConfig, _opts: &RunOptions) -> Result<Outcome> {
    let grid = linspace(config.grid.start, config.grid.stop, config.grid.points)?;
    let out_dir = config
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    match config.mode {
        Mode::Example => run_pipeline(config, &grid, &out_dir, false),
        Mode::Verify => run_pipeline(config, &grid, &out_dir, true),
        Mode::Generate => run_generate(config, &grid, &out_dir),
        Mode::Readout => run_readout(config, &grid, &out_dir),
    }
}

/// A resolved model: spec, eigenstate, clock state, and whether this is the
/// unmodified two-level reference configuration (which unlocks closed-form
/// comparisons).
struct ResolvedModel {
    spec: HamiltonianSpec,
    state: GlobalEigenstate,
    chi0: CVector,
    is_reference_example: bool,
}

fn resolve_model(config: &RunConfig) -> Result<ResolvedModel> {
    match &config.spec {
        SpecSource::Builtin(name) => match name.as_str() {
            "coupled-two-level" => {
                let spec = coupled_two_level_spec();
                if config.eigenstate.is_default() && config.chi0.is_none() {
                    let reference = TwoLevelReference::new();
                    let h = assemble_global(&spec)?;
                    let state =
                        GlobalEigenstate::new(&h, reference.psi(), reference.energy())?;
                    return Ok(ResolvedModel {
                        spec,
                        state,
                        chi0: reference.chi0(),
                        is_reference_example: true,
                    });
                }
                finish_resolution(config, spec)
            }
            "degenerate-free" => {
                let spec = HamiltonianSpec::non_interacting(
                    pauli(PauliAxis::Z),
                    pauli(PauliAxis::Z),
                )?;
                if config.eigenstate.is_default() {
                    let h = assemble_global(&spec)?;
                    let s = 1.0 / 2.0f64.sqrt();
                    let bell = CVector::from_real(&[0.0, s, s, 0.0])?;
                    let state = GlobalEigenstate::new(&h, bell, 0.0)?;
                    let chi0 = resolve_chi0(config, &spec)?;
                    return Ok(ResolvedModel {
                        spec,
                        state,
                        chi0,
                        is_reference_example: false,
                    });
                }
                finish_resolution(config, spec)
            }
            other => Err(Error::ConfigInvalid(format!(
                "unknown builtin spec {other:?} (available: coupled-two-level, degenerate-free)"
            ))),
        },
        SpecSource::Random(r) => {
            let spec = random_spec(r.d_s, r.d_c, r.coupling, config.seed)
                .map_err(demote_to_config_error)?;
            finish_resolution(config, spec)
        }
        SpecSource::Inline(inline) => {
            let spec = inline_to_spec(inline).map_err(demote_to_config_error)?;
            finish_resolution(config, spec)
        }
    }
}

/// Structural errors raised while building a model from config data are
/// config errors from the user's point of view.
fn demote_to_config_error(e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::ConfigInvalid(m),
        Error::DimensionMismatch { context } => Error::ConfigInvalid(context),
        other => other,
    }
}

fn finish_resolution(config: &RunConfig, spec: HamiltonianSpec) -> Result<ResolvedModel> {
    let h = assemble_global(&spec)?;
    let spaces = eigenspaces(&h, None)?;
    let idx = config.eigenstate.energy_index;
    if idx >= spaces.len() {
        return Err(Error::ConfigInvalid(format!(
            "eigenstate.energy_index {idx} out of range: {} eigenspaces",
            spaces.len()
        )));
    }
    let space = &spaces[idx];
    let coefficients = match &config.eigenstate.coefficients {
        Some(pairs) => {
            if pairs.len() != space.multiplicity() {
                return Err(Error::ConfigInvalid(format!(
                    "eigenstate.coefficients has {} entries, eigenspace multiplicity is {}",
                    pairs.len(),
                    space.multiplicity()
                )));
            }
            pairs.iter().map(|p| c64(p[0], p[1])).collect::<Vec<_>>()
        }
        None => {
            let mut v = vec![c64(0.0, 0.0); space.multiplicity()];
            v[0] = c64(1.0, 0.0);
            v
        }
    };
    let state = select_state(&h, space, &coefficients).map_err(demote_to_config_error)?;
    let chi0 = resolve_chi0(config, &spec)?;
    Ok(ResolvedModel {
        spec,
        state,
        chi0,
        is_reference_example: false,
    })
}

fn resolve_chi0(config: &RunConfig, spec: &HamiltonianSpec) -> Result<CVector> {
    match &config.chi0 {
        Some(pairs) => {
            if pairs.len() != spec.d_c() {
                return Err(Error::ConfigInvalid(format!(
                    "chi0 has {} entries, clock dimension is {}",
                    pairs.len(),
                    spec.d_c()
                )));
            }
            let v = CVector::new(pairs.iter().map(|p| c64(p[0], p[1])).collect())
                .map_err(demote_to_config_error)?;
            if v.norm() == 0.0 {
                return Err(Error::ConfigInvalid("chi0 must be nonzero".into()));
            }
            Ok(v)
        }
        None => {
            // uniform superposition over the clock eigenbasis: maximal
            // participation ratio, the good-clock default
            let eig = eigh(spec.h_clock())?;
            let d = eig.dim();
            let amp = c64(1.0 / (d as f64).sqrt(), 0.0);
            let mut acc = CVector::zeros(d)?;
            for k in 0..d {
                acc = acc.add(&eig.vector(k).scaled(amp));
            }
            Ok(acc)
        }
    }
}

fn inline_to_spec(inline: &InlineSpec) -> Result<HamiltonianSpec> {
    let h_system = pairs_to_matrix(&inline.h_system, inline.d_s, "h_system")?;
    let h_clock = pairs_to_matrix(&inline.h_clock, inline.d_c, "h_clock")?;
    let d = inline.d_s * inline.d_c;
    let v = match &inline.v_interaction {
        Some(rows) => pairs_to_matrix(rows, d, "v_interaction")?,
        None => CMatrix::zeros(d, d)?,
    };
    HamiltonianSpec::new(h_system, h_clock, v)
}

fn pairs_to_matrix(rows: &[Vec<Cpx>], expected_dim: usize, name: &str) -> Result<CMatrix> {
    if rows.len() != expected_dim || rows.iter().any(|r| r.len() != expected_dim) {
        return Err(Error::ConfigInvalid(format!(
            "{name} must be a {expected_dim}x{expected_dim} matrix"
        )));
    }
    let mut entries = Vec::with_capacity(expected_dim * expected_dim);
    for row in rows {
        for p in row {
            entries.push(c64(p[0], p[1]));
        }
    }
    CMatrix::new(expected_dim, expected_dim, entries)
}

/// Pipeline artifacts shared by example and verify modes.
struct PipelineResult {
    clock: crate::relational::ClockTrajectory,
    samples: Vec<EffectivePotentialSample>,
    projected: SystemTrajectory,
    integrated: SystemTrajectory,
    s_phases: Vec<[f64; 2]>,
    max_infidelity_proj_vs_int: f64,
    max_norm_drift: f64,
    max_tdse_residual: f64,
    max_decomposition_residual: f64,
    example: Option<ExampleBundle>,
}

fn run_pipeline(
    config: &RunConfig,
    grid: &[f64],
    out_dir: &Path,
    check: bool,
) -> Result<Outcome> {
    let model = resolve_model(config)?;
    let result = if model.is_reference_example {
        let bundle = run_two_level_example(grid)?;
        let max_decomposition_residual =
            max_decomposition_residual(&model, &bundle.samples, grid)?;
        PipelineResult {
            s_phases: (0..bundle.trajectory.len())
                .map(|k| [bundle.trajectory.s_phase(k).re, bundle.trajectory.s_phase(k).im])
                .collect(),
            clock: bundle.trajectory.clone(),
            samples: bundle.samples.clone(),
            projected: bundle.projected.clone(),
            integrated: bundle.integrated.clone(),
            max_infidelity_proj_vs_int: bundle.proj_vs_int.max_infidelity,
            max_norm_drift: bundle.proj_vs_int.max_norm_drift,
            max_tdse_residual: bundle.proj_vs_int.max_tdse_residual,
            max_decomposition_residual,
            example: Some(bundle),
        }
    } else {
        let (clock, samples, projected) = conditioned_run(
            model.state.psi(),
            model.spec.v_interaction(),
            &model.chi0,
            model.spec.h_clock(),
            model.state.energy(),
            grid,
        )?;
        let provider = ConditionedPotential::new(
            model.state.psi(),
            model.spec.v_interaction(),
            &model.chi0,
            model.spec.h_clock(),
            model.state.energy(),
        )?;
        let phi0 = projected.state(0).clone();
        let integrated = integrate_tdse(model.spec.h_system(), &provider, &phi0, grid)?;
        let mut report = compare(&integrated, &projected)?;
        report.max_tdse_residual =
            tdse_residual(model.spec.h_system(), &samples, &projected)?;
        let max_decomposition_residual = max_decomposition_residual(&model, &samples, grid)?;
        PipelineResult {
            s_phases: (0..clock.len())
                .map(|k| [clock.s_phase(k).re, clock.s_phase(k).im])
                .collect(),
            clock,
            samples,
            projected,
            integrated,
            max_infidelity_proj_vs_int: report.max_infidelity,
            max_norm_drift: report.max_norm_drift,
            max_tdse_residual: report.max_tdse_residual,
            max_decomposition_residual,
            example: None,
        }
    };

    // artifacts
    let mut written = Vec::new();
    if model.spec.d_s() == 2 {
        let csv_path = out_dir.join("trajectory.csv");
        write_trajectory_csv(&csv_path, &result)?;
        written.push(csv_path);
    }
    let export_path = out_dir.join("export.json");
    let export = crate::scenarios::build_export(
        &model.spec,
        &model.state,
        &model.chi0,
        grid,
        &result.clock,
        &result.samples,
        &result.projected,
        None,
    )?;
    write_json(&export_path, &serde_json::to_value(&export).expect("serializable"))?;
    written.push(export_path);

    // checks
    let tol = &config.tolerances;
    let mut failures: Vec<String> = Vec::new();
    if check {
        if result.max_infidelity_proj_vs_int > tol.infidelity {
            failures.push(format!(
                "proj-vs-int infidelity {:.3e} > {:.1e}",
                result.max_infidelity_proj_vs_int, tol.infidelity
            ));
        }
        if result.max_norm_drift > tol.norm_drift {
            failures.push(format!(
                "norm drift {:.3e} > {:.1e}",
                result.max_norm_drift, tol.norm_drift
            ));
        }
        if result.max_decomposition_residual > tol.decomposition {
            failures.push(format!(
                "decomposition residual {:.3e} > {:.1e}",
                result.max_decomposition_residual, tol.decomposition
            ));
        }
        if let Some(bundle) = &result.example {
            if bundle.proj_vs_closed.max_infidelity > tol.closed_form {
                failures.push(format!(
                    "closed-form infidelity {:.3e} > {:.1e}",
                    bundle.proj_vs_closed.max_infidelity, tol.closed_form
                ));
            }
            if bundle.max_phi_norm_error > tol.norm_drift {
                failures.push(format!(
                    "phi norm error {:.3e} > {:.1e}",
                    bundle.max_phi_norm_error, tol.norm_drift
                ));
            }
            let dev = component_deviations(&bundle.samples, &bundle.reference)?;
            let component_worst = dev.x.max(dev.z).max(dev.y_generating);
            if component_worst > tol.closed_form {
                failures.push(format!(
                    "potential component deviation {:.3e} > {:.1e}",
                    component_worst, tol.closed_form
                ));
            }
        }
    }

    let pass = failures.is_empty();
    let mode_name = if check { "verify" } else { "example" };
    let summary = if check {
        format!(
            "{}: {} | proj-vs-int infidelity {:.3e} | norm drift {:.3e} | tdse residual {:.3e} | decomposition {:.3e}{}",
            mode_name,
            if pass { "PASS" } else { "FAIL" },
            result.max_infidelity_proj_vs_int,
            result.max_norm_drift,
            result.max_tdse_residual,
            result.max_decomposition_residual,
            if pass {
                String::new()
            } else {
                format!(" | {}", failures.join("; "))
            }
        )
    } else {
        format!(
            "{}: grid [{}, {}] x {} | proj-vs-int infidelity {:.3e} | wrote {}",
            mode_name,
            config.grid.start,
            config.grid.stop,
            config.grid.points,
            result.max_infidelity_proj_vs_int,
            written
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )
    };

    let mut report = serde_json::json!({
        "mode": mode_name,
        "grid": {"start": config.grid.start, "stop": config.grid.stop, "points": config.grid.points},
        "seed": config.seed,
        "residuals": {
            "max_infidelity_proj_vs_int": result.max_infidelity_proj_vs_int,
            "max_norm_drift": result.max_norm_drift,
            "max_tdse_residual": result.max_tdse_residual,
            "max_decomposition_residual": result.max_decomposition_residual,
        },
        "tolerances": {
            "infidelity": tol.infidelity,
            "norm_drift": tol.norm_drift,
            "decomposition": tol.decomposition,
            "closed_form": tol.closed_form,
        },
        "pass": pass,
    });
    if let Some(bundle) = &result.example {
        let dev = component_deviations(&bundle.samples, &bundle.reference)?;
        report["closed_form"] = serde_json::json!({
            "max_infidelity_vs_closed_form": bundle.proj_vs_closed.max_infidelity,
            "max_phi_norm_error": bundle.max_phi_norm_error,
            "component_deviation_x": dev.x,
            "component_deviation_z": dev.z,
            "component_deviation_y_generating": dev.y_generating,
            "component_deviation_y_tabulated": dev.y_tabulated,
        });
    }

    Ok(Outcome {
        exit_code: if pass { 0 } else { 2 },
        summary,
        report: serde_json::to_string(&report).expect("serializable"),
    })
}

fn max_decomposition_residual(
    model: &ResolvedModel,
    samples: &[EffectivePotentialSample],
    grid: &[f64],
) -> Result<f64> {
    let evolver = crate::relational::ClockEvolver::new(
        &model.chi0,
        model.spec.h_clock(),
        model.state.energy(),
    )?;
    let mut worst = 0.0f64;
    for (k, &l) in grid.iter().enumerate() {
        let chi = evolver.state_at(l);
        let (u, phi) = conditioned_pair(model.state.psi(), &chi, model.spec.v_interaction())?;
        worst = worst.max(verify_decomposition(&samples[k], &u, &phi)?);
    }
    Ok(worst)
}

fn run_generate(config: &RunConfig, grid: &[f64], out_dir: &Path) -> Result<Outcome> {
    let model = resolve_model(config)?;
    let export = generate_solvable(&model.spec, &model.state, &model.chi0, grid, None)?;
    let path = out_dir.join("export.json");
    write_json(&path, &serde_json::to_value(&export).expect("serializable"))?;
    let summary = format!(
        "generate: exported {} points | tdse residual {:.3e} <= threshold {:.3e} | wrote {}",
        export.records.len(),
        export.metadata.max_tdse_residual,
        export.metadata.residual_threshold,
        path.display()
    );
    let report = serde_json::json!({
        "mode": "generate",
        "points": export.records.len(),
        "max_tdse_residual": export.metadata.max_tdse_residual,
        "residual_threshold": export.metadata.residual_threshold,
        "generator_scale": export.metadata.generator_scale,
        "pass": true,
    });
    Ok(Outcome {
        exit_code: 0,
        summary,
        report: serde_json::to_string(&report).expect("serializable"),
    })
}

fn run_readout(config: &RunConfig, grid: &[f64], out_dir: &Path) -> Result<Outcome> {
    let model = resolve_model(config)?;
    let observable = match &config.observable {
        Some(rows) => {
            let m = pairs_to_matrix(rows, model.spec.d_c(), "observable")?;
            if !m.is_hermitian(crate::hilbert::HERMITICITY_TOL) {
                return Err(Error::ConfigInvalid("observable must be Hermitian".into()));
            }
            m
        }
        None if model.spec.d_c() == 2 => pauli(PauliAxis::X),
        None => {
            return Err(Error::ConfigInvalid(
                "readout mode requires an observable for clock dimension > 2".into(),
            ))
        }
    };
    let clock = crate::relational::ClockTrajectory::evolve(
        &model.chi0,
        model.spec.h_clock(),
        model.state.energy(),
        grid,
    )?;
    let curve = expectation_curve(&observable, &clock)?;
    let spectrum = resolution_spectrum(&model.chi0, model.spec.h_clock())?;

    let path = out_dir.join("readout.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(file, "lambda,value")?;
    for (l, v) in curve.grid().iter().zip(curve.values()) {
        writeln!(file, "{},{}", fmt17(*l), fmt17(*v))?;
    }
    file.flush()?;

    let inverted = match config.observed_value {
        Some(value) => Some(invert_readout(&curve, value)?),
        None => None,
    };
    let summary = format!(
        "readout: participation ratio {:.6} | {} points | {}wrote {}",
        spectrum.participation_ratio(),
        curve.values().len(),
        inverted
            .map(|l| format!("inverted lambda {:.6} | ", l))
            .unwrap_or_default(),
        path.display()
    );
    let report = serde_json::json!({
        "mode": "readout",
        "participation_ratio": spectrum.participation_ratio(),
        "points": curve.values().len(),
        "inverted_lambda": inverted,
        "pass": true,
    });
    Ok(Outcome {
        exit_code: 0,
        summary,
        report: serde_json::to_string(&report).expect("serializable"),
    })
}

/// 17-significant-digit decimal formatting: round-trip exact for f64.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_trajectory_csv(path: &Path, result: &PipelineResult) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        file,
        "lambda,vs_0,vs_x,vs_y,vs_z,escript_re,escript_im,s_re,s_im,n_overlap,phi_norm,infidelity_proj_vs_int"
    )?;
    for (k, sample) in result.samples.iter().enumerate() {
        let c = pauli_components(sample.v_s())?;
        let e = sample.e_script();
        let s = result.s_phases[k];
        let phi = result.projected.state(k);
        let infid = infidelity(phi, result.integrated.state(k));
        writeln!(
            file,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt17(sample.lambda()),
            fmt17(c.v0),
            fmt17(c.vx),
            fmt17(c.vy),
            fmt17(c.vz),
            fmt17(e.re),
            fmt17(e.im),
            fmt17(s[0]),
            fmt17(s[1]),
            fmt17(sample.overlap_n()),
            fmt17(phi.norm()),
            fmt17(infid),
        )?;
    }
    file.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}
