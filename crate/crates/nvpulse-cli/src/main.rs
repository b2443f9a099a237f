//! `nvpulse` — pulse synthesis, refinement, circuit simulation, and
//! misalignment surveys from JSON run configurations.
//!
//! Every run reads one JSON config (`--config`), computes the full result,
//! and only then writes a single output file (`--out`): a failed run never
//! leaves a partial file behind. Grid-shaped results are CSV with two
//! leading comment lines (the config's SHA-256 and the physical-constants
//! table); single results are JSON embedding the same two fields. Outputs
//! are byte-identical for identical config bytes and `--seed`.
//!
//! Exit codes: 0 success, 1 configuration/input error, 2 solver failure.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use nvpulse::circuits::{
    duration_sweep, qft_benchmark_circuit, sample_shot_convergence, simulate_circuit, decompose,
    Circuit, CircuitReport, DurationSweepRow, GateSpec, ShotSample, SimulationMode, TimingModel,
};
use nvpulse::gate_synth::{
    linewidth_sweep, synthesize, AmplitudeBounds, GateKind, GateTarget, NoiseModel, SweepRow,
};
use nvpulse::lindblad::DephasingModel;
use nvpulse::misalignment::{survey_sites, SiteSpec, SiteSurveyRow, DEFAULT_SURVEY_PHI};
use nvpulse::pulse_basis::{PulseWaveform, SincBasis};
use nvpulse::spin_model::{PhysicalConstants, Register};
use nvpulse::time_ordered::{
    hierarchical_refine, PropagatorSettings, RefineReport, RefinementGrid,
};
use nvpulse::{Error, Result};

#[derive(Parser)]
#[command(
    name = "nvpulse",
    version,
    about = "Frequency-selective pulse synthesis and open-system simulation \
             for NV-centre nuclear-spin registers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-step pulse synthesis over a (τ, M, σ-multiplier) grid.
    ///
    /// One grid cell emits the full synthesis result as JSON; several
    /// cells emit a CSV sweep table.
    Synthesize(RunArgs),
    /// Exact time-ordered coefficient refinement of one pulse (hierarchical
    /// coarse→fine offset grid), reported as JSON.
    Refine(RunArgs),
    /// Dephasing-limited circuit simulation: JSON report (optionally with a
    /// seeded shot-convergence trace), or a CSV gate-duration sweep.
    Simulate(RunArgs),
    /// Tilt angles and conditional-gate penalties for a table of candidate
    /// nuclear sites, as CSV.
    SurveyMisalignment(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// output file; written only after the whole run has succeeded
    #[arg(long)]
    out: PathBuf,
    /// seed for sampling steps (the simulate shot trace); other runs are
    /// deterministic without it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// worker threads for grid evaluation; 0 = one per core (inert in a
    /// build without the `parallel` feature)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ Error::Solver(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let args = match &cli.command {
        Command::Synthesize(a)
        | Command::Refine(a)
        | Command::Simulate(a)
        | Command::SurveyMisalignment(a) => a,
    };
    init_threads(args.threads)?;
    let raw = fs::read(&args.config).map_err(|e| {
        Error::config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let sha = hex_sha256(&raw);

    let output = match &cli.command {
        Command::Synthesize(_) => cmd_synthesize(&raw, &sha)?,
        Command::Refine(_) => cmd_refine(&raw, &sha)?,
        Command::Simulate(_) => cmd_simulate(&raw, &sha, args.seed)?,
        Command::SurveyMisalignment(_) => cmd_survey_misalignment(&raw, &sha)?,
    };
    fs::write(&args.out, output)
        .map_err(|e| Error::config(format!("cannot write {}: {e}", args.out.display())))
}

#[cfg(feature = "parallel")]
fn init_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::config(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: usize) -> Result<()> {
    Ok(())
}

fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

/// The numerical constants every run rests on, embedded in each output so
/// results stay interpretable after defaults change.
fn constants_table() -> Value {
    serde_json::json!({
        "gamma_e_rad_per_s_per_t": nvpulse::spin_model::GAMMA_E,
        "d_zfs_rad_per_s": nvpulse::spin_model::D_ZFS,
        "gamma_c13_rad_per_s_per_t": nvpulse::spin_model::GAMMA_C13,
        "gamma_n15_rad_per_s_per_t": nvpulse::spin_model::GAMMA_N15,
        "angle_prefactor": nvpulse::pulse_basis::ANGLE_PREFACTOR,
        "default_shift_fraction": nvpulse::pulse_basis::DEFAULT_SHIFT_FRACTION,
        "nuclear_linewidth_rad_per_s": nvpulse::gate_synth::NUCLEAR_LINEWIDTH,
        "electron_linewidth_rad_per_s": nvpulse::gate_synth::ELECTRON_LINEWIDTH,
        "default_sigma_epsilon": nvpulse::gate_synth::DEFAULT_SIGMA_EPSILON,
        "default_sigma_phi_rad": nvpulse::gate_synth::DEFAULT_SIGMA_PHI,
        "default_t2_s": nvpulse::lindblad::DEFAULT_T2,
    })
}

#[derive(Serialize)]
struct JsonEnvelope<T: Serialize> {
    config_sha256: String,
    constants: Value,
    result: T,
}

fn render_json<T: Serialize>(sha: &str, result: T) -> Result<String> {
    let envelope = JsonEnvelope {
        config_sha256: sha.to_string(),
        constants: constants_table(),
        result,
    };
    serde_json::to_string_pretty(&envelope)
        .map(|s| s + "\n")
        .map_err(|e| Error::config(format!("cannot serialize result: {e}")))
}

fn render_csv(sha: &str, header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config_sha256={sha}");
    let _ = writeln!(out, "# constants: {}", constants_table());
    let _ = writeln!(out, "{header}");
    for row in rows {
        let _ = writeln!(out, "{row}");
    }
    out
}

fn parse_config<'a, T: Deserialize<'a>>(raw: &'a [u8]) -> Result<T> {
    serde_json::from_slice(raw).map_err(|e| Error::config(format!("invalid config: {e}")))
}

// ------------------------------------------------------------ registers --

/// Target gate named the way configs spell it.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum GateConfig {
    X { target_qubit: usize, angle_rad: f64 },
    Y { target_qubit: usize, angle_rad: f64 },
    Cz,
}

impl GateConfig {
    fn target(&self) -> Result<GateTarget> {
        match *self {
            GateConfig::X { target_qubit, angle_rad } => GateTarget::single_x(target_qubit, angle_rad),
            GateConfig::Y { target_qubit, angle_rad } => GateTarget::single_y(target_qubit, angle_rad),
            GateConfig::Cz => Ok(GateTarget::cz()),
        }
    }
}

fn resolve_register(inline: &Option<Value>, path: &Option<PathBuf>) -> Result<Register> {
    match (inline, path) {
        (Some(_), Some(_)) => Err(Error::config(
            "give either `register` (inline) or `register_path`, not both",
        )),
        (Some(value), None) => Register::from_config_json(&value.to_string()),
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| {
                Error::config(format!("cannot read register {}: {e}", p.display()))
            })?;
            Register::from_config_json(&text)
        }
        (None, None) => Ok(Register::default_nv()),
    }
}

fn default_noise(kind: GateKind) -> NoiseModel {
    match kind {
        GateKind::Cz => NoiseModel::cz_default(),
        _ => NoiseModel::single_qubit_default(),
    }
}

fn default_bounds(kind: GateKind) -> AmplitudeBounds {
    match kind {
        GateKind::Cz => AmplitudeBounds::cz_default(),
        _ => AmplitudeBounds::single_qubit_default(),
    }
}

// ------------------------------------------------------------ synthesize --

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthesizeConfig {
    register: Option<Value>,
    register_path: Option<PathBuf>,
    gate: GateConfig,
    /// pulse lengths, μs
    tau_grid_us: Vec<f64>,
    /// basis sizes M
    basis_counts: Vec<usize>,
    /// multipliers on the frequency-noise width (default: just 1)
    #[serde(default = "one_multiplier")]
    sigma_multipliers: Vec<f64>,
    /// full noise model override; defaults depend on the gate kind
    noise: Option<NoiseModel>,
    /// amplitude window override; defaults depend on the gate kind
    bounds: Option<AmplitudeBounds>,
}

fn one_multiplier() -> Vec<f64> {
    vec![1.0]
}

#[derive(Serialize)]
struct SynthesisDocument {
    gate: GateTarget,
    tau_s: f64,
    basis_count: usize,
    sigma_multiplier: f64,
    #[serde(flatten)]
    result: nvpulse::gate_synth::SynthesisResult,
}

fn cmd_synthesize(raw: &[u8], sha: &str) -> Result<String> {
    let cfg: SynthesizeConfig = parse_config(raw)?;
    let register = resolve_register(&cfg.register, &cfg.register_path)?;
    let target = cfg.gate.target()?;
    let noise = cfg.noise.unwrap_or_else(|| default_noise(target.kind));
    let bounds = cfg.bounds.unwrap_or_else(|| default_bounds(target.kind));
    let tau_grid: Vec<f64> = cfg.tau_grid_us.iter().map(|t| t * 1e-6).collect();

    let cells = tau_grid.len() * cfg.basis_counts.len() * cfg.sigma_multipliers.len();
    if cells == 1 {
        let noise = NoiseModel {
            sigma_delta: cfg.sigma_multipliers[0] * noise.sigma_delta,
            ..noise
        };
        let result = synthesize(&register, &target, tau_grid[0], cfg.basis_counts[0], &bounds, &noise)?;
        return render_json(
            sha,
            SynthesisDocument {
                gate: target,
                tau_s: tau_grid[0],
                basis_count: cfg.basis_counts[0],
                sigma_multiplier: cfg.sigma_multipliers[0],
                result,
            },
        );
    }

    let rows = linewidth_sweep(
        &register,
        &target,
        &tau_grid,
        &cfg.basis_counts,
        &cfg.sigma_multipliers,
        &bounds,
        &noise,
    )?;
    Ok(render_csv(sha, SweepRow::CSV_HEADER, rows.iter().map(SweepRow::to_csv)))
}

// ---------------------------------------------------------------- refine --

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RefineConfig {
    register: Option<Value>,
    register_path: Option<PathBuf>,
    gate: GateConfig,
    /// pulse length, μs
    tau_us: f64,
    /// combination coefficients to start from, rad/s; when absent the pulse
    /// is synthesized first with `basis_count` components
    coefficients_rad_s: Option<Vec<f64>>,
    basis_count: Option<usize>,
    /// offset window per coefficient, rad/s
    window_lo_rad_s: f64,
    window_hi_rad_s: f64,
    coarse_step_rad_s: f64,
    fine_step_rad_s: f64,
    /// time steps per 1 μs of pulse (default 8000)
    steps: Option<usize>,
    /// Gauss–Hermite nodes per noise dimension for the refinement average
    /// (default 7; the quadratic-model default of 21 is needless here)
    quadrature_nodes: Option<usize>,
    noise: Option<NoiseModel>,
}

fn cmd_refine(raw: &[u8], sha: &str) -> Result<String> {
    let cfg: RefineConfig = parse_config(raw)?;
    let register = resolve_register(&cfg.register, &cfg.register_path)?;
    let target = cfg.gate.target()?;
    let tau = cfg.tau_us * 1e-6;
    let noise = {
        let mut n = cfg.noise.unwrap_or_else(|| default_noise(target.kind));
        if let Some(nodes) = cfg.quadrature_nodes {
            n.quadrature_nodes = nodes;
        } else if cfg.noise.is_none() {
            n.quadrature_nodes = 7;
        }
        n
    };
    let settings = cfg.steps.map_or_else(PropagatorSettings::default, PropagatorSettings::with_steps);

    let coefficients = match (&cfg.coefficients_rad_s, cfg.basis_count) {
        (Some(c), _) if !c.is_empty() => c.clone(),
        (Some(_), _) => return Err(Error::config("coefficients_rad_s must be non-empty")),
        (None, Some(m)) => {
            let bounds = default_bounds(target.kind);
            synthesize(&register, &target, tau, m, &bounds, &noise)?.combination
        }
        (None, None) => {
            return Err(Error::config(
                "refine needs either coefficients_rad_s or basis_count",
            ))
        }
    };
    let basis = SincBasis::with_default_shift(tau, coefficients.len())?;
    let waveform = PulseWaveform::new(
        basis,
        target.quadrature(),
        target.carrier(&register)?,
        coefficients,
    )?;

    let outcome = hierarchical_refine(
        &register,
        &waveform,
        &target,
        &noise,
        cfg.window_lo_rad_s,
        cfg.window_hi_rad_s,
        cfg.coarse_step_rad_s,
        cfg.fine_step_rad_s,
        &settings,
    )?;
    let report = RefineReport {
        c: waveform.coefficients.clone(),
        d: outcome.offsets,
        n: settings.effective_steps(tau),
        unrefined_infidelity: outcome.unrefined_infidelity,
        refined_infidelity: outcome.refined_infidelity,
        grid_spec: RefinementGrid::uniform(
            waveform.coefficients.len(),
            cfg.window_lo_rad_s,
            cfg.window_hi_rad_s,
            cfg.coarse_step_rad_s,
        )?,
        path: outcome.path,
    };
    render_json(sha, report)
}

// -------------------------------------------------------------- simulate --

#[derive(Deserialize)]
#[serde(untagged)]
enum CircuitSource {
    /// n-qubit transform benchmark: prep of |0…01⟩ plus the transform
    Benchmark { qft_benchmark: usize },
    /// any single decomposable gate on its minimal register
    Gate(GateSpec),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum T2Config {
    Uniform(f64),
    PerQubit(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    circuit: CircuitSource,
    /// dephasing time(s), seconds: one number for a uniform register or one
    /// per qubit (default: 1.8 ms everywhere)
    t2_s: Option<T2Config>,
    timing: Option<TimingModel>,
    /// re-simulate with pulse durations scaled by each entry and emit a CSV
    /// sweep instead of the JSON report
    duration_multiples: Option<Vec<f64>>,
    /// append a seeded shot-convergence trace to the JSON report
    shots: Option<usize>,
}

#[derive(Serialize)]
struct SimulateDocument {
    n_qubits: usize,
    pulse_count: usize,
    report: CircuitReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shot_trace: Option<Vec<ShotSample>>,
}

fn cmd_simulate(raw: &[u8], sha: &str, seed: u64) -> Result<String> {
    let cfg: SimulateConfig = parse_config(raw)?;
    let timing = cfg.timing.unwrap_or_default();
    let circuit: Circuit = match &cfg.circuit {
        CircuitSource::Benchmark { qft_benchmark } => qft_benchmark_circuit(*qft_benchmark, &timing)?,
        CircuitSource::Gate(spec) => decompose(spec, &timing)?,
    };
    let model = match cfg.t2_s {
        None => DephasingModel::uniform(circuit.n, nvpulse::lindblad::DEFAULT_T2)?,
        Some(T2Config::Uniform(t2)) => DephasingModel::uniform(circuit.n, t2)?,
        Some(T2Config::PerQubit(t2)) => {
            if t2.len() != circuit.n {
                return Err(Error::config(format!(
                    "t2_s lists {} qubits for a {}-qubit circuit",
                    t2.len(),
                    circuit.n
                )));
            }
            DephasingModel::new(t2)?
        }
    };

    if let Some(multiples) = &cfg.duration_multiples {
        let rows = duration_sweep(&circuit, &timing, &model, multiples)?;
        return Ok(render_csv(
            sha,
            DurationSweepRow::CSV_HEADER,
            rows.iter().map(DurationSweepRow::to_csv),
        ));
    }

    let report = simulate_circuit(
        &circuit,
        &timing,
        &model,
        SimulationMode::PerfectGatesWithDephasing,
    )?;
    let shot_trace = match cfg.shots {
        Some(shots) => Some(sample_shot_convergence(
            report.fidelity,
            shots,
            report.shot_time + report.readout_time,
            seed,
        )?),
        None => None,
    };
    render_json(
        sha,
        SimulateDocument {
            n_qubits: circuit.n,
            pulse_count: circuit.count_pulses(),
            seed: shot_trace.as_ref().map(|_| seed),
            shot_trace,
            report,
        },
    )
}

// -------------------------------------------------- survey-misalignment --

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SurveyConfig {
    sites: Vec<SiteSpec>,
    /// axial field, tesla (default 0.62)
    b0_t: Option<f64>,
    /// nuclear gyromagnetic ratio, rad/s/T (default ¹³C)
    gamma_n_rad_per_s_per_t: Option<f64>,
    /// conditional-gate duration, seconds (default 1 μs)
    tau_s: Option<f64>,
    /// drive azimuth, rad (default π/2)
    phi_rad: Option<f64>,
}

fn cmd_survey_misalignment(raw: &[u8], sha: &str) -> Result<String> {
    let cfg: SurveyConfig = parse_config(raw)?;
    let rows = survey_sites(
        &cfg.sites,
        &PhysicalConstants::default(),
        cfg.gamma_n_rad_per_s_per_t
            .unwrap_or(nvpulse::spin_model::GAMMA_C13),
        cfg.b0_t.unwrap_or_else(|| Register::default_nv().b0),
        cfg.tau_s.unwrap_or(1e-6),
        cfg.phi_rad.unwrap_or(DEFAULT_SURVEY_PHI),
    )?;
    Ok(render_csv(
        sha,
        SiteSurveyRow::CSV_HEADER,
        rows.iter().map(SiteSurveyRow::to_csv),
    ))
}
