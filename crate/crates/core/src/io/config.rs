use std::path::{Path, PathBuf};

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::control::{Integrator, MostProbablePathParams};
use crate::measurement::{GaussianMeasurementConfig, PositionGridConfig};
use crate::qstate::{normalize, QuantumState};
use crate::trajectory::{OscillatorRunConfig, StopCondition};
use crate::{Tolerances, C64};

// Initial-state norm deviation above which a warning is printed before normalizing.
const STATE_NORM_WARNING: f64 = 1e-3;
/// Largest level count or grid size accepted from a configuration; operators
/// are dense, so anything larger is impractical.
pub const MAX_DIMENSION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Ensemble,
    Reconstruct,
    Oscillator,
    Mpp,
    Freeze,
    Kernel,
    Dualaxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Trajectory,
    Reconstruction,
    Stats,
    Plotdata,
}

/// Every configurable value, all optional. This is the file format (TOML, or
/// the `config` object of a JSON header) and the echo written into outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit: Option<Vec<Emit>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bloch: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RawConfig {
    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RawConfig) -> RawConfig {
        overlay!(self, top; mode, seed, n, lambda, tau, dt, tmax, state, out, emit, trajectories, threshold,
            x0, grid_points, half_width, mass, omega, zf, duration, epsilon, bloch, integrator, steps, control,
            tau_x, input);
        self
    }

    pub fn from_toml_str(text: &str) -> Result<RawConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads the `config` object of a JSON document, or of the first line of
    /// a JSON-lines file.
    pub fn from_json_header(text: &str) -> Result<RawConfig, String> {
        let first = text.lines().next().unwrap_or_default();
        let value: serde_json::Value = serde_json::from_str(first).map_err(|e| e.to_string())?;
        let config = value.get("config").cloned().ok_or("header has no `config` object")?;
        serde_json::from_value(config).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    JsonHeader,
}

impl ConfigFormat {
    fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") | Some("jsonl") => ConfigFormat::JsonHeader,
            _ => ConfigFormat::Toml,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "collapse-lab",
    version,
    allow_negative_numbers = true,
    about = "Continuous-measurement collapse trajectories and their generators"
)]
struct Args {
    /// What to run.
    #[arg(value_enum)]
    mode: Option<Mode>,
    /// TOML file, or a JSON/JSON-lines output whose header config is reused.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of levels.
    #[arg(long)]
    n: Option<usize>,
    /// Pointer eigenvalues, comma separated.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Measurement time scale.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    /// Amplitudes (`0.6,0.8`, `0.3+0.4i,...`) or a preset: `uniform`, `basis:K`.
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Outputs to produce, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    emit: Option<Vec<Emit>>,
    /// Ensemble size.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Collapse threshold on the largest population.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Final z of the most probable path.
    #[arg(long)]
    zf: Option<f64>,
    /// Duration T of the most probable path.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Initial Bloch vector `x,y,z` of the most probable path.
    #[arg(long, value_delimiter = ',')]
    bloch: Option<Vec<f64>>,
    /// `rk4` or `exponential`.
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    /// Freeze controller on or off.
    #[arg(long)]
    control: Option<bool>,
    /// Time scale of the x measurement in dual-axis mode; omit for z only.
    #[arg(long)]
    tau_x: Option<f64>,
    /// Trajectory file to reconstruct.
    #[arg(long)]
    input: Option<PathBuf>,
}

impl Args {
    fn into_raw(self) -> (Option<PathBuf>, RawConfig) {
        let raw = RawConfig {
            mode: self.mode,
            seed: self.seed,
            n: self.n,
            lambda: self.lambda,
            tau: self.tau,
            dt: self.dt,
            tmax: self.tmax,
            state: self.state,
            out: self.out,
            emit: self.emit,
            trajectories: self.trajectories,
            threshold: self.threshold,
            x0: self.x0,
            grid_points: self.grid_points,
            half_width: self.half_width,
            mass: self.mass,
            omega: self.omega,
            zf: self.zf,
            duration: self.duration,
            epsilon: self.epsilon,
            bloch: self.bloch,
            integrator: self.integrator,
            steps: self.steps,
            control: self.control,
            tau_x: self.tau_x,
            input: self.input,
        };
        (self.config, raw)
    }
}

/// Typed parameters of one mode.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeConfig {
    Simulate {
        measurement: GaussianMeasurementConfig,
        initial: QuantumState,
        stop: StopCondition,
    },
    Ensemble {
        measurement: GaussianMeasurementConfig,
        initial: QuantumState,
        stop: StopCondition,
        trajectories: usize,
    },
    Reconstruct {
        input: PathBuf,
    },
    Oscillator(OscillatorRunConfig),
    Mpp {
        params: MostProbablePathParams,
        dt: f64,
        integrator: Integrator,
    },
    Freeze {
        measurement: GaussianMeasurementConfig,
        initial: QuantumState,
        steps: usize,
        control: bool,
    },
    Kernel {
        initial: QuantumState,
    },
    Dualaxis {
        measurement: GaussianMeasurementConfig,
        x_measurement: Option<GaussianMeasurementConfig>,
        initial: QuantumState,
        t_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub emit: Vec<Emit>,
    pub params: ModeConfig,
    /// Effective configuration with defaults filled in and `out` removed;
    /// feeding it back through `--config` reproduces the run.
    pub echo: RawConfig,
}

impl RunConfig {
    pub fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: RunConfig,
    /// Soft problems to report on stderr.
    pub warnings: Vec<String>,
}

fn clap_to_cli_error(err: clap::Error) -> CliError {
    let arg = match err.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s.clone(),
        _ => String::new(),
    };
    match err.kind() {
        ErrorKind::UnknownArgument => CliError::UnknownFlag(arg),
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            CliError::Help(err.to_string())
        }
        _ => {
            let field = arg.trim_start_matches('-').split([' ', '=']).next().unwrap_or_default().replace('-', "_");
            let field = if field.is_empty() { "mode".to_string() } else { field };
            CliError::invalid(&field, err.kind().to_string())
        }
    }
}

fn read_config_file(path: &Path) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = match ConfigFormat::for_path(path) {
        ConfigFormat::Toml => RawConfig::from_toml_str(&text),
        ConfigFormat::JsonHeader => RawConfig::from_json_header(&text),
    };
    parsed.map_err(|message| CliError::Parse { path: path.to_path_buf(), message })
}

/// Parses command-line arguments (without the program name). Values given on
/// the command line override those of the `--config` file.
pub fn parse_config<I, S>(args: I) -> Result<ParsedConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("collapse-lab")).chain(args.into_iter().map(Into::into));
    let args = Args::try_parse_from(argv).map_err(clap_to_cli_error)?;
    let (file, cli) = args.into_raw();
    let base = match file {
        Some(path) => read_config_file(&path)?,
        None => RawConfig::default(),
    };
    resolve_config(base.overlay(cli))
}

fn positive(field: &str, v: Option<f64>) -> Result<f64, CliError> {
    match v {
        None => Err(CliError::invalid(field, "required")),
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(CliError::invalid(field, format!("must be positive and finite, got {x}"))),
    }
}

fn finite(field: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::invalid(field, "must be finite"))
    }
}

fn parse_amplitude(entry: &str) -> Option<C64> {
    let e = entry.trim();
    if let Ok(x) = e.parse::<f64>() {
        return Some(C64::new(x, 0.0));
    }
    let body = e.strip_suffix('i')?;
    if let Ok(y) = body.parse::<f64>() {
        return Some(C64::new(0.0, y));
    }
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
    let re = body[..split].parse::<f64>().ok()?;
    let im = body[split..].trim_start_matches('+').parse::<f64>().ok()?;
    Some(C64::new(re, im))
}

/// Builds a state from an amplitude list or a preset (`uniform`, `basis:K`).
/// `n` is needed only for presets. Returns a warning when an explicit list was
/// noticeably off-normalized.
pub fn parse_state(spec: &str, n: Option<usize>) -> Result<(QuantumState, Option<String>), CliError> {
    let need_n = || match n {
        None => Err(CliError::invalid("n", "needed to expand the state preset")),
        Some(n) if n > MAX_DIMENSION => Err(CliError::invalid("n", format!("at most {MAX_DIMENSION} levels"))),
        Some(n) => Ok(n),
    };
    let spec = spec.trim();
    let bad = |e: crate::Error| CliError::invalid("state", e.to_string());
    if spec == "uniform" {
        let n = need_n()?;
        return Ok((QuantumState::from_real(&vec![1.0; n]).map_err(bad)?, None));
    }
    if let Some(k) = spec.strip_prefix("basis:") {
        let k: usize = k.parse().map_err(|_| CliError::invalid("state", format!("bad basis index `{k}`")))?;
        return Ok((QuantumState::basis_state(need_n()?, k).map_err(bad)?, None));
    }
    let amps = spec
        .split(',')
        .map(|e| parse_amplitude(e).filter(|z| z.re.is_finite() && z.im.is_finite()))
        .collect::<Option<Vec<C64>>>()
        .ok_or_else(|| CliError::invalid("state", format!("cannot parse amplitudes `{spec}`")))?;
    if let Some(n) = n {
        if amps.len() != n {
            return Err(CliError::invalid("state", format!("{} amplitudes for n = {n}", amps.len())));
        }
    }
    let raw = QuantumState::from_amplitudes(amps).map_err(bad)?;
    let norm = raw.norm();
    let warning = ((norm - 1.0).abs() > STATE_NORM_WARNING).then(|| format!("initial state norm {norm}; normalized"));
    Ok((normalize(&raw).map_err(bad)?, warning))
}

struct Builder {
    raw: RawConfig,
    warnings: Vec<String>,
}

impl Builder {
    fn levels(&self) -> Option<usize> {
        self.raw.lambda.as_ref().map(Vec::len).or(self.raw.n)
    }

    fn measurement(
        &mut self,
        mode: &str,
        default_lambda: Option<Vec<f64>>,
    ) -> Result<GaussianMeasurementConfig, CliError> {
        if self.raw.lambda.is_none() {
            self.raw.lambda = default_lambda;
        }
        let lambda =
            self.raw.lambda.clone().ok_or_else(|| CliError::invalid("lambda", format!("required in {mode} mode")))?;
        if let Some(n) = self.raw.n {
            if n != lambda.len() {
                return Err(CliError::invalid("n", format!("n = {n} but {} eigenvalues given", lambda.len())));
            }
        }
        let tau = positive("tau", self.raw.tau)?;
        let dt = positive("dt", self.raw.dt)?;
        let cfg =
            GaussianMeasurementConfig::new(tau, dt, lambda).map_err(|e| CliError::invalid("lambda", e.to_string()))?;
        self.warnings.extend(cfg.weak_regime_warning());
        Ok(cfg)
    }

    fn state(&mut self, default: &str) -> Result<QuantumState, CliError> {
        let spec = self.raw.state.get_or_insert_with(|| default.to_string()).clone();
        let (state, warning) = parse_state(&spec, self.levels())?;
        self.warnings.extend(warning);
        Ok(state)
    }

    fn stop(&mut self, tau: f64) -> Result<StopCondition, CliError> {
        let t_max = finite("tmax", *self.raw.tmax.get_or_insert(50.0 * tau))?;
        let threshold = *self.raw.threshold.get_or_insert(Tolerances::DEFAULT.collapse_threshold);
        if !(threshold > 0.0) {
            return Err(CliError::invalid("threshold", "must be positive"));
        }
        if t_max < 0.0 {
            return Err(CliError::invalid("tmax", "must be non-negative"));
        }
        Ok(StopCondition { t_max, collapse_threshold: threshold })
    }
}

fn default_emit(mode: Mode) -> Vec<Emit> {
    match mode {
        Mode::Ensemble => vec![Emit::Stats],
        Mode::Oscillator | Mode::Mpp | Mode::Freeze | Mode::Kernel => vec![Emit::Plotdata],
        Mode::Reconstruct => vec![Emit::Trajectory, Emit::Reconstruction],
        Mode::Simulate | Mode::Dualaxis => vec![Emit::Trajectory],
    }
}

/// Validates a merged configuration and fills in defaults.
pub fn resolve_config(raw: RawConfig) -> Result<ParsedConfig, CliError> {
    let mode = raw.mode.ok_or_else(|| CliError::invalid("mode", "no mode given"))?;
    let mut b = Builder { raw, warnings: Vec::new() };
    let seed = *b.raw.seed.get_or_insert(0);
    let emit = b.raw.emit.get_or_insert_with(|| default_emit(mode)).clone();
    let params = match mode {
        Mode::Simulate => {
            let measurement = b.measurement("simulate", None)?;
            let initial = b.state("uniform")?;
            let stop = b.stop(measurement.tau())?;
            ModeConfig::Simulate { measurement, initial, stop }
        }
        Mode::Ensemble => {
            let measurement = b.measurement("ensemble", None)?;
            let initial = b.state("uniform")?;
            let stop = b.stop(measurement.tau())?;
            let trajectories = *b.raw.trajectories.get_or_insert(1000);
            if trajectories == 0 {
                return Err(CliError::invalid("trajectories", "must be at least 1"));
            }
            if b.raw.out.is_none() {
                return Err(CliError::invalid("out", "ensemble mode writes a CSV and a sidecar; give --out"));
            }
            ModeConfig::Ensemble { measurement, initial, stop, trajectories }
        }
        Mode::Reconstruct => {
            let input =
                b.raw.input.clone().ok_or_else(|| CliError::invalid("input", "required in reconstruct mode"))?;
            ModeConfig::Reconstruct { input }
        }
        Mode::Oscillator => {
            let tau = positive("tau", b.raw.tau)?;
            let dt = positive("dt", b.raw.dt)?;
            let x0 = finite("x0", *b.raw.x0.get_or_insert(0.0))?;
            let t_max = finite("tmax", *b.raw.tmax.get_or_insert(2.0 * tau))?;
            let points = *b.raw.grid_points.get_or_insert(512);
            if points > MAX_DIMENSION {
                return Err(CliError::invalid("grid_points", format!("at most {MAX_DIMENSION} points")));
            }
            let half_width = positive("half_width", Some(*b.raw.half_width.get_or_insert(8.0)))?;
            let mass = positive("mass", Some(*b.raw.mass.get_or_insert(1.0)))?;
            let omega = positive("omega", Some(*b.raw.omega.get_or_insert(1.0)))?;
            let grid = PositionGridConfig::centered(x0, half_width, points, mass, omega);
            ModeConfig::Oscillator(OscillatorRunConfig { grid, x0, tau, dt, t_max, seed })
        }
        Mode::Mpp => {
            let zf = b.raw.zf.ok_or_else(|| CliError::invalid("zf", "required in mpp mode"))?;
            let bloch = b.raw.bloch.get_or_insert_with(|| vec![1.0, 0.0, 0.0]).clone();
            if bloch.len() != 3 {
                return Err(CliError::invalid("bloch", format!("expected 3 components, got {}", bloch.len())));
            }
            let params = MostProbablePathParams {
                x_i: bloch[0],
                y_i: bloch[1],
                z_i: bloch[2],
                z_f: zf,
                duration: positive("duration", Some(*b.raw.duration.get_or_insert(1.0)))?,
                epsilon: finite("epsilon", *b.raw.epsilon.get_or_insert(0.0))?,
                tau: positive("tau", Some(*b.raw.tau.get_or_insert(1.0)))?,
                delta: 0.0,
            };
            params.validate().map_err(|e| CliError::invalid("zf", e.to_string()))?;
            let dt = positive("dt", Some(*b.raw.dt.get_or_insert(1e-4)))?;
            let integrator = match b.raw.integrator.get_or_insert_with(|| "rk4".into()).as_str() {
                "rk4" => Integrator::Rk4,
                "exponential" => Integrator::Exponential,
                other => return Err(CliError::invalid("integrator", format!("`{other}` is not rk4 or exponential"))),
            };
            ModeConfig::Mpp { params, dt, integrator }
        }
        Mode::Freeze => {
            let measurement = b.measurement("freeze", None)?;
            let initial = b.state("uniform")?;
            let steps = *b.raw.steps.get_or_insert(10_000);
            let control = *b.raw.control.get_or_insert(true);
            ModeConfig::Freeze { measurement, initial, steps, control }
        }
        Mode::Kernel => {
            let spec = b.raw.state.clone().ok_or_else(|| CliError::invalid("state", "required in kernel mode"))?;
            let (initial, warning) = parse_state(&spec, b.levels())?;
            b.warnings.extend(warning);
            ModeConfig::Kernel { initial }
        }
        Mode::Dualaxis => {
            let measurement = b.measurement("dualaxis", Some(vec![1.0, -1.0]))?;
            if measurement.dim() != 2 {
                return Err(CliError::invalid("lambda", "dual-axis runs need a qubit"));
            }
            let initial = b.state("basis:0")?;
            let t_max = finite("tmax", *b.raw.tmax.get_or_insert(50.0 * measurement.tau()))?;
            let x_measurement = match b.raw.tau_x {
                Some(tau_x) => Some(
                    GaussianMeasurementConfig::qubit_z(positive("tau_x", Some(tau_x))?, measurement.dt())
                        .map_err(|e| CliError::invalid("tau_x", e.to_string()))?,
                ),
                None => None,
            };
            ModeConfig::Dualaxis { measurement, x_measurement, initial, t_max }
        }
    };
    let out = b.raw.out.take();
    let config = RunConfig { mode, seed, out, emit, params, echo: b.raw };
    Ok(ParsedConfig { config, warnings: b.warnings })
}
