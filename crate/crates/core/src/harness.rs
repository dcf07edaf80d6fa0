//! Batch experiments: seeded initial states, closed-loop traces, monitored
//! horizon sweeps, and CSV output.
//!
//! Randomness comes from ChaCha8 seeded with the 64-bit experiment seed. Draws
//! for item `i` (an initial state, or a random controller for trace `i`) use
//! stream `i` of that generator, so any subset can be regenerated in isolation
//! and parallel runs match sequential ones.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{calibrate_bloat, DEFAULT_BLOAT_PROBES};
use crate::dynamics::{simulate, Controller, DynamicsError, SystemSpec};
use crate::monitor::{Monitor, MonitorConfig, MonitorError, Verdict};
use crate::relu_network::{parse_network, NetworkError, ReluNetwork};
use crate::synthetic::{
    make_synthetic_cbf, random_relu_network, SyntheticError, SyntheticKind, SyntheticParams,
};
use crate::verifier::VerifierConfig;

/// Attempts per sample before giving up on `X_0 ∩ {B >= 0}`.
pub const MAX_REJECTION_ATTEMPTS: usize = 1_000_000;
/// Stream offset separating controller draws from initial-state draws.
const CONTROLLER_STREAM: u64 = 1 << 32;

pub const CSV_HEADER: &str = "net,horizon,outcome,n_traces,mean_ms,max_ms,first_warning_step";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
    #[error("no initial state with B >= 0 after {attempts} attempts")]
    Rejection { attempts: usize },
    #[error("controller failed: {0}")]
    Controller(String),
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Initial state number `index`: uniform in `X_0`, rejected until `B(x) >= 0`.
pub fn sample_initial_state(
    spec: &SystemSpec,
    net: &ReluNetwork,
    seed: u64,
    index: u64,
) -> Result<Vec<f64>, HarnessError> {
    let x0 = spec.initial_set();
    let mut rng = stream_rng(seed, index);
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let x: Vec<f64> = x0
            .lower
            .iter()
            .zip(&x0.upper)
            .map(|(&lo, &hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
            .collect();
        if net.forward(&x)? >= 0.0 {
            return Ok(x);
        }
    }
    Err(HarnessError::Rejection {
        attempts: MAX_REJECTION_ATTEMPTS,
    })
}

pub fn sample_initial_states(
    spec: &SystemSpec,
    net: &ReluNetwork,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    (0..n as u64)
        .map(|i| sample_initial_state(spec, net, seed, i))
        .collect()
}

/// Controller choice in an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerConfig {
    Zero,
    /// `u = -K (x - target)`, `K` has one row per control input.
    Proportional {
        gain: Vec<Vec<f64>>,
        #[serde(default)]
        target: Option<Vec<f64>>,
    },
    /// Fixed input every step; a bang-bang push toward the unsafe set.
    Constant { u: Vec<f64> },
    /// Uniform in the control box, seeded per trace.
    Random,
    /// External program speaking one comma-separated line per step: a state
    /// on its stdin, a control on its stdout.
    External {
        command: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

impl ControllerConfig {
    pub fn build(
        &self,
        spec: &SystemSpec,
        seed: u64,
        trace: u64,
    ) -> Result<Box<dyn Controller + Send>, HarnessError> {
        let (m, n) = (spec.state_dim(), spec.control_dim());
        Ok(match self {
            ControllerConfig::Zero => Box::new(move |_: &[f64]| vec![0.0; n]),
            ControllerConfig::Proportional { gain, target } => {
                if gain.len() != n || gain.iter().any(|r| r.len() != m) {
                    return Err(HarnessError::Config(format!("gain must be {n}x{m}")));
                }
                let target = target.clone().unwrap_or_else(|| vec![0.0; m]);
                if target.len() != m {
                    return Err(HarnessError::Config(format!("target must have length {m}")));
                }
                let gain = gain.clone();
                Box::new(move |x: &[f64]| {
                    gain.iter()
                        .map(|row| {
                            -row.iter()
                                .zip(x.iter().zip(&target))
                                .map(|(k, (xi, ti))| k * (xi - ti))
                                .sum::<f64>()
                        })
                        .collect()
                })
            }
            ControllerConfig::Constant { u } => {
                if u.len() != n {
                    return Err(HarnessError::Config(format!("constant control must have length {n}")));
                }
                let u = u.clone();
                Box::new(move |_: &[f64]| u.clone())
            }
            ControllerConfig::Random => {
                let mut rng = stream_rng(seed, CONTROLLER_STREAM + trace);
                let cb = spec.control_box().clone();
                Box::new(move |_: &[f64]| {
                    cb.lower
                        .iter()
                        .zip(&cb.upper)
                        .map(|(&lo, &hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
                        .collect()
                })
            }
            ControllerConfig::External { command, args } => {
                Box::new(ExternalController::spawn(command, args)?)
            }
        })
    }
}

/// Controller backed by a child process.
pub struct ExternalController {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    error: Option<String>,
}

impl ExternalController {
    pub fn spawn(command: &str, args: &[String]) -> Result<Self, HarnessError> {
        let mut child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| HarnessError::Controller(format!("{command}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child,
            stdin,
            stdout,
            error: None,
        })
    }

    fn exchange(&mut self, x: &[f64]) -> Result<Vec<f64>, String> {
        writeln!(self.stdin, "{}", join(x)).map_err(|e| e.to_string())?;
        self.stdin.flush().map_err(|e| e.to_string())?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line).map_err(|e| e.to_string())? == 0 {
            return Err("controller closed its output".into());
        }
        parse_row(&line).map_err(|e| format!("bad control line {:?}: {e}", line.trim()))
    }

    /// First failure seen, if any; failed steps apply the clamped zero input.
    pub fn error(&self) -> Option<&str> {
        self.error.as_deref()
    }
}

impl Controller for ExternalController {
    fn control(&mut self, x: &[f64]) -> Vec<f64> {
        if self.error.is_some() {
            return Vec::new();
        }
        match self.exchange(x) {
            Ok(u) => u,
            Err(e) => {
                self.error = Some(e);
                Vec::new()
            }
        }
    }

    fn failure(&self) -> Option<String> {
        self.error.clone()
    }
}

impl Drop for ExternalController {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses a comma- or whitespace-separated row of numbers.
pub fn parse_row(line: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

/// One monitored closed-loop trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceOutcome {
    pub states: Vec<Vec<f64>>,
    pub verdicts: Vec<Verdict>,
    /// Wall-clock time of each monitor step in milliseconds.
    pub step_ms: Vec<f64>,
    pub first_warning: Option<usize>,
}

impl TraceOutcome {
    pub fn violated(&self) -> bool {
        self.first_warning.is_some()
    }

    /// Step times counted in the averages: the warm-up step and everything
    /// after the verdict latched are excluded.
    pub fn timed_steps(&self) -> &[f64] {
        let end = self.first_warning.map_or(self.step_ms.len(), |k| k + 1);
        &self.step_ms[1.min(end)..end]
    }
}

/// Simulates `trace_len` steps from `x0` and feeds every state to a fresh monitor.
pub fn run_trace(
    spec: &Arc<SystemSpec>,
    net: &Arc<ReluNetwork>,
    cfg: &MonitorConfig,
    controller: &mut dyn Controller,
    x0: &[f64],
    trace_len: usize,
) -> Result<TraceOutcome, HarnessError> {
    let trace = simulate(spec, controller, x0, trace_len)?;
    if let Some(e) = controller.failure() {
        return Err(HarnessError::Controller(e));
    }
    let mut monitor = Monitor::new(spec.clone(), net.clone(), cfg.clone())?;
    let mut verdicts = Vec::with_capacity(trace.states.len());
    let mut step_ms = Vec::with_capacity(trace.states.len());
    let mut first_warning = None;
    for (k, x) in trace.states.iter().enumerate() {
        let t = Instant::now();
        let v = monitor.next(x);
        step_ms.push(t.elapsed().as_secs_f64() * 1e3);
        if !v.value && first_warning.is_none() {
            first_warning = Some(k);
        }
        verdicts.push(v);
    }
    Ok(TraceOutcome {
        states: trace.states,
        verdicts,
        step_ms,
        first_warning,
    })
}

/// Runs `n_traces` monitored traces from seeded initial states.
#[allow(clippy::too_many_arguments)]
pub fn run_batch(
    spec: &Arc<SystemSpec>,
    net: &Arc<ReluNetwork>,
    cfg: &MonitorConfig,
    controller: &ControllerConfig,
    n_traces: usize,
    trace_len: usize,
    seed: u64,
    parallel: bool,
) -> Result<Vec<TraceOutcome>, HarnessError> {
    let one = |i: usize| -> Result<TraceOutcome, HarnessError> {
        let x0 = sample_initial_state(spec, net, seed, i as u64)?;
        let mut ctrl = controller.build(spec, seed, i as u64)?;
        run_trace(spec, net, cfg, ctrl.as_mut(), &x0, trace_len)
    };
    if parallel {
        (0..n_traces).into_par_iter().map(one).collect()
    } else {
        (0..n_traces).map(one).collect()
    }
}

/// A certificate in an experiment: a weight file or a synthetic construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetSource {
    Path(PathBuf),
    Synthetic {
        synthetic: SyntheticKind,
        #[serde(default)]
        id: Option<String>,
        /// Defaults to the origin.
        #[serde(default)]
        center: Option<Vec<f64>>,
        margin: f64,
    },
    /// Seeded random net, shifted so that `B = 1` at the center of the initial set.
    Random {
        random: Vec<usize>,
        seed: u64,
        #[serde(default)]
        id: Option<String>,
    },
}

impl NetSource {
    pub fn id(&self) -> String {
        match self {
            NetSource::Path(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            NetSource::Synthetic { synthetic, id, .. } => {
                id.clone().unwrap_or_else(|| synthetic.name().to_string())
            }
            NetSource::Random { random, seed, id } => id.clone().unwrap_or_else(|| {
                let widths: Vec<String> = random.iter().map(|w| w.to_string()).collect();
                format!("random_{}_s{seed}", widths.join("x"))
            }),
        }
    }

    pub fn load(&self, base: &Path, spec: &SystemSpec) -> Result<ReluNetwork, HarnessError> {
        let state_dim = spec.state_dim();
        let net = match self {
            NetSource::Random { random, seed, .. } => {
                let mut net = random_relu_network(state_dim, random, *seed)?;
                let b = net.forward(&spec.initial_set().center())?;
                net.shift_output(1.0 - b);
                net
            }
            NetSource::Path(p) => parse_network(&read_file(&base.join(p))?)?,
            NetSource::Synthetic {
                synthetic,
                center,
                margin,
                ..
            } => make_synthetic_cbf(
                *synthetic,
                &SyntheticParams {
                    center: center.clone().unwrap_or_else(|| vec![0.0; state_dim]),
                    margin: *margin,
                },
            )?,
        };
        if net.input_dim() != state_dim {
            return Err(HarnessError::Config(format!(
                "net {} has input dimension {}, system has {state_dim}",
                self.id(),
                net.input_dim()
            )));
        }
        Ok(net)
    }
}

fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn default_probes() -> usize {
    DEFAULT_BLOAT_PROBES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec_path: PathBuf,
    pub net_paths: Vec<NetSource>,
    pub horizons: Vec<usize>,
    pub n_traces: usize,
    pub trace_len: usize,
    pub seed: u64,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub verifier: VerifierConfig,
    /// Cone bloat; calibrated from `bloat_probes` random steps when absent.
    #[serde(default)]
    pub bloat: Option<f64>,
    #[serde(default = "default_probes")]
    pub bloat_probes: usize,
    /// Per-step budget in seconds; defaults to the system's `dt`.
    #[serde(default)]
    pub budget: Option<f64>,
    /// CSV destination; a gnuplot `.dat` file is written beside it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub parallel: bool,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let mut cfg: Self = serde_json::from_str(&read_file(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.horizons.is_empty() {
            return Err(HarnessError::Config("horizons must be nonempty".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Config("horizons must be strictly ascending".into()));
        }
        if self.n_traces == 0 {
            return Err(HarnessError::Config("n_traces must be at least 1".into()));
        }
        if self.trace_len == 0 {
            return Err(HarnessError::Config("trace_len must be at least 1".into()));
        }
        if self.net_paths.is_empty() {
            return Err(HarnessError::Config("at least one net is required".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    AllClear,
    Violation,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::AllClear => "all_clear",
            Outcome::Violation => "violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub net: String,
    pub horizon: usize,
    pub outcome: Outcome,
    pub n_traces: usize,
    /// Mean monitor step time over the bucket, warm-up step excluded.
    pub mean_ms: f64,
    pub max_ms: f64,
    /// Earliest first-warning step in the bucket (violations only).
    pub first_warning_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

impl ResultsTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.4},{:.4},{}",
                r.net,
                r.horizon,
                r.outcome.as_str(),
                r.n_traces,
                r.mean_ms,
                r.max_ms,
                r.first_warning_step.map(|k| k.to_string()).unwrap_or_default()
            );
        }
        s
    }

    /// Whitespace-separated variant with a commented header, for gnuplot.
    pub fn to_dat(&self) -> String {
        let mut s = format!("# {}\n", CSV_HEADER.replace(',', " "));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{} {} {} {} {:.4} {:.4} {}",
                r.net,
                r.horizon,
                r.outcome.as_str(),
                r.n_traces,
                r.mean_ms,
                r.max_ms,
                r.first_warning_step.map(|k| k.to_string()).unwrap_or_else(|| "NaN".into())
            );
        }
        s
    }

    pub fn rows_for(&self, net: &str, horizon: usize) -> impl Iterator<Item = &ResultsRow> {
        let net = net.to_string();
        self.rows
            .iter()
            .filter(move |r| r.net == net && r.horizon == horizon)
    }

    pub fn count(&self, net: &str, horizon: usize, outcome: Outcome) -> usize {
        self.rows_for(net, horizon)
            .filter(|r| r.outcome == outcome)
            .map(|r| r.n_traces)
            .sum()
    }

    /// Mean step time over every trace for `(net, horizon)`.
    pub fn mean_ms(&self, net: &str, horizon: usize) -> Option<f64> {
        let (sum, n) = self
            .rows_for(net, horizon)
            .fold((0.0, 0), |(s, n), r| (s + r.mean_ms * r.n_traces as f64, n + r.n_traces));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Aggregates traces of one `(net, horizon)` into outcome rows; empty buckets are omitted.
pub fn bucket_rows(net: &str, horizon: usize, traces: &[TraceOutcome]) -> Vec<ResultsRow> {
    let mut rows = Vec::new();
    for outcome in [Outcome::AllClear, Outcome::Violation] {
        let bucket: Vec<&TraceOutcome> = traces
            .iter()
            .filter(|t| t.violated() == (outcome == Outcome::Violation))
            .collect();
        if bucket.is_empty() {
            continue;
        }
        let times: Vec<f64> = bucket.iter().flat_map(|t| t.timed_steps().iter().copied()).collect();
        let mean_ms = if times.is_empty() {
            0.0
        } else {
            times.iter().sum::<f64>() / times.len() as f64
        };
        rows.push(ResultsRow {
            net: net.to_string(),
            horizon,
            outcome,
            n_traces: bucket.len(),
            mean_ms,
            max_ms: times.iter().copied().fold(0.0, f64::max),
            first_warning_step: bucket.iter().filter_map(|t| t.first_warning).min(),
        });
    }
    rows
}

/// Runs every net at every horizon and writes the CSV (and `.dat`) when an
/// output path is configured. Nothing is written unless all runs succeed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable, HarnessError> {
    cfg.validate()?;
    let spec_path = cfg.resolve(&cfg.spec_path);
    let spec = Arc::new(SystemSpec::from_json(&read_file(&spec_path)?)?);
    let bloat = match cfg.bloat {
        Some(b) => b,
        None => calibrate_bloat(&spec, cfg.bloat_probes, cfg.seed),
    };
    let mut table = ResultsTable::default();
    for source in &cfg.net_paths {
        let net = Arc::new(source.load(&cfg.base_dir, &spec)?);
        let id = source.id();
        for &h in &cfg.horizons {
            let mut mcfg = MonitorConfig::for_spec(&spec, h, bloat);
            mcfg.verifier = cfg.verifier.clone();
            if let Some(b) = cfg.budget {
                mcfg.budget = b;
            }
            let traces = run_batch(
                &spec,
                &net,
                &mcfg,
                &cfg.controller,
                cfg.n_traces,
                cfg.trace_len,
                cfg.seed,
                cfg.parallel,
            )?;
            table.rows.extend(bucket_rows(&id, h, &traces));
        }
    }
    if let Some(out) = &cfg.output {
        let out = cfg.resolve(out);
        write_file(&out, &table.to_csv())?;
        write_file(&out.with_extension("dat"), &table.to_dat())?;
    }
    Ok(table)
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })
}
