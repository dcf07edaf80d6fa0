use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use cbf_monitor::cone::{calibrate_bloat, DEFAULT_BLOAT_PROBES};
use cbf_monitor::harness::{run_experiment, ExperimentConfig};
use cbf_monitor::verifier::QuantifierMode;
use cbf_monitor::{
    load_network, make_synthetic_cbf, Monitor, MonitorConfig, SyntheticKind, SyntheticParams,
    SystemSpec,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "monitor", version, about = "Runtime monitor for ReLU control barrier functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Robust,
    Existential,
}

impl From<Mode> for QuantifierMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Robust => QuantifierMode::Robust,
            Mode::Existential => QuantifierMode::Existential,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and print the results table as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        bloat: Option<f64>,
        /// Overrides the config's CSV destination.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monitor states read from stdin, one per line, and print `k,verdict,cause,ms`.
    Check {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Cone bloat; calibrated from random steps when absent.
        #[arg(long)]
        bloat: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "robust")]
        mode: Mode,
    },
    /// Write a synthetic certificate network as JSON.
    MakeCbf {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
        /// Comma-separated center; the origin when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            mode,
            bloat,
            output,
        } => run(config, seed, mode, bloat, output),
        Command::Check {
            net,
            system,
            horizon,
            bloat,
            seed,
            mode,
        } => check(net, system, horizon, bloat, seed, mode),
        Command::MakeCbf {
            kind,
            dim,
            margin,
            center,
            out,
        } => make_cbf(&kind, dim, margin, center, out),
    }
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    mode: Option<Mode>,
    bloat: Option<f64>,
    output: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&config)
        .with_context(|| format!("loading {}", config.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = mode {
        cfg.verifier.mode = m.into();
    }
    if bloat.is_some() {
        cfg.bloat = bloat;
    }
    if let Some(out) = output {
        // relative to the working directory, not the config
        cfg.output = Some(std::path::absolute(out)?);
    }
    let table = run_experiment(&cfg)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn parse_state(line: &str) -> Result<Vec<f64>> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad number {t:?}")))
        .collect()
}

fn check(
    net: PathBuf,
    system: PathBuf,
    horizon: usize,
    bloat: Option<f64>,
    seed: u64,
    mode: Mode,
) -> Result<()> {
    let spec = SystemSpec::from_path(&system)
        .with_context(|| format!("loading {}", system.display()))?;
    let file = std::fs::File::open(&net).with_context(|| format!("opening {}", net.display()))?;
    let network = load_network(std::io::BufReader::new(file))
        .with_context(|| format!("loading {}", net.display()))?;
    let bloat = bloat.unwrap_or_else(|| calibrate_bloat(&spec, DEFAULT_BLOAT_PROBES, seed));
    let mut cfg = MonitorConfig::for_spec(&spec, horizon, bloat);
    cfg.verifier.mode = mode.into();
    let mut monitor = Monitor::new(Arc::new(spec), Arc::new(network), cfg)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (lineno, line) in std::io::stdin().lock().lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let x = parse_state(&line).with_context(|| format!("stdin line {}", lineno + 1))?;
        let k = monitor.state().step_index;
        let v = monitor.next(&x);
        let ms = monitor.state().timing.last().map_or(0.0, |t| t.total_ms);
        let cause = v.cause.map(|c| c.to_string()).unwrap_or_default();
        writeln!(out, "{k},{},{cause},{ms:.4}", v.bit())?;
    }
    Ok(())
}

fn make_cbf(kind: &str, dim: usize, margin: f64, center: Option<Vec<f64>>, out: PathBuf) -> Result<()> {
    let kind: SyntheticKind = kind.parse()?;
    let params = match center {
        Some(c) => {
            if c.len() != dim {
                bail!("center has {} entries, expected {dim}", c.len());
            }
            SyntheticParams { center: c, margin }
        }
        None => SyntheticParams::origin(dim, margin),
    };
    let net = make_synthetic_cbf(kind, &params)?;
    std::fs::write(&out, net.to_json()).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
