//! `vccap`: ergodic capacity of virtual-cell mmWave networks from the command line.
//!
//! Data goes to stdout or `--out`; progress and diagnostics go to stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use vc_capacity::params::{load_config, Config};
use vc_capacity::selftest;
use vc_capacity::sweep::{run_los_probability_sweep, run_sweep, LosSweepSpec, SweepSpec, SweptParameter};
use vc_capacity::{FadingModel, Method, Region, SimMode, SystemParams};

#[derive(Parser)]
#[command(name = "vccap", version, about = "Ergodic capacity of user-centric virtual-cell mmWave networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity at a single operating point.
    Capacity(CapacityArgs),
    /// Capacity over a grid of lambda, beta or K.
    Sweep(SweepArgs),
    /// Probability that every serving link is LOS, over lambda and K.
    LosProb(LosArgs),
    /// Internal consistency checks; exits nonzero if any fails.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct Common {
    /// Flat JSON file of system parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials per point.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Distance draws per point for analytic-sampled.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, value_delimiter = ',', default_value = "analytic-nested")]
    method: Vec<Method>,
    /// Fading models, e.g. nakagami:3:2,rayleigh:1,nofading.
    #[arg(long, value_delimiter = ',', default_value = "nakagami,rayleigh,nofading")]
    model: Vec<String>,
    /// Interferers confined to the deployment disk (the default).
    #[arg(long, conflicts_with = "infinite_region")]
    finite_region: bool,
    /// Interferers extend to infinity (analytic methods only).
    #[arg(long)]
    infinite_region: bool,
    /// Radius of the deployment disk in meters.
    #[arg(long, allow_hyphen_values = true)]
    radius: Option<f64>,
    /// Serving links keep their drawn blockage state in simulation.
    #[arg(long)]
    faithful: bool,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(short, long)]
    k: Option<usize>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Swept parameter: lambda, beta or k_serving.
    #[arg(long, default_value = "lambda")]
    param: SweptParameter,
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
}

#[derive(Args)]
struct LosArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.0025,0.005,0.01")]
    lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    ks: Vec<usize>,
}

#[derive(Args)]
struct SelftestArgs {
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn params(&self) -> anyhow::Result<(SystemParams, Option<Config>)> {
        let config = match &self.config {
            Some(path) => Some(load_config(path).with_context(|| format!("reading {}", path.display()))?),
            None => None,
        };
        let mut p = config.as_ref().map(|c| c.params.clone()).unwrap_or_default();
        if let Some(l) = self.lambda {
            p.lambda = l;
        }
        if let Some(b) = self.beta {
            p.beta = b;
        }
        if let Some(k) = self.k {
            p.k_serving = k;
        }
        if self.infinite_region {
            if self.radius.is_some() {
                bail!("--radius contradicts --infinite-region");
            }
            p.region_radius = Region::Infinite;
        } else if let Some(r) = self.radius {
            p.region_radius = Region::Finite(r);
        } else if self.finite_region && p.region_radius.is_infinite() {
            p.region_radius = SystemParams::default().region_radius;
        }
        Ok((p, config))
    }

    /// Bare labels such as `nakagami` pick up shape parameters from the config.
    fn models(&self, config: Option<&Config>) -> anyhow::Result<Vec<FadingModel>> {
        self.model
            .iter()
            .map(|label| {
                let m: FadingModel = label.parse()?;
                Ok(match config {
                    Some(c) if !label.contains(':') => c.apply_to(m),
                    _ => m,
                })
            })
            .collect()
    }

    fn mode(&self) -> SimMode {
        if self.faithful {
            SimMode::Faithful
        } else {
            SimMode::Assumption
        }
    }

    fn sweep_spec(&self, parameter: SweptParameter, grid: Vec<f64>, config: Option<&Config>) -> anyhow::Result<SweepSpec> {
        let mut spec = SweepSpec::new(parameter, grid);
        spec.models = self.models(config)?;
        spec.methods = self.method.clone();
        spec.trials = self.trials;
        spec.samples = self.samples;
        spec.master_seed = self.seed;
        spec.mode = self.mode();
        Ok(spec)
    }

    fn output(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Capacity(args) => {
            let c = &args.common;
            let (params, config) = c.params()?;
            let spec = c.sweep_spec(SweptParameter::Lambda, vec![params.lambda], config.as_ref())?;
            let result = run_sweep(&spec, &params)?;
            result.write_csv(c.output()?)?;
            Ok(result.rows.iter().all(|r| r.outcome.is_ok()))
        }
        Command::Sweep(args) => {
            let c = &args.common;
            let (params, config) = c.params()?;
            let spec = c.sweep_spec(args.param, args.grid, config.as_ref())?;
            let result = run_sweep(&spec, &params)?;
            result.write_csv(c.output()?)?;
            Ok(true)
        }
        Command::LosProb(args) => {
            let c = &args.common;
            let (params, _) = c.params()?;
            let spec = LosSweepSpec {
                lambdas: args.lambdas,
                ks: args.ks,
                trials: c.trials,
                master_seed: c.seed,
            };
            run_los_probability_sweep(&spec, &params)?.write_csv(c.output()?)?;
            Ok(true)
        }
        Command::Selftest(args) => {
            let c = &args.common;
            let (params, _) = c.params()?;
            let checks = selftest::run_all(&params, c.trials, c.seed)?;
            let mut out = c.output()?;
            for check in &checks {
                writeln!(out, "{check}")?;
            }
            out.flush()?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            log::info!("{} checks, {failed} failed", checks.len());
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
