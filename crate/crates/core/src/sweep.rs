//! Parameter sweeps across fading models and evaluation methods.
//!
//! Every row of a sweep uses the master seed, so all rows share common
//! random numbers: differences between neighbouring grid values, models or
//! methods are not masked by independent sampling noise. Rows are computed
//! in parallel and emitted in grid-major, then model, then method order.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::analytic::{ergodic_capacity, Budget, CapacityEstimate, Method, Tolerances};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_capacity, estimate_serving_los_probability, SimMode};
use crate::par;
use crate::params::{FadingModel, SystemParams};

/// CSV header of [`SweepResult::write_csv`].
pub const SWEEP_HEADER: [&str; 9] = [
    "swept_param",
    "value",
    "model",
    "method",
    "capacity_bps_hz",
    "half_width",
    "n",
    "seed",
    "status",
];

/// CSV header of [`LosTable::write_csv`].
pub const LOS_HEADER: [&str; 8] = [
    "lambda",
    "k",
    "region_radius",
    "probability",
    "ci_half_width",
    "successes",
    "n",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    Lambda,
    Beta,
    KServing,
}

impl SweptParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweptParameter::Lambda => "lambda",
            SweptParameter::Beta => "beta",
            SweptParameter::KServing => "k_serving",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(&self, base: &SystemParams, value: f64) -> SystemParams {
        match self {
            SweptParameter::Lambda => base.clone().with_lambda(value),
            SweptParameter::Beta => base.clone().with_beta(value),
            SweptParameter::KServing => base.clone().with_k(value as usize),
        }
    }
}

impl fmt::Display for SweptParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweptParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(SweptParameter::Lambda),
            "beta" => Ok(SweptParameter::Beta),
            "k_serving" | "k" => Ok(SweptParameter::KServing),
            _ => Err(Error::InvalidParameter(format!(
                "unknown sweep parameter {s:?} (expected lambda, beta or k_serving)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweptParameter,
    pub grid: Vec<f64>,
    pub models: Vec<FadingModel>,
    pub methods: Vec<Method>,
    /// Monte Carlo trials per point.
    pub trials: usize,
    /// Distance draws per point for the sampled analytic method.
    pub samples: usize,
    pub tolerances: Tolerances,
    pub master_seed: u64,
    pub mode: SimMode,
}

impl SweepSpec {
    pub fn new(parameter: SweptParameter, grid: Vec<f64>) -> Self {
        SweepSpec {
            parameter,
            grid,
            models: FadingModel::reference_set().to_vec(),
            methods: vec![Method::AnalyticNested],
            trials: 10_000,
            samples: 2000,
            tolerances: Tolerances::default(),
            master_seed: 0,
            mode: SimMode::Assumption,
        }
    }

    /// Checks the spec and every grid point against `base`.
    pub fn validate(&self, base: &SystemParams) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("sweep grid is empty".into()));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidParameter("sweep model list is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("sweep method list is empty".into()));
        }
        if self.trials == 0 || self.samples == 0 {
            return Err(Error::InvalidParameter("sweep budget must be positive".into()));
        }
        for &v in &self.grid {
            if self.parameter == SweptParameter::KServing && !(v >= 1.0 && v.fract() == 0.0) {
                return Err(Error::InvalidParameter(format!("k_serving grid value {v} is not a positive integer")));
            }
            self.parameter.apply(base, v).validate()?;
        }
        for m in &self.models {
            m.validate()?;
        }
        Ok(())
    }
}

/// One `(grid value, model, method)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: SweptParameter,
    pub value: f64,
    pub model: FadingModel,
    pub method: Method,
    pub seed: u64,
    /// The error message when the point failed.
    pub outcome: std::result::Result<CapacityEstimate, String>,
}

impl SweepRow {
    pub fn estimate(&self) -> Option<&CapacityEstimate> {
        self.outcome.as_ref().ok()
    }

    fn record(&self) -> [String; 9] {
        let (cap, hw, n, status) = match &self.outcome {
            Ok(e) => (
                e.bits_per_hz.to_string(),
                e.half_width.to_string(),
                e.n.to_string(),
                "ok".to_string(),
            ),
            Err(msg) => (String::new(), String::new(), String::new(), msg.clone()),
        };
        [
            self.parameter.to_string(),
            self.value.to_string(),
            self.model.to_string(),
            self.method.to_string(),
            cap,
            hw,
            n,
            self.seed.to_string(),
            status,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows for one model and method, in grid order.
    pub fn series(&self, model: &FadingModel, method: Method) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.model == *model && r.method == method)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_HEADER).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.record()).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Evaluates one point with the given method.
pub fn evaluate_point(
    params: &SystemParams,
    model: &FadingModel,
    method: Method,
    spec: &SweepSpec,
    seed: u64,
) -> Result<CapacityEstimate> {
    match method {
        Method::MonteCarlo => estimate_capacity(params, model, spec.mode, spec.trials, seed),
        _ => {
            let budget = Budget {
                samples: spec.samples,
                seed,
                tolerances: spec.tolerances,
            };
            ergodic_capacity(params, model, method, &budget)
        }
    }
}

/// Runs every `(grid value, model, method)` point. Per-point failures land
/// in the row's status column; only an invalid spec fails the whole sweep.
pub fn run_sweep(spec: &SweepSpec, base: &SystemParams) -> Result<SweepResult> {
    spec.validate(base)?;
    let nm = spec.models.len();
    let nk = spec.methods.len();
    let n = spec.grid.len() * nm * nk;
    let rows = par::map_indexed(n, |i| {
        let value = spec.grid[i / (nm * nk)];
        let model = spec.models[(i / nk) % nm];
        let method = spec.methods[i % nk];
        let params = spec.parameter.apply(base, value);
        let seed = spec.master_seed;
        log::info!("sweep {}={value} {model} {method}", spec.parameter);
        let outcome = evaluate_point(&params, &model, method, spec, seed).map_err(|e| {
            log::warn!("sweep {}={value} {model} {method} failed: {e}", spec.parameter);
            e.to_string()
        });
        SweepRow {
            parameter: spec.parameter,
            value,
            model,
            method,
            seed,
            outcome,
        }
    });
    Ok(SweepResult { rows })
}

/// Grid of the serving-set LOS probability study.
#[derive(Debug, Clone, PartialEq)]
pub struct LosSweepSpec {
    pub lambdas: Vec<f64>,
    pub ks: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosRow {
    pub lambda: f64,
    pub k: usize,
    pub probability: crate::montecarlo::LosProbability,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosTable {
    pub region_radius: f64,
    pub rows: Vec<LosRow>,
}

impl LosTable {
    /// The row at `(lambda, k)`, if present.
    pub fn get(&self, lambda: f64, k: usize) -> Option<&LosRow> {
        self.rows.iter().find(|r| r.lambda == lambda && r.k == k)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LOS_HEADER).map_err(csv_error)?;
        for r in &self.rows {
            let p = &r.probability;
            w.write_record([
                r.lambda.to_string(),
                r.k.to_string(),
                self.region_radius.to_string(),
                p.probability.to_string(),
                p.ci_half_width.to_string(),
                p.successes.to_string(),
                p.n.to_string(),
                r.seed.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Probability that all `K` serving links are LOS over `lambda x K`, in
/// lambda-major order. The region must be finite.
pub fn run_los_probability_sweep(spec: &LosSweepSpec, base: &SystemParams) -> Result<LosTable> {
    if spec.lambdas.is_empty() || spec.ks.is_empty() {
        return Err(Error::InvalidParameter("LOS sweep grid is empty".into()));
    }
    if spec.trials == 0 {
        return Err(Error::InvalidParameter("LOS sweep budget must be positive".into()));
    }
    let region_radius = match base.region_radius {
        crate::params::Region::Finite(r) => r,
        crate::params::Region::Infinite => {
            return Err(Error::InvalidParameter("the LOS probability sweep needs a finite region".into()))
        }
    };
    for &lambda in &spec.lambdas {
        base.clone().with_lambda(lambda).validate()?;
    }
    let nk = spec.ks.len();
    let rows = par::try_map_indexed(spec.lambdas.len() * nk, |i| {
        let lambda = spec.lambdas[i / nk];
        let k = spec.ks[i % nk];
        let params = base.clone().with_lambda(lambda);
        log::info!("los-prob lambda={lambda} K={k}");
        estimate_serving_los_probability(&params, k, spec.trials, spec.master_seed).map(|probability| LosRow {
            lambda,
            k,
            probability,
            seed: spec.master_seed,
        })
    })?;
    Ok(LosTable { region_radius, rows })
}
