//! System parameters, fading models, unit conversions and validation.
//!
//! Everything is stored in linear units. Decibel values only appear at the
//! configuration boundary (`*_db` keys) and in the conversion helpers.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Thermal noise density in dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Noise figure used by the reference deployment, dB.
pub const DEFAULT_NOISE_FIGURE_DB: f64 = 10.0;

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Noise power normalized by the transmit power, linear.
///
/// `10^((-174 + 10 log10(B) + NF - P_t) / 10)`.
pub fn normalized_noise_power(bandwidth_hz: f64, tx_power_dbm: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    let db = THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db - tx_power_dbm;
    Ok(db_to_linear(db))
}

/// Spatial extent of the deployment and of the interference field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Disk of the given radius in meters centered on the typical UE.
    Finite(f64),
    /// The whole plane. Only meaningful for the analytic engine.
    Infinite,
}

impl Region {
    /// Upper integration limit for interference integrals.
    pub fn upper(&self) -> f64 {
        match *self {
            Region::Finite(r) => r,
            Region::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Region::Infinite)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Finite(r) => write!(f, "{r}"),
            Region::Infinite => f.write_str("infinite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// AP density, APs per square meter.
    pub lambda: f64,
    /// Blockage parameter, per meter. LOS probability is `exp(-beta r)`.
    pub beta: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub c_los: f64,
    pub c_nlos: f64,
    /// Main lobe gain `M`, linear.
    pub main_gain: f64,
    /// Side lobe gain `m`, linear.
    pub side_gain: f64,
    /// Main lobe beamwidth, radians.
    pub beamwidth: f64,
    /// Noise power normalized by the transmit power, linear.
    pub noise_power: f64,
    /// Number of cooperating serving APs `K`.
    pub k_serving: usize,
    pub region_radius: Region,
}

impl Default for SystemParams {
    /// The reference mmWave deployment: 73 GHz, 2 GHz bandwidth, 30 dBm
    /// transmit power, 18/-2 dB sectored antennas with 10 degree beams,
    /// `beta = 0.0071`, LOS/NLOS exponents 2/4, intercepts 1e-7, R = 100 m,
    /// K = 2 and `lambda = 2.5e-3`.
    fn default() -> Self {
        SystemParams {
            lambda: 2.5e-3,
            beta: 0.0071,
            alpha_los: 2.0,
            alpha_nlos: 4.0,
            c_los: 1e-7,
            c_nlos: 1e-7,
            main_gain: db_to_linear(18.0),
            side_gain: db_to_linear(-2.0),
            beamwidth: 10f64.to_radians(),
            noise_power: normalized_noise_power(2e9, 30.0, DEFAULT_NOISE_FIGURE_DB)
                .expect("positive bandwidth"),
            k_serving: 2,
            region_radius: Region::Finite(100.0),
        }
    }
}

impl SystemParams {
    /// Probability that an interfering AP points its main lobe at the UE.
    pub fn main_lobe_probability(&self) -> f64 {
        (self.beamwidth / (2.0 * PI)).min(1.0)
    }

    /// The two-point interferer gain law as `(gain, probability)` pairs.
    pub fn interferer_gain_law(&self) -> [(f64, f64); 2] {
        let b1 = self.main_lobe_probability();
        [(self.main_gain, b1), (self.side_gain, 1.0 - b1)]
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k_serving = k;
        self
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region_radius = region;
        self
    }

    pub fn with_noise_power(mut self, noise_power: f64) -> Self {
        self.noise_power = noise_power;
        self
    }

    pub fn validate(&self) -> std::result::Result<(), ParamErrors> {
        let mut errs = ParamErrors::default();
        let p = self;
        if !(p.lambda > 0.0 && p.lambda.is_finite()) {
            errs.push("lambda", "lambda > 0 required");
        }
        if !(p.beta >= 0.0 && p.beta.is_finite()) {
            errs.push("beta", "beta >= 0 required");
        }
        if !(p.alpha_los >= 2.0 && p.alpha_los.is_finite()) {
            errs.push("alpha_los", "alpha_los >= 2 required");
        }
        if !(p.alpha_nlos > 0.0 && p.alpha_nlos.is_finite()) {
            errs.push("alpha_nlos", "alpha_nlos > 0 required");
        }
        if !(p.c_los > 0.0 && p.c_los.is_finite()) {
            errs.push("c_los", "c_los > 0 required");
        }
        if !(p.c_nlos > 0.0 && p.c_nlos.is_finite()) {
            errs.push("c_nlos", "c_nlos > 0 required");
        }
        if !(p.beamwidth > 0.0 && p.beamwidth <= 2.0 * PI) {
            errs.push("beamwidth", "0 < beamwidth <= 2*pi required");
        }
        if !(p.side_gain > 0.0 && p.side_gain.is_finite()) {
            errs.push("side_gain", "side_gain > 0 required");
        }
        if !(p.main_gain >= p.side_gain && p.main_gain.is_finite()) {
            errs.push("main_gain", "main_gain >= side_gain required");
        }
        if p.k_serving < 1 {
            errs.push("k_serving", "k_serving >= 1 required");
        }
        if !(p.noise_power > 0.0 && p.noise_power.is_finite()) {
            errs.push("noise_power", "noise_power > 0 required");
        }
        match p.region_radius {
            Region::Finite(r) => {
                if !(r > 0.0 && r.is_finite()) {
                    errs.push("region_radius", "region_radius > 0 required");
                }
            }
            Region::Infinite => {
                if p.alpha_nlos <= 2.0 {
                    errs.push(
                        "alpha_nlos",
                        "alpha_nlos must exceed 2 for infinite interference field \
                         (the NLOS interference integral diverges)",
                    );
                }
                if p.beta == 0.0 && p.alpha_los <= 2.0 {
                    errs.push(
                        "alpha_los",
                        "alpha_los must exceed 2 when beta = 0 for infinite interference field \
                         (the LOS interference integral diverges)",
                    );
                }
            }
        }
        errs.into_result()
    }
}

/// Small-scale fading law of `|xi|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    /// `Gamma(N, 1/N)` with `N = n_los` or `n_nlos` by link state.
    Nakagami { n_los: f64, n_nlos: f64 },
    /// Exponential with mean `mu`.
    Rayleigh { mu: f64 },
    NoFading,
}

impl FadingModel {
    pub const REFERENCE_NAKAGAMI: FadingModel = FadingModel::Nakagami { n_los: 3.0, n_nlos: 2.0 };
    pub const REFERENCE_RAYLEIGH: FadingModel = FadingModel::Rayleigh { mu: 1.0 };

    /// The three reference models in the order Nakagami, Rayleigh, none.
    pub fn reference_set() -> [FadingModel; 3] {
        [Self::REFERENCE_NAKAGAMI, Self::REFERENCE_RAYLEIGH, FadingModel::NoFading]
    }

    /// Mean of the fading power for a link in the given state.
    pub fn mean_power(&self, _is_los: bool) -> f64 {
        match *self {
            FadingModel::Rayleigh { mu } => mu,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), ParamErrors> {
        let mut errs = ParamErrors::default();
        match *self {
            FadingModel::Nakagami { n_los, n_nlos } => {
                if !(n_los >= 1.0 && n_los.is_finite()) {
                    errs.push("n_los", "n_los >= 1 required");
                }
                if !(n_nlos >= 1.0 && n_nlos.is_finite()) {
                    errs.push("n_nlos", "n_nlos >= 1 required");
                }
            }
            FadingModel::Rayleigh { mu } => {
                if !(mu > 0.0 && mu.is_finite()) {
                    errs.push("mu", "mu > 0 required");
                }
            }
            FadingModel::NoFading => {}
        }
        errs.into_result()
    }
}

/// Labels are `nakagami:<n_los>:<n_nlos>`, `rayleigh:<mu>` and `nofading`.
/// They contain no commas so they can be written to CSV unquoted.
impl fmt::Display for FadingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingModel::Nakagami { n_los, n_nlos } => write!(f, "nakagami:{n_los}:{n_nlos}"),
            FadingModel::Rayleigh { mu } => write!(f, "rayleigh:{mu}"),
            FadingModel::NoFading => f.write_str("nofading"),
        }
    }
}

impl FromStr for FadingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |x: &str| -> Result<f64> {
            x.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number {x:?} in fading model {s:?}")))
        };
        let model = match parts.as_slice() {
            ["nakagami"] => Self::REFERENCE_NAKAGAMI,
            ["nakagami", n] => {
                let n = num(n)?;
                FadingModel::Nakagami { n_los: n, n_nlos: n }
            }
            ["nakagami", nl, nn] => FadingModel::Nakagami {
                n_los: num(nl)?,
                n_nlos: num(nn)?,
            },
            ["rayleigh"] => Self::REFERENCE_RAYLEIGH,
            ["rayleigh", mu] => FadingModel::Rayleigh { mu: num(mu)? },
            ["nofading"] | ["none"] => FadingModel::NoFading,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown fading model {s:?} (expected nakagami[:N_L[:N_N]], rayleigh[:mu] or nofading)"
                )))
            }
        };
        Ok(model)
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamViolation {
    pub field: &'static str,
    pub message: String,
}

/// Every invariant violated by a parameter set, in field order.
#[derive(Debug, Clone, Default, PartialEq, thiserror::Error)]
pub struct ParamErrors(pub Vec<ParamViolation>);

impl ParamErrors {
    fn push(&mut self, field: &'static str, message: &str) {
        self.0.push(ParamViolation {
            field,
            message: message.to_string(),
        });
    }

    fn into_result(self) -> std::result::Result<(), ParamErrors> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamViolation> {
        self.0.iter()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.0.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ParamErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<&str> = self.0.iter().map(|v| v.message.as_str()).collect();
        write!(f, "invalid parameters: {}", msgs.join("; "))
    }
}

/// Checks a parameter set and fading model together and hands both back
/// unchanged, or reports every violation found in either.
pub fn validate(
    params: SystemParams,
    model: FadingModel,
) -> std::result::Result<(SystemParams, FadingModel), ParamErrors> {
    let mut errs = ParamErrors::default();
    if let Err(e) = params.validate() {
        errs.0.extend(e.0);
    }
    if let Err(e) = model.validate() {
        errs.0.extend(e.0);
    }
    errs.into_result().map(|_| (params, model))
}

/// Parameters and optional fading-model overrides loaded from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: SystemParams,
    pub n_los: Option<f64>,
    pub n_nlos: Option<f64>,
    pub mu: Option<f64>,
}

impl Config {
    /// Apply the file's Nakagami/Rayleigh parameters to a model parsed
    /// without explicit arguments.
    pub fn apply_to(&self, model: FadingModel) -> FadingModel {
        match model {
            FadingModel::Nakagami { n_los, n_nlos } => FadingModel::Nakagami {
                n_los: self.n_los.unwrap_or(n_los),
                n_nlos: self.n_nlos.unwrap_or(n_nlos),
            },
            FadingModel::Rayleigh { mu } => FadingModel::Rayleigh {
                mu: self.mu.unwrap_or(mu),
            },
            FadingModel::NoFading => FadingModel::NoFading,
        }
    }
}

const LINEAR_KEYS: [&str; 5] = ["c_los", "c_nlos", "main_gain", "side_gain", "noise_power"];

/// Parses a flat JSON object. Missing keys take the reference defaults.
/// Linear-valued fields may instead be given in dB under `<field>_db`.
pub fn parse_config(text: &str) -> Result<Config> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config("top level must be a JSON object".into()))?;
    config_from_map(obj)
}

fn config_from_map(obj: &Map<String, Value>) -> Result<Config> {
    let mut p = SystemParams::default();
    let mut cfg = Config {
        params: p.clone(),
        n_los: None,
        n_nlos: None,
        mu: None,
    };

    let number = |key: &str, v: &Value| -> Result<f64> {
        v.as_f64()
            .ok_or_else(|| Error::Config(format!("{key} must be a number")))
    };

    for (key, v) in obj {
        let key = key.as_str();
        if let Some(base) = key.strip_suffix("_db") {
            if !LINEAR_KEYS.contains(&base) {
                return Err(Error::Config(format!("unknown key {key}")));
            }
            if obj.contains_key(base) {
                return Err(Error::Config(format!("both {base} and {key} given")));
            }
            let lin = db_to_linear(number(key, v)?);
            set_linear(&mut p, base, lin);
            continue;
        }
        match key {
            "lambda" => p.lambda = number(key, v)?,
            "beta" => p.beta = number(key, v)?,
            "alpha_los" => p.alpha_los = number(key, v)?,
            "alpha_nlos" => p.alpha_nlos = number(key, v)?,
            "beamwidth" => p.beamwidth = number(key, v)?,
            "k_serving" => {
                p.k_serving = v
                    .as_u64()
                    .ok_or_else(|| Error::Config("k_serving must be a positive integer".into()))?
                    as usize
            }
            "region_radius" => {
                p.region_radius = match v {
                    Value::String(s) if s == "infinite" => Region::Infinite,
                    _ => Region::Finite(number(key, v)?),
                }
            }
            "n_los" => cfg.n_los = Some(number(key, v)?),
            "n_nlos" => cfg.n_nlos = Some(number(key, v)?),
            "mu" => cfg.mu = Some(number(key, v)?),
            k if LINEAR_KEYS.contains(&k) => set_linear(&mut p, k, number(key, v)?),
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
    }
    cfg.params = p;
    Ok(cfg)
}

fn set_linear(p: &mut SystemParams, key: &str, v: f64) {
    match key {
        "c_los" => p.c_los = v,
        "c_nlos" => p.c_nlos = v,
        "main_gain" => p.main_gain = v,
        "side_gain" => p.side_gain = v,
        "noise_power" => p.noise_power = v,
        _ => unreachable!("not a linear key: {key}"),
    }
}

pub fn load_config(path: &std::path::Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
