//! Ergodic capacity of the typical UE from the Laplace-transform expressions.
//!
//! Conditioned on the serving distances `r_1..r_K`,
//!
//! ```text
//! C_cond(r) = 1/ln2 * int_0^inf exp(-s sigma^2)/s * exp(-(E_L(s) + E_N(s)))
//!             * (1 - prod_k (1 - kernel(s M C_L r_k^-alpha_L))) ds
//! ```
//!
//! where `E_L`, `E_N` are the exponents of the Laplace functionals of the LOS
//! and NLOS interference outside the disk of radius `r_K`, and `kernel` is
//! [`crate::channel::fading_kernel`]. The same code path covers Nakagami,
//! Rayleigh and unfaded links; only the kernel changes. Serving links are
//! LOS with main-lobe gain.

use std::cell::Cell;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::channel::kernel;
use crate::error::{Error, Result};
use crate::geometry::OrderedDistances;
use crate::params::{validate, FadingModel, Region, SystemParams};
use crate::quadrature::{
    expect_over_ordered_domain, integrate, integrate_nested_ordered, integrate_semi_infinite, QuadError, QuadSpec,
    TailTransform,
};

/// How a capacity figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Conditional capacity averaged over sampled serving distances.
    AnalyticSampled,
    /// Conditional capacity integrated against the distance density.
    AnalyticNested,
    /// Full-system simulation.
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::AnalyticSampled, Method::AnalyticNested, Method::MonteCarlo];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::AnalyticSampled => "analytic-sampled",
            Method::AnalyticNested => "analytic-nested",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Link state for interference exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    pub bits_per_hz: f64,
    /// Quadrature error bound, or the standard error for sampled methods.
    pub half_width: f64,
    /// Number of samples; 0 for deterministic methods.
    pub n: usize,
    pub method: Method,
}

/// Quadrature settings of the analytic engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Interference integrals over the distance `x`.
    pub interference: QuadSpec,
    /// The integral over the Laplace variable `s`.
    pub laplace: QuadSpec,
    /// Outer integration over serving distances (nested method).
    pub capacity: QuadSpec,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            interference: QuadSpec::default().with_tol(1e-6, 1e-12),
            laplace: QuadSpec::default().with_tol(1e-6, 1e-12),
            capacity: QuadSpec::default().with_tol(1e-4, 1e-8),
        }
    }
}

/// Neglected mass, in nats, at each end of the `s` integral.
const S_TRUNCATION: f64 = 1e-12;

/// Integrand of the exponent for one link state, without the `2 pi lambda`
/// prefactor: `sum_n b_n kernel(s a_n C x^-alpha) w(x) x`.
#[inline]
fn exponent_integrand(x: f64, s: f64, mark: Mark, p: &SystemParams, model: &FadingModel, gains: &[(f64, f64); 2]) -> f64 {
    let (c, alpha, w, los) = match mark {
        Mark::Los => (p.c_los, p.alpha_los, (-p.beta * x).exp(), true),
        Mark::Nlos => (p.c_nlos, p.alpha_nlos, -(-p.beta * x).exp_m1(), false),
    };
    if w == 0.0 {
        return 0.0;
    }
    let path = s * c * x.powf(-alpha);
    let k: f64 = gains.iter().map(|&(a, b)| b * kernel(model, los, path * a)).sum();
    k * w * x
}

/// Integrates `f` over `[r_outer, U)` where `U` is the region edge.
fn integrate_outside<F: Fn(f64) -> f64>(f: F, r_outer: f64, p: &SystemParams, spec: &QuadSpec) -> std::result::Result<f64, QuadError> {
    match p.region_radius {
        Region::Finite(radius) => {
            if r_outer >= radius {
                return Ok(0.0);
            }
            Ok(integrate(f, r_outer, radius, spec)?.value)
        }
        Region::Infinite => {
            // Integrands decay at least like x^(1 - alpha_N), alpha_N > 2, or
            // exponentially for LOS links.
            let spec = spec.with_tail(TailTransform::InverseSquare);
            Ok(integrate_semi_infinite(f, r_outer, &spec)?.value)
        }
    }
}

/// Exponent of the Laplace functional of the LOS or NLOS interference
/// beyond `r_outer`, at Laplace variable `s`.
///
/// Equals `2 pi lambda sum_n b_n int_{r_outer}^U kernel(s a_n C x^-alpha) w(x) x dx`
/// with `w = p` for LOS and `w = 1 - p` for NLOS.
pub fn interference_exponent(s: f64, r_outer: f64, mark: Mark, params: &SystemParams, model: &FadingModel) -> Result<f64> {
    interference_exponent_with(s, r_outer, mark, params, model, &Tolerances::default().interference)
}

pub fn interference_exponent_with(
    s: f64,
    r_outer: f64,
    mark: Mark,
    params: &SystemParams,
    model: &FadingModel,
    spec: &QuadSpec,
) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("Laplace variable must be >= 0, got {s}")));
    }
    if !(r_outer > 0.0) {
        return Err(Error::Domain(format!("exclusion radius must be > 0, got {r_outer}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let gains = params.interferer_gain_law();
    let v = integrate_outside(|x| exponent_integrand(x, s, mark, params, model, &gains), r_outer, params, spec)?;
    Ok(2.0 * PI * params.lambda * v)
}

/// `E_L(s) + E_N(s)` as a single quadrature.
pub fn total_interference_exponent(s: f64, r_outer: f64, params: &SystemParams, model: &FadingModel, spec: &QuadSpec) -> std::result::Result<f64, QuadError> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let gains = params.interferer_gain_law();
    let v = integrate_outside(
        |x| {
            exponent_integrand(x, s, Mark::Los, params, model, &gains)
                + exponent_integrand(x, s, Mark::Nlos, params, model, &gains)
        },
        r_outer,
        params,
        spec,
    )?;
    Ok(2.0 * PI * params.lambda * v)
}

/// `1 - prod_k (1 - kernel(s d_k))` for the desired powers `d_k`, computed
/// in log space so small `s` keeps full relative precision.
#[inline]
fn signal_bracket(s: f64, desired: &[f64], model: &FadingModel) -> f64 {
    let log_prod: f64 = desired.iter().map(|&d| (-kernel(model, true, s * d)).ln_1p()).sum();
    -log_prod.exp_m1()
}

/// Mean received desired power from the serving set.
fn desired_powers(r: &OrderedDistances, p: &SystemParams) -> Vec<f64> {
    r.values()
        .iter()
        .map(|&rk| p.main_gain * p.c_los * rk.powf(-p.alpha_los))
        .collect()
}

/// Limits of the `s` integral, in `ln s`.
///
/// Below `s_lo` the bracket is at most `s * sum_k d_k E[g]`, so the dropped
/// mass is at most `s_lo * sum_k d_k E[g]`; above `s_hi` the noise factor
/// leaves at most `E_1(s_hi sigma^2) < exp(-y)/y` with `y = s_hi sigma^2`.
fn laplace_limits(desired: &[f64], p: &SystemParams, model: &FadingModel) -> (f64, f64) {
    let mean_signal: f64 = desired.iter().sum::<f64>() * model.mean_power(true);
    let s_lo = S_TRUNCATION / mean_signal;
    // exp(-y)/y < 1e-12 for y >= 25
    let s_hi = 25.0 / p.noise_power;
    (s_lo.ln(), s_hi.ln().max(s_lo.ln() + 1.0))
}

/// Conditional ergodic capacity given the serving distances, bits/s/Hz.
pub fn conditional_capacity(r: &OrderedDistances, params: &SystemParams, model: &FadingModel) -> Result<CapacityEstimate> {
    conditional_capacity_with(r, params, model, &Tolerances::default())
}

pub fn conditional_capacity_with(
    r: &OrderedDistances,
    params: &SystemParams,
    model: &FadingModel,
    tol: &Tolerances,
) -> Result<CapacityEstimate> {
    let desired = desired_powers(r, params);
    let r_outer = r.outer();
    let sigma2 = params.noise_power;
    let (u_lo, u_hi) = laplace_limits(&desired, params, model);

    let failure: Cell<Option<QuadError>> = Cell::new(None);
    // With s = e^u the measure ds/s becomes du.
    let integrand = |u: f64| -> f64 {
        let s = u.exp();
        let noise = (-s * sigma2).exp();
        if noise == 0.0 {
            return 0.0;
        }
        let bracket = signal_bracket(s, &desired, model);
        if bracket == 0.0 {
            return 0.0;
        }
        let e = match total_interference_exponent(s, r_outer, params, model, &tol.interference) {
            Ok(e) => e,
            Err(err) => {
                let est = err.estimate();
                failure.set(Some(err));
                match est {
                    Some(v) => 2.0 * PI * params.lambda * v,
                    None => return f64::NAN,
                }
            }
        };
        noise * (-e).exp() * bracket
    };
    let res = integrate(integrand, u_lo, u_hi, &tol.laplace);
    if let Some(err) = failure.take() {
        return Err(err.into());
    }
    let res = res?;
    Ok(CapacityEstimate {
        bits_per_hz: res.value / LN_2,
        half_width: (res.error + 2.0 * S_TRUNCATION) / LN_2,
        n: 0,
        method: Method::AnalyticNested,
    })
}

/// Work budget for [`ergodic_capacity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Distance draws for the sampled method.
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            samples: 2000,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

impl Budget {
    pub fn sampled(samples: usize, seed: u64) -> Self {
        Budget {
            samples,
            seed,
            ..Budget::default()
        }
    }
}

/// Unconditional ergodic capacity, averaging [`conditional_capacity`] over
/// the serving distances by sampling or by nested quadrature (`K <= 2`).
pub fn ergodic_capacity(params: &SystemParams, model: &FadingModel, method: Method, budget: &Budget) -> Result<CapacityEstimate> {
    let (params, model) = validate(params.clone(), *model)?;
    let k = params.k_serving;
    let tol = budget.tolerances;
    match method {
        Method::AnalyticSampled => {
            let m = expect_over_ordered_domain(
                |r| conditional_capacity_with(r, &params, &model, &tol).map(|c| c.bits_per_hz),
                params.lambda,
                k,
                budget.samples,
                budget.seed,
            )?;
            Ok(CapacityEstimate {
                bits_per_hz: m.mean,
                half_width: m.std_error,
                n: m.n,
                method,
            })
        }
        Method::AnalyticNested => {
            if k > 2 {
                return Err(Error::UnsupportedMethod(format!(
                    "analytic-nested supports K <= 2, got K = {k}; use analytic-sampled"
                )));
            }
            let failure = std::sync::Mutex::new(None::<Error>);
            let g = |r: &OrderedDistances| match conditional_capacity_with(r, &params, &model, &tol) {
                Ok(c) => c.bits_per_hz,
                Err(e) => {
                    let est = match &e {
                        Error::Quadrature(q) => q.estimate().map(|v| v / LN_2),
                        _ => None,
                    };
                    failure.lock().expect("not poisoned").get_or_insert(e);
                    est.unwrap_or(f64::NAN)
                }
            };
            let res = integrate_nested_ordered(g, params.lambda, k, &tol.capacity)?;
            if let Some(e) = failure.into_inner().expect("not poisoned") {
                return Err(e);
            }
            let inner = tol.laplace.rel_tol * res.value.abs();
            Ok(CapacityEstimate {
                bits_per_hz: res.value,
                half_width: res.error + inner,
                n: 0,
                method,
            })
        }
        Method::MonteCarlo => Err(Error::UnsupportedMethod(
            "montecarlo is not an analytic method; use montecarlo::estimate_capacity".into(),
        )),
    }
}
