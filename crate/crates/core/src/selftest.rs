//! Internal consistency checks that need no external reference data.
//!
//! Each check pits an implementation against an independent computation:
//! a closed form, a brute-force simulation, or a second model that must
//! coincide with the first.

use std::fmt;

use crate::analytic::{conditional_capacity, interference_exponent, Mark};
use crate::channel::{fading_kernel, sample_fading_power};
use crate::error::Result;
use crate::geometry::OrderedDistances;
use crate::montecarlo::laplace_functional_mc;
use crate::par;
use crate::params::{FadingModel, Region, SystemParams};
use crate::quadrature::{integrate_nested_ordered, integrate_semi_infinite, QuadSpec};
use crate::rng::{stream, Purpose};
use crate::stats::mean_and_se;

/// Laplace points `(s, r_K, mark)` where the exponent is of order one.
pub const LAPLACE_POINTS: [(f64, f64, Mark); 3] = [(1e8, 10.0, Mark::Los), (1e9, 30.0, Mark::Los), (1e12, 15.0, Mark::Nlos)];

/// Truncation radius shared by the simulated and integrated interference field.
pub const ORACLE_REGION: f64 = 500.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// `int_0^inf (1/z)(1 - e^{-xz}) e^{-z} dz = ln(1 + x)`.
pub fn hamdi_identity(x: f64) -> Result<Check> {
    let spec = QuadSpec::default().with_tol(1e-12, 1e-14);
    let v = integrate_semi_infinite(
        |z| {
            if z <= 0.0 {
                return x;
            }
            -(-x * z).exp_m1() / z * (-z).exp()
        },
        0.0,
        &spec,
    )?
    .value;
    let err = (v - x.ln_1p()).abs();
    Ok(check(format!("hamdi x={x}"), err <= 1e-8, format!("|quad - ln(1+x)| = {err:.3e}")))
}

/// The ordered-distance density integrates to one.
pub fn density_normalization(lambda: f64, k: usize) -> Result<Check> {
    let spec = QuadSpec::default().with_tol(1e-9, 1e-12);
    let v = integrate_nested_ordered(|_| 1.0, lambda, k, &spec)?.value;
    let err = (v - 1.0).abs();
    Ok(check(
        format!("density normalization lambda={lambda} K={k}"),
        err <= 1e-6,
        format!("|mass - 1| = {err:.3e}"),
    ))
}

/// `1 - E[exp(-x g)]` against a sample mean over the fading sampler.
pub fn kernel_vs_sampler(model: &FadingModel, is_los: bool, x: f64, n: usize, seed: u64) -> Result<Check> {
    let exact = fading_kernel(model, is_los, x)?;
    let mut rng = stream(seed, Purpose::Oracle, 0);
    let draws: Vec<f64> = (0..n)
        .map(|_| -(-x * sample_fading_power(model, is_los, &mut rng)).exp_m1())
        .collect();
    let (mean, se) = mean_and_se(&draws);
    let z = if se > 0.0 { (mean - exact).abs() / se } else { 0.0 };
    let passed = if se > 0.0 { z <= 3.0 } else { (mean - exact).abs() <= 1e-12 };
    Ok(check(
        format!("kernel {model} los={is_los} x={x}"),
        passed,
        format!("exact {exact:.6}, sampled {mean:.6} +- {se:.2e} ({z:.2} SE)"),
    ))
}

/// Brute-force `E[exp(-s I)]` against `exp(-exponent)`, both truncated at
/// [`ORACLE_REGION`].
pub fn laplace_functional(
    s: f64,
    r_outer: f64,
    mark: Mark,
    params: &SystemParams,
    model: &FadingModel,
    n: usize,
    seed: u64,
) -> Result<Check> {
    let params = params.clone().with_region(Region::Finite(ORACLE_REGION));
    let e = interference_exponent(s, r_outer, mark, &params, model)?;
    let analytic = (-e).exp();
    let mc = laplace_functional_mc(s, r_outer, mark, &params, model, n, seed)?;
    let z = (mc.mean - analytic).abs() / mc.std_error;
    Ok(check(
        format!("laplace {model} s={s:e} r_K={r_outer} {mark:?}"),
        z <= 3.0,
        format!("exp(-E) = {analytic:.6}, simulated {:.6} +- {:.2e} ({z:.2} SE)", mc.mean, mc.std_error),
    ))
}

/// Nakagami with unit shape and Rayleigh with unit mean share one kernel,
/// so their conditional capacities coincide.
pub fn model_collapse(r: &OrderedDistances, params: &SystemParams) -> Result<Check> {
    let a = conditional_capacity(r, params, &FadingModel::Nakagami { n_los: 1.0, n_nlos: 1.0 })?.bits_per_hz;
    let b = conditional_capacity(r, params, &FadingModel::Rayleigh { mu: 1.0 })?.bits_per_hz;
    let rel = (a - b).abs() / b.abs();
    Ok(check(
        format!("model collapse r={:?} lambda={}", r.values(), params.lambda),
        rel <= 1e-6,
        format!("nakagami(1) {a:.9}, rayleigh(1) {b:.9}, rel diff {rel:.2e}"),
    ))
}

/// Runs every check. `trials` sizes the simulation-based ones.
pub fn run_all(params: &SystemParams, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for x in [0.1, 1.0, 10.0, 100.0] {
        checks.push(hamdi_identity(x)?);
    }
    for k in [1, 2] {
        checks.push(density_normalization(params.lambda, k)?);
    }
    let models = FadingModel::reference_set();
    for (i, model) in models.iter().enumerate() {
        for (j, x) in [0.1, 1.0, 10.0].into_iter().enumerate() {
            checks.push(kernel_vs_sampler(model, i % 2 == 0, x, trials, seed.wrapping_add((3 * i + j) as u64))?);
        }
    }
    let laplace = par::try_map_indexed(LAPLACE_POINTS.len() * models.len(), |i| {
        let (s, r, mark) = LAPLACE_POINTS[i % LAPLACE_POINTS.len()];
        laplace_functional(s, r, mark, params, &models[i / LAPLACE_POINTS.len()], trials, seed)
    })?;
    checks.extend(laplace);
    for r in [vec![10.0], vec![5.0, 20.0], vec![40.0, 41.0]] {
        checks.push(model_collapse(&OrderedDistances::new(r)?, params)?);
    }
    Ok(checks)
}
