//! Numerical integration.
//!
//! Globally adaptive Gauss-Kronrod (7/15 point) quadrature on finite
//! intervals, semi-infinite integrals through a rational change of variable,
//! and two ways of taking expectations over the ordered serving-distance
//! domain `0 < r_1 <= ... <= r_K`: plain sampling (any K) and deterministic
//! nested quadrature (K <= 2).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::Mutex;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::geometry::{sample_ordered_distances, OrderedDistances};
use crate::par;
use crate::rng::{stream, Purpose};
use crate::stats::mean_and_se;

// Kronrod abscissae on [0, 1); odd indices are shared with the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Change of variable used to map `[lower, inf)` onto `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailTransform {
    /// `x = lower + scale * t / (1 - t)`. `scale` should be the length over
    /// which the integrand varies; half of `t` is spent on `[lower, lower + scale]`.
    Rational { scale: f64 },
    /// `x = lower / (1 - t)^2`, for `lower > 0` and integrands with
    /// power-law tails. An integrand decaying like `x^-p` becomes
    /// `O((1 - t)^(2p - 3))` near `t = 1`.
    InverseSquare,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of interval bisections.
    pub max_depth: usize,
    pub tail_transform: TailTransform,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-12,
            max_depth: 500,
            tail_transform: TailTransform::Rational { scale: 1.0 },
        }
    }
}

impl QuadSpec {
    pub fn with_tol(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.tail_transform = TailTransform::Rational { scale };
        self
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_tail(mut self, tail_transform: TailTransform) -> Self {
        self.tail_transform = tail_transform;
        self
    }

    fn check(&self) -> std::result::Result<(), QuadError> {
        let scale_ok = match self.tail_transform {
            TailTransform::Rational { scale } => scale > 0.0,
            TailTransform::InverseSquare => true,
        };
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_depth >= 1 && scale_ok) {
            return Err(QuadError::InvalidSpec(format!("{self:?}")));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// A converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    /// The subdivision budget ran out. The best estimate is kept.
    #[error("tolerance not met: estimate {estimate} with error bound {error} after {evaluations} evaluations")]
    ToleranceNotMet {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },
    #[error("integrand returned {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
}

impl QuadError {
    /// Best available estimate, if any.
    pub fn estimate(&self) -> Option<f64> {
        match self {
            QuadError::ToleranceNotMet { estimate, .. } => Some(*estimate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Largest error first; ties by position to keep the order total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn abscissae(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut xs = [c; 15];
    for j in 0..7 {
        xs[2 * j] = c - h * XGK[j];
        xs[2 * j + 1] = c + h * XGK[j];
    }
    xs
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

/// Combines the 15 values at [`abscissae`] into the Kronrod estimate and
/// the QUADPACK error estimate.
fn combine(a: f64, b: f64, fx: &[f64; 15]) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let fc = fx[14];
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    let mut res_abs = kronrod.abs();
    for j in 0..7 {
        let (f1, f2) = (fx[2 * j], fx[2 * j + 1]);
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fx[2 * j] - mean).abs() + (fx[2 * j + 1] - mean).abs());
    }
    let err = (kronrod - gauss) * h;
    let abs_h = h.abs();
    (kronrod * h, rescale_error(err, res_abs * abs_h, res_asc * abs_h))
}

/// Shared driver; `eval` maps 15 abscissae to integrand values.
fn adaptive<E>(a: f64, b: f64, spec: &QuadSpec, eval: E) -> std::result::Result<Integral, QuadError>
where
    E: Fn(&[f64; 15]) -> [f64; 15],
{
    spec.check()?;
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let panel = |a: f64, b: f64| -> std::result::Result<Panel, QuadError> {
        let xs = abscissae(a, b);
        let fx = eval(&xs);
        if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
            return Err(QuadError::NonFinite { x: xs[i], value: fx[i] });
        }
        let (value, error) = combine(a, b, &fx);
        Ok(Panel { a, b, value, error })
    };

    let mut heap = BinaryHeap::new();
    let first = panel(a, b)?;
    let mut evaluations = 15;
    let (mut total, mut total_err) = (first.value, first.error);
    heap.push(first);

    let mut bisections = 0;
    loop {
        if total_err <= spec.target(total) {
            break;
        }
        let worst = *heap.peek().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = !((mid - worst.a) * (worst.b - mid) > 0.0)
            || (worst.b - worst.a).abs() <= 4.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs());
        if bisections >= spec.max_depth || too_narrow {
            let (value, error) = sum_panels(&heap);
            return Err(QuadError::ToleranceNotMet {
                estimate: value,
                error,
                evaluations,
            });
        }
        heap.pop();
        let left = panel(worst.a, mid)?;
        let right = panel(mid, worst.b)?;
        evaluations += 30;
        bisections += 1;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    let (value, error) = sum_panels(&heap);
    Ok(Integral { value, error, evaluations })
}

fn sum_panels(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    // Sum in interval order so the result does not depend on heap layout.
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    panels
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadSpec) -> std::result::Result<Integral, QuadError>
where
    F: Fn(f64) -> f64,
{
    adaptive(a, b, spec, |xs| xs.map(&f))
}

/// As [`integrate`], evaluating the 15 nodes of each panel in parallel.
/// Worth it only when a single evaluation is expensive.
pub fn integrate_par<F>(f: F, a: f64, b: f64, spec: &QuadSpec) -> std::result::Result<Integral, QuadError>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    adaptive(a, b, spec, |xs| {
        let v = par::map_indexed(15, |i| f(xs[i]));
        std::array::from_fn(|i| v[i])
    })
}

fn tail_map(lower: f64, spec: &QuadSpec) -> std::result::Result<impl Fn(f64) -> (f64, f64), QuadError> {
    let tail = spec.tail_transform;
    if tail == TailTransform::InverseSquare && !(lower > 0.0) {
        return Err(QuadError::InvalidSpec(format!(
            "inverse-square tail map needs a positive lower limit, got {lower}"
        )));
    }
    Ok(move |t: f64| {
        let u = 1.0 - t;
        match tail {
            TailTransform::Rational { scale } => (lower + scale * t / u, scale / (u * u)),
            TailTransform::InverseSquare => (lower / (u * u), 2.0 * lower / (u * u * u)),
        }
    })
}

/// `int_lower^inf f(x) dx` through the configured tail transform.
pub fn integrate_semi_infinite<F>(f: F, lower: f64, spec: &QuadSpec) -> std::result::Result<Integral, QuadError>
where
    F: Fn(f64) -> f64,
{
    let map = tail_map(lower, spec)?;
    integrate(
        |t| {
            let (x, jac) = map(t);
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * jac
            }
        },
        0.0,
        1.0,
        spec,
    )
}

fn integrate_semi_infinite_par<F>(f: F, lower: f64, spec: &QuadSpec) -> std::result::Result<Integral, QuadError>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let map = tail_map(lower, spec)?;
    integrate_par(
        |t| {
            let (x, jac) = map(t);
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * jac
            }
        },
        0.0,
        1.0,
        spec,
    )
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMean {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Monte Carlo expectation of `g` over the ordered nearest-distance law.
///
/// Draw `i` uses stream `(seed, Distances, i)`, so the result does not
/// depend on how many workers evaluate it.
pub fn expect_over_ordered_domain<G>(g: G, lambda: f64, k: usize, n_samples: usize, seed: u64) -> Result<SampleMean>
where
    G: Fn(&OrderedDistances) -> Result<f64> + Sync + Send,
{
    if n_samples < 2 {
        return Err(Error::InvalidParameter("n_samples >= 2 required".into()));
    }
    if !(lambda > 0.0) || k == 0 {
        return Err(Error::InvalidParameter("lambda > 0 and k >= 1 required".into()));
    }
    let values = par::try_map_indexed(n_samples, |i| {
        let r = sample_ordered_distances(lambda, k, &mut stream(seed, Purpose::Distances, i as u64));
        let v = g(&r)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { value: v, distances: r.into_vec() });
        }
        Ok(v)
    })?;
    let (mean, std_error) = mean_and_se(&values);
    Ok(SampleMean { mean, std_error, n: n_samples })
}

/// Deterministic quadrature of `E[g(r)]` under the ordered-distance density
/// `(2 pi lambda)^k r_1...r_k exp(-pi lambda r_k^2)` for `k` in {1, 2}.
///
/// The outermost variable `r_k` runs over `[0, inf)` with the rational tail
/// map at scale `1/sqrt(pi lambda)`; for `k = 2` the inner `r_1` runs over
/// `[0, r_2]`. Outer panels are evaluated in parallel.
pub fn integrate_nested_ordered<G>(g: G, lambda: f64, k: usize, spec: &QuadSpec) -> Result<Integral>
where
    G: Fn(&OrderedDistances) -> f64 + Sync + Send,
{
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda > 0 required".into()));
    }
    let scale = 1.0 / (PI * lambda).sqrt();
    let outer_spec = spec.with_scale(scale);
    let two_pi_lambda = 2.0 * PI * lambda;
    let density_tail = |r: f64| (-PI * lambda * r * r).exp();

    match k {
        1 => {
            let res = integrate_semi_infinite_par(
                |r| {
                    if r <= 0.0 {
                        return 0.0;
                    }
                    let w = two_pi_lambda * r * density_tail(r);
                    if w == 0.0 {
                        return 0.0;
                    }
                    w * g(&OrderedDistances::new(vec![r]).expect("positive"))
                },
                0.0,
                &outer_spec,
            )?;
            Ok(res)
        }
        2 => {
            let inner_spec = *spec;
            let failure: Mutex<Option<QuadError>> = Mutex::new(None);
            let inner = |r2: f64| -> f64 {
                // r_1 = r_2 t^2 tames the logarithmic growth of g as r_1 -> 0.
                let res = integrate(
                    |t| {
                        let r1 = (r2 * t * t).min(r2);
                        if r1 <= 0.0 {
                            return 0.0;
                        }
                        2.0 * r2 * r2 * t * t * t * g(&OrderedDistances::new(vec![r1, r2]).expect("ordered"))
                    },
                    0.0,
                    1.0,
                    &inner_spec,
                );
                match res {
                    Ok(i) => i.value,
                    Err(e) => {
                        let est = e.estimate().unwrap_or(f64::NAN);
                        failure.lock().expect("not poisoned").get_or_insert(e);
                        est
                    }
                }
            };
            let res = integrate_semi_infinite_par(
                |r2| {
                    if r2 <= 0.0 {
                        return 0.0;
                    }
                    let w = two_pi_lambda * two_pi_lambda * r2 * density_tail(r2);
                    if w == 0.0 {
                        return 0.0;
                    }
                    w * inner(r2)
                },
                0.0,
                &outer_spec,
            )?;
            if let Some(e) = failure.into_inner().expect("not poisoned") {
                return Err(e.into());
            }
            Ok(res)
        }
        _ => Err(Error::UnsupportedMethod(format!(
            "nested quadrature supports k <= 2, got k = {k}"
        ))),
    }
}
