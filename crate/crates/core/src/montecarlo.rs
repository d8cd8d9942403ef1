//! Full-system simulation of the typical UE.
//!
//! Each trial draws a PPP deployment inside the disk of radius `R`, marks
//! every AP LOS/NLOS, draws interferer antenna gains and fading powers, and
//! evaluates the SINR with the `K` nearest APs as the serving set. Trials are
//! independent: trial `i` reads only the streams `(seed, purpose, i)`.

use std::io::Write;

use crate::analytic::{CapacityEstimate, Mark, Method};
use crate::channel::{path_loss_unchecked, sample_fading_power, sample_interferer_gain, serving_gain, LinkGain};
use crate::error::{Error, Result};
use crate::geometry::{mark_blockage, sample_ppp, ApPoint};
use crate::par;
use crate::params::{validate, FadingModel, Region, SystemParams};
use crate::quadrature::SampleMean;
use crate::rng::{stream, Purpose};
use crate::stats::{mean_and_se, wilson_interval, Z95};

/// Deployments with fewer than `K` APs are redrawn at most this many times.
pub const MAX_REDRAWS: usize = 1000;

/// Treatment of the serving links' blockage state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMode {
    /// Serving links are forced LOS, as the analytic expressions assume.
    #[default]
    Assumption,
    /// Serving links keep the LOS/NLOS mark drawn from `p(r)`.
    Faithful,
}

impl std::str::FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "assumption" => Ok(SimMode::Assumption),
            "faithful" => Ok(SimMode::Faithful),
            _ => Err(Error::InvalidParameter(format!("unknown simulation mode {s:?}"))),
        }
    }
}

/// One sampled deployment around the UE.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    /// Sorted by distance; the first `k` are the serving APs.
    pub aps: Vec<ApPoint>,
    pub k: usize,
    pub gains: Vec<LinkGain>,
    /// Fading powers `|xi|^2`.
    pub fading: Vec<f64>,
    /// Deployments discarded for having fewer than `k` APs.
    pub rejections: usize,
}

impl NetworkRealization {
    pub fn serving(&self) -> &[ApPoint] {
        &self.aps[..self.k]
    }

    pub fn serving_distances(&self) -> Vec<f64> {
        self.serving().iter().map(|p| p.r).collect()
    }

    /// Desired power and total interference power, both normalized by the
    /// transmit power.
    pub fn powers(&self, params: &SystemParams) -> (f64, f64) {
        let mut desired = 0.0;
        let mut interference = 0.0;
        for (i, ap) in self.aps.iter().enumerate() {
            let rx = self.gains[i].value() * path_loss_unchecked(ap.r, ap.is_los, params) * self.fading[i];
            if i < self.k {
                desired += rx;
            } else {
                interference += rx;
            }
        }
        (desired, interference)
    }

    pub fn sinr(&self, params: &SystemParams) -> f64 {
        let (desired, interference) = self.powers(params);
        desired / (interference + params.noise_power)
    }
}

fn disk_radius(params: &SystemParams) -> Result<f64> {
    match params.region_radius {
        Region::Finite(r) => Ok(r),
        Region::Infinite => Err(Error::InvalidParameter(
            "the simulator needs a finite deployment region".into(),
        )),
    }
}

/// Geometry and blockage marks for trial `index`, with at least `k` APs.
fn draw_marked_deployment(params: &SystemParams, k: usize, seed: u64, index: u64) -> Result<(Vec<ApPoint>, usize)> {
    let radius = disk_radius(params)?;
    let mut geo = stream(seed, Purpose::Geometry, index);
    for attempt in 0..MAX_REDRAWS {
        let pts = sample_ppp(params.lambda, radius, &mut geo);
        if pts.len() >= k {
            let marked = mark_blockage(pts, params.beta, &mut stream(seed, Purpose::Blockage, index));
            return Ok((marked, attempt));
        }
    }
    Err(Error::UnderPopulated {
        k,
        expected: params.lambda * std::f64::consts::PI * radius * radius,
        attempts: MAX_REDRAWS,
    })
}

/// Draws the deployment for trial `index`.
pub fn draw_realization(
    params: &SystemParams,
    model: &FadingModel,
    mode: SimMode,
    seed: u64,
    index: u64,
) -> Result<NetworkRealization> {
    let k = params.k_serving;
    let (mut aps, rejections) = draw_marked_deployment(params, k, seed, index)?;
    if mode == SimMode::Assumption {
        aps[..k].iter_mut().for_each(|p| p.is_los = true);
    }
    let mut gain_rng = stream(seed, Purpose::Gain, index);
    let gains = (0..aps.len())
        .map(|i| {
            if i < k {
                serving_gain(params)
            } else {
                sample_interferer_gain(params, &mut gain_rng)
            }
        })
        .collect();
    let mut fading_rng = stream(seed, Purpose::Fading, index);
    let fading = aps
        .iter()
        .map(|p| sample_fading_power(model, p.is_los, &mut fading_rng))
        .collect();
    Ok(NetworkRealization {
        aps,
        k,
        gains,
        fading,
        rejections,
    })
}

/// Linear SINR of trial `index`.
pub fn simulate_sinr(params: &SystemParams, model: &FadingModel, mode: SimMode, seed: u64, index: u64) -> Result<f64> {
    Ok(draw_realization(params, model, mode, seed, index)?.sinr(params))
}

/// `log2(1 + SINR)` of trial `index`.
pub fn trial_capacity(params: &SystemParams, model: &FadingModel, mode: SimMode, seed: u64, index: u64) -> Result<f64> {
    simulate_sinr(params, model, mode, seed, index).map(|g| g.ln_1p() / std::f64::consts::LN_2)
}

fn collect_trials(values: Vec<Result<f64>>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        match v {
            Ok(x) => out.push(x),
            Err(e) => {
                let (partial_mean, _) = mean_and_se(&out);
                return Err(Error::Aborted {
                    source: Box::new(e),
                    partial_mean,
                    partial_n: out.len(),
                });
            }
        }
    }
    Ok(out)
}

/// Monte Carlo ergodic capacity over `n_trials` independent deployments.
pub fn estimate_capacity(
    params: &SystemParams,
    model: &FadingModel,
    mode: SimMode,
    n_trials: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    if n_trials < 100 {
        return Err(Error::InvalidParameter(format!("n_trials >= 100 required, got {n_trials}")));
    }
    let (params, model) = validate(params.clone(), *model)?;
    disk_radius(&params)?;
    let values = par::map_indexed(n_trials, |i| trial_capacity(&params, &model, mode, seed, i as u64));
    let values = collect_trials(values)?;
    let (mean, se) = mean_and_se(&values);
    Ok(CapacityEstimate {
        bits_per_hz: mean,
        half_width: se,
        n: n_trials,
        method: Method::MonteCarlo,
    })
}

/// Fraction of deployments whose `k` serving links are all LOS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosProbability {
    pub probability: f64,
    /// 95% Wilson score half-width.
    pub ci_half_width: f64,
    pub successes: usize,
    pub n: usize,
}

/// Probability that all `k` serving links are LOS, with blockage drawn
/// faithfully from `p(r)`.
pub fn estimate_serving_los_probability(params: &SystemParams, k: usize, n_trials: usize, seed: u64) -> Result<LosProbability> {
    if n_trials == 0 || k == 0 {
        return Err(Error::InvalidParameter("n_trials >= 1 and k >= 1 required".into()));
    }
    let params = params.clone().with_k(k);
    params.validate()?;
    let hits = par::map_indexed(n_trials, |i| {
        draw_marked_deployment(&params, k, seed, i as u64).map(|(aps, _)| aps[..k].iter().all(|p| p.is_los) as usize as f64)
    });
    let hits = collect_trials(hits)?;
    let successes = hits.iter().filter(|&&h| h > 0.0).count();
    let (_, half) = wilson_interval(successes, n_trials, Z95);
    Ok(LosProbability {
        probability: successes as f64 / n_trials as f64,
        ci_half_width: half,
        successes,
        n: n_trials,
    })
}

/// Brute-force estimate of `E[exp(-s I)]` for the LOS or NLOS interference
/// beyond `r_outer`, inside the (finite) region of `params`.
///
/// Every trial samples a fresh PPP, thins it by blockage and sums the
/// received interference of the matching link state. Independent of the
/// analytic exponent, which is `-ln` of this quantity.
pub fn laplace_functional_mc(
    s: f64,
    r_outer: f64,
    mark: Mark,
    params: &SystemParams,
    model: &FadingModel,
    n_trials: usize,
    seed: u64,
) -> Result<SampleMean> {
    let radius = disk_radius(params)?;
    if n_trials < 2 {
        return Err(Error::InvalidParameter("n_trials >= 2 required".into()));
    }
    let want_los = mark == Mark::Los;
    let values = par::map_indexed(n_trials, |i| {
        let i = i as u64;
        let pts = sample_ppp(params.lambda, radius, &mut stream(seed, Purpose::Oracle, i));
        let pts = mark_blockage(pts, params.beta, &mut stream(seed, Purpose::Blockage, i));
        let mut gain_rng = stream(seed, Purpose::Gain, i);
        let mut fading_rng = stream(seed, Purpose::Fading, i);
        let interference: f64 = pts
            .iter()
            .filter(|p| p.r > r_outer && p.is_los == want_los)
            .map(|p| {
                let g = sample_interferer_gain(params, &mut gain_rng).value();
                let h = sample_fading_power(model, p.is_los, &mut fading_rng);
                g * path_loss_unchecked(p.r, p.is_los, params) * h
            })
            .sum();
        (-s * interference).exp()
    });
    let (mean, std_error) = mean_and_se(&values);
    Ok(SampleMean { mean, std_error, n: n_trials })
}

/// Writes one row per trial: `trial,K,r_1..r_K,sinr_db,capacity`.
pub fn write_trace<W: Write>(
    params: &SystemParams,
    model: &FadingModel,
    mode: SimMode,
    n_trials: usize,
    seed: u64,
    mut out: W,
) -> Result<()> {
    let k = params.k_serving;
    let dist_cols: Vec<String> = (1..=k).map(|j| format!("r_{j}")).collect();
    writeln!(out, "trial,K,{},sinr_db,capacity", dist_cols.join(","))?;
    let rows = par::try_map_indexed(n_trials, |i| draw_realization(params, model, mode, seed, i as u64))?;
    for (i, real) in rows.iter().enumerate() {
        let sinr = real.sinr(params);
        let dists: Vec<String> = real.serving_distances().iter().map(|r| r.to_string()).collect();
        writeln!(
            out,
            "{i},{k},{},{},{}",
            dists.join(","),
            10.0 * sinr.log10(),
            sinr.ln_1p() / std::f64::consts::LN_2
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_ap(r: f64, params: &SystemParams) -> NetworkRealization {
        NetworkRealization {
            aps: vec![ApPoint { r, theta: 0.0, is_los: true }],
            k: 1,
            gains: vec![serving_gain(params)],
            fading: vec![1.0],
            rejections: 0,
        }
    }

    #[test]
    fn single_link_snr() {
        let p = SystemParams::default().with_k(1);
        assert_relative_eq!(single_ap(10.0, &p).sinr(&p), 792.446_596_230_557, max_relative = 1e-9);
        let loud = p.clone().with_noise_power(1e30);
        assert!(single_ap(10.0, &loud).sinr(&loud) < 1e-30);
    }

    #[test]
    fn realization_invariants() {
        let p = SystemParams::default().with_k(3);
        for mode in [SimMode::Assumption, SimMode::Faithful] {
            for i in 0..50 {
                let r = draw_realization(&p, &FadingModel::REFERENCE_NAKAGAMI, mode, 5, i).unwrap();
                assert!(r.aps.len() >= 3);
                assert!(r.aps.windows(2).all(|w| w[0].r <= w[1].r));
                assert!(r.gains[..3].iter().all(|g| g.value() == p.main_gain));
                assert!(r.gains[3..].iter().all(|g| g.value() == p.main_gain || g.value() == p.side_gain));
                assert!(r.fading.iter().all(|&f| f >= 0.0));
                if mode == SimMode::Assumption {
                    assert!(r.serving().iter().all(|a| a.is_los));
                }
            }
        }
    }

    #[test]
    fn serving_set_does_not_depend_on_attributes() {
        let p = SystemParams::default();
        for i in 0..20 {
            let a = draw_realization(&p, &FadingModel::REFERENCE_RAYLEIGH, SimMode::Faithful, 9, i).unwrap();
            let b = draw_realization(&p, &FadingModel::NoFading, SimMode::Assumption, 9, i).unwrap();
            assert_eq!(a.serving_distances(), b.serving_distances());
        }
    }

    #[test]
    fn infinite_region_rejected() {
        let p = SystemParams::default().with_region(Region::Infinite);
        assert!(estimate_capacity(&p, &FadingModel::NoFading, SimMode::Assumption, 100, 0).is_err());
    }

    #[test]
    fn too_few_trials_rejected() {
        let p = SystemParams::default();
        assert!(estimate_capacity(&p, &FadingModel::NoFading, SimMode::Assumption, 99, 0).is_err());
    }

    #[test]
    fn underpopulation_is_reported() {
        // lambda pi R^2 = 0.0314, so K = 3 essentially never fits.
        let p = SystemParams::default().with_lambda(1e-6).with_k(3);
        let err = estimate_capacity(&p, &FadingModel::NoFading, SimMode::Assumption, 100, 0).unwrap_err();
        match err {
            Error::Aborted { source, partial_n, .. } => {
                assert_eq!(partial_n, 0);
                assert!(matches!(*source, Error::UnderPopulated { k: 3, .. }));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn zero_beta_always_los() {
        let p = SystemParams::default().with_beta(0.0);
        let est = estimate_serving_los_probability(&p, 3, 500, 1).unwrap();
        assert_eq!(est.probability, 1.0);
    }

    #[test]
    fn trace_has_one_row_per_trial() {
        let p = SystemParams::default();
        let mut buf = Vec::new();
        write_trace(&p, &FadingModel::NoFading, SimMode::Assumption, 5, 3, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial,K,r_1,r_2,sinr_db,capacity");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,2,"));
    }
}
