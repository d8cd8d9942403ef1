//! Link physics: path loss, sectored antenna gains and fading powers.
//!
//! [`fading_kernel`] is the analytic side of the fading model. It returns
//! `1 - E[exp(-x g)]` for the fading power `g`, which is the only place the
//! three capacity expressions differ.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::error::{Error, Result};
use crate::params::{FadingModel, SystemParams};

/// Antenna gain of an AP towards the UE, linear. Either `M` or `m`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LinkGain(pub f64);

impl LinkGain {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `C_L r^-alpha_L` for LOS links, `C_N r^-alpha_N` otherwise.
pub fn path_loss(r: f64, is_los: bool, params: &SystemParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("path loss undefined at distance {r}")));
    }
    Ok(path_loss_unchecked(r, is_los, params))
}

#[inline]
pub(crate) fn path_loss_unchecked(r: f64, is_los: bool, p: &SystemParams) -> f64 {
    if is_los {
        p.c_los * r.powf(-p.alpha_los)
    } else {
        p.c_nlos * r.powf(-p.alpha_nlos)
    }
}

/// Serving APs steer their main lobe at the UE.
pub fn serving_gain(params: &SystemParams) -> LinkGain {
    LinkGain(params.main_gain)
}

/// Main lobe with probability `theta_b / 2 pi`, side lobe otherwise.
pub fn sample_interferer_gain<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> LinkGain {
    let u: f64 = rng.random();
    if u < params.main_lobe_probability() {
        LinkGain(params.main_gain)
    } else {
        LinkGain(params.side_gain)
    }
}

/// Draws `|xi|^2` for a link in the given state.
pub fn sample_fading_power<R: Rng + ?Sized>(model: &FadingModel, is_los: bool, rng: &mut R) -> f64 {
    match *model {
        FadingModel::Nakagami { n_los, n_nlos } => {
            let n = if is_los { n_los } else { n_nlos };
            Gamma::new(n, 1.0 / n).expect("validated shape").sample(rng)
        }
        FadingModel::Rayleigh { mu } => Exp::new(1.0 / mu).expect("validated mean").sample(rng),
        FadingModel::NoFading => 1.0,
    }
}

/// `1 - E[exp(-x g)]` for the fading power `g` of a link in the given state.
///
/// Nakagami: `1 - (1 + x/N)^-N`; Rayleigh: `mu x / (1 + mu x)`;
/// no fading: `1 - exp(-x)`.
pub fn fading_kernel(model: &FadingModel, is_los: bool, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("fading kernel needs x >= 0, got {x}")));
    }
    Ok(kernel(model, is_los, x))
}

#[inline]
pub(crate) fn kernel(model: &FadingModel, is_los: bool, x: f64) -> f64 {
    match *model {
        FadingModel::Nakagami { n_los, n_nlos } => {
            let n = if is_los { n_los } else { n_nlos };
            -(-n * (x / n).ln_1p()).exp_m1()
        }
        FadingModel::Rayleigh { mu } => {
            let y = mu * x;
            if y.is_infinite() {
                1.0
            } else {
                y / (1.0 + y)
            }
        }
        FadingModel::NoFading => -(-x).exp_m1(),
    }
}
