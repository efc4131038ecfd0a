//! The unified-formulation algebra: every supported (process, target) pair
//! viewed as a parameterization of clean-data prediction under the
//! variance-exploding process.
//!
//! Each formulation contributes a noise-coordinate mapping to `sigma_hat`,
//! preconditioner coefficients `c_skip/c_out/c_in/c_noise`, the stepwise
//! loss weight `w_sigma` relating the native loss to the x0/VE loss, and
//! the density over `sigma_hat` induced by its native noise schedule.

use crate::error::{Error, Result};
use crate::process::ProcessKind;

/// The seven supported formulations, labeled process-target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FormulationKind {
    /// DDPM: variance preserving, noise prediction.
    VpEps,
    /// EDM: variance exploding, preconditioned F prediction.
    VeF,
    /// NCSN: variance exploding, noise prediction.
    VeEps,
    /// Flow matching, vector-field prediction, uniform-time schedule.
    FmV,
    /// Flow matching, vector-field prediction, log-normal schedule.
    FmVSd3,
    /// Flow matching, noise prediction.
    FmEps,
    /// Flow matching, clean-data prediction.
    FmX0,
}

impl FormulationKind {
    pub fn process(self) -> ProcessKind {
        match self {
            FormulationKind::VpEps => ProcessKind::Vp,
            FormulationKind::VeF | FormulationKind::VeEps => ProcessKind::Ve,
            _ => ProcessKind::Fm,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "vp-eps" => FormulationKind::VpEps,
            "ve-F" => FormulationKind::VeF,
            "ve-eps" => FormulationKind::VeEps,
            "fm-v" => FormulationKind::FmV,
            "fm-v-sd3" => FormulationKind::FmVSd3,
            "fm-eps" => FormulationKind::FmEps,
            "fm-x0" => FormulationKind::FmX0,
            other => {
                return Err(Error::Unsupported(format!(
                    "unknown formulation \"{other}\" (expected vp-eps, ve-F, ve-eps, fm-v, fm-v-sd3, fm-eps, fm-x0)"
                )))
            }
        })
    }
}

impl std::fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FormulationKind::VpEps => "vp-eps",
            FormulationKind::VeF => "ve-F",
            FormulationKind::VeEps => "ve-eps",
            FormulationKind::FmV => "fm-v",
            FormulationKind::FmVSd3 => "fm-v-sd3",
            FormulationKind::FmEps => "fm-eps",
            FormulationKind::FmX0 => "fm-x0",
        };
        f.write_str(s)
    }
}

/// Schedule constants, defaulting to the source works' conventions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FormulationConstants {
    pub sigma_data: f64,
    pub p_mean: f64,
    pub p_std: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub eps_t: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for FormulationConstants {
    fn default() -> Self {
        FormulationConstants {
            sigma_data: 0.5,
            p_mean: -1.2,
            p_std: 1.2,
            beta_min: 0.1,
            beta_max: 20.0,
            eps_t: 1e-5,
            sigma_min: 0.002,
            sigma_max: 80.0,
        }
    }
}

/// A (process, target) pair with its schedule constants.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FormulationSpec {
    pub kind: FormulationKind,
    pub constants: FormulationConstants,
}

impl FormulationSpec {
    pub fn new(kind: FormulationKind) -> Self {
        FormulationSpec {
            kind,
            constants: FormulationConstants::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.constants;
        let all = [
            ("sigma_data", c.sigma_data),
            ("p_std", c.p_std),
            ("beta_min", c.beta_min),
            ("eps_t", c.eps_t),
            ("sigma_min", c.sigma_min),
            ("sigma_max", c.sigma_max),
        ];
        for (name, v) in all {
            if !(v > 0.0) {
                return Err(Error::Config(format!(
                    "constant {name} must be positive, got {v}"
                )));
            }
        }
        if !(c.beta_max > c.beta_min) {
            return Err(Error::Config("beta_max must exceed beta_min".into()));
        }
        if !(c.sigma_max > c.sigma_min) {
            return Err(Error::Config("sigma_max must exceed sigma_min".into()));
        }
        if !(c.eps_t < 1.0) {
            return Err(Error::Config("eps_t must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Preconditioner coefficients at a fixed `sigma_hat`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Preconditioners {
    pub c_skip: f64,
    pub c_out: f64,
    pub c_in: f64,
    pub c_noise: f64,
}

/// Native noise scale to variance-exploding coordinates:
/// `sigma_hat = sigma / alpha_sigma`.
pub fn to_ve_sigma(process: ProcessKind, native_sigma: f64) -> Result<f64> {
    process.check_native_sigma(native_sigma)?;
    Ok(match process {
        ProcessKind::Ve => native_sigma,
        ProcessKind::Vp => native_sigma / (1.0 - native_sigma * native_sigma).sqrt(),
        ProcessKind::Fm => native_sigma / (1.0 - native_sigma),
    })
}

/// Inverse of [`to_ve_sigma`].
pub fn from_ve_sigma(process: ProcessKind, sigma_hat: f64) -> Result<f64> {
    if !(sigma_hat > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_hat must be positive, got {sigma_hat}"
        )));
    }
    Ok(match process {
        ProcessKind::Ve => sigma_hat,
        ProcessKind::Vp => sigma_hat / (1.0 + sigma_hat * sigma_hat).sqrt(),
        ProcessKind::Fm => sigma_hat / (1.0 + sigma_hat),
    })
}

/// DDPM native time for a given `sigma_hat`, by bisecting the forward map
/// `t -> sigma_hat(t) = sqrt(exp(beta_min t + (beta_max - beta_min) t^2 / 2) - 1)`,
/// which is strictly increasing. The bracket is widened beyond the native
/// schedule's `[eps_t, 1]` so that preconditioners stay defined off-schedule.
fn ddpm_time_of_sigma_hat(c: &FormulationConstants, sigma_hat: f64) -> f64 {
    let target = sigma_hat * sigma_hat; // exp(X) - 1
    let x_of = |t: f64| c.beta_min * t + 0.5 * (c.beta_max - c.beta_min) * t * t;
    let f = |t: f64| x_of(t).exp_m1() - target;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    // bisect to the floating-point limit
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `sigma_hat` induced by the DDPM schedule at native time `t`.
fn ddpm_sigma_hat_of_time(c: &FormulationConstants, t: f64) -> f64 {
    let x = c.beta_min * t + 0.5 * (c.beta_max - c.beta_min) * t * t;
    x.exp_m1().sqrt()
}

/// The preconditioner row for `spec` at `sigma_hat`.
pub fn preconditioners(spec: &FormulationSpec, sigma_hat: f64) -> Result<Preconditioners> {
    spec.validate()?;
    if !(sigma_hat > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_hat must be positive, got {sigma_hat}"
        )));
    }
    let c = &spec.constants;
    Ok(match spec.kind {
        FormulationKind::VpEps => Preconditioners {
            c_skip: 1.0,
            c_out: -sigma_hat,
            c_in: 1.0 / (1.0 + sigma_hat * sigma_hat).sqrt(),
            c_noise: 999.0 * ddpm_time_of_sigma_hat(c, sigma_hat),
        },
        FormulationKind::VeF => {
            let s2 = sigma_hat * sigma_hat;
            let d2 = c.sigma_data * c.sigma_data;
            Preconditioners {
                c_skip: d2 / (s2 + d2),
                c_out: sigma_hat * c.sigma_data / (s2 + d2).sqrt(),
                c_in: 1.0 / (s2 + d2).sqrt(),
                c_noise: 0.25 * sigma_hat.ln(),
            }
        }
        FormulationKind::VeEps => Preconditioners {
            c_skip: 1.0,
            c_out: sigma_hat,
            c_in: 1.0,
            c_noise: (sigma_hat / 2.0).ln(),
        },
        FormulationKind::FmV | FormulationKind::FmVSd3 => {
            let one_p = 1.0 + sigma_hat;
            Preconditioners {
                c_skip: 1.0 / one_p,
                c_out: -sigma_hat / one_p,
                c_in: 1.0 / one_p,
                c_noise: sigma_hat / one_p,
            }
        }
        FormulationKind::FmEps => Preconditioners {
            c_skip: 1.0,
            c_out: -sigma_hat,
            c_in: 1.0 / (1.0 + sigma_hat),
            c_noise: sigma_hat / (1.0 + sigma_hat),
        },
        FormulationKind::FmX0 => Preconditioners {
            c_skip: 0.0,
            c_out: 1.0,
            c_in: 1.0 / (1.0 + sigma_hat),
            c_noise: sigma_hat / (1.0 + sigma_hat),
        },
    })
}

/// The stepwise loss weight `w_sigma`: the factor by which the native loss
/// at `sigma_hat` exceeds the x0-prediction VE loss.
pub fn loss_weight_native(spec: &FormulationSpec, sigma_hat: f64) -> Result<f64> {
    spec.validate()?;
    if !(sigma_hat > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_hat must be positive, got {sigma_hat}"
        )));
    }
    let s2 = sigma_hat * sigma_hat;
    Ok(match spec.kind {
        FormulationKind::VpEps | FormulationKind::VeEps | FormulationKind::FmEps => 1.0 / s2,
        FormulationKind::VeF => {
            let d2 = spec.constants.sigma_data * spec.constants.sigma_data;
            (s2 + d2) / (s2 * d2)
        }
        FormulationKind::FmV | FormulationKind::FmVSd3 => {
            let r = (1.0 + sigma_hat) / sigma_hat;
            r * r
        }
        FormulationKind::FmX0 => 1.0,
    })
}

/// Converts a native stepwise loss value to the x0-prediction VE loss.
pub fn convert_loss_to_x0_ve(
    spec: &FormulationSpec,
    sigma_hat: f64,
    native_loss: f64,
) -> Result<f64> {
    if !(native_loss >= 0.0) {
        return Err(Error::Domain(format!(
            "native loss must be nonnegative, got {native_loss}"
        )));
    }
    Ok(native_loss / loss_weight_native(spec, sigma_hat)?)
}

/// The probability density over `sigma_hat` induced by the formulation's
/// native noise schedule, through the change of variables of
/// [`to_ve_sigma`]. Zero outside the schedule's support.
pub fn native_sigma_density(spec: &FormulationSpec, sigma_hat: f64) -> Result<f64> {
    spec.validate()?;
    if !(sigma_hat > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_hat must be positive, got {sigma_hat}"
        )));
    }
    let c = &spec.constants;
    let sqrt_tau = (2.0 * std::f64::consts::PI).sqrt();
    Ok(match spec.kind {
        FormulationKind::VpEps => {
            // t ~ U(eps_t, 1), sigma_hat = sqrt(exp(X(t)) - 1)
            let lo = ddpm_sigma_hat_of_time(c, c.eps_t);
            let hi = ddpm_sigma_hat_of_time(c, 1.0);
            if sigma_hat < lo || sigma_hat > hi {
                0.0
            } else {
                let t = ddpm_time_of_sigma_hat(c, sigma_hat);
                let e_x = 1.0 + sigma_hat * sigma_hat; // exp(X(t))
                let dx_dt = c.beta_min + (c.beta_max - c.beta_min) * t;
                // dsigma/dt = exp(X) X'(t) / (2 sigma)
                let dsig_dt = e_x * dx_dt / (2.0 * sigma_hat);
                1.0 / ((1.0 - c.eps_t) * dsig_dt)
            }
        }
        FormulationKind::VeF => {
            // log sigma ~ N(p_mean, p_std^2)
            let z = (sigma_hat.ln() - c.p_mean) / c.p_std;
            (-0.5 * z * z).exp() / (sigma_hat * c.p_std * sqrt_tau)
        }
        FormulationKind::VeEps => {
            // log sigma ~ U(log sigma_min, log sigma_max)
            if sigma_hat < c.sigma_min || sigma_hat > c.sigma_max {
                0.0
            } else {
                1.0 / (sigma_hat * (c.sigma_max.ln() - c.sigma_min.ln()))
            }
        }
        FormulationKind::FmV | FormulationKind::FmEps | FormulationKind::FmX0 => {
            // t ~ U(0,1), sigma = t/(1-t): density 1/(1+sigma)^2 on (0, inf)
            let one_p = 1.0 + sigma_hat;
            1.0 / (one_p * one_p)
        }
        FormulationKind::FmVSd3 => {
            // log sigma ~ N(0, 1)
            let z = sigma_hat.ln();
            (-0.5 * z * z).exp() / (sigma_hat * sqrt_tau)
        }
    })
}
