//! Diffusion process definitions: the interpolation `x_t = alpha x_0 + sigma eps`
//! parameterized by the native noise scale.

use crate::error::{Error, Result};

/// The three supported constructions of the noising interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ProcessKind {
    /// Variance exploding: `alpha = 1`, native sigma in (0, inf).
    Ve,
    /// Variance preserving: `alpha = sqrt(1 - sigma^2)`, native sigma in (0, 1).
    Vp,
    /// Flow matching: `alpha = 1 - sigma`, native sigma in (0, 1).
    Fm,
}

impl ProcessKind {
    /// Valid native sigma interval, open at both ends.
    pub fn native_sigma_domain(self) -> (f64, f64) {
        match self {
            ProcessKind::Ve => (0.0, f64::INFINITY),
            ProcessKind::Vp | ProcessKind::Fm => (0.0, 1.0),
        }
    }

    pub fn check_native_sigma(self, sigma: f64) -> Result<()> {
        let (lo, hi) = self.native_sigma_domain();
        if !(sigma > lo && sigma < hi) {
            return Err(Error::Domain(format!(
                "native sigma {sigma} outside ({lo}, {hi}) for {self:?}"
            )));
        }
        Ok(())
    }

    /// `alpha` as a function of the native sigma.
    pub fn alpha_of_sigma(self, sigma: f64) -> Result<f64> {
        self.check_native_sigma(sigma)?;
        Ok(match self {
            ProcessKind::Ve => 1.0,
            ProcessKind::Vp => (1.0 - sigma * sigma).sqrt(),
            ProcessKind::Fm => 1.0 - sigma,
        })
    }

    /// Drift `a = (log alpha)'` and squared diffusion `g^2 = sigma^2 (log sigma^2/alpha^2)'`,
    /// with the native sigma as the time variable. Closed forms for the three
    /// named processes.
    pub fn drift_diffusion_sq(self, sigma: f64) -> Result<(f64, f64)> {
        self.check_native_sigma(sigma)?;
        Ok(match self {
            ProcessKind::Ve => (0.0, 2.0 * sigma),
            ProcessKind::Vp => {
                let one_m = 1.0 - sigma * sigma;
                (-sigma / one_m, 2.0 * sigma / one_m)
            }
            ProcessKind::Fm => {
                let one_m = 1.0 - sigma;
                (-1.0 / one_m, 2.0 * sigma / one_m)
            }
        })
    }
}

/// Drift and squared diffusion for an arbitrary `alpha(sigma)` by central
/// finite differences with relative step 1e-6 on `log sigma`.
pub fn drift_diffusion_sq_fd<F>(alpha: F, sigma: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma {sigma} must be positive")));
    }
    let h = 1e-6;
    let s_hi = sigma * (1.0 + h);
    let s_lo = sigma * (1.0 - h);
    let dlog = s_hi.ln() - s_lo.ln();
    // d/dsigma f(sigma) = (1/sigma) d f / d log sigma
    let dlog_alpha = (alpha(s_hi).ln() - alpha(s_lo).ln()) / dlog;
    let a = dlog_alpha / sigma;
    let ratio = |s: f64| (s * s / (alpha(s) * alpha(s))).ln();
    let dlog_ratio = (ratio(s_hi) - ratio(s_lo)) / dlog;
    let g_sq = sigma * sigma * dlog_ratio / sigma;
    Ok((a, g_sq))
}
