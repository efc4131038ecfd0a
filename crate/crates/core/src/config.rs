//! Estimator configuration: subset size, sample counts, repeat budget,
//! self-pair correction, seed, and the early-stop tolerance.

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// The self-pair down-weight coefficient `C`.
///
/// `Finite(1.0)` reproduces the uncorrected subset estimator; `Infinite`
/// drops the self pair from numerator and denominator entirely.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Correction {
    Finite(f64),
    Infinite,
}

impl Correction {
    pub fn validate(&self) -> Result<()> {
        match self {
            Correction::Finite(c) if !(c.is_finite() && *c >= 1.0) => Err(Error::Config(format!(
                "correction C must satisfy C >= 1, got {c}"
            ))),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for Correction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Correction::Finite(c) => write!(f, "{c}"),
            Correction::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EstimatorConfig {
    /// Data subset size L drawn per repeat (with replacement).
    pub subset_size: usize,
    /// Number of noisy samples M per repeat.
    pub xt_samples: usize,
    /// Maximum number of repeats R.
    pub max_repeats: usize,
    /// Self-pair down-weight C.
    pub correction: Correction,
    pub seed: u64,
    /// Early stop once std_err / |b_hat| falls below this per grid point.
    pub rel_tol: f64,
}

impl EstimatorConfig {
    /// Calibrated defaults for a dataset of `n` samples:
    /// `L = min(N, 5000)`, `M = 4L`, `R = ceil(3N/L)`, `C = 4N/L`.
    pub fn defaults_for(n: usize, seed: u64) -> Self {
        let l = n.min(5000);
        EstimatorConfig {
            subset_size: l,
            xt_samples: 4 * l,
            max_repeats: (3 * n).div_ceil(l),
            correction: Correction::Finite(4.0 * n as f64 / l as f64),
            seed,
            rel_tol: 1e-5,
        }
    }

    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        if self.subset_size == 0 {
            return Err(Error::Config("subset size L must be positive".into()));
        }
        if self.subset_size > ds.n_samples() {
            return Err(Error::Config(format!(
                "subset size L = {} exceeds dataset size N = {}",
                self.subset_size,
                ds.n_samples()
            )));
        }
        if self.xt_samples == 0 {
            return Err(Error::Config("xt sample count M must be positive".into()));
        }
        if self.max_repeats == 0 {
            return Err(Error::Config("repeat budget R must be positive".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        self.correction.validate()
    }
}
