//! Evaluation grids over the noise scale, kept in natural-log coordinates.

use crate::error::{Error, Result};

/// A strictly increasing list of `ln(sigma_hat)` evaluation points
/// (variance-exploding coordinates). `sigma = 0` is excluded by
/// construction: every grid point maps to `exp(log_sigma) > 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseGrid {
    log_sigmas: Vec<f64>,
}

impl NoiseGrid {
    pub fn new(log_sigmas: Vec<f64>) -> Result<Self> {
        if log_sigmas.is_empty() {
            return Err(Error::Input(
                "noise grid must contain at least one point".into(),
            ));
        }
        for w in log_sigmas.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Input(format!(
                    "log sigmas must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if log_sigmas.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("log sigmas must be finite".into()));
        }
        Ok(NoiseGrid { log_sigmas })
    }

    /// `steps` points evenly spaced in log sigma over `[log_min, log_max]`.
    pub fn linspace(log_min: f64, log_max: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Input("grid needs at least one step".into()));
        }
        if steps == 1 {
            return NoiseGrid::new(vec![log_min]);
        }
        let h = (log_max - log_min) / (steps - 1) as f64;
        NoiseGrid::new((0..steps).map(|i| log_min + h * i as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.log_sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_sigmas.is_empty()
    }

    pub fn log_sigmas(&self) -> &[f64] {
        &self.log_sigmas
    }

    pub fn log_sigma(&self, i: usize) -> f64 {
        self.log_sigmas[i]
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.log_sigmas[i].exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing_and_non_finite() {
        assert!(NoiseGrid::new(vec![0.0, 0.0]).is_err());
        assert!(NoiseGrid::new(vec![1.0, 0.5]).is_err());
        assert!(NoiseGrid::new(vec![f64::NAN]).is_err());
        assert!(NoiseGrid::new(vec![]).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let g = NoiseGrid::linspace(-3.0, 2.3, 16).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.log_sigma(0), -3.0);
        assert!((g.log_sigma(15) - 2.3).abs() < 1e-15);
        assert!(g.sigma(0) > 0.0);
    }
}
