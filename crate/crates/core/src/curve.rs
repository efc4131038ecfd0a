//! The estimated optimal-loss curve over a noise grid.

use crate::dataset::UnitConvention;
use crate::error::{Error, Result};
use crate::grid::NoiseGrid;

/// Per-grid-point estimates of the optimal clean-data-prediction loss
/// `J*_sigma` (variance-exploding coordinates), with standard errors.
///
/// `j_star` and `std_err` are expressed in `unit`; conversions between the
/// two conventions are a plain division/multiplication by the dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimalLossCurve {
    pub grid: NoiseGrid,
    pub j_star: Vec<f64>,
    pub std_err: Vec<f64>,
    pub unit: UnitConvention,
}

impl OptimalLossCurve {
    pub fn new(
        grid: NoiseGrid,
        j_star: Vec<f64>,
        std_err: Vec<f64>,
        unit: UnitConvention,
    ) -> Result<Self> {
        if j_star.len() != grid.len() || std_err.len() != grid.len() {
            return Err(Error::Input(format!(
                "curve lengths (j_star {}, std_err {}) must match grid length {}",
                j_star.len(),
                std_err.len(),
                grid.len()
            )));
        }
        if j_star.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Input("j_star values must be nonnegative".into()));
        }
        if std_err.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Input("standard errors must be nonnegative".into()));
        }
        Ok(OptimalLossCurve {
            grid,
            j_star,
            std_err,
            unit,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_lengths_and_negatives() {
        let grid = NoiseGrid::new(vec![0.0, 1.0]).unwrap();
        assert!(OptimalLossCurve::new(
            grid.clone(),
            vec![1.0],
            vec![0.0, 0.0],
            UnitConvention::Total
        )
        .is_err());
        assert!(OptimalLossCurve::new(
            grid,
            vec![1.0, -0.5],
            vec![0.0, 0.0],
            UnitConvention::Total
        )
        .is_err());
    }
}
