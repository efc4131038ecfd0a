//! The dataset type: N flattened samples of dimension d.

use crate::error::{Error, Result};

/// Whether a loss-like quantity is reported summed over dimensions or
/// divided by the dimension.
///
/// All internal computation uses [`UnitConvention::Total`] (sums over
/// dimensions); `PerDim` is a presentation-layer division by `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum UnitConvention {
    Total,
    PerDim,
}

/// An in-memory dataset: `n` samples of dimension `d`, row-major.
///
/// Values are held as `f64` but quantized to binary32 precision at
/// construction, matching the on-disk payload, so that a save/load
/// round-trip reproduces the dataset bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer.
    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("dimension must be at least 1".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::Data(format!(
                "value count {} is not a positive multiple of dim {}",
                values.len(),
                dim
            )));
        }
        let n = values.len() / dim;
        let mut quantized = values;
        for (i, v) in quantized.iter_mut().enumerate() {
            let q = *v as f32;
            if !q.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite value at row {} column {}",
                    i / dim,
                    i % dim
                )));
            }
            *v = q as f64;
        }
        Ok(Dataset {
            n,
            d: dim,
            values: quantized,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Data(
                "dataset must contain at least one sample".into(),
            ));
        }
        let d = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Data(format!(
                    "row {} has {} values, expected {}",
                    i,
                    r.len(),
                    d
                )));
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Dataset::from_flat(d, flat)
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Per-coordinate mean vector.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for i in 0..self.n {
            for (mj, xj) in m.iter_mut().zip(self.row(i)) {
                *mj += xj;
            }
        }
        for mj in &mut m {
            *mj /= self.n as f64;
        }
        m
    }
}

/// E||x - mean(x)||^2 over the dataset; `PerDim` divides by the dimension.
pub fn data_variance(ds: &Dataset, unit: UnitConvention) -> f64 {
    let mean = ds.mean();
    let mut acc = Kahan::default();
    for i in 0..ds.n_samples() {
        let mut sq = 0.0;
        for (xj, mj) in ds.row(i).iter().zip(&mean) {
            let r = xj - mj;
            sq += r * r;
        }
        acc.add(sq);
    }
    let total = acc.sum() / ds.n_samples() as f64;
    match unit {
        UnitConvention::Total => total,
        UnitConvention::PerDim => total / ds.dim() as f64,
    }
}

/// Kahan compensated accumulator for long sums of squares.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn sum(&self) -> f64 {
        self.sum
    }
}
