//! Stable evaluation of the Gaussian posterior kernel and the posterior
//! mean `E[x_0 | x_t]`, the inner loop shared by every estimator.
//!
//! The kernel weights span hundreds of orders of magnitude at small sigma,
//! so all averaging is done in log space with max-subtraction: after the
//! shift at least one weight equals 1 before any self-pair correction, so
//! the normalizing denominator can never vanish.

use crate::config::Correction;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Random access to a candidate set of clean samples.
pub trait Candidates {
    fn count(&self) -> usize;
    fn candidate(&self, i: usize) -> &[f64];
}

impl Candidates for Dataset {
    fn count(&self) -> usize {
        self.n_samples()
    }

    fn candidate(&self, i: usize) -> &[f64] {
        self.row(i)
    }
}

/// A subset of dataset rows selected by index, possibly with repetition.
#[derive(Debug, Clone, Copy)]
pub struct SubsetView<'a> {
    data: &'a Dataset,
    indices: &'a [usize],
}

impl<'a> SubsetView<'a> {
    pub fn new(data: &'a Dataset, indices: &'a [usize]) -> Self {
        SubsetView { data, indices }
    }
}

impl Candidates for SubsetView<'_> {
    fn count(&self) -> usize {
        self.indices.len()
    }

    fn candidate(&self, i: usize) -> &[f64] {
        self.data.row(self.indices[i])
    }
}

/// Down-weight the candidate at `index` (a position within the candidate
/// set) by `1/C` before normalization.
#[derive(Debug, Clone, Copy)]
pub struct SelfPairCorrection {
    pub index: usize,
    pub factor: Correction,
}

/// `log K_t(x_t, x_0) = -||x_t - alpha x_0||^2 / (2 sigma^2)`.
pub fn log_kernel(xt: &[f64], x0: &[f64], alpha: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    debug_assert_eq!(xt.len(), x0.len());
    let mut sq = 0.0;
    for (a, b) in xt.iter().zip(x0) {
        let r = a - alpha * b;
        sq += r * r;
    }
    Ok(-sq / (2.0 * sigma * sigma))
}

#[inline]
fn log_kernel_unchecked(xt: &[f64], x0: &[f64], alpha: f64, inv_two_sigma_sq: f64) -> f64 {
    let mut sq = 0.0;
    for (a, b) in xt.iter().zip(x0) {
        let r = a - alpha * b;
        sq += r * r;
    }
    -sq * inv_two_sigma_sq
}

/// Kernel-weighted mean of the candidates at `x_t`, written into `out`.
///
/// `scratch` holds the per-candidate log kernels between the two passes;
/// both buffers are resized as needed so callers can reuse allocations
/// across many queries. The reduction runs left-to-right in candidate
/// order, so the result is bit-reproducible for a fixed input.
pub fn posterior_mean_into<C: Candidates>(
    xt: &[f64],
    candidates: &C,
    alpha: f64,
    sigma: f64,
    correction: Option<SelfPairCorrection>,
    scratch: &mut Vec<f64>,
    out: &mut Vec<f64>,
) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let count = candidates.count();
    if count == 0 {
        return Err(Error::Domain("empty candidate set".into()));
    }
    if let Some(c) = correction {
        c.factor
            .validate()
            .map_err(|e| Error::Domain(e.to_string()))?;
        if c.index >= count {
            return Err(Error::Domain(format!(
                "correction index {} out of range for {} candidates",
                c.index, count
            )));
        }
    }
    let dropped = match correction {
        Some(SelfPairCorrection {
            index,
            factor: Correction::Infinite,
        }) => {
            if count == 1 {
                return Err(Error::Domain(
                    "infinite correction leaves no usable candidate".into(),
                ));
            }
            Some(index)
        }
        _ => None,
    };
    let log_shift = match correction {
        Some(SelfPairCorrection {
            index,
            factor: Correction::Finite(c),
        }) => Some((index, c.ln())),
        _ => None,
    };

    let d = xt.len();
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    scratch.clear();
    scratch.reserve(count);
    let mut max_log = f64::NEG_INFINITY;
    for i in 0..count {
        if dropped == Some(i) {
            scratch.push(f64::NEG_INFINITY);
            continue;
        }
        let lk = log_kernel_unchecked(xt, candidates.candidate(i), alpha, inv_two_sigma_sq);
        // the max is taken over uncorrected log kernels
        if lk > max_log {
            max_log = lk;
        }
        scratch.push(lk);
    }

    out.clear();
    out.resize(d, 0.0);
    let mut den = 0.0;
    for (i, lk) in scratch.iter().enumerate() {
        let mut shifted = lk - max_log;
        if let Some((idx, ln_c)) = log_shift {
            if idx == i {
                shifted -= ln_c;
            }
        }
        let w = shifted.exp();
        if w == 0.0 {
            continue;
        }
        den += w;
        for (o, x) in out.iter_mut().zip(candidates.candidate(i)) {
            *o += w * x;
        }
    }
    debug_assert!(den > 0.0);
    for o in out.iter_mut() {
        *o /= den;
    }
    Ok(())
}

/// Allocation-per-call convenience wrapper around [`posterior_mean_into`].
pub fn posterior_mean<C: Candidates>(
    xt: &[f64],
    candidates: &C,
    alpha: f64,
    sigma: f64,
    correction: Option<SelfPairCorrection>,
) -> Result<Vec<f64>> {
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    posterior_mean_into(
        xt,
        candidates,
        alpha,
        sigma,
        correction,
        &mut scratch,
        &mut out,
    )?;
    Ok(out)
}
