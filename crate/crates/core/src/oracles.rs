//! Closed-form and quadrature reference values for the optimal loss on
//! synthetic distributions.
//!
//! These serve as ground truth for the estimators, so they deliberately do
//! not share the posterior-mean implementation in [`crate::kernels`]: the
//! mixture oracle evaluates its own probability-weighted log-sum-exp.

use crate::error::{Error, Result};

/// The optimal loss of an isotropic Gaussian `x_0 ~ N(mean, scale^2 I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianOracle {
    pub mean: Vec<f64>,
    pub scale: f64,
}

impl GaussianOracle {
    pub fn new(mean: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Spec(format!("scale must be positive, got {scale}")));
        }
        if mean.is_empty() {
            return Err(Error::Spec("mean must have at least one coordinate".into()));
        }
        Ok(GaussianOracle { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Exact averaged conditional variance for the conjugate-Gaussian case:
/// `d * s^2 sigma^2 / (alpha^2 s^2 + sigma^2)`, in total units.
///
/// The posterior of `x_0` given `x_t = alpha x_0 + sigma eps` is Gaussian
/// with per-coordinate variance `s^2 sigma^2 / (alpha^2 s^2 + sigma^2)`,
/// independent of the mean.
pub fn gaussian_jstar(oracle: &GaussianOracle, alpha: f64, sigma: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let s2 = oracle.scale * oracle.scale;
    let sig2 = sigma * sigma;
    Ok(oracle.dim() as f64 * s2 * sig2 / (alpha * alpha * s2 + sig2))
}

/// Gauss-Hermite nodes and weights for the physicists' weight `exp(-x^2)`,
/// via the Golub-Welsch eigendecomposition of the Jacobi matrix. With
/// nodes `t_i` and weights `w_i`,
/// `E_{z~N(0,1)}[f(z)] = sum_i (w_i / sqrt(pi)) f(sqrt(2) t_i)`.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Input("quadrature needs at least 2 nodes".into()));
    }
    // monic recurrence p_{k+1} = x p_k - (k/2) p_{k-1}: zero diagonal,
    // off-diagonal sqrt(k/2)
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eigen = nalgebra::SymmetricEigen::new(jacobi);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eigen.eigenvalues[*a].total_cmp(&eigen.eigenvalues[*b]));
    let mu0 = std::f64::consts::PI.sqrt();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &i in &order {
        let first = eigen.eigenvectors[(0, i)];
        nodes.push(eigen.eigenvalues[i]);
        weights.push(mu0 * first * first);
    }
    Ok((nodes, weights))
}

/// Optimal loss of a finite mixture with atoms `points` (K x d, d <= 2)
/// and probabilities `probs`, by tensorized Gauss-Hermite quadrature over
/// the noise: `J* = A - B` with exact kernel weights, no sampling.
pub fn finite_mixture_jstar(
    points: &[Vec<f64>],
    probs: &[f64],
    alpha: f64,
    sigma: f64,
    quadrature_nodes: usize,
) -> Result<f64> {
    if points.is_empty() || points.len() != probs.len() {
        return Err(Error::Input(
            "points and probs must be nonempty and match".into(),
        ));
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::Input(
            "points must share a positive dimension".into(),
        ));
    }
    if d > 2 {
        return Err(Error::Unsupported(format!(
            "mixture quadrature supports d <= 2, got {d}"
        )));
    }
    if quadrature_nodes < 32 {
        return Err(Error::Input("need at least 32 quadrature nodes".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 || probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Input(
            "probabilities must be nonnegative and sum to 1".into(),
        ));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }

    let a_term: f64 = points
        .iter()
        .zip(probs)
        .map(|(p, pr)| pr * p.iter().map(|x| x * x).sum::<f64>())
        .sum();
    if sigma == 0.0 {
        return Ok(0.0);
    }

    let (nodes, weights) = gauss_hermite(quadrature_nodes)?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi_pow = std::f64::consts::PI.powf(-(d as f64) / 2.0);
    let log_probs: Vec<f64> = probs
        .iter()
        .map(|p| if *p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
        .collect();

    // ||posterior mean||^2 at x_t, with probability-weighted LSE over atoms
    let pm_sq = |xt: &[f64]| -> f64 {
        let mut max_log = f64::NEG_INFINITY;
        let mut logs = Vec::with_capacity(points.len());
        for (p, lp) in points.iter().zip(&log_probs) {
            let mut sq = 0.0;
            for (a, b) in xt.iter().zip(p) {
                let r = a - alpha * b;
                sq += r * r;
            }
            let l = lp - sq / (2.0 * sigma * sigma);
            if l > max_log {
                max_log = l;
            }
            logs.push(l);
        }
        let mut den = 0.0;
        let mut num = [0.0f64; 2];
        for (l, p) in logs.iter().zip(points) {
            let w = (l - max_log).exp();
            den += w;
            for (nj, xj) in num.iter_mut().zip(p) {
                *nj += w * xj;
            }
        }
        num[..d].iter().map(|v| (v / den) * (v / den)).sum()
    };

    let mut b_term = 0.0;
    for (k, (point, pk)) in points.iter().zip(probs).enumerate() {
        if *pk == 0.0 {
            continue;
        }
        let _ = k;
        let mut inner = 0.0;
        match d {
            1 => {
                for (t, w) in nodes.iter().zip(&weights) {
                    let xt = [alpha * point[0] + sigma * sqrt2 * t];
                    inner += w * pm_sq(&xt);
                }
            }
            _ => {
                for (ti, wi) in nodes.iter().zip(&weights) {
                    for (tj, wj) in nodes.iter().zip(&weights) {
                        let xt = [
                            alpha * point[0] + sigma * sqrt2 * ti,
                            alpha * point[1] + sigma * sqrt2 * tj,
                        ];
                        inner += wi * wj * pm_sq(&xt);
                    }
                }
            }
        }
        b_term += pk * inner * inv_sqrt_pi_pow;
    }
    Ok((a_term - b_term).max(0.0))
}
