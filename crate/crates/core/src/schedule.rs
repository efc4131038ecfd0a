//! Training-schedule construction from an optimal-loss curve: the loss
//! weight with cutoff and low-noise bump, critical-point detection, the
//! EMA-tracked loss-gap bins, and the piecewise-linear adaptive noise
//! density with its inverse-CDF sampler.

use crate::curve::OptimalLossCurve;
use crate::error::{Error, Result};
use crate::grid::NoiseGrid;

/// Parameters of the loss weight
/// `w(sigma) = a min{1/J*, w_star} + f(sigma) [sigma < sigma_star]`
/// with `f` a Gaussian density over `log sigma`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightParams {
    pub a: f64,
    pub w_star: f64,
    pub sigma_star: f64,
    pub mu: f64,
    pub varsigma: f64,
}

impl WeightParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a", self.a),
            ("w_star", self.w_star),
            ("sigma_star", self.sigma_star),
            ("varsigma", self.varsigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.mu.is_finite() {
            return Err(Error::Config("mu must be finite".into()));
        }
        Ok(())
    }

    /// Bump placement convention when only `sigma_star` is known:
    /// `mu = log sigma_star - 1`, `varsigma = 0.5`.
    pub fn with_default_bump(a: f64, w_star: f64, sigma_star: f64) -> Self {
        WeightParams {
            a,
            w_star,
            sigma_star,
            mu: sigma_star.ln() - 1.0,
            varsigma: 0.5,
        }
    }
}

/// Pool-adjacent-violators projection onto nondecreasing sequences.
pub fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut level: Vec<f64> = Vec::with_capacity(n);
    let mut weight: Vec<f64> = Vec::with_capacity(n);
    for &v in values {
        level.push(v);
        weight.push(1.0);
        while level.len() > 1 {
            let k = level.len();
            if level[k - 2] <= level[k - 1] {
                break;
            }
            let w = weight[k - 2] + weight[k - 1];
            let merged = (level[k - 2] * weight[k - 2] + level[k - 1] * weight[k - 1]) / w;
            level.truncate(k - 1);
            weight.truncate(k - 1);
            *level.last_mut().unwrap() = merged;
            *weight.last_mut().unwrap() = w;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (l, w) in level.iter().zip(&weight) {
        for _ in 0..(*w as usize) {
            out.push(*l);
        }
    }
    out
}

/// Monotone-cleaned curve values: isotonic projection of `j_star` in grid order.
fn cleaned(curve: &OptimalLossCurve) -> Vec<f64> {
    isotonic_nondecreasing(&curve.j_star)
}

/// Interpolates the monotone-cleaned `J*` linearly in `log sigma`.
fn interpolate_clean(curve: &OptimalLossCurve, clean: &[f64], log_sigma: f64) -> Result<f64> {
    let xs = curve.grid.log_sigmas();
    if log_sigma < xs[0] || log_sigma > xs[xs.len() - 1] {
        return Err(Error::Extrapolation(format!(
            "log sigma {} outside the curve span [{}, {}]",
            log_sigma,
            xs[0],
            xs[xs.len() - 1]
        )));
    }
    let idx = xs.partition_point(|x| *x <= log_sigma);
    if idx == 0 {
        return Ok(clean[0]);
    }
    if idx >= xs.len() {
        return Ok(clean[xs.len() - 1]);
    }
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    let t = (log_sigma - x0) / (x1 - x0);
    Ok(clean[idx - 1] + t * (clean[idx] - clean[idx - 1]))
}

/// The monotone-cleaned curve value at `log sigma` (isotonic projection
/// first, then linear interpolation in log sigma).
pub fn interpolate_jstar_log(curve: &OptimalLossCurve, log_sigma: f64) -> Result<f64> {
    interpolate_clean(curve, &cleaned(curve), log_sigma)
}

/// Gaussian density of `log sigma` at `(mu, varsigma^2)`.
fn log_sigma_bump(params: &WeightParams, log_sigma: f64) -> f64 {
    let z = (log_sigma - params.mu) / params.varsigma;
    (-0.5 * z * z).exp() / (params.varsigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// [`loss_weight`] with the query given directly in `log sigma`, avoiding
/// exp/ln round-trip noise at the grid endpoints.
pub fn loss_weight_log(
    curve: &OptimalLossCurve,
    params: &WeightParams,
    log_sigma: f64,
) -> Result<f64> {
    params.validate()?;
    let j = interpolate_clean(curve, &cleaned(curve), log_sigma)?;
    let capped = if j > 0.0 {
        (1.0 / j).min(params.w_star)
    } else {
        params.w_star
    };
    let bump = if log_sigma < params.sigma_star.ln() {
        log_sigma_bump(params, log_sigma)
    } else {
        0.0
    };
    Ok(params.a * capped + bump)
}

/// The loss weight at `sigma_hat`:
/// `a * min{1/J*(sigma), w_star} + f(sigma) [sigma < sigma_star]`.
///
/// `J*` is the isotonic projection of the curve, interpolated linearly in
/// `log sigma`; where it is zero the cutoff `w_star` binds.
pub fn loss_weight(curve: &OptimalLossCurve, params: &WeightParams, sigma_hat: f64) -> Result<f64> {
    if !(sigma_hat > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_hat must be positive, got {sigma_hat}"
        )));
    }
    loss_weight_log(curve, params, sigma_hat.ln())
}

/// Smallest grid sigma where the monotone-cleaned curve reaches
/// `threshold_frac` of its plateau (the maximum over the grid), linearly
/// interpolated in `log sigma` between the straddling knots.
pub fn detect_critical_point(curve: &OptimalLossCurve, threshold_frac: f64) -> Result<f64> {
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::Config(format!(
            "threshold fraction must lie in (0, 1), got {threshold_frac}"
        )));
    }
    let clean = cleaned(curve);
    let plateau = clean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(plateau > 0.0) {
        return Err(Error::NoCriticalPoint("curve is identically zero".into()));
    }
    let target = threshold_frac * plateau;
    let xs = curve.grid.log_sigmas();
    for i in 0..clean.len() {
        if clean[i] >= target {
            if i == 0 {
                return Ok(xs[0].exp());
            }
            let (j0, j1) = (clean[i - 1], clean[i]);
            let t = if j1 > j0 {
                (target - j0) / (j1 - j0)
            } else {
                0.0
            };
            return Ok((xs[i - 1] + t * (xs[i] - xs[i - 1])).exp());
        }
    }
    unreachable!("plateau point always reaches the target");
}

/// EMA-tracked, weight-calibrated loss gaps per log-sigma bin.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GapBins {
    pub grid: NoiseGrid,
    pub gaps: Vec<f64>,
    /// Retention factor: `new = decay * old + (1 - decay) * observed`.
    pub decay: f64,
    /// Floor applied to every stored or observed gap.
    pub gap_floor: f64,
}

impl GapBins {
    pub fn new(grid: NoiseGrid, gaps: Vec<f64>, decay: f64, gap_floor: f64) -> Result<Self> {
        if gaps.len() != grid.len() {
            return Err(Error::Alignment(format!(
                "{} gaps for {} grid points",
                gaps.len(),
                grid.len()
            )));
        }
        if !(0.0..=1.0).contains(&decay) {
            return Err(Error::Config(format!(
                "decay must lie in [0, 1], got {decay}"
            )));
        }
        if !(gap_floor > 0.0 && gap_floor.is_finite()) {
            return Err(Error::Config(format!(
                "gap floor must be positive, got {gap_floor}"
            )));
        }
        let gaps = gaps.into_iter().map(|g| g.max(gap_floor)).collect();
        Ok(GapBins {
            grid,
            gaps,
            decay,
            gap_floor,
        })
    }
}

/// One EMA step: `new = decay * old + (1 - decay) * max(observed, floor)`.
pub fn update_gap_bins(bins: &GapBins, observed: &[f64]) -> Result<GapBins> {
    if observed.len() != bins.grid.len() {
        return Err(Error::Alignment(format!(
            "{} observations for {} bins",
            observed.len(),
            bins.grid.len()
        )));
    }
    let gaps = bins
        .gaps
        .iter()
        .zip(observed)
        .map(|(old, obs)| bins.decay * old + (1.0 - bins.decay) * obs.max(bins.gap_floor))
        .collect();
    Ok(GapBins {
        grid: bins.grid.clone(),
        gaps,
        decay: bins.decay,
        gap_floor: bins.gap_floor,
    })
}

/// A normalized piecewise-linear density over `log sigma`, zero outside
/// the knot span.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PiecewisePdf {
    /// `(log sigma, density)` knots with strictly increasing abscissae.
    pub knots: Vec<(f64, f64)>,
    /// Set when all gaps sat at the floor and the density fell back to uniform.
    pub uniform_fallback: bool,
}

impl PiecewisePdf {
    /// Builds and normalizes the density through the given knots.
    pub fn new(mut knots: Vec<(f64, f64)>, uniform_fallback: bool) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Input(
                "piecewise density needs at least 2 knots".into(),
            ));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Input(
                    "knot abscissae must be strictly increasing".into(),
                ));
            }
        }
        if knots.iter().any(|(_, d)| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::Input(
                "densities must be nonnegative and finite".into(),
            ));
        }
        let mut total = 0.0;
        for w in knots.windows(2) {
            total += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        }
        if !(total > 0.0) {
            return Err(Error::Input("density has zero total mass".into()));
        }
        for k in &mut knots {
            k.1 /= total;
        }
        Ok(PiecewisePdf {
            knots,
            uniform_fallback,
        })
    }

    /// Exact trapezoid integral of the normalized density.
    pub fn integral(&self) -> f64 {
        let mut total = 0.0;
        for w in self.knots.windows(2) {
            total += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        }
        total
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    /// Density at `log sigma` (zero outside the support).
    pub fn density_at(&self, log_sigma: f64) -> f64 {
        let (lo, hi) = self.support();
        if log_sigma < lo || log_sigma > hi {
            return 0.0;
        }
        let idx = self
            .knots
            .partition_point(|(x, _)| *x <= log_sigma)
            .clamp(1, self.knots.len() - 1);
        let (x0, d0) = self.knots[idx - 1];
        let (x1, d1) = self.knots[idx];
        let t = (log_sigma - x0) / (x1 - x0);
        d0 + t * (d1 - d0)
    }

    /// Mass accumulated up to `log sigma`.
    pub fn cdf(&self, log_sigma: f64) -> f64 {
        let (lo, hi) = self.support();
        if log_sigma <= lo {
            return 0.0;
        }
        if log_sigma >= hi {
            return 1.0;
        }
        let mut acc = 0.0;
        for w in self.knots.windows(2) {
            let (x0, d0) = w[0];
            let (x1, d1) = w[1];
            if log_sigma >= x1 {
                acc += 0.5 * (d0 + d1) * (x1 - x0);
            } else {
                let t = log_sigma - x0;
                let slope = (d1 - d0) / (x1 - x0);
                acc += d0 * t + 0.5 * slope * t * t;
                break;
            }
        }
        acc.min(1.0)
    }
}

/// The adaptive noise density: piecewise-linear through
/// `(log sigma_i, gap_i)`, normalized to unit mass over the grid span.
/// When every gap sits at the floor the result is the uniform density over
/// the span, flagged as a fallback.
pub fn adaptive_pdf(bins: &GapBins) -> Result<PiecewisePdf> {
    if bins.grid.len() < 2 {
        return Err(Error::Input(
            "adaptive density needs at least 2 bins".into(),
        ));
    }
    let at_floor = bins.gaps.iter().all(|g| *g <= bins.gap_floor);
    let knots: Vec<(f64, f64)> = bins
        .grid
        .log_sigmas()
        .iter()
        .zip(&bins.gaps)
        .map(|(ls, g)| (*ls, if at_floor { 1.0 } else { *g }))
        .collect();
    PiecewisePdf::new(knots, at_floor)
}

/// Inverse-CDF sample of `sigma_hat` from the piecewise-linear density.
/// Per segment the CDF is quadratic, inverted in closed form; `u = 0` maps
/// to the left support edge.
pub fn sample_sigma(pdf: &PiecewisePdf, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("u must lie in [0, 1), got {u}")));
    }
    let mut acc = 0.0;
    let last = pdf.knots.len() - 2;
    for (i, w) in pdf.knots.windows(2).enumerate() {
        let (x0, d0) = w[0];
        let (x1, d1) = w[1];
        let width = x1 - x0;
        let mass = 0.5 * (d0 + d1) * width;
        if mass <= 0.0 {
            continue;
        }
        // rounding in the running mass can leave the final segment slightly
        // short of u; it absorbs the residual
        if u < acc + mass || i == last {
            let r = (u - acc).clamp(0.0, mass);
            let slope = (d1 - d0) / width;
            let t = if d0 == d1 {
                r / d0
            } else {
                // solve d0 t + slope t^2 / 2 = r for t in [0, width]
                let disc = (d0 * d0 + 2.0 * slope * r).max(0.0);
                if slope > 0.0 {
                    (disc.sqrt() - d0) / slope
                } else {
                    2.0 * r / (d0 + disc.sqrt())
                }
            };
            return Ok((x0 + t.clamp(0.0, width)).exp());
        }
        acc += mass;
    }
    Ok(pdf.support().1.exp())
}

/// The exported schedule file: the weight table, the density knots, and
/// every parameter needed to reproduce them.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScheduleExport {
    pub weight_table: Vec<(f64, f64)>,
    pub pdf_knots: Vec<(f64, f64)>,
    pub params: ScheduleParams,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScheduleParams {
    pub a: f64,
    pub w_star: f64,
    pub sigma_star: f64,
    pub mu: f64,
    pub varsigma: f64,
    pub threshold_frac: f64,
    pub decay: f64,
    pub gap_floor: f64,
    pub uniform_fallback: bool,
}
