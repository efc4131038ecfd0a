//! Optimal-loss estimators: the one-pass second-moment term, the four
//! posterior-mean-squared estimators (full, SNIS, DOL, cDOL), and the
//! repeat loop with per-point early stopping.
//!
//! The estimated optimal loss at a grid point is `J* = max(A - B, 0)`:
//! `A` is the dataset second moment and `B` the expected squared norm of
//! the posterior mean of a noisy sample. The full estimator evaluates the
//! posterior mean over the entire dataset (quadratic in N); the subset
//! estimators trade bias against variance through the self-pair
//! down-weight `C`.

use rayon::prelude::*;

use crate::config::{Correction, EstimatorConfig};
use crate::curve::OptimalLossCurve;
use crate::dataset::{Dataset, Kahan, UnitConvention};
use crate::error::{Error, Result};
use crate::grid::NoiseGrid;
use crate::kernels::{posterior_mean_into, SelfPairCorrection, SubsetView};
use crate::rng::{fold, Stream};

/// Which posterior-mean construction backs the `B` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EstimatorKind {
    /// Posterior mean over the whole dataset; noisy samples from the whole dataset.
    Full,
    /// Posterior mean over a random subset; noisy samples from the whole dataset.
    Snis,
    /// Noisy samples constructed from the subset itself (C = 1).
    Dol,
    /// DOL with the self pair down-weighted by 1/C.
    Cdol,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EstimatorKind::Full => "full",
            EstimatorKind::Snis => "snis",
            EstimatorKind::Dol => "dol",
            EstimatorKind::Cdol => "cdol",
        };
        f.write_str(s)
    }
}

/// Outcome of estimating one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub b_hat: f64,
    pub std_err: f64,
    pub repeats_used: usize,
}

/// Full estimation result over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub curve: OptimalLossCurve,
    /// Dataset second moment, always in total units.
    pub a_hat: f64,
    /// Per-point posterior-mean second moment, always in total units.
    pub b_hat: Vec<f64>,
    pub repeats_used: Vec<usize>,
    /// True where `a_hat - b_hat` was negative and clamped to zero.
    pub clamped: Vec<bool>,
    pub estimator: EstimatorKind,
    pub config: EstimatorConfig,
}

/// `(1/N) sum_n ||x_0^(n)||^2`, one pass with compensated summation.
pub fn estimate_a(ds: &Dataset) -> f64 {
    let mut acc = Kahan::default();
    for i in 0..ds.n_samples() {
        let mut sq = 0.0;
        for v in ds.row(i) {
            sq += v * v;
        }
        acc.add(sq);
    }
    acc.sum() / ds.n_samples() as f64
}

fn point_key(seed: u64, sigma: f64) -> u64 {
    fold(seed, sigma.to_bits())
}

const SUBSET_TAG: u64 = u64::MAX;

/// One inner sample's squared posterior-mean norm. Every random draw is a
/// pure function of `(repeat_key, m)`, so inner samples can be evaluated
/// in any order or in parallel.
#[allow(clippy::too_many_arguments)]
fn inner_sq_norm(
    ds: &Dataset,
    subset: Option<&[usize]>,
    kind: EstimatorKind,
    alpha: f64,
    sigma: f64,
    correction: Correction,
    repeat_key: u64,
    m: usize,
    xt: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
    pm: &mut Vec<f64>,
) -> Result<f64> {
    let mut stream = Stream::from_path(repeat_key, &[m as u64]);
    xt.clear();
    match kind {
        EstimatorKind::Full | EstimatorKind::Snis => {
            let n = stream.next_index(ds.n_samples());
            let src = ds.row(n);
            for s in src {
                xt.push(alpha * s + sigma * stream.next_normal());
            }
            match kind {
                EstimatorKind::Full => {
                    posterior_mean_into(xt, ds, alpha, sigma, None, scratch, pm)?
                }
                _ => {
                    let view = SubsetView::new(ds, subset.expect("snis needs a subset"));
                    posterior_mean_into(xt, &view, alpha, sigma, None, scratch, pm)?
                }
            }
        }
        EstimatorKind::Dol | EstimatorKind::Cdol => {
            let subset = subset.expect("subset estimators need a subset");
            let pos = stream.next_index(subset.len());
            let src = ds.row(subset[pos]);
            for s in src {
                xt.push(alpha * s + sigma * stream.next_normal());
            }
            let view = SubsetView::new(ds, subset);
            let corr = SelfPairCorrection {
                index: pos,
                factor: correction,
            };
            posterior_mean_into(xt, &view, alpha, sigma, Some(corr), scratch, pm)?;
        }
    }
    Ok(pm.iter().map(|v| v * v).sum())
}

/// One repeat's estimate: the mean over `m_samples` inner squared norms.
///
/// Inner samples are pure functions of `(repeat_key, m)`, and the
/// reduction is an in-order compensated sum over the collected values, so
/// the result does not depend on how the work is scheduled. Small batches
/// run sequentially; the parallel path would be dominated by scheduling
/// overhead there.
fn repeat_b(
    ds: &Dataset,
    kind: EstimatorKind,
    alpha: f64,
    sigma: f64,
    subset_size: usize,
    m_samples: usize,
    correction: Correction,
    repeat_key: u64,
) -> Result<(f64, Vec<f64>)> {
    let subset: Option<Vec<usize>> = match kind {
        EstimatorKind::Full => None,
        _ => {
            let mut s = Stream::from_path(repeat_key, &[SUBSET_TAG]);
            Some(
                (0..subset_size)
                    .map(|_| s.next_index(ds.n_samples()))
                    .collect(),
            )
        }
    };
    let corr = match kind {
        EstimatorKind::Dol => Correction::Finite(1.0),
        _ => correction,
    };
    let values: Vec<f64> = if m_samples * candidate_count(ds, kind, subset_size) < 1 << 14 {
        let mut xt = Vec::new();
        let mut scratch = Vec::new();
        let mut pm = Vec::new();
        let mut out = Vec::with_capacity(m_samples);
        for m in 0..m_samples {
            out.push(inner_sq_norm(
                ds,
                subset.as_deref(),
                kind,
                alpha,
                sigma,
                corr,
                repeat_key,
                m,
                &mut xt,
                &mut scratch,
                &mut pm,
            )?);
        }
        out
    } else {
        let collected: Result<Vec<f64>> = (0..m_samples)
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new(), Vec::new()),
                |(xt, scratch, pm), m| {
                    inner_sq_norm(
                        ds,
                        subset.as_deref(),
                        kind,
                        alpha,
                        sigma,
                        corr,
                        repeat_key,
                        m,
                        xt,
                        scratch,
                        pm,
                    )
                },
            )
            .collect();
        collected?
    };
    let mut acc = Kahan::default();
    for &v in &values {
        acc.add(v);
    }
    Ok((acc.sum() / m_samples as f64, values))
}

fn candidate_count(ds: &Dataset, kind: EstimatorKind, subset_size: usize) -> usize {
    match kind {
        EstimatorKind::Full => ds.n_samples(),
        _ => subset_size,
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mut acc = Kahan::default();
    for &v in values {
        acc.add(v);
    }
    let mean = acc.sum() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let mut dev = Kahan::default();
    for &v in values {
        let r = v - mean;
        dev.add(r * r);
    }
    let sd = (dev.sum() / (n - 1) as f64).sqrt();
    (mean, sd / (n as f64).sqrt())
}

/// The repeat loop for one grid point: average per-repeat estimates,
/// stopping early once `std_err < rel_tol * |b_hat|` (checked from the
/// second repeat on, with Welford running statistics). The reported values
/// are recomputed with a two-pass compensated sum over the repeats run.
fn estimate_point(
    ds: &Dataset,
    kind: EstimatorKind,
    alpha: f64,
    sigma: f64,
    config: &EstimatorConfig,
    key: u64,
) -> Result<PointEstimate> {
    let mut per_repeat = Vec::with_capacity(config.max_repeats.min(4096));
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for r in 0..config.max_repeats {
        let repeat_key = fold(key, r as u64);
        let (b_r, _) = repeat_b(
            ds,
            kind,
            alpha,
            sigma,
            config.subset_size,
            config.xt_samples,
            config.correction,
            repeat_key,
        )?;
        per_repeat.push(b_r);
        let count = (r + 1) as f64;
        let delta = b_r - mean;
        mean += delta / count;
        m2 += delta * (b_r - mean);
        if r >= 1 {
            let se = (m2 / (count - 1.0)).sqrt() / count.sqrt();
            if se < config.rel_tol * mean.abs() {
                break;
            }
        }
    }
    let (b_hat, std_err) = mean_and_se(&per_repeat);
    Ok(PointEstimate {
        b_hat,
        std_err,
        repeats_used: per_repeat.len(),
    })
}

/// Full-dataset estimator at one `(alpha, sigma)` point: `m` noisy samples,
/// posterior mean over all `N` rows. Returns the mean and the standard
/// error of the `m` squared norms.
pub fn estimate_b_full(
    ds: &Dataset,
    alpha: f64,
    sigma: f64,
    m: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if m == 0 {
        return Err(Error::Config("sample count M must be positive".into()));
    }
    check_sigma(sigma)?;
    let repeat_key = fold(point_key(seed, sigma), 0);
    let (_, values) = repeat_b(
        ds,
        EstimatorKind::Full,
        alpha,
        sigma,
        0,
        m,
        Correction::Finite(1.0),
        repeat_key,
    )?;
    Ok(mean_and_se(&values))
}

/// Shared-subset estimator at one point: one subset of size `l`, `m` noisy
/// samples constructed from the full dataset.
pub fn estimate_b_snis(
    ds: &Dataset,
    alpha: f64,
    sigma: f64,
    l: usize,
    m: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if m == 0 || l == 0 {
        return Err(Error::Config("L and M must be positive".into()));
    }
    if l > ds.n_samples() {
        return Err(Error::Config(format!(
            "subset size L = {l} exceeds dataset size N = {}",
            ds.n_samples()
        )));
    }
    check_sigma(sigma)?;
    let repeat_key = fold(point_key(seed, sigma), 0);
    let (_, values) = repeat_b(
        ds,
        EstimatorKind::Snis,
        alpha,
        sigma,
        l,
        m,
        Correction::Finite(1.0),
        repeat_key,
    )?;
    Ok(mean_and_se(&values))
}

/// Corrected-DOL estimator at one point, with the full repeat loop and
/// early stopping. `C = 1` reproduces DOL; the infinite sentinel drops the
/// self pair entirely.
pub fn estimate_b_cdol(
    ds: &Dataset,
    alpha: f64,
    sigma: f64,
    config: &EstimatorConfig,
) -> Result<PointEstimate> {
    config.validate(ds)?;
    check_sigma(sigma)?;
    estimate_point(
        ds,
        EstimatorKind::Cdol,
        alpha,
        sigma,
        config,
        point_key(config.seed, sigma),
    )
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// Runs the chosen estimator at every grid point (variance-exploding
/// coordinates, `alpha = 1`) and assembles the report.
///
/// Grid points are estimated in parallel. Every point's random stream is
/// keyed by `(seed, sigma value)`, so results do not depend on the grid
/// composition, evaluation order, or worker count.
pub fn estimate_curve(
    ds: &Dataset,
    grid: &NoiseGrid,
    kind: EstimatorKind,
    config: &EstimatorConfig,
    unit: UnitConvention,
) -> Result<EstimateReport> {
    config.validate(ds)?;
    let a_hat = estimate_a(ds);
    let points: Result<Vec<PointEstimate>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let sigma = grid.sigma(i);
            estimate_point(ds, kind, 1.0, sigma, config, point_key(config.seed, sigma))
        })
        .collect();
    let points = points?;

    let scale = match unit {
        UnitConvention::Total => 1.0,
        UnitConvention::PerDim => 1.0 / ds.dim() as f64,
    };
    let mut j_star = Vec::with_capacity(points.len());
    let mut std_err = Vec::with_capacity(points.len());
    let mut b_hat = Vec::with_capacity(points.len());
    let mut repeats_used = Vec::with_capacity(points.len());
    let mut clamped = Vec::with_capacity(points.len());
    for p in &points {
        let raw = a_hat - p.b_hat;
        clamped.push(raw < 0.0);
        j_star.push(raw.max(0.0) * scale);
        std_err.push(p.std_err * scale);
        b_hat.push(p.b_hat);
        repeats_used.push(p.repeats_used);
    }
    let curve = OptimalLossCurve::new(grid.clone(), j_star, std_err, unit)?;
    Ok(EstimateReport {
        curve,
        a_hat,
        b_hat,
        repeats_used,
        clamped,
        estimator: kind,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate, SyntheticKind, SyntheticSpec};
    use crate::oracles::{gaussian_jstar, GaussianOracle};

    fn two_point_ds() -> Dataset {
        Dataset::from_rows(&[vec![-1.0], vec![1.0]]).unwrap()
    }

    // binary32-exact coordinates keep the expected values exact
    fn single_point_ds() -> Dataset {
        Dataset::from_rows(&[vec![1.5, -2.0]]).unwrap()
    }

    #[test]
    fn a_hat_of_unit_norm_samples() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(estimate_a(&ds), 1.0);
        let zero = Dataset::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(estimate_a(&zero), 0.0);
    }

    #[test]
    fn a_hat_of_standard_normal_draws() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::IsotropicGaussian {
                mean: vec![0.0; 8],
                scale: 1.0,
            },
            n_samples: 10_000,
            dim: 8,
            seed: 17,
        };
        let ds = generate(&spec).unwrap();
        let a = estimate_a(&ds);
        // chi-square moment: E = 8, SE = sqrt(2*8/10^4) = 0.04
        assert!((a - 8.0).abs() < 0.15, "a_hat {a}");
    }

    #[test]
    fn full_estimator_on_single_point_dataset() {
        let ds = single_point_ds();
        let (b, se) = estimate_b_full(&ds, 1.0, 0.5, 64, 1).unwrap();
        assert_eq!(b, 6.25); // ||x0||^2 = 2.25 + 4
        assert_eq!(se, 0.0);
        assert_eq!(estimate_a(&ds) - b, 0.0);
    }

    #[test]
    fn full_estimator_approaches_data_variance_at_huge_sigma() {
        let ds = two_point_ds();
        let (b, _) = estimate_b_full(&ds, 1.0, 1e6, 256, 3).unwrap();
        let j = estimate_a(&ds) - b;
        assert!((j - 1.0).abs() < 0.05, "j {j}");
    }

    #[test]
    fn full_estimator_matches_quadrature_oracle_on_two_point_mixture() {
        let ds = two_point_ds();
        let m = 20_000;
        let (b, se) = estimate_b_full(&ds, 1.0, 1.0, m, 5).unwrap();
        let j = estimate_a(&ds) - b;
        let truth = crate::oracles::finite_mixture_jstar(
            &[vec![-1.0], vec![1.0]],
            &[0.5, 0.5],
            1.0,
            1.0,
            128,
        )
        .unwrap();
        assert!((j - truth).abs() < 3.0 * se, "j {j} truth {truth} se {se}");
    }

    #[test]
    fn snis_with_full_subset_tracks_full_estimator() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::IsotropicGaussian {
                mean: vec![0.0; 2],
                scale: 1.0,
            },
            n_samples: 64,
            dim: 2,
            seed: 23,
        };
        let ds = generate(&spec).unwrap();
        let grid = NoiseGrid::new(vec![0.0]).unwrap();
        let mut cfg = EstimatorConfig::defaults_for(ds.n_samples(), 7);
        cfg.max_repeats = 400;
        cfg.xt_samples = 128;
        cfg.rel_tol = 1e-12;
        let full =
            estimate_curve(&ds, &grid, EstimatorKind::Full, &cfg, UnitConvention::Total).unwrap();
        let snis =
            estimate_curve(&ds, &grid, EstimatorKind::Snis, &cfg, UnitConvention::Total).unwrap();
        let se = (full.curve.std_err[0].powi(2) + snis.curve.std_err[0].powi(2)).sqrt();
        assert!(
            (full.b_hat[0] - snis.b_hat[0]).abs() < 3.0 * se,
            "full {} snis {} se {}",
            full.b_hat[0],
            snis.b_hat[0],
            se
        );
    }

    #[test]
    fn subset_estimators_on_single_point_dataset_are_exact() {
        let ds = single_point_ds();
        let cfg = EstimatorConfig {
            subset_size: 1,
            xt_samples: 16,
            max_repeats: 4,
            correction: Correction::Finite(7.0),
            seed: 0,
            rel_tol: 1e-9,
        };
        for sigma in [1e-6, 0.3, 10.0] {
            let p = estimate_b_cdol(&ds, 1.0, sigma, &cfg).unwrap();
            assert_eq!(p.b_hat, 6.25);
            assert_eq!(estimate_a(&ds) - p.b_hat, 0.0);
        }
        let (b, _) = estimate_b_snis(&ds, 1.0, 0.5, 1, 16, 0).unwrap();
        assert_eq!(b, 6.25);
    }

    #[test]
    fn repeat_variance_increases_with_correction_strength() {
        // keeping the self pair at full weight (C = 1) anchors each repeat
        // near its sources; as C grows toward the SNIS limit the anchor
        // fades and the per-repeat estimates spread out
        let mut stream = crate::rng::Stream::from_path(5, &[0]);
        let rows: Vec<Vec<f64>> = (0..32)
            .map(|i| {
                let center = if i < 16 { -1.0 } else { 1.0 };
                vec![center + 0.05 * stream.next_normal()]
            })
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let sigma = 1.0;
        let reps = 400;
        let sd_at = |c: f64| -> f64 {
            let vals: Vec<f64> = (0..reps)
                .map(|r| {
                    let repeat_key = fold(fold(99, r as u64), 1);
                    let (b, _) = repeat_b(
                        &ds,
                        EstimatorKind::Cdol,
                        1.0,
                        sigma,
                        4,
                        16,
                        Correction::Finite(c),
                        repeat_key,
                    )
                    .unwrap();
                    b
                })
                .collect();
            let m = vals.iter().sum::<f64>() / reps as f64;
            (vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (reps - 1) as f64).sqrt()
        };
        let low = sd_at(1.0);
        let mid = sd_at(32.0);
        let high = sd_at(1e6);
        assert!(low < high, "sd(C=1) {low} !< sd(C=1e6) {high}");
        assert!(mid <= high * 1.05, "sd(C=32) {mid} above sd(C=1e6) {high}");
    }

    #[test]
    fn cdol_matches_gaussian_oracle_above_the_critical_region() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::IsotropicGaussian {
                mean: vec![0.0; 2],
                scale: 1.0,
            },
            n_samples: 2000,
            dim: 2,
            seed: 41,
        };
        let ds = generate(&spec).unwrap();
        let oracle = GaussianOracle::new(vec![0.0; 2], 1.0).unwrap();
        let cfg = EstimatorConfig::defaults_for(ds.n_samples(), 11);
        for sigma in [0.5, 1.0, 4.0] {
            let p = estimate_b_cdol(&ds, 1.0, sigma, &cfg).unwrap();
            let j = (estimate_a(&ds) - p.b_hat).max(0.0);
            let truth = gaussian_jstar(&oracle, 1.0, sigma).unwrap();
            assert!(
                (j - truth).abs() / truth < 0.05,
                "sigma {sigma}: j {j} vs oracle {truth}"
            );
        }
    }

    #[test]
    fn dol_equals_cdol_with_unit_correction() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::IsotropicGaussian {
                mean: vec![0.0; 2],
                scale: 1.0,
            },
            n_samples: 50,
            dim: 2,
            seed: 2,
        };
        let ds = generate(&spec).unwrap();
        let grid = NoiseGrid::linspace(-1.0, 1.0, 4).unwrap();
        let mut cfg = EstimatorConfig::defaults_for(ds.n_samples(), 19);
        cfg.subset_size = 10;
        cfg.correction = Correction::Finite(37.0); // ignored by Dol
        let dol =
            estimate_curve(&ds, &grid, EstimatorKind::Dol, &cfg, UnitConvention::Total).unwrap();
        cfg.correction = Correction::Finite(1.0);
        let cdol =
            estimate_curve(&ds, &grid, EstimatorKind::Cdol, &cfg, UnitConvention::Total).unwrap();
        assert_eq!(dol.b_hat, cdol.b_hat);
        assert_eq!(dol.curve.j_star, cdol.curve.j_star);
    }

    #[test]
    fn curve_is_deterministic_and_grid_composition_independent() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::IsotropicGaussian {
                mean: vec![0.0; 3],
                scale: 1.0,
            },
            n_samples: 40,
            dim: 3,
            seed: 4,
        };
        let ds = generate(&spec).unwrap();
        let cfg = EstimatorConfig::defaults_for(ds.n_samples(), 5);
        let joint = NoiseGrid::new(vec![-0.5, 0.75]).unwrap();
        let solo = NoiseGrid::new(vec![0.75]).unwrap();
        let a = estimate_curve(
            &ds,
            &joint,
            EstimatorKind::Cdol,
            &cfg,
            UnitConvention::Total,
        )
        .unwrap();
        let b =
            estimate_curve(&ds, &solo, EstimatorKind::Cdol, &cfg, UnitConvention::Total).unwrap();
        assert_eq!(a.b_hat[1], b.b_hat[0]);
        assert_eq!(a.curve.j_star[1], b.curve.j_star[0]);
        // bit-identical rerun
        let c = estimate_curve(
            &ds,
            &joint,
            EstimatorKind::Cdol,
            &cfg,
            UnitConvention::Total,
        )
        .unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn report_invariants_hold_on_a_gaussian_fixture() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::IsotropicGaussian {
                mean: vec![0.5; 2],
                scale: 2.0,
            },
            n_samples: 60,
            dim: 2,
            seed: 6,
        };
        let ds = generate(&spec).unwrap();
        let grid = NoiseGrid::linspace(-2.0, 2.0, 5).unwrap();
        let cfg = EstimatorConfig::defaults_for(ds.n_samples(), 8);
        for kind in [
            EstimatorKind::Full,
            EstimatorKind::Snis,
            EstimatorKind::Dol,
            EstimatorKind::Cdol,
        ] {
            let rep = estimate_curve(&ds, &grid, kind, &cfg, UnitConvention::Total).unwrap();
            for (i, j) in rep.curve.j_star.iter().enumerate() {
                assert!(*j >= 0.0 && *j <= rep.a_hat, "{kind:?} point {i}: j {j}");
                assert!(rep.repeats_used[i] <= cfg.max_repeats);
                let raw = (rep.a_hat - rep.b_hat[i]).max(0.0);
                assert_eq!(*j, raw);
            }
        }
    }

    #[test]
    fn gaussian_curve_is_monotone_up_to_sampling_error() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::IsotropicGaussian {
                mean: vec![0.0; 2],
                scale: 1.0,
            },
            n_samples: 500,
            dim: 2,
            seed: 29,
        };
        let ds = generate(&spec).unwrap();
        let grid = NoiseGrid::linspace(-3.0, 2.3, 16).unwrap();
        let cfg = EstimatorConfig::defaults_for(ds.n_samples(), 9);
        let rep =
            estimate_curve(&ds, &grid, EstimatorKind::Cdol, &cfg, UnitConvention::Total).unwrap();
        for i in 1..grid.len() {
            let slack =
                3.0 * (rep.curve.std_err[i].powi(2) + rep.curve.std_err[i - 1].powi(2)).sqrt();
            assert!(
                rep.curve.j_star[i] >= rep.curve.j_star[i - 1] - slack,
                "point {i}: {} then {} (slack {slack})",
                rep.curve.j_star[i - 1],
                rep.curve.j_star[i]
            );
        }
    }

    #[test]
    fn per_dim_unit_divides_by_dimension() {
        let ds = Dataset::from_rows(&[vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let grid = NoiseGrid::new(vec![0.0]).unwrap();
        let cfg = EstimatorConfig::defaults_for(2, 3);
        let total =
            estimate_curve(&ds, &grid, EstimatorKind::Full, &cfg, UnitConvention::Total).unwrap();
        let per = estimate_curve(
            &ds,
            &grid,
            EstimatorKind::Full,
            &cfg,
            UnitConvention::PerDim,
        )
        .unwrap();
        assert_eq!(total.curve.j_star[0], 2.0 * per.curve.j_star[0]);
    }

    #[test]
    fn well_separated_regime_plateaus_near_zero() {
        // equal-norm samples keep the Monte Carlo noise of A - B at zero,
        // isolating the plateau behavior
        let rows: Vec<Vec<f64>> = (0..16)
            .map(|i| {
                let th = i as f64 * std::f64::consts::TAU / 16.0;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        // min pairwise distance is 2 sin(pi/16) ~ 0.39; sigma far below it
        let cfg = EstimatorConfig::defaults_for(ds.n_samples(), 13);
        let p = estimate_b_cdol(&ds, 1.0, 0.01, &cfg).unwrap();
        let a = estimate_a(&ds);
        let j = (a - p.b_hat).max(0.0);
        assert!(j < 1e-3 * a, "plateau j {j} vs a {a}");
    }

    #[test]
    fn rejects_bad_sigma_and_oversized_subset() {
        let ds = two_point_ds();
        let cfg = EstimatorConfig {
            subset_size: 3,
            xt_samples: 4,
            max_repeats: 2,
            correction: Correction::Finite(1.0),
            seed: 0,
            rel_tol: 1e-6,
        };
        assert!(matches!(
            estimate_b_cdol(&ds, 1.0, 1.0, &cfg),
            Err(Error::Config(_))
        ));
        let ok = EstimatorConfig::defaults_for(2, 0);
        assert!(matches!(
            estimate_b_cdol(&ds, 1.0, 0.0, &ok),
            Err(Error::Domain(_))
        ));
    }
}
