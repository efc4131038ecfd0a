//! The four subcommands: estimate, convert, schedule, scalefit.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;

use dol_core::estimators::{estimate_curve, EstimatorKind};
use dol_core::formulations::{
    convert_loss_to_x0_ve, preconditioners, to_ve_sigma, FormulationKind, FormulationSpec,
};
use dol_core::ingest::load_dataset;
use dol_core::scaling::{
    compare_corrected, envelope, fit_offset_power_law, OffsetMode, TrainingCurve,
};
use dol_core::schedule::{
    adaptive_pdf, detect_critical_point, interpolate_jstar_log, loss_weight_log, GapBins,
    ScheduleExport, ScheduleParams, WeightParams,
};
use dol_core::{
    Correction, Error, EstimatorConfig, NoiseGrid, OptimalLossCurve, Result, UnitConvention,
};

use crate::manifest::{dataset_checksum, write_manifest};
use crate::parse::{fmt17, parse_correction, parse_format, parse_grid, parse_unit};

#[derive(Args)]
pub struct EstimateArgs {
    /// Dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Dataset format: dold or csv.
    #[arg(long, default_value = "dold")]
    format: String,
    /// Estimator: full, snis, dol, or cdol.
    #[arg(long, default_value = "cdol")]
    estimator: String,
    /// Noise grid as <logmin>:<logmax>:<steps> (natural log of sigma).
    #[arg(long, default_value = "-3:2.3:16", allow_hyphen_values = true)]
    grid: String,
    /// Subset size L (default min(N, 5000)).
    #[arg(long)]
    subset_size: Option<usize>,
    /// Noisy samples M per repeat (default 4L).
    #[arg(long)]
    xt_samples: Option<usize>,
    /// Repeat budget R (default ceil(3N/L)).
    #[arg(long)]
    repeats: Option<usize>,
    /// Self-pair down-weight C, a number >= 1 or "inf" (default 4N/L).
    #[arg(long)]
    correction: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output units: total or per-dim.
    #[arg(long, default_value = "total")]
    unit: String,
    /// Early-stop threshold on std_err / |b_hat| per grid point.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn parse_estimator(s: &str) -> Result<EstimatorKind> {
    match s {
        "full" => Ok(EstimatorKind::Full),
        "snis" => Ok(EstimatorKind::Snis),
        "dol" => Ok(EstimatorKind::Dol),
        "cdol" => Ok(EstimatorKind::Cdol),
        other => Err(Error::Config(format!(
            "unknown estimator \"{other}\" (expected full, snis, dol, cdol)"
        ))),
    }
}

pub fn run_estimate(
    args: &EstimateArgs,
    argv: &[String],
    no_manifest: bool,
    started: Instant,
) -> Result<()> {
    let format = parse_format(&args.format)?;
    let kind = parse_estimator(&args.estimator)?;
    let unit = parse_unit(&args.unit)?;
    let grid = parse_grid(&args.grid)?;
    let ds = load_dataset(&args.data, format)?;

    let mut config = EstimatorConfig::defaults_for(ds.n_samples(), args.seed);
    if let Some(l) = args.subset_size {
        config.subset_size = l;
        // dependent defaults follow the explicit subset size unless also given
        config.xt_samples = 4 * l;
        config.max_repeats = (3 * ds.n_samples()).div_ceil(l.max(1));
        config.correction = Correction::Finite(4.0 * ds.n_samples() as f64 / l.max(1) as f64);
    }
    if let Some(m) = args.xt_samples {
        config.xt_samples = m;
    }
    if let Some(r) = args.repeats {
        config.max_repeats = r;
    }
    if let Some(c) = &args.correction {
        config.correction = parse_correction(c)?;
    }
    if let Some(t) = args.rel_tol {
        config.rel_tol = t;
    }

    let report = estimate_curve(&ds, &grid, kind, &config, unit)?;

    let mut csv = String::from("log_sigma,j_star,std_err,repeats_used\n");
    for i in 0..report.curve.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(report.curve.grid.log_sigma(i)),
            fmt17(report.curve.j_star[i]),
            fmt17(report.curve.std_err[i]),
            report.repeats_used[i]
        ));
    }
    std::fs::write(&args.out, csv)?;

    write_manifest(
        &args.out,
        argv,
        serde_json::json!({
            "estimator": kind.to_string(),
            "grid": args.grid,
            "unit": args.unit,
            "subset_size": config.subset_size,
            "xt_samples": config.xt_samples,
            "max_repeats": config.max_repeats,
            "correction": config.correction.to_string(),
            "rel_tol": config.rel_tol,
            "a_hat": report.a_hat,
            "clamped_points": report.clamped.iter().filter(|c| **c).count(),
        }),
        Some(config.seed),
        Some(dataset_checksum(&ds)),
        started,
        no_manifest,
    )
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Formulation: vp-eps, ve-F, ve-eps, fm-v, fm-v-sd3, fm-eps, fm-x0.
    #[arg(long)]
    spec: String,
    /// Input CSV of (native_sigma, native_loss) rows.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    sigma_data: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p_mean: Option<f64>,
    #[arg(long)]
    p_std: Option<f64>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    eps_t: Option<f64>,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    sigma_max: Option<f64>,
}

/// Two-column numeric CSV; an optional first line matching `header` is skipped.
fn read_two_column_csv(path: &Path, header: &str) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.replace(' ', "") == header {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Format(format!(
                "row {lineno}: expected 2 comma-separated fields, got {}",
                parts.len()
            )));
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| {
            Error::Format(format!(
                "row {lineno}: cannot parse \"{}\"",
                parts[0].trim()
            ))
        })?;
        let b: f64 = parts[1].trim().parse().map_err(|_| {
            Error::Format(format!(
                "row {lineno}: cannot parse \"{}\"",
                parts[1].trim()
            ))
        })?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Data(format!("row {lineno}: non-finite value")));
        }
        rows.push((a, b));
    }
    if rows.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    Ok(rows)
}

pub fn run_convert(
    args: &ConvertArgs,
    argv: &[String],
    no_manifest: bool,
    started: Instant,
) -> Result<()> {
    let kind = FormulationKind::parse(&args.spec)?;
    let mut spec = FormulationSpec::new(kind);
    if let Some(v) = args.sigma_data {
        spec.constants.sigma_data = v;
    }
    if let Some(v) = args.p_mean {
        spec.constants.p_mean = v;
    }
    if let Some(v) = args.p_std {
        spec.constants.p_std = v;
    }
    if let Some(v) = args.beta_min {
        spec.constants.beta_min = v;
    }
    if let Some(v) = args.beta_max {
        spec.constants.beta_max = v;
    }
    if let Some(v) = args.eps_t {
        spec.constants.eps_t = v;
    }
    if let Some(v) = args.sigma_min {
        spec.constants.sigma_min = v;
    }
    if let Some(v) = args.sigma_max {
        spec.constants.sigma_max = v;
    }
    spec.validate()?;

    let rows = read_two_column_csv(&args.input, "native_sigma,native_loss")?;
    let mut csv = String::from("sigma_hat,x0_ve_loss,c_skip,c_out,c_in,c_noise\n");
    for (native_sigma, native_loss) in rows {
        let sigma_hat = to_ve_sigma(kind.process(), native_sigma)?;
        let x0_loss = convert_loss_to_x0_ve(&spec, sigma_hat, native_loss)?;
        let p = preconditioners(&spec, sigma_hat)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(sigma_hat),
            fmt17(x0_loss),
            fmt17(p.c_skip),
            fmt17(p.c_out),
            fmt17(p.c_in),
            fmt17(p.c_noise)
        ));
    }
    std::fs::write(&args.out, csv)?;

    write_manifest(
        &args.out,
        argv,
        serde_json::json!({
            "spec": args.spec,
            "constants": spec.constants,
        }),
        None,
        None,
        started,
        no_manifest,
    )
}

#[derive(Args)]
pub struct ScheduleArgs {
    /// Optimal-loss estimate CSV (as written by `dol estimate`).
    #[arg(long)]
    jstar: PathBuf,
    /// Measured stepwise losses: CSV of (log_sigma, measured_loss).
    #[arg(long)]
    gaps: PathBuf,
    /// Weight scale factor.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Weight cutoff.
    #[arg(long, default_value_t = 100.0)]
    w_star: f64,
    /// Bump center over log sigma (default: log sigma_star - 1).
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Bump width over log sigma.
    #[arg(long, default_value_t = 0.5)]
    varsigma: f64,
    /// Critical-point threshold as a fraction of the curve plateau.
    #[arg(long, default_value_t = 0.01)]
    threshold_frac: f64,
    /// EMA retention factor recorded in the schedule.
    #[arg(long, default_value_t = 0.9)]
    decay: f64,
    /// Gap floor (default 1e-6 x the curve maximum).
    #[arg(long)]
    gap_floor: Option<f64>,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

/// Reads a curve written by `dol estimate`.
fn read_jstar_csv(path: &Path) -> Result<OptimalLossCurve> {
    let text = std::fs::read_to_string(path)?;
    let mut log_sigmas = Vec::new();
    let mut j_star = Vec::new();
    let mut std_err = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with("log_sigma") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 2 {
            return Err(Error::Format(format!(
                "row {lineno}: expected log_sigma,j_star[,std_err,repeats_used]"
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {lineno}: cannot parse \"{}\"", s.trim())))
        };
        log_sigmas.push(parse(parts[0])?);
        j_star.push(parse(parts[1])?);
        std_err.push(if parts.len() > 2 {
            parse(parts[2])?
        } else {
            0.0
        });
    }
    OptimalLossCurve::new(
        NoiseGrid::new(log_sigmas)?,
        j_star,
        std_err,
        UnitConvention::Total,
    )
}

pub fn run_schedule(
    args: &ScheduleArgs,
    argv: &[String],
    no_manifest: bool,
    started: Instant,
) -> Result<()> {
    let curve = read_jstar_csv(&args.jstar)?;
    let measured = read_two_column_csv(&args.gaps, "log_sigma,measured_loss")?;

    let sigma_star = detect_critical_point(&curve, args.threshold_frac)?;
    let params = WeightParams {
        a: args.a,
        w_star: args.w_star,
        sigma_star,
        mu: args.mu.unwrap_or(sigma_star.ln() - 1.0),
        varsigma: args.varsigma,
    };
    params.validate()?;

    // every measured bin must sit inside the curve span
    let xs = curve.grid.log_sigmas();
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    for (ls, _) in &measured {
        if *ls < lo || *ls > hi {
            return Err(Error::Alignment(format!(
                "measured bin at log sigma {ls} outside the estimate span [{lo}, {hi}]"
            )));
        }
    }

    let bin_grid = NoiseGrid::new(measured.iter().map(|(ls, _)| *ls).collect())?;
    let mut gaps = Vec::with_capacity(measured.len());
    for (ls, loss) in &measured {
        let w = loss_weight_log(&curve, &params, *ls)?;
        let j = interpolate_jstar_log(&curve, *ls)?;
        gaps.push(w * (loss - j));
    }

    let curve_max = curve.j_star.iter().cloned().fold(0.0f64, f64::max);
    let gap_floor = args
        .gap_floor
        .unwrap_or(1e-6 * curve_max.max(f64::MIN_POSITIVE));
    let bins = GapBins::new(bin_grid, gaps, args.decay, gap_floor)?;
    let pdf = adaptive_pdf(&bins)?;

    let weight_table: Result<Vec<(f64, f64)>> = xs
        .iter()
        .map(|ls| loss_weight_log(&curve, &params, *ls).map(|w| (*ls, w)))
        .collect();
    let export = ScheduleExport {
        weight_table: weight_table?,
        pdf_knots: pdf.knots.clone(),
        params: ScheduleParams {
            a: params.a,
            w_star: params.w_star,
            sigma_star,
            mu: params.mu,
            varsigma: params.varsigma,
            threshold_frac: args.threshold_frac,
            decay: args.decay,
            gap_floor,
            uniform_fallback: pdf.uniform_fallback,
        },
    };
    let text = serde_json::to_string_pretty(&export).expect("schedule serializes");
    std::fs::write(&args.out, text)?;

    write_manifest(
        &args.out,
        argv,
        serde_json::json!({
            "sigma_star": sigma_star,
            "threshold_frac": args.threshold_frac,
            "uniform_fallback": pdf.uniform_fallback,
        }),
        None,
        None,
        started,
        no_manifest,
    )
}

#[derive(Args)]
pub struct ScalefitArgs {
    /// One CSV per curve, columns flops,loss.
    #[arg(long, num_args = 1.., required = true)]
    curves: Vec<PathBuf>,
    /// Offset mode: "search" or a fixed numeric value.
    #[arg(long, default_value = "search")]
    offset: String,
    /// Drop the first k envelope points before fitting.
    #[arg(long, default_value_t = 0)]
    skip_first: usize,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(serde::Serialize)]
struct ScaleFitOutput {
    alpha: f64,
    beta: f64,
    j_star: f64,
    rho: f64,
    rho_uncorrected: f64,
    residuals: Vec<f64>,
}

pub fn run_scalefit(
    args: &ScalefitArgs,
    argv: &[String],
    no_manifest: bool,
    started: Instant,
) -> Result<()> {
    let mode = match args.offset.as_str() {
        "search" => OffsetMode::Search,
        v => {
            let j: f64 = v.parse().map_err(|_| {
                Error::Config(format!(
                    "offset must be \"search\" or a number, got \"{v}\""
                ))
            })?;
            OffsetMode::Fixed(j)
        }
    };
    let mut curves = Vec::with_capacity(args.curves.len());
    for path in &args.curves {
        let rows = read_two_column_csv(path, "flops,loss")?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "curve".into());
        curves.push(TrainingCurve::new(label, rows)?);
    }
    let mut env = envelope(&curves)?;
    if args.skip_first > 0 {
        if args.skip_first >= env.len() {
            return Err(Error::Input(format!(
                "--skip-first {} leaves no envelope points",
                args.skip_first
            )));
        }
        env.drain(..args.skip_first);
    }
    let fit = fit_offset_power_law(&env, mode)?;
    let (rho_uncorrected, _) = compare_corrected(&env, fit.j_star_offset)?;
    let out = ScaleFitOutput {
        alpha: fit.alpha,
        beta: fit.beta,
        j_star: fit.j_star_offset,
        rho: fit.rho,
        rho_uncorrected,
        residuals: fit.residuals(&env),
    };
    let text = serde_json::to_string_pretty(&out).expect("fit serializes");
    std::fs::write(&args.out, text)?;

    write_manifest(
        &args.out,
        argv,
        serde_json::json!({
            "offset_mode": args.offset,
            "skip_first": args.skip_first,
            "envelope_points": env.len(),
        }),
        None,
        None,
        started,
        no_manifest,
    )
}
