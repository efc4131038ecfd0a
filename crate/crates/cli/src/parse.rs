//! Flag-value parsing helpers shared by the subcommands.

use dol_core::ingest::FileFormat;
use dol_core::{Correction, Error, NoiseGrid, Result, UnitConvention};

pub fn parse_format(s: &str) -> Result<FileFormat> {
    match s {
        "dold" => Ok(FileFormat::Dold),
        "csv" => Ok(FileFormat::Csv),
        other => Err(Error::Config(format!(
            "unknown format \"{other}\" (expected dold or csv)"
        ))),
    }
}

pub fn parse_unit(s: &str) -> Result<UnitConvention> {
    match s {
        "total" => Ok(UnitConvention::Total),
        "per-dim" => Ok(UnitConvention::PerDim),
        other => Err(Error::Config(format!(
            "unknown unit \"{other}\" (expected total or per-dim)"
        ))),
    }
}

/// `<logmin>:<logmax>:<steps>` in natural log of sigma.
pub fn parse_grid(s: &str) -> Result<NoiseGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "grid must be <logmin>:<logmax>:<steps>, got \"{s}\""
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid log-min \"{}\"", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid log-max \"{}\"", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad grid step count \"{}\"", parts[2])))?;
    NoiseGrid::linspace(lo, hi, steps)
}

/// A positive real or the literal `inf`.
pub fn parse_correction(s: &str) -> Result<Correction> {
    if s == "inf" {
        return Ok(Correction::Infinite);
    }
    let c: f64 = s
        .parse()
        .map_err(|_| Error::Config(format!("bad correction \"{s}\" (expected a number or inf)")))?;
    let corr = Correction::Finite(c);
    corr.validate()?;
    Ok(corr)
}

/// Formats a float with 17 significant digits (round-trip safe).
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
