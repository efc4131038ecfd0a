//! Dataset I/O: the DOLD binary format, strict CSV ingestion, and
//! synthetic dataset generation with seeded determinism.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::Stream;

const DOLD_MAGIC: [u8; 4] = *b"DOLD";
const DOLD_VERSION: u32 = 1;

/// On-disk dataset formats accepted by [`load_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Dold,
    Csv,
}

/// The row-major binary32 little-endian payload exactly as stored in a
/// DOLD file. Also the byte stream that dataset checksums are taken over.
pub fn dold_payload_bytes(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(ds.values().len() * 4);
    for &v in ds.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// 64-bit FNV-1a over a byte stream.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Writes `ds` as a DOLD file: magic "DOLD", version u32 LE (= 1),
/// n u64 LE, d u64 LE, then the binary32 payload. A subsequent
/// [`load_dataset`] reproduces the dataset bit-exactly.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + ds.values().len() * 4);
    buf.extend_from_slice(&DOLD_MAGIC);
    buf.extend_from_slice(&DOLD_VERSION.to_le_bytes());
    buf.extend_from_slice(&(ds.n_samples() as u64).to_le_bytes());
    buf.extend_from_slice(&(ds.dim() as u64).to_le_bytes());
    buf.extend_from_slice(&dold_payload_bytes(ds));
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn load_dataset(path: &Path, format: FileFormat) -> Result<Dataset> {
    match format {
        FileFormat::Dold => load_dold(path),
        FileFormat::Csv => load_csv(path),
    }
}

fn load_dold(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    if bytes.len() < 24 {
        return Err(Error::Format(format!(
            "DOLD header needs 24 bytes, file has {}",
            bytes.len()
        )));
    }
    if bytes[0..4] != DOLD_MAGIC {
        return Err(Error::Format("bad magic, expected \"DOLD\"".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DOLD_VERSION {
        return Err(Error::Format(format!(
            "unsupported DOLD version {version}, expected {DOLD_VERSION}"
        )));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if n == 0 || d == 0 {
        return Err(Error::Format(format!("declared shape {n} x {d} is empty")));
    }
    let count = n
        .checked_mul(d)
        .filter(|c| *c <= (usize::MAX / 4) as u64)
        .ok_or_else(|| Error::Format(format!("declared shape {n} x {d} overflows")))?;
    let expected = 24 + 4 * count as usize;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, declared shape {n} x {d} requires {}",
            bytes.len() - 24,
            expected - 24
        )));
    }
    let mut values = Vec::with_capacity(count as usize);
    for (i, chunk) in bytes[24..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "non-finite payload value at row {}",
                i / d as usize
            )));
        }
        values.push(v as f64);
    }
    Dataset::from_flat(d as usize, values)
}

fn load_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| {
                Error::Format(format!(
                    "row {lineno}: cannot parse \"{field}\" as a number"
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!("row {lineno}: non-finite value {v}")));
            }
            row.push(v);
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Format(format!(
                    "row {lineno} has {} fields, expected {d}",
                    row.len()
                )))
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("csv contains no data rows".into()));
    }
    Dataset::from_rows(&rows)
}

/// Synthetic dataset families with known structure, used as test and
/// acceptance fixtures.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    /// `mean + scale * z`, `z ~ N(0, I)`.
    IsotropicGaussian { mean: Vec<f64>, scale: f64 },
    /// Each sample is `a` or `b` replicated across dimensions, probability 1/2 each.
    TwoPoint { a: f64, b: f64 },
    /// Samples drawn from a fixed set of points with given probabilities.
    FiniteMixture {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n_samples: usize,
    pub dim: usize,
    pub seed: u64,
}

/// Generates a dataset deterministically from `spec`. Each sample is a pure
/// function of `(seed, sample index)`; Gaussian draws use the Box-Muller
/// transform (see [`crate::rng`]).
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n_samples == 0 || spec.dim == 0 {
        return Err(Error::Spec("n_samples and dim must be positive".into()));
    }
    match &spec.kind {
        SyntheticKind::IsotropicGaussian { mean, scale } => {
            if !(*scale > 0.0) {
                return Err(Error::Spec(format!(
                    "gaussian scale must be > 0, got {scale}"
                )));
            }
            if mean.len() != spec.dim {
                return Err(Error::Spec(format!(
                    "mean has {} coordinates, expected dim {}",
                    mean.len(),
                    spec.dim
                )));
            }
        }
        SyntheticKind::TwoPoint { .. } => {}
        SyntheticKind::FiniteMixture { points, probs } => {
            if points.is_empty() || points.len() != probs.len() {
                return Err(Error::Spec(
                    "mixture needs matching, nonempty points and probs".into(),
                ));
            }
            if points.iter().any(|p| p.len() != spec.dim) {
                return Err(Error::Spec("mixture point dimension mismatch".into()));
            }
            if probs.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::Spec(
                    "mixture probabilities must be nonnegative".into(),
                ));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Spec(format!(
                    "mixture probabilities sum to {total}, expected 1"
                )));
            }
        }
    }

    let mut values = Vec::with_capacity(spec.n_samples * spec.dim);
    for i in 0..spec.n_samples {
        let mut stream = Stream::from_path(spec.seed, &[i as u64]);
        match &spec.kind {
            SyntheticKind::IsotropicGaussian { mean, scale } => {
                for mj in mean {
                    values.push(mj + scale * stream.next_normal());
                }
            }
            SyntheticKind::TwoPoint { a, b } => {
                let v = if stream.next_f64() < 0.5 { *a } else { *b };
                values.extend(std::iter::repeat_n(v, spec.dim));
            }
            SyntheticKind::FiniteMixture { points, probs } => {
                let u = stream.next_f64();
                let mut cum = 0.0;
                let mut chosen = points.len() - 1;
                for (k, p) in probs.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        chosen = k;
                        break;
                    }
                }
                values.extend_from_slice(&points[chosen]);
            }
        }
    }
    Dataset::from_flat(spec.dim, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpfile(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // keep the tempdir alive by leaking it for the test's duration
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn dold_round_trip_is_bit_exact() {
        let ds = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let path = tmpfile("rt.dold");
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path, FileFormat::Dold).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn single_value_file_is_28_bytes() {
        let ds = Dataset::from_rows(&[vec![0.5]]).unwrap();
        let path = tmpfile("one.dold");
        save_dataset(&ds, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 28);
    }

    #[test]
    fn truncated_payload_is_a_format_error() {
        let path = tmpfile("short.dold");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"DOLD");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes()); // 1 of 4 declared values
        std::fs::write(&path, &bytes).unwrap();
        match load_dataset(&path, FileFormat::Dold) {
            Err(Error::Format(_)) => {}
            other => panic!("expected FormatError, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version_are_format_errors() {
        let path = tmpfile("magic.dold");
        std::fs::write(&path, b"XOLD\x01\x00\x00\x00").unwrap();
        assert!(matches!(
            load_dataset(&path, FileFormat::Dold),
            Err(Error::Format(_))
        ));

        let ds = Dataset::from_rows(&[vec![0.5]]).unwrap();
        save_dataset(&ds, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 9;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_dataset(&path, FileFormat::Dold),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn nan_payload_is_a_data_error() {
        let path = tmpfile("nan.dold");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"DOLD");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u64.to_le_bytes());
        bytes.extend_from_slice(&1u64.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_dataset(&path, FileFormat::Dold),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn save_to_empty_path_is_io_error() {
        let ds = Dataset::from_rows(&[vec![0.5]]).unwrap();
        assert!(matches!(
            save_dataset(&ds, Path::new("")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn csv_parses_rows_and_trims() {
        let path = tmpfile("ok.csv");
        std::fs::write(&path, "1.0, 2.0\n3.0,4.0\n").unwrap();
        let ds = load_dataset(&path, FileFormat::Csv).unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(0), &[1.0, 2.0]);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let path = tmpfile("ragged.csv");
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(matches!(
            load_dataset(&path, FileFormat::Csv),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn two_point_support() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::TwoPoint { a: -1.0, b: 1.0 },
            n_samples: 4,
            dim: 1,
            seed: 5,
        };
        let ds = generate(&spec).unwrap();
        for i in 0..4 {
            let v = ds.row(i)[0];
            assert!(v == -1.0 || v == 1.0);
        }
    }

    #[test]
    fn gaussian_mean_is_near_zero() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::IsotropicGaussian {
                mean: vec![0.0; 4],
                scale: 1.0,
            },
            n_samples: 10_000,
            dim: 4,
            seed: 3,
        };
        let ds = generate(&spec).unwrap();
        for m in ds.mean() {
            assert!(m.abs() < 0.05, "coordinate mean {m}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::FiniteMixture {
                points: vec![vec![-1.0, 0.0], vec![1.0, 2.0]],
                probs: vec![0.25, 0.75],
            },
            n_samples: 64,
            dim: 2,
            seed: 9,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn mixture_probs_must_sum_to_one() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::FiniteMixture {
                points: vec![vec![0.0], vec![1.0]],
                probs: vec![0.5, 0.6],
            },
            n_samples: 4,
            dim: 1,
            seed: 0,
        };
        assert!(matches!(generate(&spec), Err(Error::Spec(_))));
    }

    #[test]
    fn fnv_checksum_reference_values() {
        // reference vectors for 64-bit FNV-1a
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
