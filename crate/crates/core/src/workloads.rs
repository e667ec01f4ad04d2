//! Request-sequence generators and trace files.
//!
//! Trace format: one decimal item id per line; blank lines and lines whose
//! first non-blank character is `#` are skipped.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::Item;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorkloadKind {
    Uniform,
    Zipf { alpha: f64 },
    Cyclic { subset: usize },
    Trace { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn uniform(n: usize, m: usize, seed: u64) -> Self {
        Self { kind: WorkloadKind::Uniform, n, m, seed }
    }

    pub fn zipf(n: usize, m: usize, alpha: f64, seed: u64) -> Self {
        Self { kind: WorkloadKind::Zipf { alpha }, n, m, seed }
    }

    pub fn cyclic(n: usize, m: usize, subset: usize) -> Self {
        Self { kind: WorkloadKind::Cyclic { subset }, n, m, seed: 0 }
    }

    pub fn trace(n: usize, path: impl Into<PathBuf>) -> Self {
        Self {
            kind: WorkloadKind::Trace { path: path.into() },
            n,
            m: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidWorkload("n must be positive".into()));
        }
        match &self.kind {
            WorkloadKind::Zipf { alpha } if !(alpha.is_finite() && *alpha >= 0.0) => {
                Err(Error::InvalidWorkload(format!("zipf exponent must be >= 0, got {alpha}")))
            }
            WorkloadKind::Cyclic { subset } if *subset == 0 || *subset > self.n => Err(Error::InvalidWorkload(
                format!("subset size {subset} outside 1..={}", self.n),
            )),
            _ => Ok(()),
        }
    }
}

/// Short label used in reports, e.g. `zipf(1)` or `cyclic(7)`.
impl fmt::Display for WorkloadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WorkloadKind::Uniform => write!(f, "uniform"),
            WorkloadKind::Zipf { alpha } => write!(f, "zipf({alpha})"),
            WorkloadKind::Cyclic { subset } => write!(f, "cyclic({subset})"),
            WorkloadKind::Trace { path } => write!(f, "trace({})", path.display()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestSequence {
    pub items: Vec<Item>,
}

impl RequestSequence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Empirical request frequencies over `n` items; uniform when empty.
    pub fn frequencies(&self, n: usize) -> Vec<f64> {
        if self.items.is_empty() {
            return vec![1.0 / n as f64; n];
        }
        let mut counts = vec![0u64; n];
        for &v in &self.items {
            counts[v] += 1;
        }
        let m = self.items.len() as f64;
        counts.into_iter().map(|c| c as f64 / m).collect()
    }
}

/// Inverse-CDF sampler over `P(item r) ∝ (r + 1)^-alpha`.
#[derive(Clone, Debug)]
pub struct ZipfSampler {
    cumulative: Vec<f64>,
}

impl ZipfSampler {
    pub fn new(n: usize, alpha: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=n)
            .map(|r| {
                acc += (r as f64).powf(-alpha);
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = *self.cumulative.last().unwrap();
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = (c - prev) / total;
                prev = c;
                p
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Item {
        let total = *self.cumulative.last().unwrap();
        let x = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

/// Deterministic in `spec`, seed included.
pub fn generate(spec: &WorkloadSpec) -> Result<RequestSequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let items = match &spec.kind {
        WorkloadKind::Uniform => (0..spec.m).map(|_| rng.gen_range(0..spec.n)).collect(),
        WorkloadKind::Zipf { alpha } => {
            let zipf = ZipfSampler::new(spec.n, *alpha);
            (0..spec.m).map(|_| zipf.sample(&mut rng)).collect()
        }
        WorkloadKind::Cyclic { subset } => (0..spec.m).map(|t| t % subset).collect(),
        WorkloadKind::Trace { path } => return read_trace(path, spec.n),
    };
    Ok(RequestSequence { items })
}

/// Request frequencies the workload is drawn from; the empirical ones for
/// traces.
pub fn frequencies(spec: &WorkloadSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n;
    Ok(match &spec.kind {
        WorkloadKind::Uniform => vec![1.0 / n as f64; n],
        WorkloadKind::Zipf { alpha } => ZipfSampler::new(n, *alpha).probabilities(),
        WorkloadKind::Cyclic { subset } => (0..n)
            .map(|v| if v < *subset { 1.0 / *subset as f64 } else { 0.0 })
            .collect(),
        WorkloadKind::Trace { path } => read_trace(path, n)?.frequencies(n),
    })
}

pub fn read_trace(path: impl AsRef<Path>, n: usize) -> Result<RequestSequence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trace(&text, n).map_err(|(line, message)| Error::Trace {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Parses trace text; errors carry the 1-based line number.
pub fn parse_trace(text: &str, n: usize) -> std::result::Result<RequestSequence, (usize, String)> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Item = line
            .parse()
            .map_err(|_| (i + 1, format!("'{line}' is not a decimal item id")))?;
        if v >= n {
            return Err((i + 1, format!("item {v} out of range for n = {n}")));
        }
        items.push(v);
    }
    Ok(RequestSequence { items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn cyclic_repeats_prefix() {
        let seq = generate(&WorkloadSpec::cyclic(7, 7, 3)).unwrap();
        assert_eq!(seq.items, vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn zipf_ratio_for_two_items() {
        let seq = generate(&WorkloadSpec::zipf(2, 200_000, 1.0, 7)).unwrap();
        let ones = seq.items.iter().filter(|&&v| v == 1).count() as f64;
        let zeros = seq.len() as f64 - ones;
        let ratio = zeros / ones;
        assert!((ratio - 2.0).abs() / 2.0 < 0.05, "ratio {ratio}");
    }

    #[test]
    fn zipf_zero_exponent_is_uniform() {
        let p = ZipfSampler::new(4, 0.0).probabilities();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = WorkloadSpec::uniform(31, 1000, 42);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = WorkloadSpec::uniform(31, 1000, 43);
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
        assert!(generate(&spec).unwrap().items.iter().all(|&v| v < 31));
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&WorkloadSpec::cyclic(7, 10, 0)).is_err());
        assert!(generate(&WorkloadSpec::cyclic(7, 10, 8)).is_err());
        assert!(generate(&WorkloadSpec::zipf(7, 10, -1.0, 0)).is_err());
        assert!(generate(&WorkloadSpec::zipf(7, 10, f64::NAN, 0)).is_err());
    }

    #[test]
    fn traces() {
        assert_eq!(parse_trace("0\n2\n1\n", 3).unwrap().items, vec![0, 2, 1]);
        assert_eq!(parse_trace("# comment\n1\n\n  # indented\n2\n", 3).unwrap().items, vec![1, 2]);
        assert_eq!(parse_trace("9\n", 3).unwrap_err().0, 1);
        assert_eq!(parse_trace("0\n1\nx\n", 3).unwrap_err().0, 3);
    }

    #[test]
    fn trace_files() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# header\n0\n2\n1").unwrap();
        let spec = WorkloadSpec::trace(3, f.path());
        assert_eq!(generate(&spec).unwrap().items, vec![0, 2, 1]);
        let freq = frequencies(&spec).unwrap();
        assert!(freq.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-12));

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "0\n# fine\n5").unwrap();
        let err = read_trace(bad.path(), 3).unwrap_err();
        match err {
            Error::Trace { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_trace("/nonexistent/trace.txt", 3), Err(Error::Io { .. })));
    }

    #[test]
    fn cyclic_ranks_settle() {
        use crate::workset::{RankTable, WsAccumulator};
        let seq = generate(&WorkloadSpec::cyclic(15, 60, 6)).unwrap();
        let mut rt = RankTable::new(15);
        let mut ws = WsAccumulator::new();
        for (t, &v) in seq.items.iter().enumerate() {
            let r = rt.record(&mut ws, v).unwrap();
            if t >= 6 {
                assert_eq!(r, 6);
            }
        }
    }
}
