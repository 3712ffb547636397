//! Experiment configuration: flat `key = value` text with `#` comments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mapper::{CoverSpec, FilterSpec, DEFAULT_K_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Second source alone.
    PolOnly,
    /// First source alone.
    OptOnly,
    /// Feature-wise concatenation of all sources.
    Concat,
    Lpp,
    LppSe,
    Ssma,
    Mima,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::PolOnly,
        Algorithm::OptOnly,
        Algorithm::Concat,
        Algorithm::Lpp,
        Algorithm::LppSe,
        Algorithm::Ssma,
        Algorithm::Mima,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PolOnly => "pol-only",
            Algorithm::OptOnly => "opt-only",
            Algorithm::Concat => "concat",
            Algorithm::Lpp => "lpp",
            Algorithm::LppSe => "lpp-se",
            Algorithm::Ssma => "ssma",
            Algorithm::Mima => "mima",
        }
    }

    pub fn uses_mu(self) -> bool {
        matches!(self, Algorithm::Ssma | Algorithm::Mima)
    }

    pub fn uses_dn(self) -> bool {
        matches!(self, Algorithm::Lpp | Algorithm::LppSe | Algorithm::Ssma | Algorithm::Mima)
    }

    pub fn uses_k(self) -> bool {
        matches!(self, Algorithm::Lpp | Algorithm::LppSe | Algorithm::Ssma)
    }

    pub fn uses_cover(self) -> bool {
        self == Algorithm::Mima
    }

    fn min_sources(self) -> usize {
        match self {
            Algorithm::PolOnly => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::validation(format!("unknown algorithm '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classifier {
    OneNn,
    Linear,
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classifier::OneNn => "one-nn",
            Classifier::Linear => "linear",
        })
    }
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-nn" => Ok(Classifier::OneNn),
            "linear" => Ok(Classifier::Linear),
            _ => Err(Error::validation(format!("unknown classifier '{s}' (one-nn or linear)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// One labeled training file per source.
    pub train: Vec<PathBuf>,
    /// One labeled test file per source, co-registered across sources.
    pub test: Vec<PathBuf>,
    pub mu: f64,
    pub dn: usize,
    pub k: usize,
    pub bins: usize,
    pub overlap: f64,
    pub k_max: usize,
    pub filter: FilterSpec,
    pub classifier: Classifier,
    pub ridge: f64,
    pub seed: Option<u64>,
    /// Test-block instances drawn as the unlabeled pool.
    pub unlabeled: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Mima,
            train: vec![],
            test: vec![],
            mu: 1.0,
            dn: 4,
            k: 9,
            bins: 5,
            overlap: 0.5,
            k_max: DEFAULT_K_MAX,
            filter: FilterSpec::PrincipalComponent(1),
            classifier: Classifier::OneNn,
            ridge: 1e-2,
            seed: None,
            unlabeled: 300,
            output: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::validation(format!("bad value '{v}' for '{key}'")))
}

fn path_list(v: &str, base: Option<&Path>) -> Vec<PathBuf> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match base {
            Some(b) if Path::new(s).is_relative() => b.join(s),
            _ => PathBuf::from(s),
        })
        .collect()
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::validation("a seed is required"))
    }

    pub fn cover(&self) -> Result<CoverSpec> {
        CoverSpec::new(self.bins, self.overlap)
    }

    /// Applies one `key = value` setting. Relative paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        match key {
            "algorithm" => self.algorithm = value.parse()?,
            "train" => self.train = path_list(value, base),
            "test" => self.test = path_list(value, base),
            "mu" => self.mu = parse_value(key, value)?,
            "dn" => self.dn = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "bins" => self.bins = parse_value(key, value)?,
            "overlap" => self.overlap = parse_value(key, value)?,
            "k_max" => self.k_max = parse_value(key, value)?,
            "filter" => self.filter = value.parse()?,
            "classifier" => self.classifier = value.parse()?,
            "ridge" => self.ridge = parse_value(key, value)?,
            "seed" => self.seed = Some(parse_value(key, value)?),
            "unlabeled" => self.unlabeled = parse_value(key, value)?,
            "output" => self.output = path_list(value, base).into_iter().next(),
            _ => return Err(Error::validation(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, base: Option<&Path>, path: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let wrap = |msg: String| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| wrap(format!("expected 'key = value', got '{line}'")))?;
            cfg.set(k.trim(), v.trim(), base).map_err(|e| wrap(e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent(), &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.train.is_empty() || self.train.len() != self.test.len() {
            return Err(Error::validation(format!(
                "need one train and one test file per source, got {} and {}",
                self.train.len(),
                self.test.len()
            )));
        }
        if self.train.len() < self.algorithm.min_sources() {
            return Err(Error::validation(format!("{} needs at least two sources", self.algorithm)));
        }
        self.validate_params()
    }

    /// Everything except the file lists, for runs on in-memory data.
    pub fn validate_params(&self) -> Result<()> {
        self.seed()?;
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::validation(format!("mu must be finite and >= 0, got {}", self.mu)));
        }
        if self.dn == 0 {
            return Err(Error::validation("dn must be at least 1"));
        }
        if self.k == 0 || self.k_max == 0 {
            return Err(Error::validation("k and k_max must be at least 1"));
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::validation(format!("ridge must be positive, got {}", self.ridge)));
        }
        self.cover()?;
        Ok(())
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "algorithm = {}\ntrain = {}\ntest = {}\nmu = {}\ndn = {}\nk = {}\nbins = {}\noverlap = {}\n\
             k_max = {}\nfilter = {}\nclassifier = {}\nridge = {}\nunlabeled = {}\n",
            self.algorithm,
            join_paths(&self.train),
            join_paths(&self.test),
            self.mu,
            self.dn,
            self.k,
            self.bins,
            self.overlap,
            self.k_max,
            self.filter,
            self.classifier,
            self.ridge,
            self.unlabeled,
        );
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed = {seed}\n"));
        }
        if let Some(o) = &self.output {
            out.push_str(&format!("output = {}\n", o.display()));
        }
        out
    }

    /// SHA-256 of the canonical text without the output directory.
    pub fn content_hash(&self) -> String {
        let keyed = Self {
            output: None,
            ..self.clone()
        };
        hex::encode(Sha256::digest(keyed.to_text().as_bytes()))
    }
}

/// Upper bound on sweep combinations unless overridden.
pub const DEFAULT_SWEEP_CAP: usize = 1000;

/// A base config plus value lists; an empty list keeps the base value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub mu: Vec<f64>,
    pub dn: Vec<usize>,
    pub bins: Vec<usize>,
    pub overlap: Vec<f64>,
    pub k: Vec<usize>,
    pub cap: usize,
}

impl SweepConfig {
    pub fn new(base: ExperimentConfig) -> Self {
        Self {
            base,
            mu: vec![],
            dn: vec![],
            bins: vec![],
            overlap: vec![],
            k: vec![],
            cap: DEFAULT_SWEEP_CAP,
        }
    }

    fn or_base<T: Copy>(list: &[T], base: T) -> Vec<T> {
        if list.is_empty() {
            vec![base]
        } else {
            list.to_vec()
        }
    }

    /// Every combination in nested order μ, dn, bins, overlap, k (k varies
    /// fastest).
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        let b = &self.base;
        let mus = Self::or_base(&self.mu, b.mu);
        let dns = Self::or_base(&self.dn, b.dn);
        let bins = Self::or_base(&self.bins, b.bins);
        let overlaps = Self::or_base(&self.overlap, b.overlap);
        let ks = Self::or_base(&self.k, b.k);
        let total = mus.len() * dns.len() * bins.len() * overlaps.len() * ks.len();
        if total > self.cap {
            return Err(Error::validation(format!(
                "sweep has {total} combinations, cap is {}",
                self.cap
            )));
        }
        let mut out = Vec::with_capacity(total);
        for &mu in &mus {
            for &dn in &dns {
                for &nb in &bins {
                    for &overlap in &overlaps {
                        for &k in &ks {
                            out.push(ExperimentConfig {
                                mu,
                                dn,
                                bins: nb,
                                overlap,
                                k,
                                ..b.clone()
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Scalar types accepted in sweep value lists.
pub trait SweepValue: FromStr + Copy {
    fn from_f64(v: f64) -> Option<Self>;
    fn to_f64(self) -> f64;
}

impl SweepValue for f64 {
    fn from_f64(v: f64) -> Option<Self> {
        Some(v)
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl SweepValue for usize {
    fn from_f64(v: f64) -> Option<Self> {
        (v >= 0.0 && v.fract() == 0.0).then_some(v as usize)
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Parses a comma-separated list such as `0.5,1,2` or an inclusive range
/// `start:step:end`. Range values are rounded to 12 decimals so that
/// `0.1:0.1:0.9` yields `0.3` rather than `0.30000000000000004`.
pub fn parse_list<T: SweepValue>(s: &str) -> Result<Vec<T>> {
    let bad = || Error::validation(format!("bad value list '{s}'"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if let [start, step, end] = parts.as_slice() {
        let num = |t: &str| t.parse::<T>().map(T::to_f64).map_err(|_| bad());
        let (start, step, end) = (num(start)?, num(step)?, num(end)?);
        if step <= 0.0 || end < start {
            return Err(bad());
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        return (0..count)
            .map(|i| {
                let v = ((start + i as f64 * step) * 1e12).round() / 1e12;
                T::from_f64(v).ok_or_else(bad)
            })
            .collect();
    }
    let out: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            algorithm: Algorithm::Ssma,
            train: vec!["a.txt".into(), "b.txt".into()],
            test: vec!["c.txt".into(), "d.txt".into()],
            seed: Some(3),
            ..Default::default()
        }
    }

    #[test]
    fn text_round_trip_and_hash() {
        let cfg = sample();
        let back = ExperimentConfig::parse(&cfg.to_text(), None, "c").unwrap();
        assert_eq!(back, cfg);
        let mut other = cfg.clone();
        other.output = Some("/tmp/x".into());
        assert_eq!(other.content_hash(), cfg.content_hash());
        other.mu = 2.0;
        assert_ne!(other.content_hash(), cfg.content_hash());
        assert_eq!(cfg.content_hash().len(), 64);
    }

    #[test]
    fn comments_relative_paths_and_errors() {
        let text = "# run\nalgorithm = mima  # topology from mapper\ntrain = x.txt\ntest=y.txt\nseed=1\n";
        let cfg = ExperimentConfig::parse(text, Some(Path::new("/data")), "c").unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Mima);
        assert_eq!(cfg.train, vec![PathBuf::from("/data/x.txt")]);
        cfg.validate().unwrap();
        match ExperimentConfig::parse("seed = 1\nbogus = 2\n", None, "c") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("seed\n", None, "c").is_err());
    }

    #[test]
    fn validation_rules() {
        sample().validate().unwrap();
        let bad = [
            ExperimentConfig { seed: None, ..sample() },
            ExperimentConfig { mu: -1.0, ..sample() },
            ExperimentConfig { dn: 0, ..sample() },
            ExperimentConfig { overlap: 1.0, ..sample() },
            ExperimentConfig { test: vec![], ..sample() },
            ExperimentConfig {
                algorithm: Algorithm::PolOnly,
                train: vec!["a".into()],
                test: vec!["b".into()],
                ..sample()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn sweep_expansion_order_and_cap() {
        let mut s = SweepConfig::new(sample());
        s.mu = vec![0.0, 1.0];
        s.k = vec![3, 5, 7];
        let runs = s.expand().unwrap();
        assert_eq!(runs.len(), 6);
        assert_eq!((runs[0].mu, runs[0].k), (0.0, 3));
        assert_eq!((runs[1].mu, runs[1].k), (0.0, 5));
        assert_eq!((runs[3].mu, runs[3].k), (1.0, 3));
        assert!(runs.iter().all(|r| r.dn == 4));
        s.cap = 5;
        assert!(s.expand().is_err());
        assert_eq!(SweepConfig::new(sample()).expand().unwrap(), vec![sample()]);
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_list::<usize>("5:5:50").unwrap(), (1..=10).map(|i| i * 5).collect::<Vec<_>>());
        let c = parse_list::<f64>("0.1:0.1:0.9").unwrap();
        assert_eq!(c, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert_eq!(parse_list::<f64>("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_list::<usize>("1:0:4").is_err());
        assert!(parse_list::<usize>("a,b").is_err());
    }
}
