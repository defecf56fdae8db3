//! Discrete heavy-tailed distribution fitting and comparison.

mod family;
mod fit;
mod lrt;
pub mod optimize;
pub mod special;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use family::{Distribution, Family, Sample, Tail, TailModel};
pub use fit::{choose_xmin, fit, fit_tail, ks_distance, FitResult};
pub use lrt::{compare, likelihood_ratio, select_best, BestFitSet, Comparison, FitFailure};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("tail above xmin={xmin} has {n} samples, need at least {min}")]
    TooFewSamples { n: usize, min: usize, xmin: u64 },
    #[error("{family}: degenerate sample ({detail})")]
    Degenerate { family: Family, detail: String },
    #[error("{family}: optimizer failed after {iterations} iterations ({detail})")]
    NonConvergence {
        family: Family,
        iterations: usize,
        detail: String,
    },
    #[error("no family could be fitted above xmin={xmin}")]
    AllFailed { xmin: u64 },
    #[error("fits use different cutoffs ({a} vs {b})")]
    XminMismatch { a: u64, b: u64 },
}

/// How the lower cutoff of the fitted tail is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XminPolicy {
    Fixed(u64),
    /// Minimize the power-law KS distance over observed values.
    KsScan,
}

impl Default for XminPolicy {
    fn default() -> Self {
        XminPolicy::Fixed(1)
    }
}

impl fmt::Display for XminPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XminPolicy::Fixed(x) => write!(f, "{x}"),
            XminPolicy::KsScan => f.write_str("ks-scan"),
        }
    }
}

impl FromStr for XminPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ks" | "ks-scan" | "scan" => Ok(XminPolicy::KsScan),
            other => other
                .parse::<u64>()
                .ok()
                .filter(|&x| x >= 1)
                .map(XminPolicy::Fixed)
                .ok_or_else(|| format!("invalid xmin `{s}` (positive integer or `ks-scan`)")),
        }
    }
}

impl Serialize for XminPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            XminPolicy::Fixed(x) => s.serialize_u64(*x),
            XminPolicy::KsScan => s.serialize_str("ks-scan"),
        }
    }
}

impl<'de> Deserialize<'de> for XminPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) if x >= 1 => Ok(XminPolicy::Fixed(x)),
            Raw::Number(x) => Err(serde::de::Error::custom(format!("xmin must be positive, got {x}"))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub xmin: XminPolicy,
    pub min_tail: usize,
    /// Significance level used by [`select_best`].
    pub threshold: f64,
    /// Seeds the jitter of optimizer start points.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            xmin: XminPolicy::default(),
            min_tail: 50,
            threshold: 0.1,
            seed: 0,
        }
    }
}
