//! The six discrete heavy-tailed families and degree samples.
//!
//! PL and TPL put mass `∝ x^(-alpha)·e^(-lambda·x)` on each integer
//! `x ≥ xmin`. EXP, SE, LN and LNP are the continuous laws binned onto
//! `[x, x + 1)`, which keeps their normalizers in closed form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::special::{ln_normal_interval, ln_normal_sf, ln_tail_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "PL")]
    PowerLaw,
    #[serde(rename = "TPL")]
    TruncatedPowerLaw,
    #[serde(rename = "EXP")]
    Exponential,
    #[serde(rename = "SE")]
    StretchedExponential,
    #[serde(rename = "LN")]
    Lognormal,
    #[serde(rename = "LNP")]
    LognormalPositive,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::PowerLaw,
        Family::TruncatedPowerLaw,
        Family::Exponential,
        Family::StretchedExponential,
        Family::Lognormal,
        Family::LognormalPositive,
    ];

    pub fn abbreviation(self) -> &'static str {
        match self {
            Family::PowerLaw => "PL",
            Family::TruncatedPowerLaw => "TPL",
            Family::Exponential => "EXP",
            Family::StretchedExponential => "SE",
            Family::Lognormal => "LN",
            Family::LognormalPositive => "LNP",
        }
    }

    /// Whether one family is a special case (or boundary) of the other.
    pub fn nested_with(self, other: Family) -> bool {
        use Family::*;
        matches!(
            (self, other),
            (PowerLaw, TruncatedPowerLaw)
                | (TruncatedPowerLaw, PowerLaw)
                | (Exponential, TruncatedPowerLaw)
                | (TruncatedPowerLaw, Exponential)
                | (Exponential, StretchedExponential)
                | (StretchedExponential, Exponential)
                | (Lognormal, LognormalPositive)
                | (LognormalPositive, Lognormal)
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.abbreviation().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown family `{s}` (expected PL, TPL, EXP, SE, LN or LNP)"))
    }
}

/// A member of one of the families, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Distribution {
    #[serde(rename = "PL")]
    PowerLaw { alpha: f64 },
    #[serde(rename = "TPL")]
    TruncatedPowerLaw { alpha: f64, lambda: f64 },
    #[serde(rename = "EXP")]
    Exponential { lambda: f64 },
    #[serde(rename = "SE")]
    StretchedExponential { lambda: f64, beta: f64 },
    #[serde(rename = "LN")]
    Lognormal { mu: f64, sigma: f64 },
    #[serde(rename = "LNP")]
    LognormalPositive { mu: f64, sigma: f64 },
}

impl Distribution {
    pub fn family(&self) -> Family {
        match self {
            Distribution::PowerLaw { .. } => Family::PowerLaw,
            Distribution::TruncatedPowerLaw { .. } => Family::TruncatedPowerLaw,
            Distribution::Exponential { .. } => Family::Exponential,
            Distribution::StretchedExponential { .. } => Family::StretchedExponential,
            Distribution::Lognormal { .. } => Family::Lognormal,
            Distribution::LognormalPositive { .. } => Family::LognormalPositive,
        }
    }

    /// Parameters in declaration order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Distribution::PowerLaw { alpha } => vec![alpha],
            Distribution::TruncatedPowerLaw { alpha, lambda } => vec![alpha, lambda],
            Distribution::Exponential { lambda } => vec![lambda],
            Distribution::StretchedExponential { lambda, beta } => vec![lambda, beta],
            Distribution::Lognormal { mu, sigma } | Distribution::LognormalPositive { mu, sigma } => {
                vec![mu, sigma]
            }
        }
    }

    pub fn from_params(family: Family, p: &[f64]) -> Distribution {
        match family {
            Family::PowerLaw => Distribution::PowerLaw { alpha: p[0] },
            Family::TruncatedPowerLaw => Distribution::TruncatedPowerLaw {
                alpha: p[0],
                lambda: p[1],
            },
            Family::Exponential => Distribution::Exponential { lambda: p[0] },
            Family::StretchedExponential => Distribution::StretchedExponential {
                lambda: p[0],
                beta: p[1],
            },
            Family::Lognormal => Distribution::Lognormal { mu: p[0], sigma: p[1] },
            Family::LognormalPositive => Distribution::LognormalPositive { mu: p[0], sigma: p[1] },
        }
    }

    pub fn in_domain(&self) -> bool {
        let finite = self.params().iter().all(|v| v.is_finite());
        finite
            && match *self {
                Distribution::PowerLaw { alpha } => alpha > 1.0,
                Distribution::TruncatedPowerLaw { lambda, .. } => lambda > 0.0,
                Distribution::Exponential { lambda } => lambda > 0.0,
                Distribution::StretchedExponential { lambda, beta } => lambda > 0.0 && beta > 0.0,
                Distribution::Lognormal { sigma, .. } => sigma > 0.0,
                Distribution::LognormalPositive { mu, sigma } => mu >= 0.0 && sigma > 0.0,
            }
    }

    /// Unnormalized log mass at `x`.
    fn ln_mass(&self, x: u64) -> f64 {
        let xf = x as f64;
        match *self {
            Distribution::PowerLaw { alpha } => -alpha * xf.ln(),
            Distribution::TruncatedPowerLaw { alpha, lambda } => -alpha * xf.ln() - lambda * xf,
            Distribution::Exponential { lambda } => -lambda * xf + (-(-lambda).exp_m1()).ln(),
            Distribution::StretchedExponential { lambda, beta } => {
                let a = (lambda * xf).powf(beta);
                let gap = a * (beta * (1.0 / xf).ln_1p()).exp_m1();
                -a + (-(-gap).exp_m1()).ln()
            }
            Distribution::Lognormal { mu, sigma } | Distribution::LognormalPositive { mu, sigma } => {
                let z = |v: f64| (v.ln() - mu) / sigma;
                ln_normal_interval(z(xf), z(xf + 1.0))
            }
        }
    }

    /// Log of the unnormalized survival mass at `x` (the normalizer when
    /// `x == xmin`).
    fn ln_survival_mass(&self, x: u64) -> f64 {
        let xf = x as f64;
        match *self {
            Distribution::PowerLaw { alpha } => ln_tail_sum(alpha, 0.0, x),
            Distribution::TruncatedPowerLaw { alpha, lambda } => ln_tail_sum(alpha, lambda, x),
            Distribution::Exponential { lambda } => -lambda * xf,
            Distribution::StretchedExponential { lambda, beta } => -(lambda * xf).powf(beta),
            Distribution::Lognormal { mu, sigma } | Distribution::LognormalPositive { mu, sigma } => {
                ln_normal_sf((xf.ln() - mu) / sigma)
            }
        }
    }
}

/// A distribution conditioned on `x ≥ xmin`, with its normalizer cached.
#[derive(Debug, Clone, Copy)]
pub struct TailModel {
    pub dist: Distribution,
    pub xmin: u64,
    ln_norm: f64,
}

impl TailModel {
    pub fn new(dist: Distribution, xmin: u64) -> TailModel {
        let ln_norm = if dist.in_domain() && xmin >= 1 {
            dist.ln_survival_mass(xmin)
        } else {
            f64::NAN
        };
        TailModel { dist, xmin, ln_norm }
    }

    /// Log of the normalizer: total unnormalized mass at or above `xmin`.
    pub fn ln_norm(&self) -> f64 {
        self.ln_norm
    }

    pub fn is_valid(&self) -> bool {
        self.ln_norm.is_finite()
    }

    /// Log probability of `x` (−∞ below `xmin`).
    pub fn ln_pmf(&self, x: u64) -> f64 {
        if x < self.xmin {
            return f64::NEG_INFINITY;
        }
        self.dist.ln_mass(x) - self.ln_norm
    }

    pub fn pmf(&self, x: u64) -> f64 {
        self.ln_pmf(x).exp()
    }

    /// `P(X ≥ x | X ≥ xmin)`.
    pub fn ccdf(&self, x: u64) -> f64 {
        if x <= self.xmin {
            return 1.0;
        }
        (self.dist.ln_survival_mass(x) - self.ln_norm).exp().min(1.0)
    }

    /// `P(X ≤ x | X ≥ xmin)`.
    pub fn cdf(&self, x: u64) -> f64 {
        1.0 - self.ccdf(x + 1)
    }

    /// Log-likelihood of a tail sample.
    pub fn log_likelihood(&self, tail: &Tail<'_>) -> f64 {
        tail.iter()
            .map(|(x, c)| c as f64 * self.ln_pmf(x))
            .sum()
    }
}

/// Multiset of positive integers as sorted distinct values with counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sample {
    values: Vec<u64>,
    counts: Vec<u64>,
}

impl Sample {
    /// Builds a sample, dropping zeros.
    pub fn new<I: IntoIterator<Item = u64>>(values: I) -> Sample {
        let mut all: Vec<u64> = values.into_iter().filter(|&v| v > 0).collect();
        all.sort_unstable();
        let mut s = Sample::default();
        for v in all {
            if s.values.last() == Some(&v) {
                *s.counts.last_mut().expect("parallel vectors") += 1;
            } else {
                s.values.push(v);
                s.counts.push(1);
            }
        }
        s
    }

    pub fn from_degrees(degrees: &[u32]) -> Sample {
        Sample::new(degrees.iter().map(|&d| u64::from(d)))
    }

    pub fn len(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn distinct(&self) -> &[u64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.values.iter().copied().zip(self.counts.iter().copied())
    }

    /// The observations `≥ xmin`.
    pub fn tail(&self, xmin: u64) -> Tail<'_> {
        let start = self.values.partition_point(|&v| v < xmin);
        let values = &self.values[start..];
        let counts = &self.counts[start..];
        let mut n = 0;
        let mut sum_x = 0.0;
        let mut sum_ln = 0.0;
        for (&v, &c) in values.iter().zip(counts) {
            n += c;
            sum_x += c as f64 * v as f64;
            sum_ln += c as f64 * (v as f64).ln();
        }
        Tail {
            xmin,
            values,
            counts,
            n,
            sum_x,
            sum_ln,
        }
    }
}

/// Observations at or above `xmin`, with sufficient statistics for the
/// power-law families.
#[derive(Debug, Clone, Copy)]
pub struct Tail<'a> {
    pub xmin: u64,
    values: &'a [u64],
    counts: &'a [u64],
    pub n: u64,
    pub sum_x: f64,
    pub sum_ln: f64,
}

impl<'a> Tail<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + 'a {
        self.values.iter().copied().zip(self.counts.iter().copied())
    }

    pub fn distinct(&self) -> &'a [u64] {
        self.values
    }

    pub fn max(&self) -> Option<u64> {
        self.values.last().copied()
    }

    pub fn mean(&self) -> f64 {
        self.sum_x / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_mass(m: &TailModel, upto: u64) -> f64 {
        let mut terms: Vec<f64> = (m.xmin..upto).map(|x| m.pmf(x)).collect();
        terms.reverse();
        terms.iter().sum::<f64>() + m.ccdf(upto)
    }

    fn examples() -> Vec<Distribution> {
        vec![
            Distribution::PowerLaw { alpha: 2.5 },
            Distribution::TruncatedPowerLaw { alpha: 1.5, lambda: 0.01 },
            Distribution::TruncatedPowerLaw { alpha: -1.0, lambda: 0.2 },
            Distribution::Exponential { lambda: 0.1 },
            Distribution::StretchedExponential { lambda: 0.05, beta: 0.6 },
            Distribution::Lognormal { mu: 2.0, sigma: 1.0 },
            Distribution::Lognormal { mu: -3.0, sigma: 2.5 },
            Distribution::LognormalPositive { mu: 1.5, sigma: 0.8 },
        ]
    }

    #[test]
    fn pmfs_sum_to_one() {
        for d in examples() {
            for xmin in [1, 4] {
                let m = TailModel::new(d, xmin);
                assert!(m.is_valid());
                let s = total_mass(&m, 20_000);
                assert!((s - 1.0).abs() < 1e-9, "{d:?} xmin={xmin}: {s}");
            }
        }
    }

    #[test]
    fn ccdf_consistent_with_pmf() {
        for d in examples() {
            let m = TailModel::new(d, 2);
            let mut acc = 0.0;
            for x in 2..200 {
                assert!((m.ccdf(x) - (1.0 - acc)).abs() < 1e-10, "{d:?} at {x}");
                acc += m.pmf(x);
                assert!((m.cdf(x) - acc).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exponential_is_geometric() {
        let lambda: f64 = 0.3;
        let m = TailModel::new(Distribution::Exponential { lambda }, 3);
        let q = (-lambda).exp();
        for x in 3..20 {
            let expected = (1.0 - q) * q.powi((x - 3) as i32);
            assert!((m.pmf(x) - expected).abs() < 1e-15);
        }
        // The same law is the beta = 1 member of SE and the alpha = 0 member of TPL.
        let se = TailModel::new(Distribution::StretchedExponential { lambda, beta: 1.0 }, 3);
        let tpl = TailModel::new(Distribution::TruncatedPowerLaw { alpha: 0.0, lambda }, 3);
        for x in 3..40 {
            assert!((se.ln_pmf(x) - m.ln_pmf(x)).abs() < 1e-12);
            assert!((tpl.ln_pmf(x) - m.ln_pmf(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn domains() {
        assert!(!Distribution::PowerLaw { alpha: 1.0 }.in_domain());
        assert!(!Distribution::LognormalPositive { mu: -0.1, sigma: 1.0 }.in_domain());
        assert!(Distribution::LognormalPositive { mu: 0.0, sigma: 1.0 }.in_domain());
        assert!(!Distribution::StretchedExponential { lambda: 0.1, beta: 0.0 }.in_domain());
        assert!(!TailModel::new(Distribution::Exponential { lambda: -1.0 }, 1).is_valid());
    }

    #[test]
    fn sample_and_tail() {
        let s = Sample::new([0, 3, 1, 1, 5, 3, 3, 0, 10]);
        assert_eq!(s.len(), 7);
        assert_eq!(s.distinct(), &[1, 3, 5, 10]);
        let t = s.tail(3);
        assert_eq!(t.n, 5);
        assert_eq!(t.sum_x, 24.0);
        assert_eq!(t.max(), Some(10));
        assert!((t.sum_ln - (3.0 * 3f64.ln() + 5f64.ln() + 10f64.ln())).abs() < 1e-12);
        assert_eq!(s.tail(11).n, 0);
    }

    #[test]
    fn family_names() {
        for f in Family::ALL {
            assert_eq!(f.abbreviation().parse::<Family>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{f}\""));
        }
        assert!("XYZ".parse::<Family>().is_err());
        let d = Distribution::TruncatedPowerLaw { alpha: 1.5, lambda: 0.01 };
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"family":"TPL","alpha":1.5,"lambda":0.01}"#);
        assert_eq!(serde_json::from_str::<Distribution>(&json).unwrap(), d);
    }
}
