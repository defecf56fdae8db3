//! Likelihood-ratio comparison of fitted families and best-fit selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{Family, Sample, Tail};
use super::fit::{choose_xmin, fit_tail, FitResult};
use super::special::normal_two_sided_p;
use super::{FitError, FitOptions};

/// Outcome of comparing family `a` against family `b` on the same tail.
///
/// `r > 0` favors `a`. `r` is the log-likelihood ratio normalized by the
/// sample standard deviation of the pointwise ratios and `p` its two-sided
/// normal p-value. `nested` marks pairs where one family contains the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Family,
    pub b: Family,
    pub log_likelihood_ratio: f64,
    pub r: f64,
    pub p: f64,
    pub nested: bool,
}

/// Compares two fits made on `tail`.
pub fn likelihood_ratio(a: &FitResult, b: &FitResult, tail: &Tail<'_>) -> Result<Comparison, FitError> {
    if a.xmin != b.xmin || a.xmin != tail.xmin {
        return Err(FitError::XminMismatch {
            a: a.xmin,
            b: b.xmin,
        });
    }
    let (ma, mb) = (a.model(), b.model());
    let n = tail.n as f64;
    let mut llr = 0.0;
    let mut sum_sq = 0.0;
    for (x, c) in tail.iter() {
        let d = ma.ln_pmf(x) - mb.ln_pmf(x);
        llr += c as f64 * d;
        sum_sq += c as f64 * d * d;
    }
    let mean = llr / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let sd = (n * var).sqrt();
    let r = if sd > 0.0 && sd.is_finite() { llr / sd } else { 0.0 };
    let nested = a.family.nested_with(b.family);
    let p = if r == 0.0 { 1.0 } else { normal_two_sided_p(r) };
    Ok(Comparison {
        a: a.family,
        b: b.family,
        log_likelihood_ratio: llr,
        r,
        p,
        nested,
    })
}

/// Fits both families on the common tail of `sample` and compares them.
pub fn compare(sample: &Sample, a: Family, b: Family, options: &FitOptions) -> Result<Comparison, FitError> {
    let xmin = choose_xmin(sample, options)?;
    let tail = sample.tail(xmin);
    let fa = fit_tail(&tail, a, options)?;
    let fb = fit_tail(&tail, b, options)?;
    likelihood_ratio(&fa, &fb, &tail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub family: Family,
    pub error: String,
}

/// Families not significantly beaten by any other family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestFitSet {
    pub xmin: u64,
    pub tail_sample_size: u64,
    pub threshold: f64,
    pub members: Vec<Family>,
    pub fits: Vec<FitResult>,
    pub failures: Vec<FitFailure>,
    pub comparisons: Vec<Comparison>,
}

impl BestFitSet {
    pub fn contains(&self, family: Family) -> bool {
        self.members.contains(&family)
    }

    pub fn fit(&self, family: Family) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.family == family)
    }

    /// The member with the highest likelihood.
    pub fn best(&self) -> Option<&FitResult> {
        self.fits
            .iter()
            .filter(|f| self.contains(f.family))
            .max_by(|a, b| a.log_likelihood.total_cmp(&b.log_likelihood))
    }
}

/// Fits every family on a common tail and keeps those that no other family
/// beats with `r > 0` and `p < threshold`.
///
/// Families whose fit fails are reported in `failures` and excluded. The
/// call fails only when the tail is too small or no family can be fitted.
pub fn select_best(sample: &Sample, options: &FitOptions) -> Result<BestFitSet, FitError> {
    let xmin = choose_xmin(sample, options)?;
    let tail = sample.tail(xmin);
    let outcomes: Vec<(Family, Result<FitResult, FitError>)> = Family::ALL
        .par_iter()
        .map(|&f| (f, fit_tail(&tail, f, options)))
        .collect();
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for (family, outcome) in outcomes {
        match outcome {
            Ok(f) => fits.push(f),
            Err(e) => {
                failures.push(FitFailure {
                    family,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if fits.is_empty() {
        return Err(match first_error {
            Some(e @ (FitError::TooFewSamples { .. } | FitError::Degenerate { .. })) => e,
            _ => FitError::AllFailed { xmin },
        });
    }
    let mut comparisons = Vec::new();
    for (i, a) in fits.iter().enumerate() {
        for b in &fits[i + 1..] {
            comparisons.push(likelihood_ratio(a, b, &tail)?);
        }
    }
    let beaten = |family: Family| {
        comparisons.iter().any(|c| {
            (c.b == family && c.r > 0.0 && c.p < options.threshold)
                || (c.a == family && c.r < 0.0 && c.p < options.threshold)
        })
    };
    let top = fits
        .iter()
        .max_by(|a, b| a.log_likelihood.total_cmp(&b.log_likelihood))
        .map(|f| f.family);
    let members = fits
        .iter()
        .map(|f| f.family)
        .filter(|&f| Some(f) == top || !beaten(f))
        .collect();
    Ok(BestFitSet {
        xmin,
        tail_sample_size: tail.n,
        threshold: options.threshold,
        members,
        fits,
        failures,
        comparisons,
    })
}
