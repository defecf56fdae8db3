//! Exact samplers for the six discrete families, written independently of
//! the library's normalizers.

#![allow(dead_code)]

use localpop::distfit::Distribution;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

/// Zipf law on `{1, 2, ...}` with exponent `alpha > 1` (Devroye's rejection).
pub fn zipf<R: Rng>(rng: &mut R, alpha: f64) -> u64 {
    let am1 = alpha - 1.0;
    let b = 2f64.powf(am1);
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let v: f64 = rng.gen();
        let x = u.powf(-1.0 / am1).floor();
        if !(x < 1e15) {
            continue;
        }
        let t = (1.0 + 1.0 / x).powf(am1);
        if v * x * (t - 1.0) / (b - 1.0) <= t / b {
            return x as u64;
        }
    }
}

/// `Y` with survival `exp(-(lambda·y)^beta)` conditioned on `Y ≥ xmin`.
fn stretched_above<R: Rng>(rng: &mut R, lambda: f64, beta: f64, xmin: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    ((lambda * xmin).powf(beta) + e).powf(1.0 / beta) / lambda
}

/// One draw from `dist` restricted to integers `≥ 1`.
pub fn draw<R: Rng>(rng: &mut R, dist: &Distribution) -> u64 {
    match *dist {
        Distribution::PowerLaw { alpha } => zipf(rng, alpha),
        Distribution::TruncatedPowerLaw { alpha, lambda } => loop {
            let x = zipf(rng, alpha);
            if rng.gen::<f64>() < (-lambda * (x - 1) as f64).exp() {
                return x;
            }
        },
        Distribution::Exponential { lambda } => {
            let e: f64 = rng.sample(Exp1);
            1 + (e / lambda).floor() as u64
        }
        Distribution::StretchedExponential { lambda, beta } => {
            stretched_above(rng, lambda, beta, 1.0).floor() as u64
        }
        Distribution::Lognormal { mu, sigma } | Distribution::LognormalPositive { mu, sigma } => loop {
            let z: f64 = rng.sample(StandardNormal);
            let y = (mu + sigma * z).exp();
            if (1.0..1e15).contains(&y) {
                return y.floor() as u64;
            }
        },
    }
}

pub fn sample<R: Rng>(rng: &mut R, dist: &Distribution, n: usize) -> Vec<u64> {
    (0..n).map(|_| draw(rng, dist)).collect()
}

/// Reference parameters used by the recovery checks.
pub fn reference_distributions() -> Vec<Distribution> {
    vec![
        Distribution::PowerLaw { alpha: 2.5 },
        Distribution::TruncatedPowerLaw { alpha: 1.5, lambda: 0.01 },
        Distribution::Exponential { lambda: 0.1 },
        Distribution::StretchedExponential { lambda: 0.05, beta: 0.6 },
        Distribution::Lognormal { mu: 2.0, sigma: 1.0 },
        Distribution::LognormalPositive { mu: 1.5, sigma: 0.8 },
    ]
}

pub fn max_relative_error(fitted: &[f64], truth: &[f64]) -> f64 {
    fitted
        .iter()
        .zip(truth)
        .map(|(f, t)| ((f - t) / t).abs())
        .fold(0.0, f64::max)
}
