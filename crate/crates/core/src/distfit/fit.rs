//! Maximum-likelihood fitting of a single family to a tail sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use libm::tgamma as gamma;

use super::family::{Distribution, Family, Sample, Tail, TailModel};
use super::optimize::{brent, nelder_mead, newton_polish, Minimum};
use super::{FitError, FitOptions, XminPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub xmin: u64,
    pub params: Distribution,
    pub log_likelihood: f64,
    pub tail_sample_size: u64,
    pub ks_distance: f64,
    /// The optimum lies on the edge of the parameter search box, so the
    /// likelihood need not be stationary there.
    pub on_boundary: bool,
}

impl FitResult {
    pub fn model(&self) -> TailModel {
        TailModel::new(self.params, self.xmin)
    }
}

/// Negative log-likelihood in natural parameters; infinite outside the
/// family's domain.
pub(crate) fn negative_log_likelihood(family: Family, tail: &Tail<'_>, p: &[f64]) -> f64 {
    let model = TailModel::new(Distribution::from_params(family, p), tail.xmin);
    if !model.is_valid() {
        return f64::INFINITY;
    }
    let n = tail.n as f64;
    let ll = match family {
        Family::PowerLaw => -p[0] * tail.sum_ln - n * model.ln_norm(),
        Family::TruncatedPowerLaw => {
            -p[0] * tail.sum_ln - p[1] * tail.sum_x - n * model.ln_norm()
        }
        _ => model.log_likelihood(tail),
    };
    if ll.is_finite() {
        -ll
    } else {
        f64::INFINITY
    }
}

/// Kolmogorov–Smirnov distance between the tail's empirical CDF and the
/// model CDF over the integers `≥ xmin`.
pub fn ks_distance(model: &TailModel, tail: &Tail<'_>) -> f64 {
    let n = tail.n as f64;
    let mut seen = 0u64;
    let mut d: f64 = 0.0;
    let mut previous: Option<u64> = None;
    for (x, c) in tail.iter() {
        let below = seen as f64 / n;
        if let Some(p) = previous {
            if x > p + 1 {
                d = d.max((below - model.cdf(x - 1)).abs());
            }
        }
        seen += c;
        d = d.max((seen as f64 / n - model.cdf(x)).abs());
        previous = Some(x);
    }
    d.clamp(0.0, 1.0)
}

/// Optimizer coordinates and the search box for a family.
struct Chart {
    bounds: &'static [(f64, f64)],
    to_natural: fn(&[f64]) -> Vec<f64>,
    from_natural: fn(&[f64]) -> Vec<f64>,
    step: &'static [f64],
}

impl Chart {
    fn contains(&self, u: &[f64]) -> bool {
        u.iter().zip(self.bounds).all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    fn on_edge(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(self.bounds)
            .any(|(v, (lo, hi))| (v - lo).abs() < 1e-5 * lo.abs().max(1.0) || (hi - v).abs() < 1e-5 * hi.abs().max(1.0))
    }
}

const LN_1E_MINUS_12: f64 = -27.631_021_115_928_547;
const LN_1E_MINUS_3: f64 = -6.907_755_278_982_137;
const LN_1E3: f64 = 6.907_755_278_982_137;
const LN_1E6: f64 = 13.815_510_557_964_274;
const LN_50: f64 = 3.912_023_005_428_146;
const LN_100: f64 = 4.605_170_185_988_092;

fn chart(family: Family) -> Chart {
    match family {
        Family::PowerLaw => Chart {
            bounds: &[(1.0 + 1e-9, 50.0)],
            to_natural: |u| u.to_vec(),
            from_natural: |p| p.to_vec(),
            step: &[0.1],
        },
        Family::Exponential => Chart {
            bounds: &[(LN_1E_MINUS_12, LN_1E3)],
            to_natural: |u| vec![u[0].exp()],
            from_natural: |p| vec![p[0].ln()],
            step: &[0.5],
        },
        Family::TruncatedPowerLaw => Chart {
            bounds: &[(-20.0, 50.0), (LN_1E_MINUS_12, LN_1E3)],
            to_natural: |u| vec![u[0], u[1].exp()],
            from_natural: |p| vec![p[0], p[1].ln()],
            step: &[0.3, 0.7],
        },
        Family::StretchedExponential => Chart {
            bounds: &[(LN_1E_MINUS_12, LN_1E6), (LN_1E_MINUS_3, LN_50)],
            to_natural: |u| vec![u[0].exp(), u[1].exp()],
            from_natural: |p| vec![p[0].ln(), p[1].ln()],
            step: &[0.7, 0.3],
        },
        Family::Lognormal => Chart {
            bounds: &[(-100.0, 100.0), (LN_1E_MINUS_3, LN_100)],
            to_natural: |u| vec![u[0], u[1].exp()],
            from_natural: |p| vec![p[0], p[1].ln()],
            step: &[0.5, 0.3],
        },
        // mu = m^2 keeps mu >= 0 without a hard wall.
        Family::LognormalPositive => Chart {
            bounds: &[(-10.0, 10.0), (LN_1E_MINUS_3, LN_100)],
            to_natural: |u| vec![u[0] * u[0], u[1].exp()],
            from_natural: |p| vec![p[0].max(0.0).sqrt(), p[1].ln()],
            step: &[0.3, 0.3],
        },
    }
}

/// Spread starting points in natural parameters.
fn starts(family: Family, tail: &Tail<'_>) -> Vec<[f64; 2]> {
    let xmin = tail.xmin as f64;
    let mean = tail.mean();
    let pl_alpha = (1.0 + tail.n as f64 / (tail.sum_ln - tail.n as f64 * (xmin - 0.5).ln())).clamp(1.1, 5.0);
    let (ln_mean, ln_sd) = {
        let n = tail.n as f64;
        let m = tail.sum_ln / n;
        let var = tail
            .iter()
            .map(|(x, c)| c as f64 * ((x as f64).ln() - m).powi(2))
            .sum::<f64>()
            / n;
        (m, var.sqrt().max(0.3))
    };
    match family {
        Family::TruncatedPowerLaw => vec![
            [pl_alpha, 0.1 / mean],
            [1.0, 1.0 / mean],
            [0.0, 1.0 / (mean - xmin + 1.0)],
        ],
        Family::StretchedExponential => [0.3, 0.7, 1.2]
            .iter()
            .map(|&b| [gamma(1.0 + 1.0 / b) / mean, b])
            .collect(),
        Family::Lognormal => vec![
            [ln_mean, ln_sd],
            [ln_mean - 3.0 * ln_sd, 2.5 * ln_sd],
            [0.0, 1.0],
        ],
        Family::LognormalPositive => vec![
            [ln_mean.max(0.05), ln_sd],
            [0.05, 2.0 * ln_sd],
            [1.0, 1.0],
        ],
        _ => unreachable!("single-parameter family"),
    }
}

fn family_rng(seed: u64, family: Family) -> ChaCha8Rng {
    let salt = Family::ALL.iter().position(|&f| f == family).expect("listed") as u64;
    ChaCha8Rng::seed_from_u64(seed ^ (salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn fit_two_parameter(family: Family, tail: &Tail<'_>, seed: u64) -> Result<Vec<f64>, FitError> {
    let chart = chart(family);
    let objective = |u: &[f64]| {
        if chart.contains(u) {
            negative_log_likelihood(family, tail, &(chart.to_natural)(u))
        } else {
            f64::INFINITY
        }
    };
    let mut rng = family_rng(seed, family);
    let mut best: Option<Minimum> = None;
    let mut iterations = 0;
    for start in starts(family, tail) {
        let mut u = (chart.from_natural)(&start);
        for (ui, s) in u.iter_mut().zip(chart.step.iter()) {
            *ui += rng.gen_range(-0.1..0.1) * s;
        }
        let run = nelder_mead(objective, &u, chart.step, 1e-14, 1e-10, 4000);
        iterations += run.iterations;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    if !best.value.is_finite() {
        return Err(FitError::NonConvergence {
            family,
            iterations,
            detail: "no start point has a finite likelihood".into(),
        });
    }
    // Fresh simplices around the incumbent until one contracts or stops
    // improving (flat ridges toward the box edge never contract).
    let small: Vec<f64> = chart.step.iter().map(|s| s * 0.1).collect();
    let mut incumbent = best;
    for _ in 0..6 {
        let refined = nelder_mead(objective, &incumbent.x, &small, 1e-15, 1e-11, 4000);
        iterations += refined.iterations;
        let stalled = incumbent.value - refined.value <= 1e-10 * incumbent.value.abs();
        if refined.value <= incumbent.value {
            incumbent = Minimum {
                converged: refined.converged || stalled,
                ..refined
            };
        } else {
            incumbent.converged = true;
        }
        if incumbent.converged {
            break;
        }
    }
    if !incumbent.converged {
        return Err(FitError::NonConvergence {
            family,
            iterations,
            detail: format!(
                "simplex did not contract; best objective {} at {:?}",
                incumbent.value, incumbent.x
            ),
        });
    }
    Ok((chart.to_natural)(&incumbent.x))
}

/// Fits `family` to the observations of `tail` by maximum likelihood.
pub fn fit_tail(tail: &Tail<'_>, family: Family, options: &FitOptions) -> Result<FitResult, FitError> {
    if (tail.n as usize) < options.min_tail || tail.n == 0 {
        return Err(FitError::TooFewSamples {
            n: tail.n as usize,
            min: options.min_tail.max(1),
            xmin: tail.xmin,
        });
    }
    if tail.distinct().len() < 2 {
        return Err(FitError::Degenerate {
            family,
            detail: format!("all {} observations equal {}", tail.n, tail.distinct()[0]),
        });
    }
    let chart = chart(family);
    let nll = |p: &[f64]| {
        if chart.contains(&(chart.from_natural)(p)) {
            negative_log_likelihood(family, tail, p)
        } else {
            f64::INFINITY
        }
    };
    let params = match family {
        Family::PowerLaw => {
            let (lo, hi) = chart.bounds[0];
            let m = brent(|a| nll(&[a]), lo, hi, 1e-13, 500);
            if !m.value.is_finite() {
                return Err(FitError::NonConvergence {
                    family,
                    iterations: m.iterations,
                    detail: "likelihood not finite on the search interval".into(),
                });
            }
            m.x
        }
        Family::Exponential => {
            let excess = tail.mean() - tail.xmin as f64;
            vec![(1.0 / excess).ln_1p()]
        }
        _ => fit_two_parameter(family, tail, options.seed)?,
    };
    let (params, value) = if family == Family::Exponential {
        let v = nll(&params);
        (params, v)
    } else {
        newton_polish(nll, &params, 1e-4, 30)
    };
    if !value.is_finite() {
        return Err(FitError::NonConvergence {
            family,
            iterations: 0,
            detail: format!("non-finite likelihood at {params:?}"),
        });
    }
    let dist = Distribution::from_params(family, &params);
    let model = TailModel::new(dist, tail.xmin);
    let u = (chart.from_natural)(&params);
    let on_boundary = chart.on_edge(&u) || (family == Family::LognormalPositive && params[0] < 1e-8);
    Ok(FitResult {
        family,
        xmin: tail.xmin,
        params: dist,
        log_likelihood: -value,
        tail_sample_size: tail.n,
        ks_distance: ks_distance(&model, tail),
        on_boundary,
    })
}

/// Picks the lower cutoff according to `options.xmin`.
///
/// The scan fits a power law at every distinct value that leaves at least
/// `min_tail` observations and keeps the one with the smallest KS distance.
pub fn choose_xmin(sample: &Sample, options: &FitOptions) -> Result<u64, FitError> {
    match options.xmin {
        XminPolicy::Fixed(x) => Ok(x.max(1)),
        XminPolicy::KsScan => {
            let mut best: Option<(f64, u64)> = None;
            for &candidate in sample.distinct() {
                let tail = sample.tail(candidate);
                if (tail.n as usize) < options.min_tail.max(1) {
                    break;
                }
                if tail.distinct().len() < 2 {
                    continue;
                }
                if let Ok(fit) = fit_tail(&tail, Family::PowerLaw, options) {
                    if best.is_none_or(|(d, _)| fit.ks_distance < d) {
                        best = Some((fit.ks_distance, candidate));
                    }
                }
            }
            best.map(|(_, x)| x).ok_or(FitError::TooFewSamples {
                n: sample.len() as usize,
                min: options.min_tail.max(1),
                xmin: sample.distinct().first().copied().unwrap_or(1),
            })
        }
    }
}

/// Chooses xmin per the options and fits `family` above it.
pub fn fit(sample: &Sample, family: Family, options: &FitOptions) -> Result<FitResult, FitError> {
    let xmin = choose_xmin(sample, options)?;
    fit_tail(&sample.tail(xmin), family, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distfit::optimize::gradient;

    fn opts() -> FitOptions {
        FitOptions {
            min_tail: 10,
            ..FitOptions::default()
        }
    }

    #[test]
    fn constant_sample_is_degenerate() {
        let s = Sample::new(std::iter::repeat_n(4, 500));
        for family in Family::ALL {
            assert!(matches!(
                fit(&s, family, &opts()),
                Err(FitError::Degenerate { .. })
            ));
        }
    }

    #[test]
    fn too_few_samples() {
        let s = Sample::new(1..=20);
        let err = fit(&s, Family::PowerLaw, &FitOptions::default()).unwrap_err();
        assert_eq!(err, FitError::TooFewSamples { n: 20, min: 50, xmin: 1 });
        let err = fit_tail(&s.tail(15), Family::PowerLaw, &opts()).unwrap_err();
        assert!(matches!(err, FitError::TooFewSamples { n: 6, .. }));
    }

    #[test]
    fn exponential_closed_form_matches_search() {
        let s = Sample::new((0..400u64).map(|i| 1 + (i * 7919) % 13 + (i % 3)));
        let tail = s.tail(1);
        let exp = fit_tail(&tail, Family::Exponential, &opts()).unwrap();
        let lambda = exp.params.params()[0];
        let m = brent(
            |l| negative_log_likelihood(Family::Exponential, &tail, &[l]),
            1e-6,
            10.0,
            1e-14,
            500,
        );
        assert!((m.x[0] - lambda).abs() < 1e-8);
    }

    #[test]
    fn fits_are_stationary_on_small_sample() {
        let s = Sample::new((1..=600u64).map(|i| 1 + (i * i * 31 + 7 * i) % 97 / (1 + i % 5)));
        let tail = s.tail(1);
        for family in Family::ALL {
            let f = fit_tail(&tail, family, &opts()).unwrap();
            assert!(f.log_likelihood.is_finite());
            assert!((0.0..=1.0).contains(&f.ks_distance));
            let p = f.params.params();
            if f.on_boundary {
                continue;
            }
            let mut nll = |q: &[f64]| negative_log_likelihood(family, &tail, q);
            let h: Vec<f64> = p.iter().map(|v| 1e-6 * v.abs().max(1e-3)).collect();
            let g = gradient(&mut nll, &p, &h);
            for gi in g {
                assert!(gi.abs() < 1e-4 * tail.n as f64, "{family}: gradient {gi} at {p:?}");
            }
        }
    }

    #[test]
    fn ks_distance_hand_example() {
        // Geometric with q = 1/2 from xmin = 1: F(1) = .5, F(2) = .75, F(3) = .875
        let model = TailModel::new(Distribution::Exponential { lambda: 2f64.ln() }, 1);
        let s = Sample::new([1, 1, 3, 3]);
        // empirical: F(1) = .5, F(2) = .5, F(3) = 1 -> max gap |.5 - .75| = .25
        assert!((ks_distance(&model, &s.tail(1)) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ks_scan_prefers_power_law_region() {
        // Uniform noise on 1..=5 followed by a power-law-shaped tail.
        let mut values: Vec<u64> = (0..3000u64).map(|i| 1 + i % 5).collect();
        for k in 6..400u64 {
            let copies = (40_000.0 * (k as f64).powf(-2.5)) as usize;
            values.extend(std::iter::repeat_n(k, copies));
        }
        let s = Sample::new(values);
        let o = FitOptions {
            xmin: XminPolicy::KsScan,
            ..FitOptions::default()
        };
        let x = choose_xmin(&s, &o).unwrap();
        assert!(x >= 5, "xmin {x}");
    }
}
