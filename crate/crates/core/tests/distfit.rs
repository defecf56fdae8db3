mod common;

use localpop::distfit::optimize::gradient;
use localpop::distfit::{
    compare, fit, select_best, Distribution, Family, FitError, FitOptions, Sample, TailModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn synthetic(dist: &Distribution, n: usize, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Sample::new(common::sample(&mut rng, dist, n))
}

fn tail_nll(family: Family, sample: &Sample, xmin: u64, p: &[f64]) -> f64 {
    let m = TailModel::new(Distribution::from_params(family, p), xmin);
    if !m.is_valid() {
        return f64::INFINITY;
    }
    -sample
        .tail(xmin)
        .iter()
        .map(|(x, c)| c as f64 * m.ln_pmf(x))
        .sum::<f64>()
}

#[test]
fn power_law_exponent_recovered() {
    let s = synthetic(&Distribution::PowerLaw { alpha: 2.5 }, 100_000, 7);
    let f = fit(&s, Family::PowerLaw, &FitOptions::default()).unwrap();
    let alpha = f.params.params()[0];
    assert!((alpha - 2.5).abs() <= 0.05, "alpha {alpha}");
    assert_eq!(f.xmin, 1);
    assert_eq!(f.tail_sample_size, 100_000);
}

#[test]
fn power_law_beats_exponential_on_power_law_data() {
    let s = synthetic(&Distribution::PowerLaw { alpha: 2.5 }, 100_000, 8);
    let c = compare(&s, Family::PowerLaw, Family::Exponential, &FitOptions::default()).unwrap();
    assert!(c.r > 0.0 && c.p < 0.1, "{c:?}");
}

#[test]
fn clean_exponential_selects_exponential() {
    let s = synthetic(&Distribution::Exponential { lambda: 0.2 }, 20_000, 9);
    let set = select_best(&s, &FitOptions::default()).unwrap();
    assert!(set.contains(Family::Exponential));
    for m in &set.members {
        assert!(
            matches!(
                m,
                Family::Exponential | Family::StretchedExponential | Family::TruncatedPowerLaw
            ),
            "unexpected member {m}"
        );
    }
}

#[test]
fn fits_satisfy_invariants_and_stationarity() {
    for (i, d) in common::reference_distributions().iter().enumerate() {
        let s = synthetic(d, 20_000, 100 + i as u64);
        let n = s.len() as f64;
        for family in Family::ALL {
            let f = fit(&s, family, &FitOptions::default()).unwrap();
            assert!(f.log_likelihood.is_finite());
            assert!((0.0..=1.0).contains(&f.ks_distance));
            assert!(f.params.in_domain(), "{family} on {d:?}: {:?}", f.params);
            let p = f.params.params();
            if f.on_boundary {
                continue;
            }
            let mut nll = |q: &[f64]| tail_nll(family, &s, f.xmin, q);
            let h: Vec<f64> = p.iter().map(|v| 1e-6 * v.abs().max(1e-4)).collect();
            let g = gradient(&mut nll, &p, &h);
            for gi in g {
                assert!(gi.abs() < 1e-4 * n, "{family} on {d:?}: gradient {gi} at {p:?}");
            }
        }
    }
}

#[test]
fn fitted_models_are_normalized() {
    for (i, d) in common::reference_distributions().iter().enumerate() {
        let s = synthetic(d, 5_000, 200 + i as u64);
        for family in Family::ALL {
            let f = fit(&s, family, &FitOptions::default()).unwrap();
            let m = f.model();
            let upto = 50_000;
            let mut terms: Vec<f64> = (f.xmin..upto).map(|x| m.pmf(x)).collect();
            terms.reverse();
            let total = terms.iter().sum::<f64>() + m.ccdf(upto);
            assert!((total - 1.0).abs() < 1e-6, "{family} {:?}: {total}", f.params);
        }
    }
}

#[test]
fn errors_are_reported() {
    let constant = Sample::new(std::iter::repeat_n(3, 1000));
    assert!(matches!(
        fit(&constant, Family::TruncatedPowerLaw, &FitOptions::default()),
        Err(FitError::Degenerate { .. })
    ));
    let small = Sample::new(1..=49);
    let err = fit(&small, Family::PowerLaw, &FitOptions::default()).unwrap_err();
    assert!(err.to_string().contains("49"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn compare_is_antisymmetric(values in prop::collection::vec(1u64..200, 60..300), ia in 0usize..6, ib in 0usize..6) {
        let s = Sample::new(values);
        prop_assume!(s.distinct().len() >= 2);
        let (a, b) = (Family::ALL[ia], Family::ALL[ib]);
        let o = FitOptions { min_tail: 10, ..FitOptions::default() };
        let ab = compare(&s, a, b, &o).unwrap();
        let ba = compare(&s, b, a, &o).unwrap();
        prop_assert!((ab.r + ba.r).abs() < 1e-9);
        prop_assert!((ab.p - ba.p).abs() < 1e-9);
        if a == b {
            prop_assert_eq!(ab.r, 0.0);
            prop_assert_eq!(ab.p, 1.0);
        }
    }

    #[test]
    fn best_set_is_nonempty_and_consistent(values in prop::collection::vec(1u64..500, 60..300)) {
        let s = Sample::new(values);
        prop_assume!(s.distinct().len() >= 2);
        let o = FitOptions { min_tail: 10, ..FitOptions::default() };
        let set = select_best(&s, &o).unwrap();
        prop_assert!(!set.members.is_empty());
        for c in &set.comparisons {
            let a_in = set.contains(c.a);
            let b_in = set.contains(c.b);
            if a_in && b_in && c.p < o.threshold {
                // Only the top-likelihood family may survive a significant loss.
                let loser = if c.r > 0.0 { c.b } else { c.a };
                let top = set.best().map(|f| f.family);
                prop_assert_eq!(top, Some(loser));
            }
        }
    }
}
