//! Special sums and tail probabilities used by the discrete families.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

/// Below this cutoff rate the tail past the direct-summation window is
/// closed with Euler–Maclaurin; above it the direct sum runs until the
/// geometric tail bound is negligible.
const DIRECT_RATE: f64 = 0.05;
const DIRECT_TERMS: u64 = 64;

/// 8-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `ln Σ_{k ≥ from} k^(-alpha) · exp(-lambda·k)`.
///
/// Requires `from ≥ 1`, `lambda ≥ 0`, and `alpha > 1` when `lambda == 0`.
/// Returns NaN outside that domain.
pub fn ln_tail_sum(alpha: f64, lambda: f64, from: u64) -> f64 {
    if from == 0 || !(lambda >= 0.0) || !alpha.is_finite() || (lambda == 0.0 && alpha <= 1.0) {
        return f64::NAN;
    }
    let lf = |x: f64| -alpha * x.ln() - lambda * x;
    let start = from as f64;
    // Largest term sets the scale so nothing overflows.
    let peak = if alpha < 0.0 && lambda > 0.0 {
        (-alpha / lambda).max(start)
    } else {
        start
    };
    let reference = lf(peak.floor().max(start)).max(lf(peak.ceil()));

    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut add = |s: &mut f64, v: f64| {
        // Kahan summation.
        let y = v - comp;
        let t = *s + y;
        comp = (t - *s) - y;
        *s = t;
    };

    if lambda > DIRECT_RATE {
        let mut k = from;
        loop {
            let x = k as f64;
            let term = (lf(x) - reference).exp();
            add(&mut sum, term);
            let rate = lambda - (-alpha).max(0.0) / x;
            if rate > 0.0 {
                let bound = term * (-rate).exp() / -(-rate).exp_m1();
                if bound <= 1e-18 * sum {
                    break;
                }
            }
            k += 1;
        }
        return reference + sum.ln();
    }

    let window = DIRECT_TERMS.max((8.0 * alpha.abs()).ceil() as u64);
    let n = from + window;
    for k in from..n {
        add(&mut sum, (lf(k as f64) - reference).exp());
    }

    let x = n as f64;
    let f = (lf(x) - reference).exp();
    let g1 = -alpha / x - lambda;
    let g2 = alpha / (x * x);
    let g3 = -2.0 * alpha / x.powi(3);
    let g4 = 6.0 * alpha / x.powi(4);
    let g5 = -24.0 * alpha / x.powi(5);
    let d1 = f * g1;
    let d3 = f * (g1.powi(3) + 3.0 * g1 * g2 + g3);
    let d5 = f
        * (g1.powi(5)
            + 10.0 * g1.powi(3) * g2
            + 15.0 * g1 * g2 * g2
            + 10.0 * g1 * g1 * g3
            + 10.0 * g2 * g3
            + 5.0 * g1 * g4
            + g5);
    let integral = scaled_tail_integral(alpha, lambda, x, reference);
    let tail = integral + f / 2.0 - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0;
    add(&mut sum, tail);
    reference + sum.ln()
}

/// `∫_x^∞ t^(-alpha) e^(-lambda t) dt · e^(-reference)`.
fn scaled_tail_integral(alpha: f64, lambda: f64, x: f64, reference: f64) -> f64 {
    let ln_x = x.ln();
    if lambda == 0.0 {
        return ((1.0 - alpha) * ln_x - reference).exp() / (alpha - 1.0);
    }
    // Substitute t = x·e^s; the integrand becomes exp(h(s)).
    let h = |s: f64| (1.0 - alpha) * (ln_x + s) - lambda * x * s.exp() - reference;
    let dh = |s: f64| (1.0 - alpha) - lambda * x * s.exp();
    let s_peak = if alpha < 1.0 {
        ((1.0 - alpha) / (lambda * x)).ln().max(0.0)
    } else {
        0.0
    };
    let h_max = h(s_peak);
    let mut total = 0.0;
    let mut s = 0.0;
    for _ in 0..200_000 {
        if s > s_peak && h(s) < h_max - 46.0 {
            break;
        }
        let width = (1.0 / dh(s).abs().max(1e-12)).min(0.25);
        let mid = s + width / 2.0;
        let half = width / 2.0;
        let mut panel = 0.0;
        for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
            panel += weight * (h(mid - half * node).exp() + h(mid + half * node).exp());
        }
        total += panel * half;
        s += width;
    }
    total
}

/// `ln P(Z ≥ z)` for a standard normal `Z`, accurate far into both tails.
pub fn ln_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        (0.5 * erfc(z * FRAC_1_SQRT_2)).ln()
    } else {
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - (z * (2.0 * PI).sqrt()).ln() + series.ln()
    }
}

/// `ln P(a ≤ Z < b)` for a standard normal `Z`, `a < b`.
pub fn ln_normal_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        let la = ln_normal_sf(a);
        let lb = ln_normal_sf(b);
        la + ln_one_minus_exp(lb - la)
    } else if b <= 0.0 {
        let la = ln_normal_sf(-b);
        let lb = ln_normal_sf(-a);
        la + ln_one_minus_exp(lb - la)
    } else {
        let upper = ln_normal_sf(b).exp();
        let lower = ln_normal_sf(-a).exp();
        (-(upper + lower)).ln_1p()
    }
}

/// `ln(1 - e^x)` for `x ≤ 0`.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Two-sided standard-normal p-value of `|z|`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() * FRAC_1_SQRT_2)
}
