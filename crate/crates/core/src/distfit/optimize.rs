//! Derivative-free minimizers plus a finite-difference Newton polish.
//!
//! Objectives return `f64::INFINITY` (or NaN) outside their domain; every
//! routine treats non-finite values as infeasible.

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Brent's method on `[lo, hi]` for a unimodal function.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Minimum {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = finite_or_inf(f(x));
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for iter in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-15;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Minimum {
                x: vec![x],
                value: fx,
                iterations: iter,
                converged: true,
            };
        }
        let mut golden = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = finite_or_inf(f(u));
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum {
        x: vec![x],
        value: fx,
        iterations: max_iter,
        converged: false,
    }
}

/// Nelder–Mead simplex search from `start` with initial edge lengths `step`.
///
/// Stops when the simplex's function-value spread falls below
/// `ftol·(|f_best| + 1e-12)` and its extent below `xtol`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: &[f64],
    ftol: f64,
    xtol: f64,
    max_iter: usize,
) -> Minimum {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step[i];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| finite_or_inf(f(p))).collect();

    let centroid = |simplex: &[Vec<f64>], skip: usize| -> Vec<f64> {
        let mut c = vec![0.0; n];
        for (i, p) in simplex.iter().enumerate() {
            if i != skip {
                for (cj, pj) in c.iter_mut().zip(p) {
                    *cj += pj / n as f64;
                }
            }
        }
        c
    };
    let along = |c: &[f64], p: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(p).map(|(ci, pi)| ci + t * (pi - ci)).collect()
    };

    for iter in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        let extent = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if best.is_finite() && (worst - best).abs() <= ftol * (best.abs() + 1e-12) && extent <= xtol {
            return Minimum {
                x: simplex[0].clone(),
                value: best,
                iterations: iter,
                converged: true,
            };
        }

        let c = centroid(&simplex, n);
        let reflected = along(&c, &simplex[n], -1.0);
        let fr = finite_or_inf(f(&reflected));
        if fr < values[0] {
            let expanded = along(&c, &simplex[n], -2.0);
            let fe = finite_or_inf(f(&expanded));
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let p = along(&c, &simplex[n], -0.5);
            let fp = finite_or_inf(f(&p));
            (p, fp)
        } else {
            let p = along(&c, &simplex[n], 0.5);
            let fp = finite_or_inf(f(&p));
            (p, fp)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best_point = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = along(&best_point, &simplex[i], 0.5);
            values[i] = finite_or_inf(f(&simplex[i]));
        }
    }
    let (i, &v) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty simplex");
    Minimum {
        x: simplex[i].clone(),
        value: v,
        iterations: max_iter,
        converged: false,
    }
}

/// Central-difference gradient with per-coordinate steps.
pub fn gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + h[i];
        let up = f(&p);
        p[i] = x[i] - h[i];
        let down = f(&p);
        p[i] = x[i];
        g[i] = (up - down) / (2.0 * h[i]);
    }
    g
}

fn hessian<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], fx: f64, h: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut hm = vec![vec![0.0; n]; n];
    let mut p = x.to_vec();
    for i in 0..n {
        p[i] = x[i] + h[i];
        let up = f(&p);
        p[i] = x[i] - h[i];
        let down = f(&p);
        p[i] = x[i];
        hm[i][i] = (up - 2.0 * fx + down) / (h[i] * h[i]);
        for j in 0..i {
            let mut q = x.to_vec();
            let mut corner = |si: f64, sj: f64| {
                q[i] = x[i] + si * h[i];
                q[j] = x[j] + sj * h[j];
                f(&q)
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            hm[i][j] = v;
            hm[j][i] = v;
        }
    }
    hm
}

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Refines a minimum with damped Newton steps using finite-difference
/// derivatives. Steps are accepted only when they lower the objective.
pub fn newton_polish<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], rel_step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return (x, fx);
    }
    for _ in 0..max_iter {
        let h: Vec<f64> = x.iter().map(|v| rel_step * v.abs().max(1e-3)).collect();
        let g = gradient(&mut f, &x, &h);
        let hm = hessian(&mut f, &x, fx, &h);
        if g.iter().chain(hm.iter().flatten()).any(|v| !v.is_finite()) {
            break;
        }
        let Some(step) = solve(hm, g.iter().map(|v| -v).collect()) else {
            break;
        };
        // Must be a descent direction (positive-definite curvature).
        if step.iter().zip(&g).map(|(s, gi)| s * gi).sum::<f64>() >= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi + t * si).collect();
            let fc = f(&cand);
            if fc.is_finite() && fc < fx {
                let tiny = cand
                    .iter()
                    .zip(&x)
                    .all(|(c, xi)| (c - xi).abs() <= 1e-13 * xi.abs().max(1e-10));
                x = cand;
                fx = fc;
                improved = !tiny;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, fx)
}
