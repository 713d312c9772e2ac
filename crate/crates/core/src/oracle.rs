//! Independent reference computations used by the test suites.
//!
//! Nothing here shares code with the solver, quadrature or integrator it is
//! used to check: everything is brute force or textbook numerics.

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
pub fn composite_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Node mass of the ring `inner <= x <= outer` by nested adaptive quadrature
/// of the polar density `lambda * x` over angle and radius.
pub fn annulus_mass_by_quadrature(lambda: f64, inner: f64, outer: f64, tol: f64) -> f64 {
    let radial = |_theta: f64| adaptive_simpson(&|x| lambda * x, inner, outer, tol);
    adaptive_simpson(&radial, 0.0, 2.0 * std::f64::consts::PI, tol)
}

/// Sign-change scan on `steps` panels refined by bisection.
pub fn bisect_roots(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> Vec<f64> {
    let h = (b - a) / steps as f64;
    let mut roots = Vec::new();
    for i in 0..steps {
        let (mut lo, mut hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// Centered finite-difference gradient.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Brute-force maximum of `Σ p_k f_k(u_k)` subject to `Σ p_k u_k = alpha`
/// for up to three sample counts. All but the last coordinate walk a grid of
/// `step`; the last one is solved from the constraint and kept when it lands
/// in `[0, 1]`.
pub fn grid_max_expected_pd(
    probs: &[f64],
    roc: impl Fn(usize, f64) -> f64,
    alpha: f64,
    step: f64,
) -> f64 {
    assert!(
        (1..=3).contains(&probs.len()),
        "grid oracle covers k_max <= 2"
    );
    let n = (1.0 / step).round() as usize;
    let last = probs.len() - 1;
    let mut best = f64::NEG_INFINITY;
    let mut visit = |fixed: &[f64]| {
        let used: f64 = fixed.iter().zip(probs).map(|(u, p)| u * p).sum();
        let value_fixed: f64 = fixed
            .iter()
            .enumerate()
            .map(|(k, &u)| probs[k] * roc(k, u))
            .sum();
        if probs[last] == 0.0 {
            if (used - alpha).abs() <= 1e-12 {
                best = best.max(value_fixed);
            }
            return;
        }
        let u_last = (alpha - used) / probs[last];
        if (-1e-12..=1.0 + 1e-12).contains(&u_last) {
            let u_last = u_last.clamp(0.0, 1.0);
            best = best.max(value_fixed + probs[last] * roc(last, u_last));
        }
    };
    match last {
        0 => visit(&[]),
        1 => (0..=n).for_each(|i| visit(&[i as f64 * step])),
        _ => {
            for i in 0..=n {
                let u0 = i as f64 * step;
                if u0 * probs[0] > alpha + 1e-12 {
                    break;
                }
                for j in 0..=n {
                    let u1 = j as f64 * step;
                    if u0 * probs[0] + u1 * probs[1] > alpha + 1e-12 {
                        break;
                    }
                    visit(&[u0, u1]);
                }
            }
        }
    }
    best
}
