//! One-dimensional solves and critical-point scans.

use super::Functional;

/// Minimiser of `f(z) + (z - v)^2 / (2 nu)` in one dimension, given the right
/// derivative of `f`. Requires `z -> f'_+(z) + (z - v)/nu` to be strictly
/// increasing, which holds whenever `nu * rho_wc < 1`.
pub fn prox_1d_exact(deriv_right: impl Fn(f64) -> f64, nu: f64, v: f64) -> f64 {
    let h = |z: f64| deriv_right(z) + (z - v) / nu;
    let mut width = nu.max(1e-3) * (1.0 + v.abs());
    let (mut lo, mut hi);
    loop {
        lo = v - width;
        hi = v + width;
        if h(lo) < 0.0 && h(hi) >= 0.0 {
            break;
        }
        width *= 2.0;
        if !width.is_finite() {
            return v;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Critical points of `f` on `[lo, hi]`: kinks whose one-sided derivatives
/// bracket zero, plus sign changes of the derivative on a grid of spacing
/// `step` within each smooth piece, refined by bisection. Concave kinks are
/// not reported.
pub fn scan_critical_points_1d(f: &dyn Functional, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(lo < hi && step > 0.0);
    let kinks = f.kinks(lo, hi);
    let mut found = Vec::new();
    for &k in &kinks {
        let (l, r) = f.one_sided(k);
        let tol = 1e-9 * (1.0 + l.abs() + r.abs());
        if l <= tol && r >= -tol {
            found.push(k);
        }
    }
    let deriv = |z: f64| {
        let mut g = [0.0];
        f.subgrad(&[z], &mut g);
        g[0]
    };
    let mut breaks = vec![lo];
    breaks.extend(kinks.iter().copied().filter(|&k| k > lo && k < hi));
    breaks.push(hi);
    breaks.dedup();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) / step).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let a_is_kink = kinks.contains(&a);
        let b_is_kink = kinks.contains(&b);
        let value_at = |i: usize| -> f64 {
            if i == 0 {
                if a_is_kink {
                    f.one_sided(a).1
                } else {
                    deriv(a)
                }
            } else if i == n {
                if b_is_kink {
                    f.one_sided(b).0
                } else {
                    deriv(b)
                }
            } else {
                deriv(a + i as f64 * h)
            }
        };
        let mut prev = value_at(0);
        if prev == 0.0 && !a_is_kink {
            found.push(a);
        }
        for i in 1..=n {
            let cur = value_at(i);
            let z = a + i as f64 * h;
            if cur == 0.0 && !(i == n && b_is_kink) {
                found.push(if i == n { b } else { z });
            } else if prev * cur < 0.0 {
                let (mut l, mut r) = (a + (i - 1) as f64 * h, if i == n { b } else { z });
                for _ in 0..100 {
                    let mid = 0.5 * (l + r);
                    if mid <= l || mid >= r {
                        break;
                    }
                    if deriv(mid) * prev > 0.0 {
                        l = mid;
                    } else {
                        r = mid;
                    }
                }
                found.push(0.5 * (l + r));
            }
            prev = cur;
        }
    }
    found.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(found.len());
    for z in found {
        match out.last() {
            Some(&last) if (z - last).abs() <= 2.0 * step.min(1e-6_f64.max(1e-9 * z.abs())) => {}
            _ => out.push(z),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{ClosureFunctional, L1Norm};

    #[test]
    fn prox_1d_matches_soft_threshold() {
        let l1 = L1Norm::new(1.0);
        for &v in &[-3.0, -0.4, 0.0, 0.7, 2.5] {
            let z = prox_1d_exact(|t| l1.one_sided(t).1, 0.5, v);
            let want = v.signum() * (v.abs() - 0.5_f64).max(0.0);
            assert!((z - want).abs() < 1e-12, "{v}: {z} vs {want}");
        }
    }

    #[test]
    fn scan_finds_smooth_roots() {
        let f = ClosureFunctional::new(
            "cos",
            |x: &[f64]| x[0].cos(),
            |x: &[f64], g: &mut [f64]| g[0] = -x[0].sin(),
            1.0,
        );
        let pts = scan_critical_points_1d(&f, -1.0, 7.0, 1e-3);
        let want = [0.0, std::f64::consts::PI, 2.0 * std::f64::consts::PI];
        assert_eq!(pts.len(), 3, "{pts:?}");
        for (p, w) in pts.iter().zip(want) {
            assert!((p - w).abs() < 1e-9);
        }
    }

    #[test]
    fn scan_finds_convex_kink() {
        let pts = scan_critical_points_1d(&L1Norm::new(1.0), -2.0, 2.0, 1e-2);
        assert_eq!(pts, vec![0.0]);
    }
}
