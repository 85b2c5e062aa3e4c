//! Oracles and fixtures shared by the integration tests. Everything here is
//! written independently of the library code it checks.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use wcreg::fixtures::BLUR_KERNEL;
use wcreg::functionals::{
    abs_plus_cos, geometric_kinks, mcp, AbsPlusCos, CosineBump, Functional, L1Norm, Quadratic, SampleBox,
    SplitRegulariser, ZeroFunctional,
};
use wcreg::learn::{Architecture, Awcr, NetFunctional};
use wcreg::rng::{stream, Stream};

/// Zero-boundary blur matrix assembled entry by entry:
/// `(A x)_i = sum_j k_j x_{i + j - 2}`.
pub fn blur_matrix(n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, &k) in BLUR_KERNEL.iter().enumerate() {
            let c = i as isize + j as isize - 2;
            if c >= 0 && (c as usize) < n {
                a[(i, c as usize)] = k;
            }
        }
    }
    a
}

/// Largest singular value from a dense SVD.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

/// FISTA on `R(x) + ||A x - y||^2 / (2 alpha)` with a closed-form prox
/// `prox(v, step)` of `step * R`. Stops when successive iterates differ by
/// less than `tol`.
pub fn fista(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    alpha: f64,
    prox: impl Fn(&DVector<f64>, f64) -> DVector<f64>,
    iters: usize,
    tol: f64,
) -> DVector<f64> {
    let lip = spectral_norm(a).powi(2) / alpha;
    let step = 1.0 / lip;
    let mut x = DVector::zeros(a.ncols());
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let grad = a.transpose() * (a * &z - y) / alpha;
        let xn = prox(&(&z - grad * step), step);
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &xn + (&xn - &x) * ((t - 1.0) / tn);
        let moved = (&xn - &x).norm();
        x = xn;
        t = tn;
        if moved < tol {
            break;
        }
    }
    x
}

pub fn soft_threshold(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|e| e.signum() * (e.abs() - t).max(0.0))
}

/// Central difference of `f` along each coordinate.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let dn = f(&p);
            p[i] = x[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

/// A shipped functional, the box it is audited on, and whether its declared
/// modulus is tight (so that halving it must fail the secant audit).
pub struct Audited {
    pub f: Arc<dyn Functional>,
    pub bx: SampleBox,
    pub tight: bool,
}

pub fn small_awcr(seed: u64) -> Awcr {
    let arch = Architecture {
        smooth: vec![4],
        icnn_hidden: vec![4],
        ..Architecture::standard(2)
    };
    Awcr::new(&arch, &mut stream(seed, Stream::Init))
}

pub fn shipped_functionals() -> Vec<Audited> {
    let b = |lo, hi, dim| SampleBox::new(lo, hi, dim);
    let c3: Arc<dyn Functional> = Arc::new(geometric_kinks(3.0).unwrap());
    vec![
        Audited {
            f: Arc::new(ZeroFunctional),
            bx: b(-5.0, 5.0, 3),
            tight: false,
        },
        Audited {
            f: Arc::new(Quadratic::centered(2.0, 0.5)),
            bx: b(-5.0, 5.0, 3),
            tight: false,
        },
        Audited {
            f: Arc::new(L1Norm::new(0.7)),
            bx: b(-5.0, 5.0, 3),
            tight: false,
        },
        Audited {
            f: Arc::new(mcp(0.5, 2.0).unwrap()),
            bx: b(-2.0, 2.0, 3),
            tight: true,
        },
        Audited {
            f: Arc::new(abs_plus_cos()),
            bx: b(-10.0, 10.0, 2),
            tight: true,
        },
        Audited {
            f: Arc::new(CosineBump::new(1.5, 1.0, 0.5)),
            bx: b(-6.0, 6.0, 2),
            tight: true,
        },
        Audited {
            f: c3.clone(),
            bx: b(-20.0, 20.0, 1),
            tight: true,
        },
        Audited {
            f: Arc::new(geometric_kinks(6.0).unwrap()),
            bx: b(-20.0, 20.0, 2),
            tight: true,
        },
        Audited {
            f: Arc::new(SplitRegulariser::new(Arc::new(AbsPlusCos), Arc::new(Quadratic::new(0.5)), 1.0, 0.5).unwrap()),
            bx: b(-10.0, 10.0, 2),
            tight: true,
        },
        Audited {
            f: Arc::new(NetFunctional::new(small_awcr(3), true, 0.0)),
            bx: b(-2.0, 2.0, 2),
            tight: false,
        },
    ]
}
