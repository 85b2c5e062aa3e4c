//! Regularising functionals: the [`Functional`] abstraction, proximal maps,
//! Moreau envelopes, weak-convexity calculus and audits.

mod bounds;
mod calculus;
mod instances;
mod scan;

pub use bounds::{critical_point_bound, CriticalPointBound, SplitRegulariser};
pub use calculus::{composition_modulus, power_modulus};
pub use instances::{
    abs_plus_cos, geometric_kinks, mcp, AbsPlusCos, ClosureFunctional, CosineBump, GeometricKinks, L1Norm, Mcp,
    Quadratic, ZeroFunctional,
};
pub use scan::{prox_1d_exact, scan_critical_points_1d};

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::rng::{stream, Stream};
use crate::tensor::{dot, norm, DenseArray};

/// A real functional on a flat vector space together with a deterministic
/// subgradient selection and a declared weak-convexity modulus: `f +
/// (rho_wc/2)||.||^2` is convex.
pub trait Functional: Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, x: &[f64]) -> f64;

    /// Writes a subgradient selection at `x` into `out`.
    fn subgrad(&self, x: &[f64], out: &mut [f64]);

    fn rho_wc(&self) -> f64;

    /// Lipschitz constant on a space of dimension `dim`, when known.
    fn lipschitz(&self, _dim: usize) -> Option<f64> {
        None
    }

    /// Exact proximal map; returns `false` when unavailable.
    fn prox_exact(&self, _nu: f64, _v: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    /// Left and right derivatives in one dimension.
    fn one_sided(&self, x: f64) -> (f64, f64) {
        let mut g = [0.0];
        self.subgrad(&[x], &mut g);
        (g[0], g[0])
    }

    /// Whether `f(x) = sum_i f_1(x_i)` for the one-dimensional function
    /// described by [`Functional::one_sided`].
    fn separable(&self) -> bool {
        false
    }

    /// Nondifferentiable points in `[lo, hi]` (one dimension).
    fn kinks(&self, _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// Settings for the backtracking prox solver used when no exact prox exists.
#[derive(Debug, Clone, Copy)]
pub struct InnerSolver {
    pub tol: f64,
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for InnerSolver {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
            armijo: 1e-4,
        }
    }
}

fn check_proxable(f: &dyn Functional, nu: f64) -> Result<()> {
    let rho = f.rho_wc();
    if !(nu > 0.0) {
        return Err(Error::config(format!("prox parameter must be positive, got {nu}")));
    }
    if nu * rho >= 1.0 {
        return Err(Error::Nonproxable {
            nu,
            rho,
            product: nu * rho,
        });
    }
    Ok(())
}

/// `prox_{nu f}(v) = argmin_z f(z) + ||z - v||^2 / (2 nu)`, unique when
/// `nu * rho_wc < 1`.
pub fn prox(f: &dyn Functional, nu: f64, v: &DenseArray) -> Result<DenseArray> {
    prox_with(f, nu, v, &InnerSolver::default())
}

pub fn prox_with(f: &dyn Functional, nu: f64, v: &DenseArray, solver: &InnerSolver) -> Result<DenseArray> {
    check_proxable(f, nu)?;
    let mut out = v.zeros_like();
    if f.prox_exact(nu, v.data(), out.data_mut()) {
        return Ok(out);
    }
    if f.separable() {
        crate::exec::fill_indexed(out.data_mut(), |i| {
            scan::prox_1d_exact(|t| f.one_sided(t).1, nu, v.data()[i])
        });
        return Ok(out);
    }
    let z = prox_descent(f, nu, v.data(), solver)?;
    Ok(DenseArray::new(v.shape().to_vec(), z).expect("shape preserved"))
}

/// Gradient descent with Armijo backtracking on the prox objective, which is
/// `(1/nu - rho_wc)`-strongly convex. Starts at `v`. When backtracking stalls
/// at a kink, a gradient-sampling step takes over: the search direction is the
/// minimum-norm element of the convex hull of gradients sampled in a ball of
/// shrinking radius, and that norm (at radius below `tol`) is the residual.
fn prox_descent(f: &dyn Functional, nu: f64, v: &[f64], solver: &InnerSolver) -> Result<Vec<f64>> {
    let n = v.len();
    let objective = |z: &[f64]| {
        let d: f64 = z.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        f.eval(z) + d / (2.0 * nu)
    };
    let gradient = |z: &[f64], g: &mut [f64]| {
        f.subgrad(z, g);
        for i in 0..n {
            g[i] += (z[i] - v[i]) / nu;
        }
    };
    let mut z = v.to_vec();
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut step = nu;
    let mut residual = f64::INFINITY;
    let mut radius = 1e-3 * (1.0 + norm(v));
    let mut sampler = stream(0, Stream::Audit);
    for _ in 0..solver.max_iters {
        gradient(&z, &mut g);
        residual = norm(&g);
        if residual < solver.tol {
            return Ok(z);
        }
        let fz = objective(&z);
        if armijo(&objective, &z, &g, fz, &mut step, solver.armijo, 1e-6 * nu, &mut trial) {
            std::mem::swap(&mut z, &mut trial);
            continue;
        }
        // Stalled: sample gradients around z until the hull gives descent.
        loop {
            let d = sampled_direction(&gradient, &z, radius, &mut sampler);
            let dn = norm(&d);
            if dn < solver.tol {
                if radius < 1e-4 * solver.tol * (1.0 + norm(&z)) {
                    return Ok(z);
                }
                radius *= 0.1;
                continue;
            }
            let mut s = step.max(nu);
            if armijo(&objective, &z, &d, fz, &mut s, solver.armijo, 1e-16 * nu, &mut trial) {
                std::mem::swap(&mut z, &mut trial);
                step = s;
                break;
            }
            if radius < 1e-14 * (1.0 + norm(&z)) {
                return Err(Error::InnerSolve {
                    residual: dn,
                    iterations: solver.max_iters,
                });
            }
            radius *= 0.1;
        }
    }
    Err(Error::InnerSolve {
        residual,
        iterations: solver.max_iters,
    })
}

/// Backtracking along `-d` from an initial `2 * step`; on success `trial`
/// holds the accepted point and `step` the accepted step.
#[allow(clippy::too_many_arguments)]
fn armijo(
    objective: &impl Fn(&[f64]) -> f64,
    z: &[f64],
    d: &[f64],
    fz: f64,
    step: &mut f64,
    c: f64,
    min_step: f64,
    trial: &mut [f64],
) -> bool {
    let dd = dot(d, d);
    let mut s = (2.0 * *step).min(1e12);
    while s >= min_step {
        for i in 0..z.len() {
            trial[i] = z[i] - s * d[i];
        }
        if trial == z {
            return false;
        }
        if objective(trial) <= fz - c * s * dd {
            *step = s;
            return true;
        }
        s *= 0.5;
    }
    false
}

/// Minimum-norm element of the convex hull of gradients at `z` and at
/// `2 n + 1` points within `radius` of it (coordinate and random offsets).
fn sampled_direction<R: Rng>(gradient: &impl Fn(&[f64], &mut [f64]), z: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
    let n = z.len();
    let mut pts = Vec::with_capacity(3 * n + 2);
    let mut at = |p: &[f64]| {
        let mut g = vec![0.0; n];
        gradient(p, &mut g);
        pts.push(g);
    };
    at(z);
    let mut p = z.to_vec();
    for i in 0..n {
        for sgn in [1.0, -1.0] {
            p[i] = z[i] + sgn * radius;
            at(&p);
        }
        p[i] = z[i];
    }
    for _ in 0..=n {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scale = radius / norm(&u).max(1e-300);
        let q: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + scale * b).collect();
        at(&q);
    }
    min_norm_point(&pts)
}

/// Wolfe's algorithm for the point of least norm in the convex hull of `pts`.
fn min_norm_point(pts: &[Vec<f64>]) -> Vec<f64> {
    let scale = pts.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-14 * scale;
    let combine = |set: &[usize], w: &[f64]| {
        let mut x = vec![0.0; pts[0].len()];
        for (&i, &wi) in set.iter().zip(w) {
            for (xk, pk) in x.iter_mut().zip(&pts[i]) {
                *xk += wi * pk;
            }
        }
        x
    };
    let first = (0..pts.len())
        .min_by(|&a, &b| dot(&pts[a], &pts[a]).total_cmp(&dot(&pts[b], &pts[b])))
        .expect("at least one point");
    let mut set = vec![first];
    let mut w = vec![1.0];
    let mut x = pts[first].clone();
    for _ in 0..10 * pts.len() + 10 {
        let xx = dot(&x, &x);
        let j = (0..pts.len())
            .min_by(|&a, &b| dot(&x, &pts[a]).total_cmp(&dot(&x, &pts[b])))
            .expect("at least one point");
        if xx - dot(&x, &pts[j]) <= eps || set.contains(&j) {
            return x;
        }
        set.push(j);
        w.push(0.0);
        loop {
            let Some(mu) = affine_min(pts, &set) else {
                return x;
            };
            if mu.iter().all(|&m| m > 1e-15) {
                w = mu;
                x = combine(&set, &w);
                break;
            }
            let theta = set
                .iter()
                .enumerate()
                .filter(|&(k, _)| mu[k] <= 1e-15)
                .map(|(k, _)| w[k] / (w[k] - mu[k]))
                .fold(1.0, f64::min);
            for k in 0..w.len() {
                w[k] = (1.0 - theta) * w[k] + theta * mu[k];
            }
            let keep: Vec<usize> = (0..set.len()).filter(|&k| w[k] > 1e-15).collect();
            set = keep.iter().map(|&k| set[k]).collect();
            w = keep.iter().map(|&k| w[k]).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
            x = combine(&set, &w);
        }
    }
    x
}

/// Weights of the least-norm point of the affine hull of `pts[set]`.
fn affine_min(pts: &[Vec<f64>], set: &[usize]) -> Option<Vec<f64>> {
    let m = set.len();
    let mut k = nalgebra::DMatrix::zeros(m + 1, m + 1);
    let mut rhs = nalgebra::DVector::zeros(m + 1);
    for a in 0..m {
        for b in 0..m {
            k[(a, b)] = dot(&pts[set[a]], &pts[set[b]]);
        }
        k[(a, m)] = 1.0;
        k[(m, a)] = 1.0;
    }
    rhs[m] = 1.0;
    let sol = k.lu().solve(&rhs)?;
    let mu: Vec<f64> = sol.iter().take(m).copied().collect();
    mu.iter().all(|v| v.is_finite()).then_some(mu)
}

/// Moreau envelope value and gradient at `x`:
/// `f(p) + ||p - x||^2/(2 nu)` and `(x - p)/nu` with `p = prox_{nu f}(x)`.
pub fn moreau(f: &dyn Functional, nu: f64, x: &DenseArray) -> Result<(f64, DenseArray)> {
    let p = prox(f, nu, x)?;
    let d = x.sub(&p)?;
    let value = f.eval(p.data()) + d.norm_sq() / (2.0 * nu);
    Ok((value, d.scaled(1.0 / nu)))
}

/// Axis-aligned sampling box, the same interval on each coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub lo: f64,
    pub hi: f64,
    pub dim: usize,
}

impl SampleBox {
    pub fn new(lo: f64, hi: f64, dim: usize) -> Self {
        Self { lo, hi, dim }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim).map(|_| rng.random_range(self.lo..self.hi)).collect()
    }
}

/// Worst violation of the secant inequality
/// `f(l x1 + (1-l) x2) <= l f(x1) + (1-l) f(x2) + (rho/2) l (1-l) ||x1 - x2||^2`
/// over random triples. Nonpositive (up to rounding) certifies the modulus
/// empirically.
pub fn check_rho_convexity(f: &dyn Functional, rho: f64, samples: usize, bx: SampleBox, seed: u64) -> f64 {
    let mut rng = stream(seed, Stream::Secant);
    let triples: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..samples)
        .map(|_| (bx.sample(&mut rng), bx.sample(&mut rng), rng.random::<f64>()))
        .collect();
    exec::max_indexed(triples.len(), |i| {
        let (x1, x2, l) = &triples[i];
        let mid: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| l * a + (1.0 - l) * b).collect();
        let d2: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
        f.eval(&mid) - (l * f.eval(x1) + (1.0 - l) * f.eval(x2) + 0.5 * rho * l * (1.0 - l) * d2)
    })
}

/// Largest sampled subgradient norm, an empirical Lipschitz estimate.
pub fn estimate_lipschitz(f: &dyn Functional, samples: usize, bx: SampleBox, seed: u64) -> f64 {
    let mut rng = stream(seed, Stream::Audit);
    let points: Vec<Vec<f64>> = (0..samples).map(|_| bx.sample(&mut rng)).collect();
    exec::max_indexed(points.len(), |i| {
        let mut g = vec![0.0; bx.dim];
        f.subgrad(&points[i], &mut g);
        norm(&g)
    })
}

/// Smallest sampled value, used to audit nonnegativity.
pub fn sampled_minimum(f: &dyn Functional, samples: usize, bx: SampleBox, seed: u64) -> f64 {
    let mut rng = stream(seed, Stream::Audit);
    let points: Vec<Vec<f64>> = (0..samples).map(|_| bx.sample(&mut rng)).collect();
    -exec::max_indexed(points.len(), |i| -f.eval(&points[i]))
}
