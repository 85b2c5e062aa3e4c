//! Concrete functionals.

use std::fmt;

use super::{prox_1d_exact, Functional};
use crate::error::{Error, Result};

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `R = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFunctional;

impl Functional for ZeroFunctional {
    fn separable(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        "zero".into()
    }
    fn eval(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn subgrad(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn rho_wc(&self) -> f64 {
        0.0
    }
    fn lipschitz(&self, _dim: usize) -> Option<f64> {
        Some(0.0)
    }
    fn prox_exact(&self, _nu: f64, v: &[f64], out: &mut [f64]) -> bool {
        out.copy_from_slice(v);
        true
    }
}

/// `(scale/2) ||x - c||^2`, with `c` a constant shift applied to every coordinate.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic {
    pub scale: f64,
    pub center: f64,
}

impl Quadratic {
    pub fn new(scale: f64) -> Self {
        Self { scale, center: 0.0 }
    }

    pub fn centered(scale: f64, center: f64) -> Self {
        Self { scale, center }
    }
}

impl Functional for Quadratic {
    fn separable(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("quadratic(scale={}, center={})", self.scale, self.center)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        0.5 * self.scale * x.iter().map(|t| (t - self.center).powi(2)).sum::<f64>()
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(x) {
            *o = self.scale * (t - self.center);
        }
    }
    fn rho_wc(&self) -> f64 {
        (-self.scale).max(0.0)
    }
    fn prox_exact(&self, nu: f64, v: &[f64], out: &mut [f64]) -> bool {
        let d = 1.0 + nu * self.scale;
        for (o, t) in out.iter_mut().zip(v) {
            *o = (t + nu * self.scale * self.center) / d;
        }
        true
    }
}

/// `weight * ||x||_1`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub weight: f64,
}

impl L1Norm {
    pub fn new(weight: f64) -> Self {
        Self { weight }
    }
}

impl Functional for L1Norm {
    fn separable(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("l1(weight={})", self.weight)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.weight * x.iter().map(|t| t.abs()).sum::<f64>()
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(x) {
            *o = self.weight * sign(*t);
        }
    }
    fn rho_wc(&self) -> f64 {
        0.0
    }
    fn lipschitz(&self, dim: usize) -> Option<f64> {
        Some(self.weight * (dim as f64).sqrt())
    }
    fn prox_exact(&self, nu: f64, v: &[f64], out: &mut [f64]) -> bool {
        let t = nu * self.weight;
        for (o, x) in out.iter_mut().zip(v) {
            *o = sign(*x) * (x.abs() - t).max(0.0);
        }
        true
    }
    fn one_sided(&self, x: f64) -> (f64, f64) {
        if x == 0.0 {
            (-self.weight, self.weight)
        } else {
            let g = self.weight * sign(x);
            (g, g)
        }
    }
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        if lo <= 0.0 && 0.0 <= hi {
            vec![0.0]
        } else {
            Vec::new()
        }
    }
}

/// Minimax concave penalty, per coordinate
/// `lambda |t| - t^2/(2a)` for `|t| <= a lambda` and `a lambda^2 / 2` beyond.
/// Weakly convex with modulus `1/a`.
#[derive(Debug, Clone, Copy)]
pub struct Mcp {
    pub lambda: f64,
    pub a: f64,
}

pub fn mcp(lambda: f64, a: f64) -> Result<Mcp> {
    if !(lambda >= 0.0) || !(a > 0.0) {
        return Err(Error::config(format!(
            "MCP needs lambda >= 0 and a > 0, got {lambda}, {a}"
        )));
    }
    Ok(Mcp { lambda, a })
}

impl Mcp {
    fn value(&self, t: f64) -> f64 {
        let s = t.abs();
        if s <= self.a * self.lambda {
            self.lambda * s - s * s / (2.0 * self.a)
        } else {
            0.5 * self.a * self.lambda * self.lambda
        }
    }

    fn deriv(&self, t: f64) -> f64 {
        if t.abs() <= self.a * self.lambda {
            self.lambda * sign(t) - t / self.a
        } else {
            0.0
        }
    }
}

impl Functional for Mcp {
    fn separable(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("mcp(lambda={}, a={})", self.lambda, self.a)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.value(t)).sum()
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(x) {
            *o = self.deriv(t);
        }
    }
    fn rho_wc(&self) -> f64 {
        1.0 / self.a
    }
    fn lipschitz(&self, dim: usize) -> Option<f64> {
        Some(self.lambda * (dim as f64).sqrt())
    }
    fn prox_exact(&self, nu: f64, v: &[f64], out: &mut [f64]) -> bool {
        let (l, a) = (self.lambda, self.a);
        for (o, &t) in out.iter_mut().zip(v) {
            let s = t.abs();
            *o = if s <= nu * l {
                0.0
            } else if s <= a * l {
                sign(t) * (s - nu * l) / (1.0 - nu / a)
            } else {
                t
            };
        }
        true
    }
    fn one_sided(&self, x: f64) -> (f64, f64) {
        if x == 0.0 {
            (-self.lambda, self.lambda)
        } else {
            let g = self.deriv(x);
            (g, g)
        }
    }
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        if lo <= 0.0 && 0.0 <= hi {
            vec![0.0]
        } else {
            Vec::new()
        }
    }
}

/// `sum_i |x_i| + cos x_i`: nonnegative, 1-weakly convex, 2-Lipschitz per
/// coordinate, with critical points at every `2 pi k + pi/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AbsPlusCos;

pub fn abs_plus_cos() -> AbsPlusCos {
    AbsPlusCos
}

impl Functional for AbsPlusCos {
    fn separable(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        "abs_plus_cos".into()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|t| t.abs() + t.cos()).sum()
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(x) {
            *o = sign(*t) - t.sin();
        }
    }
    fn rho_wc(&self) -> f64 {
        1.0
    }
    fn lipschitz(&self, dim: usize) -> Option<f64> {
        Some(2.0 * (dim as f64).sqrt())
    }
    fn prox_exact(&self, nu: f64, v: &[f64], out: &mut [f64]) -> bool {
        for (o, &t) in out.iter_mut().zip(v) {
            *o = prox_1d_exact(|z| self.one_sided(z).1, nu, t);
        }
        true
    }
    fn one_sided(&self, x: f64) -> (f64, f64) {
        if x == 0.0 {
            (-1.0, 1.0)
        } else {
            let g = sign(x) - x.sin();
            (g, g)
        }
    }
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        if lo <= 0.0 && 0.0 <= hi {
            vec![0.0]
        } else {
            Vec::new()
        }
    }
}

/// `amp (1 - cos(freq t)) + offset` per coordinate; weakly convex with
/// modulus `amp freq^2` and Lipschitz with constant `amp freq` per coordinate.
#[derive(Debug, Clone, Copy)]
pub struct CosineBump {
    pub amp: f64,
    pub freq: f64,
    pub offset: f64,
}

impl CosineBump {
    pub fn new(amp: f64, freq: f64, offset: f64) -> Self {
        Self { amp, freq, offset }
    }
}

impl Functional for CosineBump {
    fn separable(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!(
            "cosine_bump(amp={}, freq={}, offset={})",
            self.amp, self.freq, self.offset
        )
    }
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter()
            .map(|t| self.amp * (1.0 - (self.freq * t).cos()) + self.offset)
            .sum()
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(x) {
            *o = self.amp * self.freq * (self.freq * t).sin();
        }
    }
    fn rho_wc(&self) -> f64 {
        self.amp.abs() * self.freq * self.freq
    }
    fn lipschitz(&self, dim: usize) -> Option<f64> {
        Some(self.amp.abs() * self.freq.abs() * (dim as f64).sqrt())
    }
    fn prox_exact(&self, nu: f64, v: &[f64], out: &mut [f64]) -> bool {
        let d = |z: f64| self.amp * self.freq * (self.freq * z).sin();
        for (o, &t) in out.iter_mut().zip(v) {
            *o = prox_1d_exact(d, nu, t);
        }
        true
    }
}

/// Piecewise-quadratic one-dimensional functional with kinks accumulating at
/// zero, extended evenly. With `m = gamma/(gamma - 2)` and
/// `m^n <= x < m^(n+1)`:
/// `R(x) = (m + gamma) m^n (x - m^n) - gamma (x^2 - m^(2n))/2`.
/// `R >= 0`, `R(m^n) = 0`, it is `gamma`-weakly convex, and
/// `x^2/2 + R` has a critical point at every `m^n`.
#[derive(Debug, Clone, Copy)]
pub struct GeometricKinks {
    pub gamma: f64,
    m: f64,
}

/// Magnitudes below `m^-MIN_EXPONENT` are treated as zero.
const MIN_EXPONENT: i32 = 40;

pub fn geometric_kinks(gamma: f64) -> Result<GeometricKinks> {
    if !(gamma > 2.0) || !gamma.is_finite() {
        return Err(Error::config(format!("gamma must exceed 2, got {gamma}")));
    }
    Ok(GeometricKinks {
        gamma,
        m: gamma / (gamma - 2.0),
    })
}

impl GeometricKinks {
    pub fn ratio(&self) -> f64 {
        self.m
    }

    /// Segment start `m^n` with `m^n <= s < m^(n+1)`, or `None` below the floor.
    fn segment(&self, s: f64) -> Option<(i32, f64)> {
        if s < self.m.powi(-MIN_EXPONENT) {
            return None;
        }
        let mut n = (s.ln() / self.m.ln()).floor() as i32;
        // guard against rounding in the logarithm
        while self.m.powi(n) > s {
            n -= 1;
        }
        while self.m.powi(n + 1) <= s {
            n += 1;
        }
        Some((n, self.m.powi(n)))
    }

    fn value(&self, x: f64) -> f64 {
        let s = x.abs();
        match self.segment(s) {
            None => 0.0,
            Some((_, p)) => {
                let g = self.gamma;
                ((self.m + g) * p * (s - p) - 0.5 * g * (s - p) * (s + p)).max(0.0)
            }
        }
    }

    /// Right derivative of the even extension.
    fn right_deriv(&self, x: f64) -> f64 {
        let s = x.abs();
        let Some((_, p)) = self.segment(s) else {
            return 0.0;
        };
        let d = (self.m + self.gamma) * p - self.gamma * s;
        if x > 0.0 {
            d
        } else {
            // left derivative of the positive branch at s, reflected
            let q = if s == p { p / self.m } else { p };
            -((self.m + self.gamma) * q - self.gamma * s)
        }
    }

    fn left_deriv(&self, x: f64) -> f64 {
        -self.right_deriv(-x)
    }
}

impl Functional for GeometricKinks {
    fn separable(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("geometric_kinks(gamma={})", self.gamma)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.value(t)).sum()
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(x) {
            *o = self.right_deriv(t);
        }
    }
    fn rho_wc(&self) -> f64 {
        self.gamma
    }
    fn prox_exact(&self, nu: f64, v: &[f64], out: &mut [f64]) -> bool {
        for (o, &t) in out.iter_mut().zip(v) {
            *o = prox_1d_exact(|z| self.right_deriv(z), nu, t);
        }
        true
    }
    fn one_sided(&self, x: f64) -> (f64, f64) {
        (self.left_deriv(x), self.right_deriv(x))
    }
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let top = lo.abs().max(hi.abs());
        let mut n = -MIN_EXPONENT;
        loop {
            let p = self.m.powi(n);
            if p > top {
                break;
            }
            for c in [p, -p] {
                if lo <= c && c <= hi {
                    out.push(c);
                }
            }
            n += 1;
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Functional assembled from closures, for ad hoc objectives.
pub struct ClosureFunctional {
    name: String,
    eval: Box<EvalFn>,
    grad: Box<GradFn>,
    rho: f64,
    lipschitz: Option<f64>,
}

impl ClosureFunctional {
    pub fn new(
        name: &str,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        rho: f64,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
            grad: Box::new(grad),
            rho,
            lipschitz: None,
        }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }
}

impl fmt::Debug for ClosureFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureFunctional")
            .field("name", &self.name)
            .field("rho", &self.rho)
            .finish()
    }
}

impl Functional for ClosureFunctional {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }
    fn rho_wc(&self) -> f64 {
        self.rho
    }
    fn lipschitz(&self, _dim: usize) -> Option<f64> {
        self.lipschitz
    }
}
