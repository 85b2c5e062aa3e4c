//! Data fidelities and their folded convex conjugates.

use rand::Rng;

use crate::error::Result;
use crate::exec;
use crate::report::Certificate;
use crate::rng::{stream, Stream};
use crate::tensor::{dot, DenseArray};

/// Discrepancy `D(y, y_ref)` with the constants `(p, C)` of the relaxed
/// triangle inequality `D(y1, y2) <= C (D(y1, y3) + ||y2 - y3||^p)`.
pub trait Fidelity: Send + Sync {
    fn name(&self) -> &'static str;
    fn eval(&self, y: &[f64], y_ref: &[f64]) -> f64;
    fn p(&self) -> f64;
    fn c(&self) -> f64;
    fn convex_in_first(&self) -> bool;
}

/// `D(y, y_ref) = ||y - y_ref||^2 / 2`, with `p = 2`, `C = 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredL2;

impl Fidelity for SquaredL2 {
    fn name(&self) -> &'static str {
        "sq_l2"
    }
    fn eval(&self, y: &[f64], y_ref: &[f64]) -> f64 {
        0.5 * y.iter().zip(y_ref).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }
    fn p(&self) -> f64 {
        2.0
    }
    fn c(&self) -> f64 {
        2.0
    }
    fn convex_in_first(&self) -> bool {
        true
    }
}

pub fn sq_l2(y: &DenseArray, y_ref: &DenseArray) -> Result<f64> {
    y.check_shape(y_ref.shape())?;
    Ok(SquaredL2.eval(y.data(), y_ref.data()))
}

/// Conjugate of `F(y) = ||y - y_delta||^2 / (2 alpha)`:
/// `F*(w) = (alpha/2)||w||^2 + <w, y_delta>`, which is `alpha`-strongly convex.
#[derive(Debug, Clone)]
pub struct ConjugateFidelity {
    pub alpha: f64,
    pub y_delta: DenseArray,
}

impl ConjugateFidelity {
    pub fn new(alpha: f64, y_delta: DenseArray) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(crate::Error::config(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha, y_delta })
    }

    pub fn mu_fid(&self) -> f64 {
        self.alpha
    }

    /// Primal fidelity `F(y)`.
    pub fn primal(&self, y: &DenseArray) -> Result<f64> {
        Ok(sq_l2(y, &self.y_delta)? / self.alpha)
    }

    pub fn conj_eval(&self, w: &DenseArray) -> Result<f64> {
        w.check_shape(self.y_delta.shape())?;
        Ok(0.5 * self.alpha * w.norm_sq() + dot(w.data(), self.y_delta.data()))
    }

    /// `argmin_w F*(w) + ||w - v||^2/(2 sigma) = (v - sigma y_delta)/(1 + sigma alpha)`.
    pub fn conj_prox(&self, sigma: f64, v: &DenseArray) -> Result<DenseArray> {
        if !(sigma > 0.0) {
            return Err(crate::Error::config(format!("sigma must be positive, got {sigma}")));
        }
        let mut out = v.clone();
        self.conj_prox_into(sigma, &mut out)?;
        Ok(out)
    }

    pub(crate) fn conj_prox_into(&self, sigma: f64, v: &mut DenseArray) -> Result<()> {
        v.check_shape(self.y_delta.shape())?;
        let d = 1.0 + sigma * self.alpha;
        for (o, yd) in v.data_mut().iter_mut().zip(self.y_delta.data()) {
            *o = (*o - sigma * yd) / d;
        }
        Ok(())
    }
}

/// Worst ratio `D(y1, y2) / (D(y1, y3) + ||y2 - y3||^p)` over random triples
/// in `[-1, 1]^dim`; passes iff at most `C`.
pub fn quasi_triangle_audit(fid: &dyn Fidelity, dim: usize, samples: usize, seed: u64) -> Certificate {
    let mut rng = stream(seed, Stream::Audit);
    let mut draw = || -> Vec<f64> { (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let triples: Vec<[Vec<f64>; 3]> = (0..samples).map(|_| [draw(), draw(), draw()]).collect();
    let worst = exec::max_indexed(samples, |i| {
        let [y1, y2, y3] = &triples[i];
        let d23: f64 = y2.iter().zip(y3).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let denom = fid.eval(y1, y3) + d23.powf(fid.p());
        if denom == 0.0 {
            0.0
        } else {
            fid.eval(y1, y2) / denom
        }
    });
    Certificate::at_most(format!("relaxed_triangle[{}]", fid.name()), worst, fid.c(), samples)
}
