//! Fixed-step subgradient descent on `J(x) = R(x) + F(Ax)`, the baseline
//! reconstruction scheme. Keeps the best iterate for early stopping.

use super::Problem;
use crate::error::{Error, Result};
use crate::tensor::DenseArray;

#[derive(Debug, Clone)]
pub struct SubgradientTrace {
    /// `J(x_k)` for `k = 0..=iters`.
    pub objective: Vec<f64>,
    pub best_x: DenseArray,
    pub best_objective: f64,
    pub best_iteration: usize,
    pub final_x: DenseArray,
}

/// `x_{k+1} = x_k - step (g_R(x_k) + A^*(A x_k - y_delta)/alpha)`.
pub fn subgradient_solve(problem: &Problem, x0: &DenseArray, step: f64, iters: usize) -> Result<SubgradientTrace> {
    if !(step > 0.0) {
        return Err(Error::config(format!("step must be positive, got {step}")));
    }
    x0.check_shape(problem.op.domain_shape())?;
    let op = &problem.op;
    let yd = &problem.fid.y_delta;
    let alpha = problem.fid.alpha;
    let mut x = x0.clone();
    let mut g = vec![0.0; x.len()];
    let mut objective = Vec::with_capacity(iters + 1);
    let mut best = (f64::INFINITY, x.clone(), 0);
    for k in 0..=iters {
        let mut r = op.apply(&x)?;
        r.axpy(-1.0, yd)?;
        let j = problem.reg.eval(x.data()) + 0.5 * r.norm_sq() / alpha;
        objective.push(j);
        if j < best.0 {
            best = (j, x.clone(), k);
        }
        if k == iters {
            break;
        }
        problem.reg.subgrad(x.data(), &mut g);
        let back = op.adjoint(&r)?;
        for ((xi, gi), bi) in x.data_mut().iter_mut().zip(&g).zip(back.data()) {
            *xi -= step * (gi + bi / alpha);
        }
        if !x.is_finite() {
            return Err(Error::Divergence {
                iteration: k + 1,
                norm: x.norm(),
            });
        }
    }
    Ok(SubgradientTrace {
        objective,
        best_objective: best.0,
        best_x: best.1,
        best_iteration: best.2,
        final_x: x,
    })
}
