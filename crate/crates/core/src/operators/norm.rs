use crate::error::{Error, Result};
use crate::rng::{gaussian_vec, stream, Stream};
use crate::tensor::{dot, norm};

use super::Operator;

/// Power-method estimate of the largest singular value.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Estimate after each iteration; nondecreasing.
    pub history: Vec<f64>,
}

/// Power iteration on `A^*A`. The estimate `sqrt(<v, A^*A v>)` for the
/// normalised iterate `v` is nondecreasing in exact arithmetic; a running
/// maximum removes rounding wiggles. Converged once successive estimates
/// differ by less than `tol` relative.
pub fn operator_norm(op: &Operator, max_iters: usize, tol: f64, seed: u64) -> Result<NormEstimate> {
    if max_iters == 0 || !(tol > 0.0) {
        return Err(Error::config("operator_norm needs max_iters >= 1 and tol > 0"));
    }
    let n = op.domain_len();
    let m = op.range_len();
    let mut rng = stream(seed, Stream::PowerIteration);
    let mut v = gaussian_vec(&mut rng, n);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut av = vec![0.0; m];
    let mut w = vec![0.0; n];
    let mut history = Vec::new();
    let mut best: f64 = 0.0;
    for it in 1..=max_iters {
        op.raw().apply_into(&v, &mut av);
        let est = dot(&av, &av).sqrt();
        op.raw().adjoint_into(&av, &mut w);
        let nw = norm(&w);
        let prev = best;
        best = best.max(est);
        history.push(best);
        if nw == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
                history,
            });
        }
        if it > 1 && (best - prev).abs() <= tol * best {
            return Ok(NormEstimate {
                value: best,
                converged: true,
                iterations: it,
                history,
            });
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Ok(NormEstimate {
        value: best,
        converged: false,
        iterations: max_iters,
        history,
    })
}
