//! Adversarial loss with a one-sided gradient penalty on interpolation lines.

use rand::seq::SliceRandom;
use rand::Rng;

use super::nets::Awcr;
use crate::error::{Error, Result};
use crate::rng::{stream_indexed, Stream};
use crate::tensor::DenseArray;

#[derive(Debug, Clone)]
pub struct LossParts {
    pub loss: f64,
    /// Mean of `R` over the real batch.
    pub real: f64,
    /// Mean of `R` over the noisy batch.
    pub noisy: f64,
    /// Mean of `(||grad R|| - 1)_+^2` at the interpolated points.
    pub penalty: f64,
    pub grad: Awcr,
}

fn rows(a: &DenseArray) -> Result<(usize, usize)> {
    match a.shape() {
        [n, d] => Ok((*n, *d)),
        s => Err(Error::shape(&[0, 0], s)),
    }
}

/// Sums per-sample gradients in sample order so the result does not depend
/// on the thread count.
fn reduce(net: &Awcr, parts: Vec<(f64, Awcr)>) -> (f64, Awcr) {
    let mut grad = net.zeros_like();
    let mut total = 0.0;
    for (v, g) in parts {
        total += v;
        grad.add_assign(&g, 1.0);
    }
    (total, grad)
}

/// Penalty points `t real_i + (1 - t) noisy_{pi(i)}` for a random pairing
/// `pi` and uniform `t`, drawn from the stream for `(seed, step)`. A point
/// for which `reject` holds gets a fresh `t`.
pub fn interpolation_points(
    real: &DenseArray,
    noisy: &DenseArray,
    seed: u64,
    step: u64,
    reject: impl Fn(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    let (n, d) = rows(real)?;
    if noisy.shape() != real.shape() {
        return Err(Error::shape(real.shape(), noisy.shape()));
    }
    let mut rng = stream_indexed(seed, Stream::Penalty, step);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (real.row(i), noisy.row(perm[i]));
        loop {
            let t: f64 = rng.random();
            let p: Vec<f64> = (0..d).map(|k| t * a[k] + (1.0 - t) * b[k]).collect();
            if !reject(&p) {
                out.push(p);
                break;
            }
        }
    }
    Ok(out)
}

/// `E_real[R] - E_noisy[R] + lambda E[(||grad_x R|| - 1)_+^2]` and its
/// parameter gradient.
pub fn adversarial_loss(
    net: &Awcr,
    real: &DenseArray,
    noisy: &DenseArray,
    lambda: f64,
    seed: u64,
    step: u64,
) -> Result<LossParts> {
    let (n, d) = rows(real)?;
    let (m, dn) = rows(noisy)?;
    if n == 0 || m == 0 {
        return Err(Error::config("adversarial loss needs nonempty batches"));
    }
    if d != net.input_dim() || dn != d {
        return Err(Error::shape(&[n, net.input_dim()], noisy.shape()));
    }
    let term = |data: &DenseArray, count: usize, sign: f64| {
        let parts = crate::exec::map_indexed(count, |i| {
            let mut g = net.zeros_like();
            let tape = net.forward(data.row(i), None);
            net.backward(&tape, sign / count as f64, 0.0, &mut g);
            (tape.value, g)
        });
        reduce(net, parts)
    };
    let (sr, gr) = term(real, n, 1.0);
    let (sn, gn) = term(noisy, m, -1.0);
    let mut grad = gr;
    grad.add_assign(&gn, 1.0);
    let (real_mean, noisy_mean) = (sr / n as f64, sn / m as f64);

    let mut penalty = 0.0;
    if lambda != 0.0 {
        let points = interpolation_points(real, noisy, seed, step, |p| net.forward(p, None).at_kink())?;
        let np = points.len() as f64;
        let parts = crate::exec::map_indexed(points.len(), |i| {
            let mut g = net.zeros_like();
            let (_, gx) = net.value_grad(&points[i]);
            let norm = gx.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= 1.0 {
                return (0.0, g);
            }
            let excess = norm - 1.0;
            // d/dtheta of (||g|| - 1)^2 is the parameter gradient of the
            // directional derivative along 2 (||g|| - 1) g / ||g||
            let v: Vec<f64> = gx.iter().map(|t| 2.0 * excess * t / norm).collect();
            let tape = net.forward(&points[i], Some(&v));
            net.backward(&tape, 0.0, lambda / np, &mut g);
            (excess * excess, g)
        });
        let (sp, gp) = reduce(net, parts);
        penalty = sp / np;
        grad.add_assign(&gp, 1.0);
    }
    Ok(LossParts {
        loss: real_mean - noisy_mean + lambda * penalty,
        real: real_mean,
        noisy: noisy_mean,
        penalty,
        grad,
    })
}

/// Mean squared error `mean (R(x_i) - t_i)^2` and its parameter gradient.
pub fn regression_loss(net: &Awcr, xs: &DenseArray, targets: &[f64]) -> Result<(f64, Awcr)> {
    let (n, _) = rows(xs)?;
    if targets.len() != n {
        return Err(Error::shape(&[n], &[targets.len()]));
    }
    let parts = crate::exec::map_indexed(n, |i| {
        let mut g = net.zeros_like();
        let tape = net.forward(xs.row(i), None);
        let r = tape.value - targets[i];
        net.backward(&tape, 2.0 * r / n as f64, 0.0, &mut g);
        (r * r, g)
    });
    let (s, g) = reduce(net, parts);
    Ok((s / n as f64, g))
}
