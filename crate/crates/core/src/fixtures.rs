//! Seeded problem instances shared by the experiments, the CLI and the benches.

use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::fidelity::ConjugateFidelity;
use crate::functionals::mcp;
use crate::operators::{compose, make_convolution, make_subsample, Boundary, Operator};
use crate::pdhgm::Problem;
use crate::rng::{gaussian_vec, stream, Stream};
use crate::tensor::DenseArray;

/// Symmetric blur used by the 1-D deconvolution problems.
pub const BLUR_KERNEL: [f64; 5] = [0.1, 0.2, 0.4, 0.2, 0.1];

/// Power-method settings used for every fixture operator.
pub const NORM_ITERS: usize = 5000;
pub const NORM_TOL: f64 = 1e-12;

/// Sparse spike train: about one spike per eight samples, amplitudes of
/// magnitude in `[0.5, 1]` with random sign.
pub fn spike_signal(n: usize, seed: u64) -> DenseArray {
    let mut rng = stream(seed, Stream::Fixture);
    let mut x = vec![0.0; n];
    let count = (n / 8).max(1);
    let mut placed = 0;
    while placed < count {
        let i = rng.random_range(2..n.saturating_sub(2).max(3));
        if x[i] != 0.0 {
            continue;
        }
        let amp = rng.random_range(0.5..1.0);
        x[i] = if rng.random::<bool>() { amp } else { -amp };
        placed += 1;
    }
    DenseArray::from_vec(x)
}

/// Zero-boundary blur of length `n`, optionally followed by keeping every
/// `stride`-th sample (`stride > 1` gives a nontrivial kernel).
pub fn deconvolution_operator(n: usize, stride: usize, seed: u64) -> Result<Operator> {
    let kernel = DenseArray::from_vec(BLUR_KERNEL.to_vec());
    let blur = make_convolution(&kernel, Boundary::Zero, &[n])?;
    let op = if stride > 1 {
        let mask: Vec<bool> = (0..n).map(|i| i % stride == 0).collect();
        compose(&make_subsample(&mask, &[n])?, &blur)?
    } else {
        blur
    };
    op.with_norm_estimate(NORM_ITERS, NORM_TOL, seed)
}

/// Gaussian noise rescaled to norm exactly `delta`.
pub fn scaled_noise(n: usize, delta: f64, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = crate::rng::stream_indexed(seed, Stream::Noise, index);
    let mut e = gaussian_vec(&mut rng, n);
    let s = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if delta == 0.0 || s == 0.0 {
        return vec![0.0; n];
    }
    e.iter_mut().for_each(|v| *v *= delta / s);
    e
}

/// 64-sample MCP deconvolution: blur, spikes, noise of norm `0.01 ||y0||`.
#[derive(Debug, Clone)]
pub struct McpDeconvolution {
    pub problem: Problem,
    pub x_true: DenseArray,
    pub y_clean: DenseArray,
}

pub const MCP_LAMBDA: f64 = 0.05;
pub const MCP_A: f64 = 2.0;
pub const MCP_ALPHA: f64 = 0.02;

pub fn mcp_deconvolution(n: usize, seed: u64) -> Result<McpDeconvolution> {
    let op = deconvolution_operator(n, 1, seed)?;
    let x_true = spike_signal(n, seed);
    let y_clean = op.apply(&x_true)?;
    let noise = scaled_noise(op.range_len(), 0.01 * y_clean.norm(), seed, 0);
    let mut y = y_clean.clone();
    y.axpy(1.0, &DenseArray::from_vec(noise))?;
    let fid = ConjugateFidelity::new(MCP_ALPHA, y)?;
    let problem = Problem::new(op, Arc::new(mcp(MCP_LAMBDA, MCP_A)?), fid)?;
    Ok(McpDeconvolution {
        problem,
        x_true,
        y_clean,
    })
}
