//! Adversarial training with RMSprop and a two-phase penalty weight, and a
//! plain regression fit for approximation experiments.

use rand::seq::SliceRandom;

use super::loss::{adversarial_loss, regression_loss};
use super::nets::{Architecture, Awcr};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::rng::{stream, stream_indexed, Stream};
use crate::tensor::DenseArray;

/// RMSprop: `s = decay s + (1 - decay) g^2`, `theta -= lr g / (sqrt(s) + eps)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    sq: Vec<f64>,
}

impl RmsProp {
    pub fn new(lr: f64, n: usize) -> Self {
        Self {
            lr,
            decay: 0.99,
            eps: 1e-8,
            sq: vec![0.0; n],
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        for ((t, g), s) in theta.iter_mut().zip(grad).zip(&mut self.sq) {
            *s = self.decay * *s + (1.0 - self.decay) * g * g;
            *t -= self.lr * g / (s.sqrt() + self.eps);
        }
    }
}

/// Adam with the usual bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            theta[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub epochs: usize,
    /// Epochs trained with `lambda_start` before switching to `lambda_end`.
    pub phase1_epochs: usize,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            epochs: 300,
            phase1_epochs: 150,
            lambda_start: 0.1,
            lambda_end: 10.0,
            lr: 2e-3,
            batch_size: 100,
            seed: 0,
        }
    }
}

impl TrainSchedule {
    pub fn lambda(&self, epoch: usize) -> f64 {
        if epoch < self.phase1_epochs {
            self.lambda_start
        } else {
            self.lambda_end
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss_real: f64,
    pub loss_noisy: f64,
    pub penalty: f64,
    pub lambda: f64,
}

pub const TRAIN_LOG_COLUMNS: [&str; 5] = ["epoch", "loss_real", "loss_noisy", "penalty", "lambda"];

pub fn log_table(log: &[EpochLog]) -> Table {
    let mut t = Table::new(&TRAIN_LOG_COLUMNS);
    for e in log {
        let mut row = vec![e.epoch.to_string()];
        row.extend(
            [e.loss_real, e.loss_noisy, e.penalty, e.lambda]
                .iter()
                .map(|&v| crate::io::fmt_f64(v)),
        );
        t.push(row);
    }
    t
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub net: Awcr,
    pub log: Vec<EpochLog>,
}

/// Training stopped on a non-finite loss; `last` holds the parameters of
/// the last completed epoch.
#[derive(Debug)]
pub struct Diverged {
    pub error: Error,
    pub last: Awcr,
    pub log: Vec<EpochLog>,
}

impl From<Diverged> for Error {
    fn from(d: Diverged) -> Self {
        d.error
    }
}

fn gather(data: &DenseArray, idx: &[usize]) -> DenseArray {
    let d = data.shape()[1];
    let mut out = Vec::with_capacity(idx.len() * d);
    for &i in idx {
        out.extend_from_slice(data.row(i));
    }
    DenseArray::new(vec![idx.len(), d], out).expect("shape")
}

/// Minimises the adversarial loss over shuffled minibatches, projecting the
/// propagation weights to be nonnegative after every step.
pub fn train_awcr(
    init: Awcr,
    real: &DenseArray,
    noisy: &DenseArray,
    schedule: &TrainSchedule,
) -> std::result::Result<Trained, Diverged> {
    let fail = |error: Error, last: &Awcr, log: &[EpochLog]| Diverged {
        error,
        last: last.clone(),
        log: log.to_vec(),
    };
    let mut net = init;
    let mut log = Vec::new();
    if real.shape().len() != 2 || real.shape()[0] == 0 || noisy.shape().len() != 2 || noisy.shape()[0] == 0 {
        return Err(fail(Error::config("training needs nonempty datasets"), &net, &log));
    }
    if let Err(e) = net.icnn.check_structure() {
        return Err(fail(e, &net, &log));
    }
    let n = real.shape()[0].min(noisy.shape()[0]);
    let bs = schedule.batch_size.clamp(1, n);
    let mut opt = RmsProp::new(schedule.lr, net.param_count());
    let mut step = 0u64;
    for epoch in 0..schedule.epochs {
        let lambda = schedule.lambda(epoch);
        let mut rng = stream_indexed(schedule.seed, Stream::Batch, epoch as u64);
        let mut ir: Vec<usize> = (0..real.shape()[0]).collect();
        let mut inz: Vec<usize> = (0..noisy.shape()[0]).collect();
        ir.shuffle(&mut rng);
        inz.shuffle(&mut rng);
        let before = net.clone();
        let (mut lr_sum, mut ln_sum, mut pen_sum, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for start in (0..n - n % bs).step_by(bs) {
            let br = gather(real, &ir[start..start + bs]);
            let bn = gather(noisy, &inz[start..start + bs]);
            let parts =
                adversarial_loss(&net, &br, &bn, lambda, schedule.seed, step).map_err(|e| fail(e, &before, &log))?;
            step += 1;
            if !parts.loss.is_finite() {
                return Err(fail(
                    Error::TrainingDiverged {
                        epoch,
                        reason: format!("loss {} at step {step}", parts.loss),
                    },
                    &before,
                    &log,
                ));
            }
            let mut theta = net.to_flat();
            opt.step(&mut theta, &parts.grad.to_flat());
            net.set_flat(&theta).expect("parameter count");
            net.icnn.project();
            lr_sum += parts.real;
            ln_sum += parts.noisy;
            pen_sum += parts.penalty;
            batches += 1;
        }
        let b = batches.max(1) as f64;
        log.push(EpochLog {
            epoch,
            loss_real: lr_sum / b,
            loss_noisy: ln_sum / b,
            penalty: pen_sum / b,
            lambda,
        });
    }
    Ok(Trained { net, log })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoBudget {
    pub epochs: usize,
    pub arch: Architecture,
    pub lr: f64,
    pub train_points: usize,
    pub seed: u64,
}

impl DemoBudget {
    /// Smooth net `1 -> 16 -> 16`, convex net `16 -> 8 -> 1`.
    pub fn standard() -> Self {
        Self {
            epochs: 2000,
            arch: Architecture::standard(1),
            lr: 1e-2,
            train_points: 256,
            seed: 0,
        }
    }

    /// Convex net `1 -> 32 -> 1` with no smooth part.
    pub fn icnn_only() -> Self {
        Self {
            arch: Architecture::icnn_only(1, vec![32]),
            ..Self::standard()
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoResult {
    pub sup_error: f64,
    pub final_loss: f64,
    pub net: Awcr,
}

/// Fits `target` on `[-1, 1]` by full-batch least squares and reports the
/// sup error on a held-out grid of midpoints.
pub fn universal_demo(target: impl Fn(f64) -> f64, budget: &DemoBudget) -> Result<DemoResult> {
    if budget.arch.input != 1 {
        return Err(Error::config("universal demo fits functions of one variable"));
    }
    let n = budget.train_points.max(2);
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let ts: Vec<f64> = xs.iter().map(|&x| target(x)).collect();
    let xa = DenseArray::new(vec![n, 1], xs)?;
    let mut net = Awcr::new(&budget.arch, &mut stream(budget.seed, Stream::Init));
    net.mu0 = 0.0;
    let mut opt = Adam::new(budget.lr, net.param_count());
    let mut final_loss = f64::NAN;
    for epoch in 0..budget.epochs {
        // geometric decay by three decades over the second half
        let half = budget.epochs / 2;
        opt.lr = if epoch < half {
            budget.lr
        } else {
            budget.lr * 1e-3f64.powf((epoch - half) as f64 / (budget.epochs - half) as f64)
        };
        let (loss, g) = regression_loss(&net, &xa, &ts)?;
        final_loss = loss;
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                reason: format!("regression loss {loss}"),
            });
        }
        let mut theta = net.to_flat();
        opt.step(&mut theta, &g.to_flat());
        net.set_flat(&theta)?;
        net.icnn.project();
    }
    let held = 4 * n;
    let sup_error = (0..held)
        .map(|i| {
            let x = -1.0 + 2.0 * (i as f64 + 0.5) / held as f64;
            (net.eval(&[x]) - target(x)).abs()
        })
        .fold(0.0, f64::max);
    Ok(DemoResult {
        sup_error,
        final_loss,
        net,
    })
}
