//! Regularisation paths: reconstructions along a noise schedule `delta_k`
//! with parameter choice `alpha(delta)`, R-criticality residuals, stability
//! probes and parameter-rule audits.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fidelity::ConjugateFidelity;
use crate::functionals::Functional;
use crate::io::Table;
use crate::operators::Operator;
use crate::pdhgm::{run_pdhgm, subgradient_solve, suggest_steps, PdConfig, Problem, RunOptions};
use crate::rng::{gaussian_vec, stream, Stream};
use crate::tensor::{DenseArray, ProductPoint};

/// Parameter choice `alpha(delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaRule {
    Linear { c: f64 },
    Constant { c: f64 },
    Power { c: f64, exponent: f64 },
}

impl AlphaRule {
    pub fn alpha(&self, delta: f64) -> f64 {
        match *self {
            AlphaRule::Linear { c } => c * delta,
            AlphaRule::Constant { c } => c,
            AlphaRule::Power { c, exponent } => c * delta.powf(exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaAudit {
    pub pass: bool,
    /// `alpha_K / alpha_1`
    pub alpha_ratio: f64,
    /// `(delta_K^p / alpha_K) / (delta_1^p / alpha_1)`
    pub noise_ratio: f64,
    pub horizon: usize,
}

/// Evaluates `alpha_k -> 0` and `delta_k^p / alpha_k -> 0` along
/// `delta_k = delta0 decay^k`. The schedule is extended until `decay^K`
/// reaches `1e-60` (at least `levels` terms), and both final values must be
/// below `1e-3` of their initial values.
pub fn alpha_rule_audit(rule: AlphaRule, p: f64, delta0: f64, decay: f64, levels: usize) -> Result<AlphaAudit> {
    if !(decay > 0.0 && decay < 1.0) || !(delta0 > 0.0) {
        return Err(Error::config(format!(
            "need decay in (0,1) and delta0 > 0, got {decay}, {delta0}"
        )));
    }
    let extra = (60.0 * std::f64::consts::LN_10 / -decay.ln()).ceil() as usize;
    let horizon = levels.max(extra).max(2);
    // work in logs so long horizons do not underflow
    let log_delta = |k: usize| delta0.ln() + k as f64 * decay.ln();
    let log_alpha = |k: usize| -> f64 {
        match rule {
            AlphaRule::Linear { c } => c.ln() + log_delta(k),
            AlphaRule::Constant { c } => c.ln(),
            AlphaRule::Power { c, exponent } => c.ln() + exponent * log_delta(k),
        }
    };
    let alpha_ratio = (log_alpha(horizon) - log_alpha(1)).exp();
    let noise_ratio = ((p * log_delta(horizon) - log_alpha(horizon)) - (p * log_delta(1) - log_alpha(1))).exp();
    Ok(AlphaAudit {
        pass: alpha_ratio < 1e-3 && noise_ratio < 1e-3,
        alpha_ratio,
        noise_ratio,
        horizon,
    })
}

/// Orthogonal projector onto `ker(A)` from a dense SVD.
#[derive(Debug, Clone)]
pub struct KernelProjector {
    /// Orthonormal rows spanning the row space of `A`.
    row_basis: DMatrix<f64>,
}

impl KernelProjector {
    pub fn new(op: &Operator) -> Result<Self> {
        let a = op.dense_matrix()?;
        let n = a.ncols();
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("requested right singular vectors");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let tol = smax * n.max(vt.nrows()) as f64 * f64::EPSILON;
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > tol)
            .collect();
        let mut row_basis = DMatrix::zeros(keep.len(), n);
        for (r, &i) in keep.iter().enumerate() {
            row_basis.set_row(r, &vt.row(i));
        }
        Ok(Self { row_basis })
    }

    pub fn rank(&self) -> usize {
        self.row_basis.nrows()
    }

    pub fn project(&self, g: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(g);
        let coeffs = &self.row_basis * &v;
        let back = self.row_basis.transpose() * coeffs;
        g.iter().zip(back.iter()).map(|(a, b)| a - b).collect()
    }
}

/// Distance from zero of `P_ker(A) dR(x)`. For separable `R` the whole
/// coordinatewise subdifferential box is searched (projected gradient on
/// `||P g||^2 / 2`), otherwise the selection is used.
fn tangential_residual(x: &DenseArray, reg: &dyn Functional, proj: &KernelProjector) -> f64 {
    let n = x.len();
    let mut g = vec![0.0; n];
    reg.subgrad(x.data(), &mut g);
    if !reg.separable() || proj.rank() == n {
        return crate::tensor::norm(&proj.project(&g));
    }
    let bounds: Vec<(f64, f64)> = x
        .data()
        .iter()
        .map(|&t| {
            let (l, r) = reg.one_sided(t);
            (l.min(r), l.max(r))
        })
        .collect();
    if bounds.iter().all(|(l, r)| l == r) {
        return crate::tensor::norm(&proj.project(&g));
    }
    let clamp = |v: &mut [f64]| {
        for (vi, (l, r)) in v.iter_mut().zip(&bounds) {
            *vi = vi.clamp(*l, *r);
        }
    };
    clamp(&mut g);
    // accelerated projected gradient; the objective has unit Lipschitz gradient
    let mut best = crate::tensor::norm(&proj.project(&g));
    let mut prev = g.clone();
    let mut yk = g.clone();
    for k in 1..=2000 {
        let pg = proj.project(&yk);
        let mut next: Vec<f64> = yk.iter().zip(&pg).map(|(a, b)| a - b).collect();
        clamp(&mut next);
        let val = crate::tensor::norm(&proj.project(&next));
        best = best.min(val);
        let beta = (k as f64 - 1.0) / (k as f64 + 2.0);
        yk = next.iter().zip(&prev).map(|(a, b)| a + beta * (a - b)).collect();
        prev = next;
        if best < 1e-14 {
            break;
        }
    }
    best
}

/// `(||Ax - y0||, dist(0, P_ker(A) dR(x)))`.
pub fn criticality_residual(
    x: &DenseArray,
    reg: &dyn Functional,
    op: &Operator,
    y0: &DenseArray,
) -> Result<(f64, f64)> {
    let proj = KernelProjector::new(op)?;
    criticality_with(x, reg, op, y0, &proj)
}

fn criticality_with(
    x: &DenseArray,
    reg: &dyn Functional,
    op: &Operator,
    y0: &DenseArray,
    proj: &KernelProjector,
) -> Result<(f64, f64)> {
    let feas = op.apply(x)?.sub(y0)?.norm();
    Ok((feas, tangential_residual(x, reg, proj)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Pdhgm,
    Subgradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegPathConfig {
    pub delta0: f64,
    pub decay: f64,
    pub levels: usize,
    pub alpha_rule: AlphaRule,
    pub noise_seed: u64,
    pub solver: SolverKind,
    /// Use `delta_k` only for the parameter choice and leave the data exact.
    pub noiseless: bool,
    pub max_iters: usize,
    pub tol: f64,
    pub step_margin: f64,
    /// Step of the subgradient solver.
    pub subgradient_step: f64,
}

impl RegPathConfig {
    /// `delta_k = 0.1 * 2^-k`, `alpha = delta`, seven levels.
    pub fn standard() -> Self {
        Self {
            delta0: 0.1,
            decay: 0.5,
            levels: 7,
            alpha_rule: AlphaRule::Linear { c: 1.0 },
            noise_seed: 0,
            solver: SolverKind::Pdhgm,
            noiseless: false,
            max_iters: 20_000,
            tol: 1e-10,
            step_margin: 0.9,
            subgradient_step: 1e-3,
        }
    }

    /// `delta_k` for `k = 1..=levels`.
    pub fn delta(&self, k: usize) -> f64 {
        self.delta0 * self.decay.powi(k as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegPathLevel {
    pub level: usize,
    pub delta: f64,
    pub alpha: f64,
    pub data_residual: f64,
    pub feasibility: f64,
    pub tangential: f64,
    /// `||x_k - x_{k-1}||`; NaN at the first level.
    pub dist_prev: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The solver diverged at this level; residuals are NaN.
    pub diverged: bool,
}

#[derive(Debug, Clone)]
pub struct RegPathReport {
    pub levels: Vec<RegPathLevel>,
    pub final_x: Option<DenseArray>,
}

pub const REGPATH_COLUMNS: [&str; 7] = [
    "level",
    "delta",
    "alpha",
    "data_residual",
    "criticality_feasibility",
    "criticality_tangential",
    "dist_prev_level",
];

impl RegPathReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&REGPATH_COLUMNS);
        for l in &self.levels {
            let mut row = vec![l.level.to_string()];
            row.extend(
                [
                    l.delta,
                    l.alpha,
                    l.data_residual,
                    l.feasibility,
                    l.tangential,
                    l.dist_prev,
                ]
                .iter()
                .map(|&v| crate::io::fmt_f64(v)),
            );
            t.push(row);
        }
        t
    }

    /// Whether data residuals never increase by more than `rel_tol`
    /// between consecutive levels.
    pub fn residual_monotone(&self, rel_tol: f64) -> bool {
        monotone_nonincreasing(
            &self.levels.iter().map(|l| l.data_residual).collect::<Vec<_>>(),
            rel_tol,
        )
    }
}

pub fn monotone_nonincreasing(v: &[f64], rel_tol: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + rel_tol))
}

pub fn monotone_nondecreasing(v: &[f64], rel_tol: f64) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] * (1.0 - rel_tol))
}

/// Solves along the schedule, warm-starting each level from the previous one.
pub fn run_regpath(
    op: &Operator,
    reg: Arc<dyn Functional>,
    y0: &DenseArray,
    cfg: &RegPathConfig,
) -> Result<RegPathReport> {
    if cfg.levels == 0 {
        return Err(Error::config("regpath needs at least one level"));
    }
    let norm_a = op.certified_norm()?;
    let proj = KernelProjector::new(op)?;
    let mut z = ProductPoint::zeros(op);
    let mut prev_x: Option<DenseArray> = None;
    let mut levels = Vec::with_capacity(cfg.levels);
    for k in 1..=cfg.levels {
        let delta = cfg.delta(k);
        let alpha = cfg.alpha_rule.alpha(delta);
        let noise_norm = if cfg.noiseless { 0.0 } else { delta };
        let noise = crate::fixtures::scaled_noise(op.range_len(), noise_norm, cfg.noise_seed, k as u64);
        let mut y = y0.clone();
        y.axpy(1.0, &DenseArray::new(y0.shape().to_vec(), noise)?)?;
        let problem = Problem::new(op.clone(), reg.clone(), ConjugateFidelity::new(alpha, y)?)?;
        let outcome = match cfg.solver {
            SolverKind::Pdhgm => {
                let (tau, sigma) = suggest_steps(problem.rho(), alpha, norm_a, cfg.step_margin)?;
                let pd = PdConfig::new(tau, sigma)
                    .with_max_iters(cfg.max_iters)
                    .with_tol(cfg.tol);
                run_pdhgm(&problem, &pd, &z, &RunOptions::default())
                    .map(|t| (t.final_point.clone(), t.iterations(), t.converged))
            }
            SolverKind::Subgradient => subgradient_solve(&problem, &z.x, cfg.subgradient_step, cfg.max_iters)
                .map(|t| (ProductPoint::new(t.best_x, z.y.clone()), cfg.max_iters, false)),
        };
        match outcome {
            Ok((point, iterations, converged)) => {
                let (feas, tang) = criticality_with(&point.x, reg.as_ref(), op, y0, &proj)?;
                let dist_prev = prev_x
                    .as_ref()
                    .map_or(f64::NAN, |p| point.x.sub(p).map(|d| d.norm()).unwrap_or(f64::NAN));
                levels.push(RegPathLevel {
                    level: k,
                    delta,
                    alpha,
                    data_residual: feas,
                    feasibility: feas,
                    tangential: tang,
                    dist_prev,
                    iterations,
                    converged,
                    diverged: false,
                });
                prev_x = Some(point.x.clone());
                z = point;
            }
            Err(Error::Divergence { iteration, .. }) => {
                levels.push(RegPathLevel {
                    level: k,
                    delta,
                    alpha,
                    data_residual: f64::NAN,
                    feasibility: f64::NAN,
                    tangential: f64::NAN,
                    dist_prev: f64::NAN,
                    iterations: iteration,
                    converged: false,
                    diverged: true,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RegPathReport {
        levels,
        final_x: prev_x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRow {
    pub size: f64,
    pub deviation: f64,
}

/// Reconstructs from `problem`'s data and from data perturbed by `e` with
/// `||e||` in `sizes` (one fixed random direction), starting every solve at
/// `z0`, and reports `||x(y + e) - x(y)||`.
pub fn stability_probe(
    problem: &Problem,
    cfg: &PdConfig,
    sizes: &[f64],
    seed: u64,
    z0: &ProductPoint,
) -> Result<Vec<StabilityRow>> {
    let base = run_pdhgm(problem, cfg, z0, &RunOptions::default())?.final_point.x;
    let mut rng = stream(seed, Stream::Perturbation);
    let mut dir = gaussian_vec(&mut rng, problem.op.range_len());
    let s = crate::tensor::norm(&dir);
    dir.iter_mut().for_each(|v| *v /= s);
    let dir = DenseArray::new(problem.op.range_shape().to_vec(), dir)?;
    let rows = crate::exec::map_slice(sizes, |&size| -> Result<StabilityRow> {
        let mut y = problem.fid.y_delta.clone();
        y.axpy(size, &dir)?;
        let p = Problem::new(
            problem.op.clone(),
            problem.reg.clone(),
            ConjugateFidelity::new(problem.fid.alpha, y)?,
        )?;
        let x = run_pdhgm(&p, cfg, z0, &RunOptions::default())?.final_point.x;
        Ok(StabilityRow {
            size,
            deviation: x.sub(&base)?.norm(),
        })
    });
    rows.into_iter().collect()
}

/// Critical points of `|x| + cos x` at `2 pi k + pi/2` with `A = 0`: runs
/// started at successive critical points stay there, so the deviation from
/// the run started at `pi/2` grows with `k` instead of vanishing.
pub fn stationary_start_control(sizes: &[f64]) -> Result<Vec<StabilityRow>> {
    let op = crate::operators::zero_operator(&[1], &[1]).with_known_norm(0.0);
    let reg: Arc<dyn Functional> = Arc::new(crate::functionals::abs_plus_cos());
    let cfg = PdConfig::new(0.5, 4.0).with_max_iters(200).with_tol(1e-12);
    let start = |k: usize| {
        ProductPoint::new(
            DenseArray::from_vec(vec![
                2.0 * std::f64::consts::PI * k as f64 + std::f64::consts::FRAC_PI_2,
            ]),
            DenseArray::zeros(&[1]),
        )
    };
    let solve = |y: f64, k: usize| -> Result<f64> {
        let p = Problem::new(
            op.clone(),
            reg.clone(),
            ConjugateFidelity::new(1.0, DenseArray::from_vec(vec![y]))?,
        )?;
        Ok(run_pdhgm(&p, &cfg, &start(k), &RunOptions::default())?
            .final_point
            .x
            .data()[0])
    };
    let base = solve(0.0, 0)?;
    sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            Ok(StabilityRow {
                size,
                deviation: (solve(size, i + 1)? - base).abs(),
            })
        })
        .collect()
}
