//! Modified primal-dual hybrid gradient method for
//! `min_x max_y R(x) + <Ax, y> - F*(y)`, with descent, residual, ergodic and
//! rate diagnostics.

mod diagnostics;
mod subgradient;
mod trace;

pub use diagnostics::{
    classify_distances, descent_certificate, ergodic_gap, min_residual_certificate, rate_classify,
    residual_bound_quantity, ErgodicFit, RateClass, ResidualCertificate,
};
pub use subgradient::{subgradient_solve, SubgradientTrace};
pub use trace::{SolverTrace, TraceRow, TRACE_COLUMNS};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fidelity::ConjugateFidelity;
use crate::functionals::{prox_with, Functional, InnerSolver};
use crate::operators::Operator;
use crate::tensor::{dot, DenseArray, ProductPoint};

/// Iterates whose product norm exceeds this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e8;

/// Default fraction of the admissible step range used by [`suggest_steps`].
pub const DEFAULT_STEP_MARGIN: f64 = 0.9;

/// Operator, regulariser and folded fidelity of one saddle-point problem.
#[derive(Clone)]
pub struct Problem {
    pub op: Operator,
    pub reg: Arc<dyn Functional>,
    pub fid: ConjugateFidelity,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("reg", &self.reg.name())
            .field("alpha", &self.fid.alpha)
            .finish()
    }
}

impl Problem {
    pub fn new(op: Operator, reg: Arc<dyn Functional>, fid: ConjugateFidelity) -> Result<Self> {
        fid.y_delta.check_shape(op.range_shape())?;
        Ok(Self { op, reg, fid })
    }

    pub fn rho(&self) -> f64 {
        self.reg.rho_wc()
    }

    pub fn mu(&self) -> f64 {
        self.fid.mu_fid()
    }

    /// Primal objective `R(x) + F(Ax)`.
    pub fn objective(&self, x: &DenseArray) -> Result<f64> {
        Ok(self.reg.eval(x.data()) + self.fid.primal(&self.op.apply(x)?)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdConfig {
    pub tau: f64,
    pub sigma: f64,
    pub theta_relax: f64,
    pub max_iters: usize,
    pub inner_tol: f64,
    /// Stop once `residual_M` falls strictly below this; zero never stops early.
    pub tol: f64,
    pub seed: u64,
    /// Skip the step-size constraint checks (regime experiments only).
    pub override_constraints: bool,
}

impl PdConfig {
    pub fn new(tau: f64, sigma: f64) -> Self {
        Self {
            tau,
            sigma,
            theta_relax: 1.0,
            max_iters: 1000,
            inner_tol: 1e-8,
            tol: 0.0,
            seed: 0,
            override_constraints: false,
        }
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta_relax = theta;
        self
    }

    pub fn with_override(mut self, on: bool) -> Self {
        self.override_constraints = on;
        self
    }

    /// Violated step-size constraints, each named.
    pub fn violations(&self, rho: f64, mu: f64, norm_a: f64) -> Vec<String> {
        let mut out = Vec::new();
        let coupling = self.tau * self.sigma * norm_a * norm_a;
        if !(coupling < 1.0) {
            out.push(format!("step coupling tau*sigma*||A||^2 < 1 violated ({coupling})"));
        }
        let primal = self.tau * rho;
        if !(primal < 1.0) {
            out.push(format!("primal prox tau*rho < 1 violated ({primal})"));
        }
        let dual = mu * self.sigma;
        if !(dual > 3.0) {
            out.push(format!("dual strong convexity mu*sigma > 3 violated ({dual})"));
        }
        out
    }

    /// Checks step sizes against the problem. The operator norm must be a
    /// converged estimate even when the constraints are overridden.
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if !(self.tau > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::config(format!(
                "step sizes must be positive (tau = {}, sigma = {})",
                self.tau, self.sigma
            )));
        }
        if !self.theta_relax.is_finite() || self.theta_relax < 0.0 {
            return Err(Error::config(format!(
                "theta_relax must be >= 0, got {}",
                self.theta_relax
            )));
        }
        let norm_a = problem.op.certified_norm()?;
        if self.override_constraints {
            return Ok(());
        }
        let v = self.violations(problem.rho(), problem.mu(), norm_a);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::config(v.join("; ")))
        }
    }

    fn inner_solver(&self) -> InnerSolver {
        InnerSolver {
            tol: self.inner_tol,
            ..InnerSolver::default()
        }
    }
}

/// Step sizes `tau = margin * min(1/rho, mu / (3 ||A||^2))` and `sigma` the
/// geometric mean of `3/mu` and `1/(tau ||A||^2)`.
pub fn suggest_steps(rho: f64, mu_fid: f64, norm_a: f64, margin: f64) -> Result<(f64, f64)> {
    if !(mu_fid > 0.0) || !(norm_a > 0.0) {
        return Err(Error::config(format!(
            "suggest_steps needs mu_fid > 0 and ||A|| > 0, got {mu_fid}, {norm_a}"
        )));
    }
    if !(margin > 0.0 && margin < 1.0) || !(rho >= 0.0) {
        return Err(Error::config(format!(
            "need margin in (0,1) and rho >= 0, got {margin}, {rho}"
        )));
    }
    let na2 = norm_a * norm_a;
    let bound_rho = if rho > 0.0 { 1.0 / rho } else { f64::INFINITY };
    let tau = margin * bound_rho.min(mu_fid / (3.0 * na2));
    let sigma = ((3.0 / mu_fid) * (1.0 / (tau * na2))).sqrt();
    let cfg = PdConfig::new(tau, sigma);
    let v = cfg.violations(rho, mu_fid, norm_a);
    if !v.is_empty() || !tau.is_finite() || !sigma.is_finite() {
        return Err(Error::config(format!("no admissible step sizes: {}", v.join("; "))));
    }
    Ok((tau, sigma))
}

/// `L(x, y) = R(x) + <Ax, y> - F*(y)`.
pub fn lagrangian(problem: &Problem, x: &DenseArray, y: &DenseArray) -> Result<f64> {
    let ax = problem.op.apply(x)?;
    Ok(problem.reg.eval(x.data()) + dot(ax.data(), y.data()) - problem.fid.conj_eval(y)?)
}

/// One update: `x+ = prox_{tau R}(x - tau A* y)`,
/// `y+ = prox_{sigma F*}(y + sigma A(x+ + theta (x+ - x)))`.
pub fn pdhgm_step(
    problem: &Problem,
    cfg: &PdConfig,
    x: &DenseArray,
    y: &DenseArray,
) -> Result<(DenseArray, DenseArray)> {
    let mut v = x.clone();
    v.axpy(-cfg.tau, &problem.op.adjoint(y)?)?;
    let x_next = prox_with(problem.reg.as_ref(), cfg.tau, &v, &cfg.inner_solver())?;
    let mut x_bar = x_next.scaled(1.0 + cfg.theta_relax);
    x_bar.axpy(-cfg.theta_relax, x)?;
    let mut w = y.clone();
    w.axpy(cfg.sigma, &problem.op.apply(&x_bar)?)?;
    problem.fid.conj_prox_into(cfg.sigma, &mut w)?;
    Ok((x_next, w))
}

/// Extra outputs requested from a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Probe point for the ergodic gap `L(x_mean, probe.y) - L(probe.x, y_mean)`.
    pub probe: Option<ProductPoint>,
    /// Keep every iterate (needed for rate classification).
    pub keep_iterates: bool,
}

/// Runs the method from `z0`, recording one trace row per iterate (row 0 is
/// the starting point).
pub fn run_pdhgm(problem: &Problem, cfg: &PdConfig, z0: &ProductPoint, opts: &RunOptions) -> Result<SolverTrace> {
    cfg.validate(problem)?;
    z0.x.check_shape(problem.op.domain_shape())?;
    z0.y.check_shape(problem.op.range_shape())?;
    let op = &problem.op;
    let (tau, sigma, theta) = (cfg.tau, cfg.sigma, cfg.theta_relax);
    let rho = problem.rho();
    let mu = problem.mu();
    let solver = cfg.inner_solver();
    let reg = problem.reg.as_ref();
    let fid = &problem.fid;

    let mut x = z0.x.clone();
    let mut y = z0.y.clone();
    let mut ax = op.apply(&x)?;
    let mut aty = op.adjoint(&y)?;
    let lag = |x: &DenseArray, ax: &DenseArray, y: &DenseArray| -> Result<f64> {
        Ok(reg.eval(x.data()) + dot(ax.data(), y.data()) - fid.conj_eval(y)?)
    };

    let mut trace = SolverTrace::new(cfg.clone(), rho, mu, opts.probe.clone());
    let l0 = lag(&x, &ax, &y)?;
    trace.rows.push(TraceRow::initial(l0));
    if opts.keep_iterates {
        trace.iterates.push(ProductPoint::new(x.clone(), y.clone()));
    }

    // probe terms that do not depend on k
    let probe_terms = match &opts.probe {
        Some(p) => {
            p.x.check_shape(op.domain_shape())?;
            p.y.check_shape(op.range_shape())?;
            let apx = op.apply(&p.x)?;
            Some((reg.eval(p.x.data()), apx, fid.conj_eval(&p.y)?))
        }
        None => None,
    };
    let mut sum_x = x.zeros_like();
    let mut sum_ax = ax.zeros_like();
    let mut sum_y = y.zeros_like();

    let mut prev_lyap = f64::NAN;
    let mut v = x.zeros_like();
    for k in 1..=cfg.max_iters {
        // primal step
        v.data_mut().copy_from_slice(x.data());
        v.axpy(-tau, &aty)?;
        let x_new = prox_with(reg, tau, &v, &solver)?;
        let ax_new = op.apply(&x_new)?;
        // dual step on the overrelaxed point
        let mut y_new = y.clone();
        for ((w, a_new), a_old) in y_new.data_mut().iter_mut().zip(ax_new.data()).zip(ax.data()) {
            *w += sigma * ((1.0 + theta) * a_new - theta * a_old);
        }
        fid.conj_prox_into(sigma, &mut y_new)?;
        let aty_new = op.adjoint(&y_new)?;

        // differences z^{k-1} - z^k
        let dx = x.sub(&x_new)?;
        let dy = y.sub(&y_new)?;
        let adx = ax.sub(&ax_new)?;
        let atdy = aty.sub(&aty_new)?;
        let dx2 = dx.norm_sq();
        let dy2 = dy.norm_sq();
        let cross = dot(adx.data(), dy.data());
        let dz_m2 = dx2 / tau - 2.0 * cross + dy2 / sigma;
        // M dz = (dx/tau - A* dy, dy/sigma - theta A dx)
        let mut res2 = 0.0;
        for (d, a) in dx.data().iter().zip(atdy.data()) {
            let t = d / tau - a;
            res2 += t * t;
        }
        for (d, a) in dy.data().iter().zip(adx.data()) {
            let t = d / sigma - theta * a;
            res2 += t * t;
        }
        let residual_m = res2.sqrt();

        let l_new = lag(&x_new, &ax_new, &y_new)?;
        let lyap = l_new + 0.5 * dz_m2;
        let margin = if k >= 2 {
            prev_lyap - lyap - 0.5 * (mu * sigma - 3.0) * dy2 / sigma - 0.5 * (1.0 - rho * tau) * dx2 / tau
        } else {
            f64::NAN
        };

        let gap = match &probe_terms {
            Some((r_px, apx, fstar_py)) => {
                let p = opts.probe.as_ref().unwrap();
                sum_x.axpy(1.0, &x_new)?;
                sum_ax.axpy(1.0, &ax_new)?;
                sum_y.axpy(1.0, &y_new)?;
                let inv = 1.0 / k as f64;
                let xm = sum_x.scaled(inv);
                let ym = sum_y.scaled(inv);
                let lhs = reg.eval(xm.data()) + inv * dot(sum_ax.data(), p.y.data()) - fstar_py;
                let rhs = r_px + dot(apx.data(), ym.data()) - fid.conj_eval(&ym)?;
                lhs - rhs
            }
            None => f64::NAN,
        };

        trace.rows.push(TraceRow {
            k,
            lagrangian: l_new,
            lyapunov: lyap,
            descent_margin: margin,
            residual_m,
            dx_norm: dx2.sqrt(),
            dy_norm: dy2.sqrt(),
            gap,
        });
        prev_lyap = lyap;
        x = x_new;
        y = y_new;
        ax = ax_new;
        aty = aty_new;
        if opts.keep_iterates {
            trace.iterates.push(ProductPoint::new(x.clone(), y.clone()));
        }

        let znorm = (x.norm_sq() + y.norm_sq()).sqrt();
        if !znorm.is_finite() || znorm > DIVERGENCE_NORM {
            return Err(Error::Divergence {
                iteration: k,
                norm: znorm,
            });
        }
        if residual_m < cfg.tol {
            trace.converged = true;
            break;
        }
    }
    trace.final_point = ProductPoint::new(x, y);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{Quadratic, ZeroFunctional};
    use crate::operators::{identity, zero_operator, MatrixOp};
    use crate::tensor::apply_m;

    fn arr(v: &[f64]) -> DenseArray {
        DenseArray::from_vec(v.to_vec())
    }

    fn scalar_problem(a: f64, reg: Arc<dyn Functional>, alpha: f64, yd: f64) -> Problem {
        let op = Operator::new(MatrixOp::new(1, 1, vec![a]).unwrap()).with_known_norm(a.abs());
        Problem::new(op, reg, ConjugateFidelity::new(alpha, arr(&[yd])).unwrap()).unwrap()
    }

    #[test]
    fn suggest_steps_examples() {
        let (t, s) = suggest_steps(0.0, 6.0, 1.0, 0.9).unwrap();
        assert!((t - 1.8).abs() < 1e-15);
        assert!((s - (0.5f64 / 1.8).sqrt()).abs() < 1e-15);
        let (t, _) = suggest_steps(1.0, 6.0, 1.0, 0.99).unwrap();
        assert!((t - 0.99).abs() < 1e-15);
        let (t, s) = suggest_steps(0.0, 1.0, 10.0, 0.9).unwrap();
        assert!(t <= 1.0 / 300.0);
        assert!(PdConfig::new(t, s).violations(0.0, 1.0, 10.0).is_empty());
        assert!(suggest_steps(0.0, 1.0, 0.0, 0.9).is_err());
        assert!(suggest_steps(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn step_with_zero_operator() {
        let op = zero_operator(&[2], &[2]).with_known_norm(0.0);
        let p = Problem::new(
            op,
            Arc::new(ZeroFunctional),
            ConjugateFidelity::new(1.0, arr(&[1.0, -1.0])).unwrap(),
        )
        .unwrap();
        let cfg = PdConfig::new(1.0, 4.0);
        let x = arr(&[0.3, 0.7]);
        let y = arr(&[2.0, 0.0]);
        let (xn, yn) = pdhgm_step(&p, &cfg, &x, &y).unwrap();
        assert_eq!(xn, x);
        assert_eq!(yn, p.fid.conj_prox(4.0, &y).unwrap());
    }

    #[test]
    fn step_matches_hand_computation() {
        // A = 1, R = x^2/2, F = (y - 1)^2/2, tau = sigma = 0.5, start at 0
        let p = scalar_problem(1.0, Arc::new(Quadratic::new(1.0)), 1.0, 1.0);
        let cfg = PdConfig::new(0.5, 0.5);
        let (x, y) = pdhgm_step(&p, &cfg, &arr(&[0.0]), &arr(&[0.0])).unwrap();
        // x+ = prox(0) = 0, x_bar = 0, y+ = (0 - 0.5)/(1.5)
        assert_eq!(x.data()[0], 0.0);
        assert!((y.data()[0] + 1.0 / 3.0).abs() < 1e-15);
        // second step by hand: v = 0 + 0.5/3, x+ = v/1.5
        let (x2, y2) = pdhgm_step(&p, &cfg, &x, &y).unwrap();
        let xh = (0.5 / 3.0) / 1.5;
        assert!((x2.data()[0] - xh).abs() < 1e-15);
        let yh = (-1.0 / 3.0 + 0.5 * 2.0 * xh - 0.5) / 1.5;
        assert!((y2.data()[0] - yh).abs() < 1e-15);
    }

    #[test]
    fn saddle_point_is_fixed() {
        // R = (c/2)||x||^2, A = 2x2 matrix; optimality: c x + A^T y = 0,
        // A x = grad F*(y) = alpha y + y_d
        let a = MatrixOp::from_rows(&[vec![1.0, 0.5], vec![-0.3, 0.8]]).unwrap();
        let op = Operator::new(a).with_norm_estimate(1000, 1e-14, 1).unwrap();
        let yd = arr(&[0.7, -0.2]);
        let (c, alpha) = (0.8, 0.5);
        let p = Problem::new(
            op.clone(),
            Arc::new(Quadratic::new(c)),
            ConjugateFidelity::new(alpha, yd.clone()).unwrap(),
        )
        .unwrap();
        // eliminate x = -A^T y / c: (A A^T / c + alpha I) y = -y_d
        let m = op.dense_matrix().unwrap();
        let sys = &m * m.transpose() / c + nalgebra::DMatrix::identity(2, 2) * alpha;
        let rhs = nalgebra::DVector::from_vec(yd.data().iter().map(|v| -v).collect());
        let ys = sys.lu().solve(&rhs).unwrap();
        let xs = -(m.transpose() * &ys) / c;
        let x = arr(xs.as_slice());
        let y = arr(ys.as_slice());
        let (t, s) = suggest_steps(0.0, alpha, op.certified_norm().unwrap(), 0.9).unwrap();
        let (xn, yn) = pdhgm_step(&p, &PdConfig::new(t, s), &x, &y).unwrap();
        assert!(xn.sub(&x).unwrap().norm() < 1e-10);
        assert!(yn.sub(&y).unwrap().norm() < 1e-10);
    }

    #[test]
    fn lagrangian_cases() {
        let p = scalar_problem(2.0, Arc::new(Quadratic::new(1.0)), 1.5, 0.4);
        assert_eq!(lagrangian(&p, &arr(&[0.0]), &arr(&[0.0])).unwrap(), 0.0);
        let (x, y) = (0.3, -1.1);
        let want = 0.5 * x * x + 2.0 * x * y - (0.75 * y * y + y * 0.4);
        assert!((lagrangian(&p, &arr(&[x]), &arr(&[y])).unwrap() - want).abs() < 1e-12);
        // sup over y recovers R(x) + F(Ax)
        let mut sup = f64::NEG_INFINITY;
        for i in 0..=200_000 {
            let yy = -10.0 + 1e-4 * i as f64;
            sup = sup.max(lagrangian(&p, &arr(&[x]), &arr(&[yy])).unwrap());
        }
        let j = p.objective(&arr(&[x])).unwrap();
        assert!((sup - j).abs() < 1e-3);
    }

    #[test]
    fn convex_quadratic_converges() {
        let p = scalar_problem(1.0, Arc::new(Quadratic::new(1.0)), 1.0, 1.0);
        let (t, s) = suggest_steps(0.0, 1.0, 1.0, 0.9).unwrap();
        let cfg = PdConfig::new(t, s).with_max_iters(2000).with_tol(1e-8);
        let tr = run_pdhgm(&p, &cfg, &ProductPoint::zeros(&p.op), &RunOptions::default()).unwrap();
        assert!(tr.converged);
        // minimiser of x^2/2 + (x - 1)^2/2
        assert!((tr.final_point.x.data()[0] - 0.5).abs() < 1e-7);
        assert!(tr.rows.iter().skip(2).all(|r| r.descent_margin >= -1e-10));
    }

    #[test]
    fn decoupled_dual_contraction() {
        let op = zero_operator(&[1], &[1]).with_known_norm(0.0);
        let p = Problem::new(
            op,
            Arc::new(ZeroFunctional),
            ConjugateFidelity::new(1.0, arr(&[2.0])).unwrap(),
        )
        .unwrap();
        let cfg = PdConfig::new(1.0, 4.0).with_max_iters(50);
        let z0 = ProductPoint::new(arr(&[0.5]), arr(&[3.0]));
        let tr = run_pdhgm(&p, &cfg, &z0, &RunOptions::default()).unwrap();
        assert_eq!(tr.final_point.x.data()[0], 0.5);
        // y* = -y_d / alpha, contraction factor 1/(1 + sigma alpha)
        let dys: Vec<f64> = tr.rows[1..].iter().map(|r| r.dy_norm).collect();
        for w in dys.windows(2).take(10) {
            assert!((w[1] / w[0] - 0.2).abs() < 1e-9);
        }
        assert!((tr.final_point.y.data()[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn residual_matches_assembled_m() {
        let a = MatrixOp::from_rows(&[vec![0.5, 0.1], vec![0.2, -0.4], vec![0.0, 0.3]]).unwrap();
        let op = Operator::new(a).with_norm_estimate(1000, 1e-14, 2).unwrap();
        let p = Problem::new(
            op.clone(),
            Arc::new(Quadratic::new(0.5)),
            ConjugateFidelity::new(1.0, arr(&[1.0, 0.0, -1.0])).unwrap(),
        )
        .unwrap();
        let (t, s) = suggest_steps(0.0, 1.0, op.certified_norm().unwrap(), 0.9).unwrap();
        let cfg = PdConfig::new(t, s).with_max_iters(5);
        let tr = run_pdhgm(
            &p,
            &cfg,
            &ProductPoint::zeros(&op),
            &RunOptions {
                probe: None,
                keep_iterates: true,
            },
        )
        .unwrap();
        for k in 1..tr.iterates.len() {
            let dz = tr.iterates[k - 1].sub(&tr.iterates[k]).unwrap();
            let direct = apply_m(&dz, t, s, 1.0, &op).unwrap().norm_sq().sqrt();
            assert!((direct - tr.rows[k].residual_m).abs() < 1e-12);
            let m2 = crate::tensor::m_norm_sq(&dz, t, s, &op).unwrap();
            let lyap = tr.rows[k].lagrangian + 0.5 * m2;
            assert!((lyap - tr.rows[k].lyapunov).abs() < 1e-12);
        }
    }

    #[test]
    fn guards() {
        let p = scalar_problem(1.0, Arc::new(Quadratic::new(1.0)), 1.0, 1.0);
        let bad = PdConfig::new(1.0, 5.0);
        let err = run_pdhgm(&p, &bad, &ProductPoint::zeros(&p.op), &RunOptions::default()).unwrap_err();
        assert!(err.to_string().contains("tau*sigma*||A||^2"), "{err}");
        let op = identity(&[1]);
        let unnormed = Operator::new(MatrixOp::new(1, 1, vec![1.0]).unwrap());
        let q = Problem::new(unnormed, Arc::new(ZeroFunctional), p.fid.clone()).unwrap();
        assert!(run_pdhgm(
            &q,
            &PdConfig::new(0.1, 4.0),
            &ProductPoint::zeros(&op),
            &RunOptions::default()
        )
        .is_err());
    }
}
